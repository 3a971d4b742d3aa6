use std::fmt;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    /// Bad flags, missing inputs, invalid configs: exit 2.
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    /// Everything that goes wrong after validation: exit 1.
    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::runtime(e.to_string())
            }
        })*
    };
}

runtime_from!(
    std::io::Error,
    eegaug::dataio::DataError,
    eegaug::featx::FeatureError,
    eegaug::genmod::GenError,
    eegaug::clf::ClfError,
    eegaug::augment::AugmentError,
    eegaug::evalx::EvalError,
    serde_json::Error
);

pub type Result<T> = std::result::Result<T, CliError>;
