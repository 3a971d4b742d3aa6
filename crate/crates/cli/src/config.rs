use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use eegaug::augment::Method;
use eegaug::clf::ClassifierKind;
use eegaug::dataio::{load_features, read_csv, synth_generate, LabeledDataset, SynthPreset, SynthSpec};
use eegaug::evalx::EvalSettings;
use eegaug::featx::FeatureKind;

use crate::error::{CliError, Result};

pub fn read_toml<T: DeserializeOwned>(path: &Path, flag: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{flag}: cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::usage(format!("{flag}: {}: {e}", path.display())))
}

/// Where a sweep's rows come from. Exactly one of `path`, `preset` or
/// `synth` is set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSource {
    /// EAFX file, or CSV with a `label` column when it ends in `.csv`.
    pub path: Option<PathBuf>,
    /// Bands per channel for CSV input.
    pub csv_bands: Option<usize>,
    pub preset: Option<SynthPreset>,
    pub synth: Option<SynthSpec>,
    /// Preset overrides.
    pub samples_per_class: Option<usize>,
    pub separation: Option<f64>,
    pub seed: Option<u64>,
}

impl DataSource {
    fn validate(&self) -> Result<()> {
        let set = [self.path.is_some(), self.preset.is_some(), self.synth.is_some()].iter().filter(|b| **b).count();
        if set != 1 {
            return Err(CliError::usage("data: set exactly one of path, preset or synth"));
        }
        if self.synth.is_some() && (self.samples_per_class.is_some() || self.separation.is_some() || self.seed.is_some()) {
            return Err(CliError::usage("data: preset overrides do not apply to a full synth spec"));
        }
        if let Some(p) = &self.path {
            if !p.exists() {
                return Err(CliError::usage(format!("data.path: no such file {}", p.display())));
            }
            if is_csv(p) && self.csv_bands.is_none() {
                return Err(CliError::usage("data.csv_bands is required for CSV input"));
            }
        }
        Ok(())
    }

    pub fn load(&self) -> Result<LabeledDataset> {
        if let Some(p) = &self.path {
            return load_dataset(p, self.csv_bands);
        }
        let spec = match (&self.synth, self.preset) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => {
                let mut s = SynthSpec::preset(p, self.seed.unwrap_or(0));
                if let Some(n) = self.samples_per_class {
                    s.samples_per_class = n;
                }
                if let Some(sep) = self.separation {
                    s.separation = sep;
                }
                s
            }
            (None, None) => unreachable!("validated"),
        };
        synth_generate(&spec).map_err(|e| CliError::usage(format!("data: {e}")))
    }
}

fn is_csv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads EAFX, or CSV when the extension says so.
pub fn load_dataset(path: &Path, csv_bands: Option<usize>) -> Result<LabeledDataset> {
    if is_csv(path) {
        let bands = csv_bands.ok_or_else(|| CliError::usage("CSV input needs a band count"))?;
        let f = fs::File::open(path)?;
        return Ok(read_csv(f, bands, FeatureKind::De)?);
    }
    Ok(load_features(path)?)
}

/// A declarative sweep. Relative paths resolve against the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    /// Expected feature kind; the data must match when set.
    #[serde(default)]
    pub feature: Option<FeatureKind>,
    pub methods: Vec<Method>,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    pub counts: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default = "yes")]
    pub plot: bool,
    /// Electrode table for RDA; bundled tables are used when unset.
    #[serde(default)]
    pub montage: Option<PathBuf>,
    #[serde(default)]
    pub settings: EvalSettings,
}

fn default_classifiers() -> Vec<ClassifierKind> {
    vec![ClassifierKind::Svm]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = read_toml(path, "--config")?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.data.path.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.montage.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.output);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        if self.methods.is_empty() || self.classifiers.is_empty() {
            return Err(CliError::usage("methods and classifiers must be nonempty"));
        }
        if !self.counts.contains(&0) {
            return Err(CliError::usage("counts must include 0 (the baseline)"));
        }
        if self.seeds.is_empty() {
            return Err(CliError::usage("seeds must be nonempty"));
        }
        if self.settings.folds < 2 {
            return Err(CliError::usage(format!("settings.folds must be at least 2, got {}", self.settings.folds)));
        }
        if self.jobs == Some(0) {
            return Err(CliError::usage("jobs must be at least 1"));
        }
        for &m in &self.methods {
            for &c in &self.counts {
                self.settings.plan(m, c).validate().map_err(|e| CliError::usage(format!("{m}: {e}")))?;
            }
        }
        if let Some(p) = &self.montage {
            if !p.exists() {
                return Err(CliError::usage(format!("montage: no such file {}", p.display())));
            }
        }
        Ok(())
    }
}

/// Generator options for `train-gen`; flags override file values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenOptions {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub hidden: Option<Vec<usize>>,
    pub latent_dim: Option<usize>,
    pub lambda_gp: Option<f64>,
    pub n_critic: Option<usize>,
}
