//! `eegaug`: feature extraction, generator training, augmentation and
//! cross-validated sweeps from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation failure.

mod commands;
mod config;
mod error;
mod output;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "eegaug", version, about = "Generative data augmentation for EEG feature vectors")]
struct Cli {
    /// Log filter, e.g. `info` or `eegaug=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract PSD or DE features from a multichannel signal CSV.
    Features(FeaturesArgs),
    /// Train a VAE, cVAE, WGAN or cWGAN and write a checkpoint.
    TrainGen(TrainGenArgs),
    /// Append generated or perturbed rows to a feature file.
    Augment(AugmentArgs),
    /// Cross-validate one classifier, optionally with augmentation.
    Evaluate(EvaluateArgs),
    /// Run a declarative sweep over methods, classifiers and counts.
    Sweep(SweepArgs),
    /// Render a sweep CSV report as SVG or Markdown.
    Plot(PlotArgs),
    /// Draw a synthetic SEED-like or DEAP-like dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
pub struct FeaturesArgs {
    /// Signal CSV: a header of channel names, then one row per sample.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Sampling rate in Hz.
    #[arg(long, default_value_t = 200.0)]
    pub fs: f64,
    /// Band scheme: seed5 or deap4.
    #[arg(long, default_value = "seed5")]
    pub scheme: String,
    /// Feature kind: de or psd.
    #[arg(long, default_value = "de")]
    pub feature: String,
    /// LDS process-to-observation noise ratio.
    #[arg(long, default_value_t = eegaug::featx::DEFAULT_LDS_RATIO)]
    pub lds_ratio: f64,
    /// Skip LDS smoothing.
    #[arg(long)]
    pub no_lds: bool,
    /// Label given to every window; the file is unlabeled without it.
    #[arg(long)]
    pub label: Option<u32>,
    /// Class count written with --label.
    #[arg(long, requires = "label")]
    pub classes: Option<u32>,
    /// Output feature file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainGenArgs {
    /// Input feature file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// vae, cvae, wgan or cwgan.
    #[arg(long)]
    pub model: String,
    /// TOML with any of: epochs, batch_size, lr, beta1, beta2, hidden,
    /// latent_dim, lambda_gp, n_critic.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint path; the loss trace goes next to it as `.loss.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct AugmentArgs {
    /// Input feature file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// gau, rda, cwgan, cvae, swgan or svae.
    #[arg(long)]
    pub method: String,
    /// Rows to append.
    #[arg(long)]
    pub n: usize,
    /// Evaluation settings TOML, as the `settings` table of a sweep config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Pretrained generator; otherwise one is trained on the input.
    #[arg(long)]
    pub generator: Option<PathBuf>,
    /// Classifier judging selective candidates: svm or dnn.
    #[arg(long)]
    pub classifier: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Gaussian noise scale in z-scored units.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Fixed RDA rotation in degrees.
    #[arg(long)]
    pub angle: Option<f64>,
    /// Electrode table CSV (name,x,y,z) for RDA.
    #[arg(long)]
    pub montage: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output feature file; provenance goes next to it as `.sidecar.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Input feature file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// svm or dnn.
    #[arg(long, default_value = "svm")]
    pub classifier: String,
    /// Augmentation method; plain cross-validation without it.
    #[arg(long)]
    pub method: Option<String>,
    /// Rows appended to each training split.
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    /// Evaluation settings TOML.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the CSV report and manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Run config TOML.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; all cores when unset.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Ignore cached cells.
    #[arg(long)]
    pub fresh: bool,
}

#[derive(Args)]
pub struct PlotArgs {
    /// Sweep CSV report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// svg or md.
    #[arg(long, default_value = "svg")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    /// seed-like or deap-like.
    #[arg(long, default_value = "seed-like")]
    pub preset: String,
    /// Full synthetic spec TOML; replaces the preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub samples_per_class: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write CSV instead of the binary feature format.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    let result = match cli.command {
        Command::Features(a) => commands::features(a),
        Command::TrainGen(a) => commands::train_gen(a),
        Command::Augment(a) => commands::augment(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Plot(a) => commands::plot(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
