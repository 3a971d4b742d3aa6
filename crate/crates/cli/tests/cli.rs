use std::f64::consts::{E, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eegaug::augment::read_sidecar;
use eegaug::dataio::load_features;
use eegaug::evalx::EvalSettings;
use eegaug::genmod::{Checkpoint, GenerativeModel, ModelKind, ModelTag};
use eegaug::rng::RngStream;

fn eegaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eegaug")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// 2 classes, 4 channels × 2 bands, far apart.
const TINY_SPEC: &str = "n_classes = 2\nn_channels = 4\nn_bands = 2\nsamples_per_class = 30\nseparation = 6.0\nsignal_rank = 2\nseed = 3\n";

const QUICK_SETTINGS: &str = r#"
gen_hidden = [16, 16]
latent_dim = 4
candidates = 400

[gan]
epochs = 40
batch_size = 16
lr = 1e-3
beta1 = 0.0
beta2 = 0.9
seed = 0

[vae]
epochs = 40
batch_size = 16
lr = 1e-3
beta1 = 0.9
beta2 = 0.999
seed = 0

[svm]
c_grid = [0.25, 1.0, 4.0, 16.0]
"#;

fn tiny(dir: &Path) -> PathBuf {
    let spec = dir.join("tiny.toml");
    fs::write(&spec, TINY_SPEC).unwrap();
    let out = dir.join("tiny.eafx");
    let o = eegaug(&["synth", "--spec", p(&spec), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

fn quick_settings(dir: &Path) -> PathBuf {
    let path = dir.join("settings.toml");
    fs::write(&path, QUICK_SETTINGS).unwrap();
    path
}

fn white_noise_csv(dir: &Path, channels: usize, seconds: usize, fs_hz: usize) -> PathBuf {
    let mut rng = RngStream::new(11);
    let mut text = (0..channels).map(|c| format!("ch{c}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for _ in 0..seconds * fs_hz {
        let row: Vec<String> = (0..channels).map(|_| format!("{}", rng.normal())).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = dir.join("noise.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn help_and_unknown_flags() {
    let o = eegaug(&["--help"]);
    assert_eq!(code(&o), 0);
    let help = String::from_utf8_lossy(&o.stdout);
    for sub in ["features", "train-gen", "augment", "evaluate", "sweep", "plot", "synth"] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
    let o = eegaug(&["augment", "--help"]);
    let help = String::from_utf8_lossy(&o.stdout);
    for flag in ["--data", "--method", "--n", "--threshold", "--generator", "--out", "--seed"] {
        assert!(help.contains(flag), "{flag} missing from augment help");
    }
    assert_eq!(code(&eegaug(&["synth", "--bogus"])), 2);
    assert_eq!(code(&eegaug(&["frobnicate"])), 2);
}

#[test]
fn features_from_white_noise() {
    let dir = tempfile::tempdir().unwrap();
    let input = white_noise_csv(dir.path(), 3, 20, 200);
    let out = dir.path().join("f.eafx");
    let o = eegaug(&[
        "features",
        "--input",
        p(&input),
        "--fs",
        "200",
        "--feature",
        "de",
        "--label",
        "1",
        "--classes",
        "3",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let d = load_features(&out).unwrap();
    assert_eq!((d.rows(), d.features().n_channels(), d.features().n_bands()), (20, 3, 5));
    assert_eq!(d.labels().unwrap(), &[1; 20]);
    let f = d.features();
    let wide: Vec<f64> = (0..f.rows()).flat_map(|r| (0..3).flat_map(move |c| [3, 4].map(|b| f.get(r, f.dim_index(c, b))))).collect();
    let mean = wide.iter().sum::<f64>() / wide.len() as f64;
    let target = 0.5 * (2.0 * PI * E).ln();
    assert!((mean - target).abs() / target < 0.04, "beta/gamma DE {mean} vs {target}");

    let psd = dir.path().join("p.eafx");
    let o = eegaug(&["features", "--input", p(&input), "--feature", "psd", "--scheme", "deap4", "--no-lds", "--out", p(&psd)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let d = load_features(&psd).unwrap();
    assert_eq!((d.dims(), d.is_labeled()), (12, false));
}

#[test]
fn features_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.eafx");
    let o = eegaug(&["features", "--input", "/no/such/signal.csv", "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--input"), "{}", stderr(&o));
    let input = white_noise_csv(dir.path(), 2, 2, 200);
    let o = eegaug(&["features", "--input", p(&input), "--scheme", "nope", "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--scheme"));
    let o = eegaug(&["features", "--input", p(&input), "--fs", "60", "--out", p(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn train_gen_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny(dir.path());
    let ck = dir.path().join("g.eagm");
    let o = eegaug(&[
        "train-gen",
        "--data",
        p(&data),
        "--model",
        "cwgan",
        "--epochs",
        "3",
        "--hidden",
        "8,8",
        "--latent-dim",
        "3",
        "--batch-size",
        "16",
        "--out",
        p(&ck),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(Checkpoint::load(&ck).unwrap().tag, ModelTag::Cwgan);
    let trace = fs::read_to_string(dir.path().join("g.loss.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4);

    let input = white_noise_csv(dir.path(), 2, 12, 200);
    let unlabeled = dir.path().join("u.eafx");
    assert_eq!(code(&eegaug(&["features", "--input", p(&input), "--out", p(&unlabeled)])), 0);
    let w = dir.path().join("w.eagm");
    let o = eegaug(&[
        "train-gen",
        "--data",
        p(&unlabeled),
        "--model",
        "wgan",
        "--epochs",
        "2",
        "--hidden",
        "8",
        "--batch-size",
        "4",
        "--out",
        p(&w),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = eegaug(&["train-gen", "--data", p(&unlabeled), "--model", "cwgan", "--out", p(&w)]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&eegaug(&["train-gen", "--data", p(&data), "--model", "gan", "--out", p(&w)])), 2);
}

#[test]
fn zero_epochs_is_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny(dir.path());
    let cfg = dir.path().join("gen.toml");
    fs::write(&cfg, "hidden = [8, 8]\nlatent_dim = 3\nepochs = 0\n").unwrap();
    let ck = dir.path().join("v.eagm");
    let o = eegaug(&["train-gen", "--data", p(&data), "--model", "vae", "--config", p(&cfg), "--seed", "9", "--out", p(&ck)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let loaded = Checkpoint::load(&ck).unwrap();
    let d = load_features(&data).unwrap();
    let s = EvalSettings {
        gen_hidden: Some(vec![8, 8]),
        latent_dim: Some(3),
        ..EvalSettings::default()
    };
    let init = GenerativeModel::<f32>::new(s.architecture(ModelKind::Vae, d.features(), 2), 9).unwrap().to_checkpoint();
    assert_eq!(loaded.tensors, init.tensors);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "epochs = 1\nwidth = 3\n").unwrap();
    assert_eq!(code(&eegaug(&["train-gen", "--data", p(&data), "--model", "vae", "--config", p(&bad), "--out", p(&ck)])), 2);
}

#[test]
fn augment_counts_and_noop() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny(dir.path());
    let out = dir.path().join("a.eafx");
    let o = eegaug(&["augment", "--data", p(&data), "--method", "gau", "--n", "200", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(load_features(&out).unwrap().rows(), 60 + 200);
    let side = read_sidecar(fs::File::open(dir.path().join("a.sidecar.csv")).unwrap()).unwrap();
    assert_eq!(side.len(), 200);
    assert!(side.iter().all(|r| r.source_row.unwrap() < 60));

    let same = dir.path().join("same.eafx");
    let o = eegaug(&["augment", "--data", p(&data), "--method", "swgan", "--n", "0", "--out", p(&same)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(&same).unwrap(), fs::read(&data).unwrap());

    let o = eegaug(&["augment", "--data", p(&data), "--method", "rda", "--n", "5", "--out", p(&out)]);
    assert_eq!(code(&o), 2, "4-channel data has no bundled montage");
    assert_eq!(
        code(&eegaug(&[
            "augment",
            "--data",
            p(&data),
            "--method",
            "swgan",
            "--n",
            "5",
            "--threshold",
            "1.5",
            "--out",
            p(&out)
        ])),
        2
    );
}

#[test]
fn selective_augment_respects_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny(dir.path());
    let settings = quick_settings(dir.path());
    let out = dir.path().join("s.eafx");
    let o = eegaug(&[
        "augment",
        "--data",
        p(&data),
        "--method",
        "swgan",
        "--n",
        "40",
        "--threshold",
        "0.9",
        "--config",
        p(&settings),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let side = read_sidecar(fs::File::open(dir.path().join("s.sidecar.csv")).unwrap()).unwrap();
    assert_eq!(side.len(), 40);
    assert!(side.iter().all(|r| r.confidence.unwrap() > 0.9));
    assert_eq!(load_features(&out).unwrap().rows(), 100);

    let o = eegaug(&[
        "augment",
        "--data",
        p(&data),
        "--method",
        "swgan",
        "--n",
        "10",
        "--threshold",
        "1.0",
        "--max-rounds",
        "2",
        "--config",
        p(&settings),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("acceptance rate"), "{}", stderr(&o));
}

#[test]
fn augment_with_pretrained_generator() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny(dir.path());
    let ck = dir.path().join("c.eagm");
    let o = eegaug(&[
        "train-gen",
        "--data",
        p(&data),
        "--model",
        "cvae",
        "--epochs",
        "5",
        "--hidden",
        "8",
        "--latent-dim",
        "2",
        "--batch-size",
        "16",
        "--out",
        p(&ck),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("c.eafx");
    let o = eegaug(&["augment", "--data", p(&data), "--method", "cvae", "--n", "30", "--generator", p(&ck), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let d = load_features(&out).unwrap();
    assert_eq!(d.class_counts(), vec![45, 45]);
    let o = eegaug(&["augment", "--data", p(&data), "--method", "cwgan", "--n", "30", "--generator", p(&ck), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
}

fn sweep_config(dir: &Path, counts: &str, data: &str) -> PathBuf {
    let cfg = format!(
        "methods = [\"gau\", \"cvae\"]\ncounts = {counts}\nseeds = [1]\noutput = \"run\"\n\n[data]\n{data}\n\n[settings]\n{}",
        QUICK_SETTINGS.replace("\n[", "\n[settings.")
    );
    let path = dir.join("run.toml");
    fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn sweep_is_cached_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config(dir.path(), "[0, 20]", "preset = \"seed-like\"\nsamples_per_class = 10\nseed = 4");
    let o = eegaug(&["sweep", "--config", p(&cfg), "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let run = dir.path().join("run");
    let csv = fs::read_to_string(run.join("seed-1/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(run.join("seed-1/report.md").exists() && run.join("seed-1/report.svg").exists());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["files"].as_array().unwrap().len(), 3);

    let other = dir.path().join("other");
    let o = eegaug(&["sweep", "--config", p(&cfg), "--jobs", "1", "--out", p(&other)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(other.join("seed-1/report.csv")).unwrap(), csv.as_bytes());

    let mut cached: Vec<PathBuf> = fs::read_dir(run.join("cache"))
        .unwrap()
        .flat_map(|d| fs::read_dir(d.unwrap().path()).unwrap())
        .map(|e| e.unwrap().path())
        .collect();
    cached.sort();
    assert_eq!(cached.len(), 3);
    let gau = cached.iter().find(|p| p.to_str().unwrap().contains("gau-svm-20")).unwrap();
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(gau).unwrap()).unwrap();
    v["accuracies"][0] = serde_json::json!(0.123);
    fs::write(gau, serde_json::to_vec(&v).unwrap()).unwrap();
    let o = eegaug(&["sweep", "--config", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rerun = fs::read_to_string(run.join("seed-1/report.csv")).unwrap();
    assert!(rerun.contains("0.1230000000"), "cached cell was recomputed");
    let o = eegaug(&["sweep", "--config", p(&cfg), "--fresh"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(run.join("seed-1/report.csv")).unwrap(), csv);
}

#[test]
fn sweep_baseline_only_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.eafx");
    assert_eq!(code(&eegaug(&["synth", "--samples-per-class", "10", "--seed", "4", "--out", p(&data)])), 0);
    let cfg = sweep_config(dir.path(), "[0]", "path = \"d.eafx\"");
    let o = eegaug(&["sweep", "--config", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = dir.path().join("run/seed-1/report.csv");
    let csv = fs::read_to_string(&report).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].split(',').nth(7), rows[1].split(',').nth(7), "baseline shared across methods");

    let o = eegaug(&["evaluate", "--data", p(&data), "--seed", "1", "--config", p(&quick_settings(dir.path()))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let printed = String::from_utf8_lossy(&o.stdout);
    let mean: f64 = rows[0].split(',').nth(5).unwrap().parse().unwrap();
    assert!(printed.contains(&format!("baseline: {:.2}/", 100.0 * mean)), "{printed}");

    let svg = dir.path().join("plot.svg");
    let o = eegaug(&["plot", "--report", p(&report), "--out", p(&svg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let o = eegaug(&["plot", "--report", p(&report), "--format", "md"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("| gau |"));
}

#[test]
fn sweep_config_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "methods = [\"gau\"]\ncounts = [0]\ncolour = 1\n[data]\npreset = \"seed-like\"\n").unwrap();
    let o = eegaug(&["sweep", "--config", p(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
    fs::write(&cfg, "methods = [\"gau\"]\ncounts = [10]\n[data]\npreset = \"seed-like\"\n").unwrap();
    assert_eq!(code(&eegaug(&["sweep", "--config", p(&cfg)])), 2);
    fs::write(&cfg, "methods = [\"gau\"]\ncounts = [0]\n[data]\npath = \"missing.eafx\"\n").unwrap();
    assert_eq!(code(&eegaug(&["sweep", "--config", p(&cfg)])), 2);
    assert_eq!(code(&eegaug(&["sweep", "--config", "/no/such.toml"])), 2);
}

#[test]
fn synth_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.eafx");
    let o = eegaug(&["synth", "--preset", "seed-like", "--samples-per-class", "5", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let d = load_features(&out).unwrap();
    assert_eq!((d.dims(), d.rows()), (310, 15));
    let o = eegaug(&["synth", "--preset", "deap-like", "--samples-per-class", "5", "--csv", "--out", p(&dir.path().join("s.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let header = fs::read_to_string(dir.path().join("s.csv")).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 129);
    assert_eq!(code(&eegaug(&["synth", "--preset", "mnist", "--out", p(&out)])), 2);
}
