use std::fs;
use std::path::{Path, PathBuf};

use eegaug::atomic_write;
use eegaug::augment::{augment_full, augment_selective, gaussian_augment, rda_augment, write_sidecar, AugmentError, Augmented, Method, Montage, RdaAngle};
use eegaug::clf::{Classifier, ClassifierKind};
use eegaug::dataio::{encode_features, synth_generate, write_csv, LabeledDataset, Normalizer, SynthPreset, SynthSpec};
use eegaug::evalx::{run_sweep, EvalSettings, NoStore, SweepReport, SweepSpec};
use eegaug::featx::{de_features, lds_smooth_matrix, psd_extract, BandScheme, FeatureKind};
use eegaug::genmod::{train, Checkpoint, GenerativeModel, ModelKind};

use crate::config::{load_dataset, read_toml, GenOptions, RunConfig};
use crate::error::{CliError, Result};
use crate::output::OutputDir;
use crate::store::{sha256_hex, DiskStore};
use crate::{AugmentArgs, EvaluateArgs, FeaturesArgs, PlotArgs, SweepArgs, SynthArgs, TrainGenArgs};

fn need<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| CliError::usage(format!("{flag} is required")))
}

fn existing<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let p = need(v, flag)?;
    if !p.exists() {
        return Err(CliError::usage(format!("{flag}: no such file {}", p.display())));
    }
    Ok(p)
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str, flag: &str) -> Result<T> {
    s.parse().map_err(|e| CliError::usage(format!("{flag}: {e}")))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn write_features(path: &Path, data: &LabeledDataset) -> Result<()> {
    ensure_parent(path)?;
    atomic_write(path, &encode_features(data))?;
    Ok(())
}

fn read_signals(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::usage(format!("--input: {e}")))?;
    let width = rdr.headers().map_err(|e| CliError::usage(format!("--input: {e}")))?.len();
    let mut channels = vec![Vec::new(); width];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(format!("--input: {e}")))?;
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("--input: row {} column {}: `{field}` is not a number", i + 2, c + 1)))?;
            channels[c].push(v);
        }
    }
    Ok(channels)
}

pub fn features(a: FeaturesArgs) -> Result<()> {
    let input = existing(&a.input, "--input")?;
    let out = need(&a.out, "--out")?;
    let scheme = BandScheme::by_name(&a.scheme).ok_or_else(|| CliError::usage(format!("--scheme: unknown band scheme `{}`", a.scheme)))?;
    let kind: FeatureKind = parse(&a.feature, "--feature")?;
    if !a.no_lds && !(a.lds_ratio.is_finite() && a.lds_ratio > 0.0) {
        return Err(CliError::usage(format!("--lds-ratio must be positive, got {}", a.lds_ratio)));
    }
    let classes = match (a.label, a.classes) {
        (Some(l), Some(k)) if l >= k => return Err(CliError::usage(format!("--label {l} is not below --classes {k}"))),
        (Some(l), k) => Some((l, k.unwrap_or(l + 1))),
        (None, _) => None,
    };
    let signal = read_signals(input)?;
    let mut m = match kind {
        FeatureKind::De => de_features(&signal, a.fs, &scheme),
        FeatureKind::Psd => psd_extract(&signal, a.fs, &scheme),
    }
    .map_err(|e| CliError::usage(format!("--input: {e}")))?;
    if !a.no_lds {
        m = lds_smooth_matrix(&m, a.lds_ratio)?;
    }
    let rows = m.rows();
    let data = match classes {
        Some((label, k)) => LabeledDataset::new(m, vec![label; rows], k)?,
        None => LabeledDataset::unlabeled(m),
    };
    write_features(out, &data)?;
    eprintln!("{rows} windows × {} dims → {}", data.dims(), out.display());
    Ok(())
}

pub fn train_gen(a: TrainGenArgs) -> Result<()> {
    let data_path = existing(&a.data, "--data")?;
    let out = need(&a.out, "--out")?;
    let kind: ModelKind = parse(&a.model, "--model")?;
    let mut o: GenOptions = match &a.config {
        Some(p) => read_toml(p, "--config")?,
        None => GenOptions::default(),
    };
    o.epochs = a.epochs.or(o.epochs);
    o.batch_size = a.batch_size.or(o.batch_size);
    o.lr = a.lr.or(o.lr);
    o.hidden = a.hidden.clone().or(o.hidden);
    o.latent_dim = a.latent_dim.or(o.latent_dim);

    let data = load_dataset(data_path, None)?;
    if kind.is_conditional() && !data.is_labeled() {
        return Err(CliError::usage(format!("--model {}: conditional models need a labeled dataset", kind.as_str())));
    }
    if data.is_empty() {
        return Err(CliError::usage("--data: dataset has no rows"));
    }
    let mut s = EvalSettings {
        gen_hidden: o.hidden.clone(),
        latent_dim: o.latent_dim,
        ..EvalSettings::default()
    };
    if let Some(l) = o.lambda_gp {
        s.lambda_gp = l;
    }
    if let Some(n) = o.n_critic {
        s.n_critic = n;
    }
    let arch = s.architecture(kind, data.features(), data.n_classes() as usize);
    let mut cfg = s.schedule(kind, a.seed);
    cfg.epochs = o.epochs.unwrap_or(cfg.epochs);
    cfg.batch_size = o.batch_size.unwrap_or(cfg.batch_size);
    cfg.lr = o.lr.unwrap_or(cfg.lr);
    cfg.beta1 = o.beta1.unwrap_or(cfg.beta1);
    cfg.beta2 = o.beta2.unwrap_or(cfg.beta2);
    let model = GenerativeModel::<f32>::new(arch, a.seed).map_err(|e| CliError::usage(e.to_string()))?;
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let (model, trace) = train(model, &data, &cfg)?;
    ensure_parent(out)?;
    atomic_write(out, &model.to_checkpoint().encode())?;
    let trace_path = sibling(out, ".loss.csv");
    atomic_write(&trace_path, trace.to_csv().as_bytes())?;
    eprintln!("{} trained for {} epochs → {}", kind.as_str(), cfg.epochs, out.display());
    Ok(())
}

fn load_generator(path: &Path, want: ModelKind) -> Result<GenerativeModel<f32>> {
    let ck = Checkpoint::load(path).map_err(|e| CliError::usage(format!("--generator: {e}")))?;
    let g = GenerativeModel::<f32>::from_checkpoint(&ck).map_err(|e| CliError::usage(format!("--generator: {e}")))?;
    if g.arch.kind != want {
        return Err(CliError::usage(format!(
            "--generator holds a {} model; this method needs {}",
            g.arch.kind.as_str(),
            want.as_str()
        )));
    }
    Ok(g)
}

fn settings_from(path: &Option<PathBuf>) -> Result<EvalSettings> {
    match path {
        Some(p) => read_toml(p, "--config"),
        None => Ok(EvalSettings::default()),
    }
}

pub fn augment(a: AugmentArgs) -> Result<()> {
    let data_path = existing(&a.data, "--data")?;
    let out = need(&a.out, "--out")?;
    let method: Method = parse(&a.method, "--method")?;
    let mut s = settings_from(&a.config)?;
    if let Some(t) = a.threshold {
        s.threshold = t;
    }
    if let Some(r) = a.max_rounds {
        s.max_rounds = r;
    }
    if a.candidates.is_some() {
        s.candidates = a.candidates;
    }
    if let Some(sig) = a.sigma {
        s.sigma = sig;
    }
    if let Some(deg) = a.angle {
        s.rda_angle = RdaAngle::Fixed(deg);
    }
    let judge = match &a.classifier {
        Some(c) => parse::<ClassifierKind>(c, "--classifier")?,
        None => s.selective_classifier.unwrap_or(ClassifierKind::Svm),
    };
    let plan = s.plan(method, a.n);
    plan.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let generator = match (&a.generator, method.generator()) {
        (Some(_), None) => return Err(CliError::usage(format!("--generator does not apply to {method}"))),
        (Some(_), Some(kind)) => Some(load_generator(existing(&a.generator, "--generator")?, kind)?),
        (None, _) => None,
    };
    let montage = match &a.montage {
        Some(_) => Some(Montage::from_csv(fs::File::open(existing(&a.montage, "--montage")?)?).map_err(|e| CliError::usage(format!("--montage: {e}")))?),
        None => None,
    };

    let data = load_dataset(data_path, None)?;
    if !data.is_labeled() {
        return Err(CliError::usage("--data: augmentation needs a labeled dataset"));
    }
    let fit_gen = |rows: &LabeledDataset, kind: ModelKind, seed: u64| -> std::result::Result<GenerativeModel<f32>, AugmentError> {
        let arch = s.architecture(kind, rows.features(), rows.n_classes() as usize);
        let model = GenerativeModel::<f32>::new(arch, seed)?;
        Ok(train(model, rows, &s.schedule(kind, seed))?.0)
    };
    let aug: Augmented = match method {
        Method::Gau => gaussian_augment(&data, plan.sigma.unwrap_or(s.sigma), a.n, a.seed)?,
        Method::Rda => {
            let m = match montage {
                Some(m) => m,
                None => Montage::for_channels(data.features().n_channels()).map_err(|e| CliError::usage(format!("--montage: {e}")))?,
            };
            rda_augment(&data, &m, plan.angle.unwrap_or_default(), a.n, a.seed)?
        }
        Method::Cwgan | Method::Cvae => {
            let kind = method.generator().expect("generative method");
            let g = match generator {
                Some(g) => g,
                None => fit_gen(&data, kind, a.seed)?,
            };
            augment_full(&g, None, a.n, a.seed)?
        }
        Method::Swgan | Method::Svae => {
            let kind = method.generator().expect("generative method");
            let spec = s.classifier(judge);
            let norm = Normalizer::fit(data.features());
            let gen = |rows: &LabeledDataset, round: usize| match &generator {
                Some(g) => Ok(g.clone()),
                None => fit_gen(rows, kind, a.seed.wrapping_add(round as u64)),
            };
            let clf = |pool: &LabeledDataset| -> std::result::Result<Classifier, AugmentError> { Ok(Classifier::fit(&spec, pool, norm.clone(), a.seed)?) };
            augment_selective(&data, &plan, a.seed, gen, clf)?
        }
    };
    let mut merged = data.clone();
    merged.extend(&aug.rows)?;
    write_features(out, &merged)?;
    let mut sidecar = Vec::new();
    write_sidecar(&mut sidecar, &aug.provenance)?;
    atomic_write(&sibling(out, ".sidecar.csv"), &sidecar)?;
    eprintln!("{} real + {} {method} rows → {}", data.rows(), aug.len(), out.display());
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let data_path = existing(&a.data, "--data")?;
    let classifier: ClassifierKind = parse(&a.classifier, "--classifier")?;
    let method = match &a.method {
        Some(m) => Some(parse::<Method>(m, "--method")?),
        None if a.n > 0 => return Err(CliError::usage("--n needs --method")),
        None => None,
    };
    let mut s = settings_from(&a.config)?;
    if let Some(k) = a.folds {
        s.folds = k;
    }
    if s.folds < 2 {
        return Err(CliError::usage(format!("--folds must be at least 2, got {}", s.folds)));
    }
    let data = load_dataset(data_path, None)?;
    if !data.is_labeled() {
        return Err(CliError::usage("--data: evaluation needs a labeled dataset"));
    }
    let counts = if a.n > 0 { vec![0, a.n] } else { vec![0] };
    let spec = SweepSpec {
        methods: vec![method.unwrap_or(Method::Gau)],
        classifiers: vec![classifier],
        counts,
        seed: a.seed,
        jobs: Some(1),
    };
    let report = run_sweep(&data, &spec, &s, &NoStore)?;
    if let Some(f) = report.failures.first() {
        return Err(CliError::runtime(format!("{}: {}", f.key.id(), f.reason)));
    }
    for ag in &report.aggregates {
        let label = if ag.count == 0 {
            "baseline".to_string()
        } else {
            format!("{} +{}", ag.method, ag.count)
        };
        println!("{label}: {:.2}/{:.2}", 100.0 * ag.mean, 100.0 * ag.std);
    }
    if let Some(dir) = &a.out {
        let mut o = OutputDir::create(dir)?;
        o.write("evaluate.csv", report.to_csv().as_bytes())?;
        let hash = sha256_hex(&[fs::read(data_path)?, serde_json::to_vec(&s)?, a.seed.to_le_bytes().to_vec()].concat());
        o.finish("evaluate", &hash)?;
    }
    Ok(())
}

/// Hash of everything a cell result depends on: data bytes, settings and
/// seed. Methods, counts and output paths are left out so growing a sweep
/// reuses finished cells.
fn cache_key(data: &LabeledDataset, settings: &EvalSettings, montage: Option<&[u8]>, seed: u64) -> Result<String> {
    let mut bytes = encode_features(data);
    bytes.extend(serde_json::to_vec(settings)?);
    bytes.extend(montage.unwrap_or_default());
    bytes.extend(seed.to_le_bytes());
    Ok(sha256_hex(&bytes))
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let cfg_path = existing(&a.config, "--config")?;
    let mut cfg = RunConfig::load(cfg_path)?;
    if let Some(o) = &a.out {
        cfg.output = o.clone();
    }
    if let Some(s) = &a.seeds {
        cfg.seeds = s.clone();
    }
    if a.jobs.is_some() {
        cfg.jobs = a.jobs;
    }
    cfg.validate()?;
    let data = cfg.data.load()?;
    if !data.is_labeled() {
        return Err(CliError::usage("data: sweeps need a labeled dataset"));
    }
    if let Some(k) = cfg.feature {
        if k != data.kind() {
            return Err(CliError::usage(format!("feature is {} but the data holds {}", k.as_str(), data.kind().as_str())));
        }
    }
    let montage_bytes = match &cfg.montage {
        Some(p) => Some(fs::read(p)?),
        None => None,
    };
    let mut settings = cfg.settings.clone();
    if let Some(b) = &montage_bytes {
        settings.montage = Some(Montage::from_csv(b.as_slice()).map_err(|e| CliError::usage(format!("montage: {e}")))?);
    }
    let mut hashed = cfg.clone();
    hashed.output = PathBuf::new();
    hashed.jobs = None;
    let config_hash = sha256_hex(&[serde_json::to_vec(&hashed)?, encode_features(&data)].concat());

    let mut out = OutputDir::create(&cfg.output)?;
    let mut ok_cells = 0;
    for &seed in &cfg.seeds {
        let key = cache_key(&data, &cfg.settings, montage_bytes.as_deref(), seed)?;
        let store = DiskStore::new(out.root().join("cache").join(&key[..16]), a.fresh)?;
        let spec = SweepSpec {
            methods: cfg.methods.clone(),
            classifiers: cfg.classifiers.clone(),
            counts: cfg.counts.clone(),
            seed,
            jobs: cfg.jobs,
        };
        let report = run_sweep(&data, &spec, &settings, &store)?;
        ok_cells += report.aggregates.len();
        let dir = format!("seed-{seed}");
        out.write(&format!("{dir}/report.csv"), report.to_csv().as_bytes())?;
        out.write(&format!("{dir}/report.md"), report.to_markdown().as_bytes())?;
        if cfg.plot {
            out.write(&format!("{dir}/report.svg"), report.to_svg().as_bytes())?;
        }
        for f in &report.failures {
            eprintln!("seed {seed}: {} failed: {}", f.key.id(), f.reason);
        }
        for sm in &report.summaries {
            eprintln!(
                "seed {seed}: {}/{} baseline {:.2} peak {:.2} at {} (↑ {:.2})",
                sm.method,
                sm.classifier.as_str(),
                100.0 * sm.baseline,
                100.0 * sm.peak_mean,
                sm.peak_count,
                100.0 * sm.delta
            );
        }
    }
    out.finish("sweep", &config_hash)?;
    if ok_cells == 0 {
        return Err(CliError::runtime("every cell failed"));
    }
    Ok(())
}

pub fn plot(a: PlotArgs) -> Result<()> {
    let path = existing(&a.report, "--report")?;
    let text = fs::read_to_string(path)?;
    let report = SweepReport::from_csv(&text, 0).map_err(|e| CliError::usage(format!("--report: {e}")))?;
    let body = match a.format.as_str() {
        "svg" => report.to_svg(),
        "md" | "markdown" => report.to_markdown(),
        other => return Err(CliError::usage(format!("--format: expected svg or md, got `{other}`"))),
    };
    match &a.out {
        Some(p) => {
            ensure_parent(p)?;
            atomic_write(p, body.as_bytes())?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let out = need(&a.out, "--out")?;
    let mut spec = match &a.spec {
        Some(_) => read_toml::<SynthSpec>(existing(&a.spec, "--spec")?, "--spec")?,
        None => {
            let preset: SynthPreset = match a.preset.as_str() {
                "seed-like" | "seed" => SynthPreset::SeedLike,
                "deap-like" | "deap" => SynthPreset::DeapLike,
                other => return Err(CliError::usage(format!("--preset: expected seed-like or deap-like, got `{other}`"))),
            };
            SynthSpec::preset(preset, 0)
        }
    };
    if let Some(n) = a.samples_per_class {
        spec.samples_per_class = n;
    }
    if let Some(sep) = a.separation {
        spec.separation = sep;
    }
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let data = synth_generate(&spec).map_err(|e| CliError::usage(e.to_string()))?;
    if a.csv {
        let mut buf = Vec::new();
        write_csv(&mut buf, &data)?;
        ensure_parent(out)?;
        atomic_write(out, &buf)?;
    } else {
        write_features(out, &data)?;
    }
    eprintln!("{} rows × {} dims → {}", data.rows(), data.dims(), out.display());
    Ok(())
}
