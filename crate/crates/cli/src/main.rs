use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use texmine_core::image_io::{load_manifest, DatasetManifest};
use texmine_core::miner::MiningConfig;
use texmine_core::pipeline::{
    self, classify_paths, extract_manifest, feature_csv_header, feature_csv_row, predictions_csv, with_jobs,
    TrainConfig,
};
use texmine_core::synthetic::{write_dataset, SyntheticConfig};
use texmine_core::transactions::transactions_to_csv;
use texmine_core::{ClassifierModel, CropRect, Error, ExtractionConfig, PreprocessConfig};

#[derive(Parser)]
#[command(name = "texmine", version, about = "Texture rule mining and classification of grayscale images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one texture feature row per manifest image
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        features: FeatureFlags,
    },
    /// Mine, prune and save a rule model
    Train(TrainArgs),
    /// Classify images with a saved model
    Classify {
        #[arg(long)]
        model: PathBuf,
        /// Classify the images listed in a manifest
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Predictions CSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        features: FeatureFlags,
        images: Vec<PathBuf>,
    },
    /// Evaluate a saved model on a labelled manifest
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Directory receiving report.txt, metrics.csv, roc.csv and predictions.csv
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        features: FeatureFlags,
    },
    /// Generate the seeded three-class synthetic dataset
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 50)]
        train: usize,
        #[arg(long, default_value_t = 20)]
        test: usize,
    },
}

/// Preprocessing and extraction settings. At classify/eval time the model's
/// stored settings win over these.
#[derive(Args, Clone, Default)]
struct FeatureFlags {
    /// Gray levels for co-occurrence matrices [default: 16]
    #[arg(long)]
    gray_levels: Option<usize>,
    /// Pixel distance for co-occurrence pairs [default: 1]
    #[arg(long)]
    distance: Option<usize>,
    /// Crop rectangle x0,y0,w,h applied before everything else
    #[arg(long)]
    crop: Option<CropRect>,
    /// Hybrid median window, odd; 0 disables filtering [default: 3]
    #[arg(long)]
    median_window: Option<usize>,
    /// Skip histogram equalization
    #[arg(long)]
    no_equalize: bool,
    /// Worker threads for per-image stages
    #[arg(long)]
    jobs: Option<usize>,
}

impl FeatureFlags {
    fn preprocess(&self) -> PreprocessConfig {
        let d = PreprocessConfig::default();
        PreprocessConfig {
            crop: self.crop,
            equalize: !self.no_equalize,
            median_window: match self.median_window {
                Some(0) => None,
                Some(w) => Some(w),
                None => d.median_window,
            },
        }
    }

    fn extraction(&self) -> ExtractionConfig {
        let d = ExtractionConfig::default();
        ExtractionConfig {
            gray_levels: self.gray_levels.unwrap_or(d.gray_levels),
            distance: self.distance.unwrap_or(d.distance),
            ..d
        }
    }

    fn any_feature_flag(&self) -> bool {
        self.gray_levels.is_some()
            || self.distance.is_some()
            || self.crop.is_some()
            || self.median_window.is_some()
            || self.no_equalize
    }

    fn warn_if_overridden(&self, model: &ClassifierModel) {
        if self.any_feature_flag()
            && (self.preprocess() != model.preprocess || self.extraction() != model.extraction)
        {
            eprintln!("warning: feature flags differ from the model's settings; using the model's settings");
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Prune report path (dropped rules with COND1/COND3 reasons)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rule dump of the kept rules, one per line in rank order
    #[arg(long)]
    rules_out: Option<PathBuf>,
    /// Transaction database export as CSV
    #[arg(long)]
    transactions_out: Option<PathBuf>,
    #[arg(long, default_value_t = pipeline::DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = 0.10)]
    min_support: f64,
    #[arg(long, default_value_t = 0.97)]
    min_confidence: f64,
    /// Largest itemset size mined, keyword included; 0 means unlimited
    #[arg(long, default_value_t = pipeline::DEFAULT_MAX_LEVEL)]
    max_level: usize,
    #[arg(long, default_value_t = 0.001)]
    threshold: f64,
    #[command(flatten)]
    features: FeatureFlags,
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_extract(manifest: &Path, out: &Path, flags: &FeatureFlags) -> Result<(), Failure> {
    let manifest = load_manifest(manifest)?;
    let (pre, ext) = (flags.preprocess(), flags.extraction());
    ext.validate()?;
    let results = with_jobs(flags.jobs, || extract_manifest(&manifest, &pre, &ext));
    let mut csv = feature_csv_header();
    let mut failed = 0;
    for (entry, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok(v) => csv.push_str(&feature_csv_row(&v)),
            Err(e) => {
                failed += 1;
                eprintln!("error: {}: {e}", entry.image_path);
            }
        }
    }
    write(out, &csv)?;
    if failed > 0 {
        return Err(Failure::Input(format!("{failed} image(s) failed")));
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), Failure> {
    let manifest = load_manifest(&args.manifest)?;
    let cfg = TrainConfig {
        preprocess: args.features.preprocess(),
        extraction: args.features.extraction(),
        bins: args.bins,
        mining: MiningConfig {
            min_support: args.min_support,
            min_confidence: args.min_confidence,
            max_level: (args.max_level > 0).then_some(args.max_level),
        },
        threshold: args.threshold,
    };
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(Failure::Input(format!("threshold must be in [0, 1], got {}", cfg.threshold)));
    }
    let outcome = with_jobs(args.features.jobs, || pipeline::train(&manifest, &cfg))?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    outcome.model.save(&args.model)?;
    if let Some(p) = &args.out {
        write(p, &outcome.prune.to_text())?;
    }
    if let Some(p) = &args.rules_out {
        write(p, &outcome.rules_text())?;
    }
    if let Some(p) = &args.transactions_out {
        write(p, &transactions_to_csv(&outcome.transactions))?;
    }
    eprintln!(
        "mined {} rules from {} transactions, kept {} after pruning ({} dropped)",
        outcome.mined_rules,
        outcome.transactions.len(),
        outcome.model.rules.len(),
        outcome.prune.dropped.len()
    );
    Ok(())
}

fn cmd_classify(
    model: &Path,
    manifest: Option<&Path>,
    images: &[PathBuf],
    out: Option<&Path>,
    flags: &FeatureFlags,
) -> Result<(), Failure> {
    let model = ClassifierModel::load(model)?;
    flags.warn_if_overridden(&model);
    let mut paths: Vec<(String, PathBuf)> = Vec::new();
    if let Some(m) = manifest {
        let m: DatasetManifest = load_manifest(m)?;
        paths.extend(m.entries.iter().map(|e| (e.image_path.clone(), m.resolve(e))));
    }
    paths.extend(images.iter().map(|p| (p.display().to_string(), p.clone())));
    if paths.is_empty() {
        return Err(Failure::Input("no images given".into()));
    }
    let start = Instant::now();
    let files: Vec<&Path> = paths.iter().map(|(_, p)| p.as_path()).collect();
    let results = with_jobs(flags.jobs, || classify_paths(&model, &files));
    let mut rows = Vec::new();
    let mut failed = 0;
    for ((name, _), r) in paths.iter().zip(results) {
        match r {
            Ok(c) => rows.push((name.as_str(), c)),
            Err(e) => {
                failed += 1;
                eprintln!("error: {name}: {e}");
            }
        }
    }
    let csv = predictions_csv(rows.iter().map(|(n, c)| (*n, c)));
    match out {
        Some(p) => write(p, &csv)?,
        None => print!("{csv}"),
    }
    eprintln!("classified {} image(s) in {:.2} ms", rows.len(), start.elapsed().as_secs_f64() * 1e3);
    if failed > 0 {
        return Err(Failure::Input(format!("{failed} image(s) failed")));
    }
    Ok(())
}

fn cmd_eval(model: &Path, manifest: &Path, out: &Path, flags: &FeatureFlags) -> Result<(), Failure> {
    let model = ClassifierModel::load(model)?;
    flags.warn_if_overridden(&model);
    let manifest = load_manifest(manifest)?;
    let eval = with_jobs(flags.jobs, || pipeline::evaluate(&model, &manifest))?;
    fs::create_dir_all(out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
    let report = eval.report_text();
    write(&out.join("report.txt"), &report)?;
    write(&out.join("metrics.csv"), &eval.metrics_csv())?;
    write(&out.join("predictions.csv"), &eval.predictions_csv())?;
    match &eval.roc {
        Some(r) => write(&out.join("roc.csv"), &r.to_csv())?,
        None => eprintln!("notice: ROC skipped, test set contains a single class"),
    }
    print!("{report}");
    println!("classify time {:.2} ms", eval.classify_ms);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Extract { manifest, out, features } => cmd_extract(&manifest, &out, &features),
        Command::Train(args) => cmd_train(&args),
        Command::Classify { model, manifest, out, features, images } => {
            cmd_classify(&model, manifest.as_deref(), &images, out.as_deref(), &features)
        }
        Command::Eval { model, manifest, out, features } => cmd_eval(&model, &manifest, &out, &features),
        Command::Synth { out, seed, size, train, test } => {
            let cfg = SyntheticConfig { size, train_per_class: train, test_per_class: test, seed };
            let (tr, te) = write_dataset(&out, &cfg)?;
            eprintln!("wrote {} and {}", tr.display(), te.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
