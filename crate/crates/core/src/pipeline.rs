//! End-to-end orchestration: feature extraction over a manifest, training
//! and evaluation, plus the text/CSV artifacts each stage emits.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::classifier::{Classification, ClassifierModel, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::eval::{binary_confusion, metrics, roc, ClassConfusion, ConfusionMatrix, Metrics, RocSummary};
use crate::image_io::{load_pgm, ClassLabel, DatasetManifest};
use crate::miner::{mine, MiningConfig};
use crate::numfmt::sig17;
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::pruner::{prune_with_report, PruneReport};
use crate::texture::{extract_features, ExtractionConfig, FeatureVector, FEATURE_COUNT};
use crate::transactions::{build_transactions, fit_discretizer, Transaction};

/// Default itemset size cap (keyword included) used by the command-line pipeline.
pub const DEFAULT_MAX_LEVEL: usize = 3;
pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub preprocess: PreprocessConfig,
    pub extraction: ExtractionConfig,
    pub bins: usize,
    pub mining: MiningConfig,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            extraction: ExtractionConfig::default(),
            bins: DEFAULT_BINS,
            mining: MiningConfig {
                max_level: Some(DEFAULT_MAX_LEVEL),
                ..MiningConfig::default()
            },
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Runs `f` on a pool of `jobs` workers, or the global pool when `None`.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Loads, preprocesses and extracts every manifest image. Results keep
/// manifest order; failures are reported per image.
pub fn extract_manifest(
    manifest: &DatasetManifest,
    preprocess_cfg: &PreprocessConfig,
    extraction: &ExtractionConfig,
) -> Vec<Result<FeatureVector>> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let img = load_pgm(manifest.resolve(e))?;
            let clean = preprocess(&img, preprocess_cfg)?;
            FeatureVector::new(e.image_path.clone(), extract_features(&clean, extraction)?)
        })
        .collect()
}

pub fn feature_csv_header() -> String {
    let cols: Vec<String> = (0..FEATURE_COUNT).map(|i| format!("f{i}")).collect();
    format!("image_path,{}\n", cols.join(","))
}

pub fn feature_csv_row(v: &FeatureVector) -> String {
    let vals: Vec<String> = v.values.iter().map(|&x| sig17(x)).collect();
    format!("{},{}\n", v.image_id, vals.join(","))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    pub prune: PruneReport,
    pub transactions: Vec<Transaction>,
    pub mined_rules: usize,
    pub frequent_itemsets: usize,
    pub warnings: Vec<String>,
}

impl TrainOutcome {
    /// Kept rules in rank order, one dump line each.
    pub fn rules_text(&self) -> String {
        self.model
            .rules
            .rules()
            .iter()
            .map(|r| r.dump_line() + "\n")
            .collect()
    }
}

pub fn train(manifest: &DatasetManifest, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.extraction.validate()?;
    cfg.mining.validate()?;
    let classes = manifest.classes();
    if classes.len() < 2 {
        return Err(Error::SingleClassManifest(
            classes.first().map_or("none".into(), |c| c.to_string()),
        ));
    }
    let vectors = extract_manifest(manifest, &cfg.preprocess, &cfg.extraction)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    train_on_features(manifest, vectors, cfg)
}

/// Training from already extracted vectors, one per manifest entry in order.
pub fn train_on_features(
    manifest: &DatasetManifest,
    vectors: Vec<FeatureVector>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let discretizer = fit_discretizer(&vectors, cfg.bins)?;
    let by_path: HashMap<String, FeatureVector> = vectors
        .into_iter()
        .map(|v| (v.image_id.clone(), v))
        .collect();
    let transactions = build_transactions(manifest, &discretizer, &by_path)?;
    let mined = mine(&transactions, &cfg.mining)?;
    let mined_rules = mined.rules.len();
    let report = prune_with_report(mined.rules);
    let mut warnings = Vec::new();
    if report.kept.is_empty() {
        warnings.push("no rules survived pruning; every image will classify as normal".into());
    }
    let model = ClassifierModel {
        preprocess: cfg.preprocess,
        extraction: cfg.extraction,
        discretizer,
        rules: report.kept.clone(),
        threshold: cfg.threshold,
    };
    model
        .validate()
        .map_err(|e| Error::Invariant(format!("trained model fails validation: {e}")))?;
    Ok(TrainOutcome {
        model,
        prune: report,
        transactions,
        mined_rules,
        frequent_itemsets: mined.frequent.len(),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub image_path: String,
    pub actual: ClassLabel,
    pub result: Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub predictions: Vec<Prediction>,
    pub binary: ConfusionMatrix,
    pub metrics: Metrics,
    pub classes: ClassConfusion,
    /// `None` when the test set holds only one binary class.
    pub roc: Option<RocSummary>,
    /// Wall time of the classification pass; not part of any written report.
    pub classify_ms: f64,
}

/// Classifies every image with the model's own preprocessing and extraction settings.
pub fn classify_manifest(
    model: &ClassifierModel,
    manifest: &DatasetManifest,
) -> Vec<Result<Classification>> {
    manifest
        .entries
        .par_iter()
        .map(|e| model.classify(&load_pgm(manifest.resolve(e))?))
        .collect()
}

/// Classifies image files in order.
pub fn classify_paths(model: &ClassifierModel, paths: &[&Path]) -> Vec<Result<Classification>> {
    paths
        .par_iter()
        .map(|p| model.classify(&load_pgm(p)?))
        .collect()
}

pub fn evaluate(model: &ClassifierModel, manifest: &DatasetManifest) -> Result<Evaluation> {
    let start = Instant::now();
    let results = classify_manifest(model, manifest)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let classify_ms = start.elapsed().as_secs_f64() * 1e3;

    let predictions: Vec<Prediction> = manifest
        .entries
        .iter()
        .zip(results)
        .map(|(e, result)| Prediction {
            image_path: e.image_path.clone(),
            actual: e.class_label,
            result,
        })
        .collect();
    let pairs: Vec<(ClassLabel, ClassLabel)> = predictions
        .iter()
        .map(|p| (p.actual, p.result.label))
        .collect();
    let binary = binary_confusion(&pairs)?;
    let scores: Vec<(f64, bool)> = predictions
        .iter()
        .map(|p| (p.result.score, p.actual.is_abnormal()))
        .collect();
    let roc = match roc(&scores) {
        Ok(r) => Some(r),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(Evaluation {
        metrics: metrics(&binary),
        classes: ClassConfusion::from_pairs(&pairs),
        predictions,
        binary,
        roc,
        classify_ms,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), sig17)
}

pub fn predictions_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a Classification)>) -> String {
    let mut out = String::from("image_path,label,score,keywords\n");
    for (path, c) in rows {
        let kws: Vec<&str> = c.keywords.iter().map(String::as_str).collect();
        out.push_str(&format!("{},{},{},{}\n", path, c.label, sig17(c.score), kws.join(";")));
    }
    out
}

impl Evaluation {
    pub fn predictions_csv(&self) -> String {
        predictions_csv(self.predictions.iter().map(|p| (p.image_path.as_str(), &p.result)))
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (name, v) in self.metrics.named() {
            out.push_str(&format!("{name},{}\n", opt(v)));
        }
        out.push_str(&format!("three_class_accuracy,{}\n", opt(self.classes.accuracy())));
        if let Some(r) = &self.roc {
            out.push_str(&format!("az,{}\nse,{}\n", sig17(r.auc), sig17(r.se)));
        }
        out
    }

    pub fn report_text(&self) -> String {
        let cm = &self.binary;
        let mut out = String::new();
        out.push_str(&format!("images: {}\n\n", self.predictions.len()));
        out.push_str("binary confusion matrix (positive = abnormal)\n");
        out.push_str("               predicted_yes predicted_no\n");
        out.push_str(&format!("actual_yes     TP={:<10} FN={}\n", cm.tp, cm.fn_));
        out.push_str(&format!("actual_no      FP={:<10} TN={}\n\n", cm.fp, cm.tn));
        for (name, v) in self.metrics.named() {
            out.push_str(&format!("{name:<12} {}\n", opt(v)));
        }
        out.push_str("\nthree-class confusion (rows actual, columns predicted)\n");
        out.push_str("         normal benign malign\n");
        for class in ClassLabel::ALL {
            let row = self.classes.counts[class.index()];
            out.push_str(&format!("{:<8} {:>6} {:>6} {:>6}\n", class.as_str(), row[0], row[1], row[2]));
        }
        out.push_str(&format!("three-class accuracy {}\n\n", opt(self.classes.accuracy())));
        match &self.roc {
            Some(r) => out.push_str(&format!(
                "A_z {}\nSE  {}\nroc points {}\n",
                sig17(r.auc),
                sig17(r.se),
                r.points.len()
            )),
            None => out.push_str("ROC skipped: test set contains a single class\n"),
        }
        out
    }
}
