//! Binary confusion matrices, derived rates, ROC sweeps, area under the
//! curve and its Hanley–McNeil standard error.

use crate::error::{Error, Result};
use crate::image_io::ClassLabel;

/// Abnormal (benign or malign) is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Rates derived from a confusion matrix; `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    Metrics {
        precision: ratio(cm.tp, cm.tp + cm.fp),
        recall,
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        sensitivity: recall,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
    }
}

impl Metrics {
    pub fn named(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("precision", self.precision),
            ("recall", self.recall),
            ("accuracy", self.accuracy),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
        ]
    }
}

/// Builds the binary matrix from `(actual_abnormal, predicted_abnormal)` pairs.
pub fn confusion_from_predictions(pairs: &[(bool, bool)]) -> Result<ConfusionMatrix> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for &(actual, predicted) in pairs {
        match (actual, predicted) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Same as `confusion_from_predictions`, collapsing benign and malign to abnormal.
pub fn binary_confusion(pairs: &[(ClassLabel, ClassLabel)]) -> Result<ConfusionMatrix> {
    let pairs: Vec<(bool, bool)> = pairs
        .iter()
        .map(|(a, p)| (a.is_abnormal(), p.is_abnormal()))
        .collect();
    confusion_from_predictions(&pairs)
}

/// Three-class counts indexed `[actual][predicted]` in normal, benign, malign order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassConfusion {
    pub counts: [[usize; 3]; 3],
}

impl ClassConfusion {
    pub fn from_pairs(pairs: &[(ClassLabel, ClassLabel)]) -> Self {
        let mut counts = [[0; 3]; 3];
        for &(a, p) in pairs {
            counts[a.index()][p.index()] += 1;
        }
        Self { counts }
    }

    pub fn accuracy(&self) -> Option<f64> {
        let total: usize = self.counts.iter().flatten().sum();
        let correct: usize = (0..3).map(|i| self.counts[i][i]).sum();
        ratio(correct, total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocSummary {
    /// Sorted by ascending threshold.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub se: f64,
}

impl RocSummary {
    /// `threshold,tpr,fpr` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,tpr,fpr\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                crate::numfmt::sig17(p.threshold),
                crate::numfmt::sig17(p.tpr),
                crate::numfmt::sig17(p.fpr)
            ));
        }
        out
    }
}

/// Sweeps every distinct score plus the sentinels below and above the score
/// range, predicting positive when `score >= threshold`.
pub fn roc(scores: &[(f64, bool)]) -> Result<RocSummary> {
    if scores.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::Config("scores must be finite".into()));
    }
    let n_pos = scores.iter().filter(|s| s.1).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let hi = sorted[0].0.max(1.0).next_up();
    let lo = sorted[sorted.len() - 1].0.min(0.0);
    let mut descending = vec![RocPoint {
        threshold: hi,
        tpr: 0.0,
        fpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == t {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        descending.push(RocPoint {
            threshold: t,
            tpr: tp as f64 / n_pos as f64,
            fpr: fp as f64 / n_neg as f64,
        });
    }
    if lo < sorted[sorted.len() - 1].0 {
        descending.push(RocPoint {
            threshold: lo,
            tpr: 1.0,
            fpr: 1.0,
        });
    }

    let auc = descending
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum::<f64>();
    descending.reverse();
    Ok(RocSummary {
        points: descending,
        auc,
        se: hanley_mcneil_se(auc, n_pos, n_neg),
    })
}

/// Standard error of the area with `Q1 = A/(2-A)` and `Q2 = 2A²/(1+A)`.
pub fn hanley_mcneil_se(auc: f64, n_pos: usize, n_neg: usize) -> f64 {
    let a = auc;
    let q1 = a / (2.0 - a);
    let q2 = 2.0 * a * a / (1.0 + a);
    let (np, nn) = (n_pos as f64, n_neg as f64);
    let var = (a * (1.0 - a) + (np - 1.0) * (q1 - a * a) + (nn - 1.0) * (q2 - a * a)) / (np * nn);
    var.max(0.0).sqrt()
}
