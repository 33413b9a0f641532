//! Equi-width discretization of feature vectors and construction of the
//! transaction database mined for rules.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::{ClassLabel, DatasetManifest};
use crate::texture::{FeatureVector, FEATURE_COUNT};

/// A feature index paired with the interval its value fell into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureItem {
    pub feature: u16,
    pub bin: u16,
}

impl FeatureItem {
    pub fn new(feature: u16, bin: u16) -> Self {
        Self { feature, bin }
    }
}

impl fmt::Display for FeatureItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}_b{}", self.feature, self.bin)
    }
}

impl FromStr for FeatureItem {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || format!("bad feature item {s:?}, expected f<idx>_b<bin>");
        let rest = s.strip_prefix('f').ok_or_else(bad)?;
        let (feature, bin) = rest.split_once("_b").ok_or_else(bad)?;
        Ok(Self {
            feature: feature.parse().map_err(|_| bad())?,
            bin: bin.parse().map_err(|_| bad())?,
        })
    }
}

impl Serialize for FeatureItem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureItem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Items order feature items by (feature, bin) ahead of keywords, which sort
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Item {
    Feature(FeatureItem),
    Keyword(String),
}

impl Item {
    pub fn feature(feature: u16, bin: u16) -> Self {
        Item::Feature(FeatureItem { feature, bin })
    }

    /// Keyword item; the token is trimmed and lower-cased.
    pub fn keyword(token: &str) -> Self {
        Item::Keyword(normalize_keyword(token))
    }

    pub fn is_keyword(&self) -> bool {
        matches!(self, Item::Keyword(_))
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Feature(fi) => fi.fmt(f),
            Item::Keyword(k) => write!(f, "kw_{k}"),
        }
    }
}

pub fn normalize_keyword(token: &str) -> String {
    token.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub image_id: String,
    pub items: BTreeSet<Item>,
}

impl Transaction {
    pub fn new(image_id: impl Into<String>, items: impl IntoIterator<Item = Item>) -> Self {
        Self {
            image_id: image_id.into(),
            items: items.into_iter().collect(),
        }
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|i| match i {
            Item::Keyword(k) => Some(k.as_str()),
            Item::Feature(_) => None,
        })
    }

    /// `image_id,item item item` with items in canonical order.
    pub fn to_csv_row(&self) -> String {
        let items: Vec<String> = self.items.iter().map(Item::to_string).collect();
        format!("{},{}", self.image_id, items.join(" "))
    }
}

/// CSV export of a transaction database.
pub fn transactions_to_csv(transactions: &[Transaction]) -> String {
    let mut out = String::from("image_id,items\n");
    for t in transactions {
        out.push_str(&t.to_csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

/// Per-feature equi-width intervals fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationModel {
    pub bins: usize,
    pub ranges: Vec<FeatureRange>,
}

impl DiscretizationModel {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 || self.bins > u16::MAX as usize {
            return Err(Error::Config(format!("bin count must be at least 2, got {}", self.bins)));
        }
        if self.ranges.len() != FEATURE_COUNT {
            return Err(Error::Config(format!(
                "discretizer has {} feature slots, expected {FEATURE_COUNT}",
                self.ranges.len()
            )));
        }
        if self.ranges.iter().any(|r| !r.min.is_finite() || !r.max.is_finite() || r.min > r.max) {
            return Err(Error::Config("discretizer range with min > max or non-finite bound".into()));
        }
        Ok(())
    }

    /// Interior edges `min + i (max - min) / B` for `i` in `1..B`.
    pub fn edges(&self, feature: usize) -> Vec<f64> {
        let r = self.ranges[feature];
        (1..self.bins)
            .map(|i| r.min + i as f64 * (r.max - r.min) / self.bins as f64)
            .collect()
    }

    pub fn bin_of(&self, feature: usize, x: f64) -> u16 {
        let r = self.ranges[feature];
        if r.max == r.min {
            return 0;
        }
        let b = ((x - r.min) * self.bins as f64 / (r.max - r.min)).floor();
        b.clamp(0.0, (self.bins - 1) as f64) as u16
    }
}

pub fn fit_discretizer(vectors: &[FeatureVector], bins: usize) -> Result<DiscretizationModel> {
    if vectors.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if bins < 2 || bins > u16::MAX as usize {
        return Err(Error::Config(format!("bin count must be at least 2, got {bins}")));
    }
    let mut ranges = vec![
        FeatureRange {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY
        };
        FEATURE_COUNT
    ];
    for v in vectors {
        if v.values.len() != FEATURE_COUNT {
            return Err(Error::FeatureLength {
                image_id: v.image_id.clone(),
                expected: FEATURE_COUNT,
                found: v.values.len(),
            });
        }
        for (r, &x) in ranges.iter_mut().zip(&v.values) {
            r.min = r.min.min(x);
            r.max = r.max.max(x);
        }
    }
    Ok(DiscretizationModel { bins, ranges })
}

/// One item per feature; values outside the training range clamp to the end bins.
pub fn discretize(v: &FeatureVector, model: &DiscretizationModel) -> Vec<FeatureItem> {
    v.values
        .iter()
        .enumerate()
        .map(|(f, &x)| FeatureItem::new(f as u16, model.bin_of(f, x)))
        .collect()
}

/// Builds one transaction per manifest entry from its discretized features
/// and its keywords. The class label is always present as a keyword.
pub fn build_transactions(
    manifest: &DatasetManifest,
    model: &DiscretizationModel,
    features: &HashMap<String, FeatureVector>,
) -> Result<Vec<Transaction>> {
    manifest
        .entries
        .iter()
        .map(|e| {
            let v = features
                .get(&e.image_path)
                .ok_or_else(|| Error::MissingFeatures(e.image_path.clone()))?;
            Ok(make_transaction(&e.image_path, e.class_label, &e.keywords, v, model))
        })
        .collect()
}

pub fn make_transaction(
    image_id: &str,
    class_label: ClassLabel,
    keywords: &[String],
    v: &FeatureVector,
    model: &DiscretizationModel,
) -> Transaction {
    let features = discretize(v, model).into_iter().map(Item::Feature);
    let keywords = keywords
        .iter()
        .map(|k| normalize_keyword(k))
        .filter(|k| !k.is_empty())
        .chain(std::iter::once(class_label.as_str().to_string()))
        .map(Item::Keyword);
    Transaction::new(image_id, features.chain(keywords))
}
