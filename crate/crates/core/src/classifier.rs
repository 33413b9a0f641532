//! Keyword suggestion from pruned rules, class mapping, abnormality scores and
//! the JSON model file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::{ClassLabel, GrayImage};
use crate::miner::AssociationRule;
use crate::numfmt::json_number;
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::pruner::RankedRuleSet;
use crate::texture::{extract_features, ExtractionConfig, FeatureVector};
use crate::transactions::{discretize, DiscretizationModel, FeatureItem, FeatureRange};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD: f64 = 0.001;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub preprocess: PreprocessConfig,
    pub extraction: ExtractionConfig,
    pub discretizer: DiscretizationModel,
    pub rules: RankedRuleSet,
    pub threshold: f64,
}

/// Per-head match and non-match counts over the rule set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchTally {
    counts: BTreeMap<String, (usize, usize)>,
}

impl MatchTally {
    /// Tallies every rule: a match when its body is contained in `items`.
    /// `items` must be sorted.
    pub fn new<'a>(items: &[FeatureItem], rules: impl IntoIterator<Item = &'a AssociationRule>) -> Self {
        let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for rule in rules {
            let entry = counts.entry(rule.consequent.clone()).or_default();
            if rule.matches(items) {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
        Self { counts }
    }

    pub fn matches(&self, head: &str) -> usize {
        self.counts.get(head).map_or(0, |c| c.0)
    }

    pub fn non_matches(&self, head: &str) -> usize {
        self.counts.get(head).map_or(0, |c| c.1)
    }

    /// `n(M) / (n(M) + n(N))` for each head that has at least one rule.
    pub fn ratios(&self) -> impl Iterator<Item = (&str, f64)> {
        self.counts
            .iter()
            .map(|(h, &(m, nm))| (h.as_str(), m as f64 / (m + nm) as f64))
    }
}

/// Heads whose match ratio reaches `threshold`.
pub fn suggest_keywords(items: &[FeatureItem], rules: &RankedRuleSet, threshold: f64) -> BTreeSet<String> {
    MatchTally::new(items, rules.rules())
        .ratios()
        .filter(|&(_, r)| r >= threshold)
        .map(|(h, _)| h.to_string())
        .collect()
}

/// Largest match ratio among heads naming an abnormal class; 0 without such rules.
pub fn score_abnormality(items: &[FeatureItem], rules: &RankedRuleSet) -> f64 {
    let abnormal = [ClassLabel::Benign.as_str(), ClassLabel::Malign.as_str()];
    MatchTally::new(items, rules.rules().iter().filter(|r| abnormal.contains(&r.consequent.as_str())))
        .ratios()
        .map(|(_, r)| r)
        .fold(0.0, f64::max)
}

/// Most severe class keyword in the suggestion set; `normal` when none is present.
pub fn label_for(keywords: &BTreeSet<String>) -> ClassLabel {
    [ClassLabel::Malign, ClassLabel::Benign]
        .into_iter()
        .find(|c| keywords.contains(c.as_str()))
        .unwrap_or(ClassLabel::Normal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: ClassLabel,
    pub keywords: BTreeSet<String>,
    pub score: f64,
}

impl ClassifierModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold must be in [0, 1], got {}", self.threshold)));
        }
        self.extraction.validate()?;
        self.discretizer.validate()?;
        self.rules.check_invariants().map_err(Error::Config)
    }

    pub fn suggest_keywords(&self, items: &[FeatureItem]) -> BTreeSet<String> {
        suggest_keywords(items, &self.rules, self.threshold)
    }

    pub fn score_abnormality(&self, items: &[FeatureItem]) -> f64 {
        score_abnormality(items, &self.rules)
    }

    pub fn classify_features(&self, features: &FeatureVector) -> Classification {
        let items = discretize(features, &self.discretizer);
        let keywords = self.suggest_keywords(&items);
        Classification {
            label: label_for(&keywords),
            score: self.score_abnormality(&items),
            keywords,
        }
    }

    /// Preprocesses and extracts with the model's own settings, then classifies.
    pub fn features_for(&self, image: &GrayImage, image_id: &str) -> Result<FeatureVector> {
        let clean = preprocess(image, &self.preprocess)?;
        FeatureVector::new(image_id, extract_features(&clean, &self.extraction)?)
    }

    pub fn classify(&self, image: &GrayImage) -> Result<Classification> {
        Ok(self.classify_features(&self.features_for(image, "")?))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            preprocess: self.preprocess,
            extraction: self.extraction,
            discretizer: DiscretizerFile {
                bins: self.discretizer.bins,
                ranges: self
                    .discretizer
                    .ranges
                    .iter()
                    .map(|r| RangeFile {
                        min: json_number(r.min),
                        max: json_number(r.max),
                    })
                    .collect(),
            },
            threshold: json_number(self.threshold),
            rules: self
                .rules
                .rules()
                .iter()
                .map(|r| RuleFile {
                    antecedent: r.antecedent.clone(),
                    consequent: r.consequent.clone(),
                    support: json_number(r.support),
                    confidence: json_number(r.confidence),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parse = |e: serde_json::Error| Error::ModelParse(e.to_string());
        let value: serde_json::Value = serde_json::from_str(text).map_err(parse)?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::ModelParse("missing format_version".into()))?;
        if version != MODEL_FORMAT_VERSION as u64 {
            return Err(Error::ModelVersion {
                found: version as u32,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_value(value).map_err(parse)?;
        let num = |n: &serde_json::Number| {
            n.as_f64()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::ModelParse(format!("bad number {n}")))
        };
        let ranges = file
            .discretizer
            .ranges
            .iter()
            .map(|r| Ok(FeatureRange { min: num(&r.min)?, max: num(&r.max)? }))
            .collect::<Result<Vec<_>>>()?;
        let rules = file
            .rules
            .iter()
            .map(|r| {
                Ok(AssociationRule {
                    antecedent: r.antecedent.clone(),
                    consequent: r.consequent.clone(),
                    support: num(&r.support)?,
                    confidence: num(&r.confidence)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = ClassifierModel {
            preprocess: file.preprocess,
            extraction: file.extraction,
            discretizer: DiscretizationModel {
                bins: file.discretizer.bins,
                ranges,
            },
            rules: RankedRuleSet::from_rules(rules.clone()),
            threshold: num(&file.threshold)?,
        };
        if model.rules.rules() != rules.as_slice() {
            return Err(Error::ModelParse("rules are not stored in rank order".into()));
        }
        model.validate().map_err(|e| Error::ModelParse(e.to_string()))?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    preprocess: PreprocessConfig,
    extraction: ExtractionConfig,
    discretizer: DiscretizerFile,
    threshold: serde_json::Number,
    rules: Vec<RuleFile>,
}

#[derive(Serialize, Deserialize)]
struct DiscretizerFile {
    bins: usize,
    ranges: Vec<RangeFile>,
}

#[derive(Serialize, Deserialize)]
struct RangeFile {
    min: serde_json::Number,
    max: serde_json::Number,
}

#[derive(Serialize, Deserialize)]
struct RuleFile {
    antecedent: Vec<FeatureItem>,
    consequent: String,
    support: serde_json::Number,
    confidence: serde_json::Number,
}
