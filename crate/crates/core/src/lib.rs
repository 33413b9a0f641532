//! Texture-based image mining: grey-level co-occurrence features,
//! keyword-anchored association rules, rule pruning and rule-based
//! classification of grayscale images into normal, benign and malign.

pub mod classifier;
pub mod error;
pub mod eval;
pub mod image_io;
pub mod miner;
pub mod numfmt;
pub mod pipeline;
pub mod preprocess;
pub mod pruner;
pub mod synthetic;
pub mod texture;
pub mod transactions;

pub use classifier::{Classification, ClassifierModel, MatchTally};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, Metrics, RocSummary};
pub use image_io::{ClassLabel, DatasetManifest, GrayImage, ManifestEntry};
pub use miner::{AssociationRule, ItemSet, MiningConfig};
pub use preprocess::{CropRect, PreprocessConfig};
pub use pruner::{PruneReport, RankedRuleSet};
pub use texture::{CooccurrenceMatrix, Direction, ExtractionConfig, FeatureVector, TextureDescriptors};
pub use transactions::{DiscretizationModel, FeatureItem, Item, Transaction};
