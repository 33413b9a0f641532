//! Seeded generator for a three-class texture dataset: flat low-noise fields
//! (normal), coarse noisy checkerboards (benign) and fine high-contrast
//! stripes (malign).

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image_io::{save_pgm, ClassLabel, DatasetManifest, GrayImage, ManifestEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub size: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            size: 64,
            train_per_class: 50,
            test_per_class: 20,
            seed: 7,
        }
    }
}

fn noisy(base: f64, sigma: f64, rng: &mut impl Rng) -> u16 {
    let n = Normal::new(0.0, sigma).expect("positive sigma");
    (base + n.sample(rng)).round().clamp(0.0, 255.0) as u16
}

pub fn generate_image(class: ClassLabel, size: usize, rng: &mut impl Rng) -> GrayImage {
    let mut px = Vec::with_capacity(size * size);
    match class {
        ClassLabel::Normal => {
            let level = rng.random_range(110.0..150.0);
            for _ in 0..size * size {
                px.push(noisy(level, 3.0, rng));
            }
        }
        ClassLabel::Benign => {
            let block = rng.random_range(7..=9usize);
            let (ox, oy) = (rng.random_range(0..block), rng.random_range(0..block));
            for y in 0..size {
                for x in 0..size {
                    let dark = ((x + ox) / block + (y + oy) / block) % 2 == 0;
                    px.push(noisy(if dark { 80.0 } else { 175.0 }, 12.0, rng));
                }
            }
        }
        ClassLabel::Malign => {
            let phase = rng.random_range(0..2usize);
            for _ in 0..size {
                for x in 0..size {
                    let dark = (x + phase) % 2 == 0;
                    px.push(noisy(if dark { 35.0 } else { 220.0 }, 12.0, rng));
                }
            }
        }
    }
    GrayImage::new(size, size, 255, px).expect("generator keeps pixels in range")
}

fn keywords(class: ClassLabel, rng: &mut impl Rng) -> Vec<String> {
    match class {
        ClassLabel::Normal => vec!["normal".into()],
        ClassLabel::Benign => vec![
            "benign".into(),
            "assessment=3".into(),
            format!("subtlety={}", rng.random_range(3..=4)),
        ],
        ClassLabel::Malign => vec!["malign".into(), "assessment=5".into(), "subtlety=5".into()],
    }
}

/// Writes `train/` and `test/` image folders plus `train.csv` and `test.csv`
/// manifests under `dir`, returning the two manifest paths.
pub fn write_dataset(dir: &Path, cfg: &SyntheticConfig) -> Result<(PathBuf, PathBuf)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut paths = Vec::new();
    for (split, per_class) in [("train", cfg.train_per_class), ("test", cfg.test_per_class)] {
        let img_dir = dir.join(split);
        fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
        let mut manifest = DatasetManifest::default();
        for class in ClassLabel::ALL {
            for i in 0..per_class {
                let img = generate_image(class, cfg.size, &mut rng);
                let rel = format!("{split}/{class}_{i:03}.pgm");
                save_pgm(&img, dir.join(&rel))?;
                manifest.entries.push(ManifestEntry {
                    image_path: rel,
                    class_label: class,
                    keywords: keywords(class, &mut rng),
                });
            }
        }
        let path = dir.join(format!("{split}.csv"));
        fs::write(&path, manifest.to_csv()).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    let test = paths.pop().unwrap();
    let train = paths.pop().unwrap();
    Ok((train, test))
}
