//! Directional grey-level co-occurrence matrices and the ten texture
//! descriptors computed from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::GrayImage;

/// Number of descriptors computed per matrix.
pub const DESCRIPTOR_COUNT: usize = 10;
/// Length of an image feature vector: four directions times ten descriptors.
pub const FEATURE_COUNT: usize = Direction::ALL.len() * DESCRIPTOR_COUNT;

pub const DESCRIPTOR_NAMES: [&str; DESCRIPTOR_COUNT] = [
    "entropy",
    "energy",
    "contrast",
    "homogeneity",
    "sum_mean",
    "variance",
    "maximum_probability",
    "inverse_difference_moment",
    "cluster_tendency",
    "correlation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Deg0,
        Direction::Deg45,
        Direction::Deg90,
        Direction::Deg135,
    ];

    pub fn degrees(self) -> u32 {
        match self {
            Direction::Deg0 => 0,
            Direction::Deg45 => 45,
            Direction::Deg90 => 90,
            Direction::Deg135 => 135,
        }
    }

    /// Unit (row, column) displacement from the first pixel of a pair to the second.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::Deg0 => (0, 1),
            Direction::Deg45 => (-1, 1),
            Direction::Deg90 => (-1, 0),
            Direction::Deg135 => (-1, -1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub gray_levels: usize,
    pub distance: usize,
    pub idm_exponent: i32,
    pub cluster_exponent: i32,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            gray_levels: 16,
            distance: 1,
            idm_exponent: 2,
            cluster_exponent: 2,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gray_levels < 2 || self.gray_levels > 65536 {
            return Err(Error::Config(format!(
                "gray levels must be in 2..=65536, got {}",
                self.gray_levels
            )));
        }
        if self.distance < 1 {
            return Err(Error::Config("distance must be at least 1".into()));
        }
        if self.idm_exponent < 1 || self.cluster_exponent < 1 {
            return Err(Error::Config("descriptor exponents must be at least 1".into()));
        }
        Ok(())
    }
}

/// Maps each pixel to `floor(p * G / (max + 1))`.
pub fn quantize(image: &GrayImage, gray_levels: usize) -> Result<GrayImage> {
    if !(2..=65536).contains(&gray_levels) {
        return Err(Error::Config(format!(
            "gray levels must be in 2..=65536, got {gray_levels}"
        )));
    }
    let scale = image.max_value() as u64 + 1;
    let pixels = image
        .pixels()
        .iter()
        .map(|&p| (p as u64 * gray_levels as u64 / scale) as u16)
        .collect();
    GrayImage::new(
        image.width(),
        image.height(),
        (gray_levels - 1) as u16,
        pixels,
    )
}

/// Raw ordered pair counts for one displacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    gray_levels: usize,
    direction: Direction,
    distance: usize,
    counts: Vec<u64>,
    total: u64,
}

impl CooccurrenceMatrix {
    pub fn gray_levels(&self) -> usize {
        self.gray_levels
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.gray_levels + j]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.gray_levels)
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn normalize(&self) -> Result<NormalizedMatrix> {
        if self.total == 0 {
            return Err(Error::EmptyCooccurrence);
        }
        let t = self.total as f64;
        Ok(NormalizedMatrix {
            gray_levels: self.gray_levels,
            cells: self.counts.iter().map(|&c| c as f64 / t).collect(),
        })
    }
}

/// Counts ordered pairs `(first, second)` where `second` sits at the
/// direction's offset scaled by `distance` from `first`. Pairs are one-sided,
/// so the matrix is generally asymmetric. Every pixel must already be below
/// `gray_levels`.
pub fn cooccurrence(
    image: &GrayImage,
    gray_levels: usize,
    distance: usize,
    direction: Direction,
) -> Result<CooccurrenceMatrix> {
    if gray_levels < 2 {
        return Err(Error::Config("gray levels must be at least 2".into()));
    }
    if distance < 1 {
        return Err(Error::Config("distance must be at least 1".into()));
    }
    if let Some(&value) = image.pixels().iter().find(|&&p| p as usize >= gray_levels) {
        return Err(Error::PixelAboveGrayLevels {
            value: value.into(),
            gray_levels,
        });
    }
    let (w, h) = (image.width(), image.height());
    let (dr, dc) = direction.offset();
    let (dr, dc) = (dr * distance as isize, dc * distance as isize);
    let mut counts = vec![0u64; gray_levels * gray_levels];
    let mut total = 0u64;

    // rows/columns of the first pixel for which the partner is in bounds
    let row_range = span(h, dr);
    let col_range = span(w, dc);
    let px = image.pixels();
    for r in row_range {
        let r2 = (r as isize + dr) as usize;
        let first = &px[r * w..(r + 1) * w];
        let second = &px[r2 * w..(r2 + 1) * w];
        for c in col_range.clone() {
            let c2 = (c as isize + dc) as usize;
            counts[first[c] as usize * gray_levels + second[c2] as usize] += 1;
            total += 1;
        }
    }
    Ok(CooccurrenceMatrix {
        gray_levels,
        direction,
        distance,
        counts,
        total,
    })
}

fn span(len: usize, delta: isize) -> std::ops::Range<usize> {
    let d = delta.unsigned_abs();
    if d >= len {
        0..0
    } else if delta >= 0 {
        0..len - d
    } else {
        d..len
    }
}

/// Co-occurrence probabilities; cells sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    gray_levels: usize,
    cells: Vec<f64>,
}

impl NormalizedMatrix {
    /// Wraps a row-major G×G probability table.
    pub fn from_cells(gray_levels: usize, cells: Vec<f64>) -> Result<Self> {
        if gray_levels < 1 || cells.len() != gray_levels * gray_levels {
            return Err(Error::Config(format!(
                "expected {g}x{g} cells, got {}",
                cells.len(),
                g = gray_levels
            )));
        }
        let sum: f64 = cells.iter().sum();
        if cells.iter().any(|&c| c.is_nan() || c < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { gray_levels, cells })
    }

    pub fn gray_levels(&self) -> usize {
        self.gray_levels
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.gray_levels + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TextureDescriptors {
    pub entropy: f64,
    pub energy: f64,
    pub contrast: f64,
    pub homogeneity: f64,
    pub sum_mean: f64,
    pub variance: f64,
    pub maximum_probability: f64,
    pub inverse_difference_moment: f64,
    pub cluster_tendency: f64,
    pub correlation: f64,
}

impl TextureDescriptors {
    /// Values in the fixed feature order.
    pub fn to_array(&self) -> [f64; DESCRIPTOR_COUNT] {
        [
            self.entropy,
            self.energy,
            self.contrast,
            self.homogeneity,
            self.sum_mean,
            self.variance,
            self.maximum_probability,
            self.inverse_difference_moment,
            self.cluster_tendency,
            self.correlation,
        ]
    }
}

/// Computes the ten descriptors.
///
/// Entropy uses the natural logarithm with `0 ln 0 = 0`. The inverse
/// difference moment skips the diagonal, where `|i - j|^k` vanishes.
/// Variance and cluster tendency centre on the row-marginal mean. Correlation
/// is the marginal Pearson form and is 0 when either marginal is degenerate.
pub fn descriptors(p: &NormalizedMatrix, cfg: &ExtractionConfig) -> TextureDescriptors {
    let g = p.gray_levels();
    let mut row_marginal = vec![0.0; g];
    let mut col_marginal = vec![0.0; g];
    for (i, row) in row_marginal.iter_mut().enumerate() {
        for (j, col) in col_marginal.iter_mut().enumerate() {
            let v = p.get(i, j);
            *row += v;
            *col += v;
        }
    }
    let mean = |m: &[f64]| m.iter().enumerate().map(|(i, &v)| i as f64 * v).sum::<f64>();
    let mu_i = mean(&row_marginal);
    let mu_j = mean(&col_marginal);
    let var = |m: &[f64], mu: f64| {
        m.iter()
            .enumerate()
            .map(|(i, &v)| (i as f64 - mu).powi(2) * v)
            .sum::<f64>()
    };
    let sigma_i = var(&row_marginal, mu_i).sqrt();
    let sigma_j = var(&col_marginal, mu_j).sqrt();
    let mu = mu_i;

    let mut d = TextureDescriptors::default();
    let mut cov = 0.0;
    for i in 0..g {
        let fi = i as f64;
        for j in 0..g {
            let v = p.get(i, j);
            if v == 0.0 {
                continue;
            }
            let fj = j as f64;
            let diff = i.abs_diff(j);
            d.entropy -= v * v.ln();
            d.energy += v * v;
            d.contrast += (diff * diff) as f64 * v;
            d.homogeneity += v / (1.0 + diff as f64);
            d.sum_mean += fi * v + fj * v;
            d.variance += (fi - mu).powi(2) * v + (fj - mu).powi(2) * v;
            d.maximum_probability = d.maximum_probability.max(v);
            if diff != 0 {
                d.inverse_difference_moment += v / (diff as f64).powi(cfg.idm_exponent);
            }
            d.cluster_tendency += (fi + fj - 2.0 * mu).powi(cfg.cluster_exponent) * v;
            cov += (fi - mu_i) * (fj - mu_j) * v;
        }
    }
    d.sum_mean *= 0.5;
    d.variance *= 0.5;
    d.correlation = if sigma_i == 0.0 || sigma_j == 0.0 {
        0.0
    } else {
        cov / (sigma_i * sigma_j)
    };
    d
}

/// Texture features for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub image_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(image_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let image_id = image_id.into();
        if values.len() != FEATURE_COUNT {
            return Err(Error::FeatureLength {
                image_id,
                expected: FEATURE_COUNT,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!(
                "non-finite feature in vector for {image_id}"
            )));
        }
        Ok(Self { image_id, values })
    }
}

/// Feature column name: `<direction>_<descriptor>`, in vector order.
pub fn feature_names() -> Vec<String> {
    Direction::ALL
        .iter()
        .flat_map(|d| {
            DESCRIPTOR_NAMES
                .iter()
                .map(move |n| format!("d{}_{}", d.degrees(), n))
        })
        .collect()
}

/// Quantizes, builds the four directional matrices and concatenates their
/// descriptors direction-major (0°, 45°, 90°, 135°).
pub fn extract_features(image: &GrayImage, cfg: &ExtractionConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let q = quantize(image, cfg.gray_levels)?;
    let mut out = Vec::with_capacity(FEATURE_COUNT);
    for dir in Direction::ALL {
        let m = cooccurrence(&q, cfg.gray_levels, cfg.distance, dir)?;
        let p = m.normalize().map_err(|_| Error::ImageTooSmall {
            distance: cfg.distance,
            direction: dir.degrees(),
        })?;
        out.extend(descriptors(&p, cfg).to_array());
    }
    Ok(out)
}
