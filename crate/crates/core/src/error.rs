use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: file not found", path.display())]
    MissingFile { path: PathBuf },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("pixel count mismatch: header declares {expected} pixels, found {found}")]
    PixelCountMismatch { expected: usize, found: usize },

    #[error("pixel value {value} exceeds max value {max_value}")]
    PixelOutOfRange { value: u32, max_value: u32 },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("empty manifest")]
    EmptyManifest,

    #[error("rect out of bounds: ({x0},{y0},{w},{h}) on {width}x{height} image")]
    RectOutOfBounds {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },

    #[error("window must be odd and at least 3, got {0}")]
    EvenWindow(usize),

    #[error("window {window} larger than image ({width}x{height})")]
    OversizedWindow {
        window: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("pixel value {value} not below gray level count {gray_levels}")]
    PixelAboveGrayLevels { value: u32, gray_levels: usize },

    #[error("empty co-occurrence matrix")]
    EmptyCooccurrence,

    #[error("matrix is not normalized (sum {sum})")]
    NotNormalized { sum: f64 },

    #[error("image too small: no pixel pairs at distance {distance} for direction {direction}")]
    ImageTooSmall { distance: usize, direction: u32 },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("feature vector for {image_id} has {found} values, expected {expected}")]
    FeatureLength {
        image_id: String,
        expected: usize,
        found: usize,
    },

    #[error("missing feature vector for {0}")]
    MissingFeatures(String),

    #[error("empty transaction database")]
    EmptyDatabase,

    #[error("oracle size guard: {0} distinct items exceeds 20")]
    OracleSizeGuard(usize),

    #[error("empty input")]
    EmptyInput,

    #[error("single-class input: ROC needs at least one positive and one negative")]
    SingleClass,

    #[error("training manifest needs at least two classes, found only {0}")]
    SingleClassManifest(String),

    #[error("model parse: {0}")]
    ModelParse(String),

    #[error("model version mismatch: file has {found}, expected {expected}")]
    ModelVersion { found: u32, expected: u32 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile { path }
        } else {
            Error::Io { path, source }
        }
    }

    /// True for errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}
