//! Grayscale rasters, PGM (P2/P5) reading and writing, and dataset manifests.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major grayscale raster with a top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    max_value: u16,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, max_value: u16, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if max_value == 0 {
            return Err(Error::InvalidImage("max value must be at least 1".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::PixelCountMismatch {
                expected: width * height,
                found: pixels.len(),
            });
        }
        if let Some(&value) = pixels.iter().find(|&&p| p > max_value) {
            return Err(Error::PixelOutOfRange {
                value: value.into(),
                max_value: max_value.into(),
            });
        }
        Ok(Self {
            width,
            height,
            max_value,
            pixels,
        })
    }

    /// Image filled with a single value.
    pub fn filled(width: usize, height: usize, max_value: u16, value: u16) -> Result<Self> {
        Self::new(width, height, max_value, vec![value; width * height])
    }

    /// Builds an image from rows of equal length.
    pub fn from_rows(rows: &[Vec<u16>], max_value: u16) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidImage("ragged rows".into()));
        }
        Self::new(width, height, max_value, rows.concat())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_value(&self) -> u16 {
        self.max_value
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    /// Pixel at column `x`, row `y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    pub fn into_pixels(self) -> Vec<u16> {
        self.pixels
    }
}

/// Reads a P2 or P5 file.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// Writes a binary (P5) file. Samples above 255 are stored as two big-endian bytes.
pub fn save_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(image);
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let header = format!("P5 {} {} {}\n", image.width, image.height, image.max_value);
    let wide = image.max_value > 255;
    let mut out = Vec::with_capacity(header.len() + image.pixels.len() * if wide { 2 } else { 1 });
    out.extend_from_slice(header.as_bytes());
    for &p in &image.pixels {
        if wide {
            out.extend_from_slice(&p.to_be_bytes());
        } else {
            out.push(p as u8);
        }
    }
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let tok = self
            .token()
            .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                Error::MalformedHeader(format!("bad {what} {:?}", String::from_utf8_lossy(tok)))
            })
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let binary = match cur.token() {
        Some(b"P2") => false,
        Some(b"P5") => true,
        Some(other) => {
            return Err(Error::MalformedHeader(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(Error::MalformedHeader("empty file".into())),
    };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let max_value = cur.number("max value")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if max_value == 0 || max_value > 65535 {
        return Err(Error::MalformedHeader(format!(
            "max value {max_value} outside 1..=65535"
        )));
    }
    let expected = width * height;

    let samples: Vec<u32> = if binary {
        // exactly one whitespace byte separates the header from the raster
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            if expected == 0 {
                Vec::new()
            } else {
                return Err(Error::PixelCountMismatch { expected, found: 0 });
            }
        } else {
            let data = &bytes[cur.pos + 1..];
            if max_value > 255 {
                if !data.len().is_multiple_of(2) {
                    return Err(Error::PixelCountMismatch {
                        expected,
                        found: data.len() / 2,
                    });
                }
                data.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]).into())
                    .collect()
            } else {
                data.iter().map(|&b| b.into()).collect()
            }
        }
    } else {
        let mut out = Vec::with_capacity(expected);
        while let Some(tok) = cur.token() {
            let v = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| {
                    Error::MalformedHeader(format!(
                        "bad sample {:?}",
                        String::from_utf8_lossy(tok)
                    ))
                })?;
            out.push(v);
        }
        out
    };

    if samples.len() != expected {
        return Err(Error::PixelCountMismatch {
            expected,
            found: samples.len(),
        });
    }
    if let Some(&value) = samples.iter().find(|&&v| v > max_value) {
        return Err(Error::PixelOutOfRange { value, max_value });
    }
    GrayImage::new(
        width,
        height,
        max_value as u16,
        samples.into_iter().map(|v| v as u16).collect(),
    )
}

/// The closed set of diagnostic classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Normal,
    Benign,
    Malign,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Normal, ClassLabel::Benign, ClassLabel::Malign];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Normal => "normal",
            ClassLabel::Benign => "benign",
            ClassLabel::Malign => "malign",
        }
    }

    pub fn is_abnormal(self) -> bool {
        self != ClassLabel::Normal
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(ClassLabel::Normal),
            "benign" => Ok(ClassLabel::Benign),
            "malign" => Ok(ClassLabel::Malign),
            other => Err(format!("unknown class label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path as written in the manifest.
    pub image_path: String,
    pub class_label: ClassLabel,
    /// Lower-cased, trimmed tokens in file order.
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    /// Directory relative image paths are resolved against.
    pub base_dir: Option<PathBuf>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.image_path);
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn classes(&self) -> Vec<ClassLabel> {
        let mut c: Vec<_> = self.entries.iter().map(|e| e.class_label).collect();
        c.sort();
        c.dedup();
        c
    }

    /// Serializes back to the CSV form `load_manifest` accepts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_path,class_label,keywords\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{}\n",
                e.image_path,
                e.class_label,
                e.keywords.join(";")
            ));
        }
        out
    }
}

pub const MANIFEST_HEADER: [&str; 3] = ["image_path", "class_label", "keywords"];

/// Loads a manifest; relative image paths resolve against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest = parse_manifest(&text)?;
    manifest.base_dir = path.parent().map(Path::to_path_buf);
    Ok(manifest)
}

pub fn parse_manifest(text: &str) -> Result<DatasetManifest> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(Error::EmptyManifest),
        Some(r) => r.map_err(|e| Error::Manifest {
            line: 1,
            message: e.to_string(),
        })?,
    };
    let header: Vec<&str> = header.iter().collect();
    if header != MANIFEST_HEADER {
        return Err(Error::Manifest {
            line: 1,
            message: format!("expected header {:?}, found {:?}", MANIFEST_HEADER.join(","), header.join(",")),
        });
    }

    let mut entries = Vec::new();
    for record in records {
        let record = record.map_err(|e| Error::Manifest {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Manifest {
                line,
                message: format!("missing columns: expected 3 fields, found {}", record.len()),
            });
        }
        let image_path = record[0].to_string();
        if image_path.is_empty() {
            return Err(Error::Manifest {
                line,
                message: "empty image path".into(),
            });
        }
        let class_label = record[1]
            .parse::<ClassLabel>()
            .map_err(|message| Error::Manifest { line, message })?;
        let keywords = record[2]
            .split(';')
            .map(|k| k.trim().to_lowercase())
            .filter(|k| !k.is_empty())
            .collect();
        entries.push(ManifestEntry {
            image_path,
            class_label,
            keywords,
        });
    }
    if entries.is_empty() {
        return Err(Error::EmptyManifest);
    }
    Ok(DatasetManifest {
        base_dir: None,
        entries,
    })
}
