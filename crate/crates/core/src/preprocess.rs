//! Cleaning steps applied before texture extraction: crop, histogram
//! equalization and hybrid median filtering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl std::str::FromStr for CropRect {
    type Err = String;

    /// Parses `x0,y0,w,h`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format!("bad crop {s:?}: {e}"))?;
        match parts[..] {
            [x0, y0, w, h] => Ok(CropRect { x0, y0, w, h }),
            _ => Err(format!("crop needs 4 values x0,y0,w,h, got {s:?}")),
        }
    }
}

pub fn crop(image: &GrayImage, rect: CropRect) -> Result<GrayImage> {
    let CropRect { x0, y0, w, h } = rect;
    if w == 0 || h == 0 || x0 + w > image.width() || y0 + h > image.height() {
        return Err(Error::RectOutOfBounds {
            x0,
            y0,
            w,
            h,
            width: image.width(),
            height: image.height(),
        });
    }
    let mut pixels = Vec::with_capacity(w * h);
    for y in y0..y0 + h {
        let row = y * image.width();
        pixels.extend_from_slice(&image.pixels()[row + x0..row + x0 + w]);
    }
    GrayImage::new(w, h, image.max_value(), pixels)
}

/// Global histogram equalization normalized by the smallest nonzero cdf value.
/// Constant images are returned unchanged.
pub fn histogram_equalize(image: &GrayImage) -> GrayImage {
    let max = image.max_value() as usize;
    let mut hist = vec![0u64; max + 1];
    for &p in image.pixels() {
        hist[p as usize] += 1;
    }
    let n = image.pixels().len() as u64;
    let mut cdf = hist;
    let mut acc = 0u64;
    for c in cdf.iter_mut() {
        acc += *c;
        *c = acc;
    }
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if n == cdf_min {
        return image.clone();
    }
    let span = n - cdf_min;
    // round-half-up in integer arithmetic: floor((2*num*max + span) / (2*span))
    let lut: Vec<u16> = cdf
        .iter()
        .map(|&c| {
            let num = c.saturating_sub(cdf_min) as u128 * max as u128;
            ((2 * num + span as u128) / (2 * span as u128)) as u16
        })
        .collect();
    let pixels = image.pixels().iter().map(|&p| lut[p as usize]).collect();
    GrayImage::new(image.width(), image.height(), image.max_value(), pixels)
        .expect("lut output stays within max value")
}

fn median_in_place(values: &mut [u16]) -> u16 {
    let mid = values.len() / 2;
    *values.select_nth_unstable(mid).1
}

/// Hybrid median: median of {plus-neighbourhood median, X-neighbourhood
/// median, centre}. Both neighbourhoods include the centre; borders replicate
/// the nearest edge pixel.
pub fn hybrid_median(image: &GrayImage, window: usize) -> Result<GrayImage> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::EvenWindow(window));
    }
    let (width, height) = (image.width(), image.height());
    if window > width.min(height) {
        return Err(Error::OversizedWindow {
            window,
            width,
            height,
        });
    }
    let r = (window / 2) as isize;
    let at = |x: isize, y: isize| {
        let cx = x.clamp(0, width as isize - 1) as usize;
        let cy = y.clamp(0, height as isize - 1) as usize;
        image.get(cx, cy)
    };

    let mut plus = Vec::with_capacity(4 * r as usize + 1);
    let mut cross = Vec::with_capacity(4 * r as usize + 1);
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height as isize {
        for x in 0..width as isize {
            let centre = at(x, y);
            plus.clear();
            cross.clear();
            plus.push(centre);
            cross.push(centre);
            for k in 1..=r {
                plus.extend([at(x - k, y), at(x + k, y), at(x, y - k), at(x, y + k)]);
                cross.extend([
                    at(x - k, y - k),
                    at(x + k, y - k),
                    at(x - k, y + k),
                    at(x + k, y + k),
                ]);
            }
            let mut three = [median_in_place(&mut plus), median_in_place(&mut cross), centre];
            out.push(median_in_place(&mut three));
        }
    }
    GrayImage::new(width, height, image.max_value(), out)
}

/// Preprocessing options, applied in the order crop, equalize, filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub crop: Option<CropRect>,
    pub equalize: bool,
    /// `None` disables the hybrid median filter.
    pub median_window: Option<usize>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            crop: None,
            equalize: true,
            median_window: Some(3),
        }
    }
}

pub fn preprocess(image: &GrayImage, cfg: &PreprocessConfig) -> Result<GrayImage> {
    let mut img = match cfg.crop {
        Some(rect) => crop(image, rect)?,
        None => image.clone(),
    };
    if cfg.equalize {
        img = histogram_equalize(&img);
    }
    if let Some(window) = cfg.median_window {
        img = hybrid_median(&img, window)?;
    }
    Ok(img)
}
