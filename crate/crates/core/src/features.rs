//! Hand-crafted features for single-channel thermal frames.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::numerics::{cosine_window, Field2D, Tensor3};

/// A grayscale frame with intensities in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub pixels: Field2D,
    pub bit_depth_origin: u8,
}

impl Frame {
    /// Wraps already-normalized pixels; values are clamped to [0,1].
    pub fn new(pixels: Field2D) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::EmptyFrame);
        }
        Ok(Self { pixels: pixels.map(|v| v.clamp(0.0, 1.0)), bit_depth_origin: 8 })
    }

    pub fn from_u8(h: usize, w: usize, raw: &[u8]) -> Result<Self> {
        let data = raw.iter().map(|&v| v as f64 / 255.0).collect();
        let pixels = Field2D::from_vec(h, w, data)?;
        Ok(Self { bit_depth_origin: 8, ..Self::new(pixels)? })
    }

    pub fn from_u16(h: usize, w: usize, raw: &[u16]) -> Result<Self> {
        let data = raw.iter().map(|&v| v as f64 / 65535.0).collect();
        let pixels = Field2D::from_vec(h, w, data)?;
        Ok(Self { bit_depth_origin: 16, ..Self::new(pixels)? })
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub cell_size: usize,
    pub orientation_bins: usize,
    /// Multiply the cosine window into every channel.
    pub window: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { cell_size: 4, orientation_bins: 9, window: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub data: Tensor3,
    pub cell_size: usize,
    pub window_applied: bool,
}

impl FeatureTensor {
    pub fn new(data: Tensor3, cell_size: usize, window_applied: bool) -> Self {
        Self { data, cell_size, window_applied }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.data.shape()
    }
}

/// Bilinear sample with edge replication.
fn sample(img: &Field2D, y: f64, x: f64) -> f64 {
    let (h, w) = img.shape();
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (fy, fx) = (y - y0 as f64, x - x0 as f64);
    let top = img[(y0, x0)] * (1.0 - fx) + img[(y0, x1)] * fx;
    let bot = img[(y1, x0)] * (1.0 - fx) + img[(y1, x1)] * fx;
    top * (1.0 - fy) + bot * fy
}

/// Samples the window `[top, top+side_h) × [left, left+side_w)` onto an
/// `out_h`×`out_w` grid of pixel centres.
fn crop_resample(img: &Field2D, top: f64, left: f64, side_h: f64, side_w: f64, out_h: usize, out_w: usize) -> Field2D {
    let sy = side_h / out_h as f64;
    let sx = side_w / out_w as f64;
    Field2D::from_fn(out_h, out_w, |i, j| {
        let y = top + (i as f64 + 0.5) * sy - 0.5;
        let x = left + (j as f64 + 0.5) * sx - 0.5;
        sample(img, y, x)
    })
}

/// Bilinear resize of a whole image.
pub fn resize_bilinear(img: &Field2D, out_h: usize, out_w: usize) -> Field2D {
    let (h, w) = img.shape();
    crop_resample(img, 0.0, 0.0, h as f64, w as f64, out_h, out_w)
}

/// Side lengths of the padded search window around `bbox`.
pub fn window_sides(bbox: &BoundingBox, padding: f64) -> (f64, f64) {
    (bbox.h * (1.0 + padding), bbox.w * (1.0 + padding))
}

/// Crops the padded window centred on `bbox` (edge pixels replicated outside
/// the frame) and resamples it bilinearly to `window` = (rows, cols).
pub fn extract_patch(frame: &Frame, bbox: &BoundingBox, padding: f64, window: (usize, usize)) -> Result<Field2D> {
    bbox.validate()?;
    if window.0 == 0 || window.1 == 0 {
        return Err(Error::InvalidConfig("model window must be non-empty".into()));
    }
    if frame.pixels.is_empty() {
        return Err(Error::EmptyFrame);
    }
    let (side_h, side_w) = window_sides(bbox, padding);
    let (cx, cy) = bbox.center();
    Ok(crop_resample(&frame.pixels, cy - side_h / 2.0, cx - side_w / 2.0, side_h, side_w, window.0, window.1))
}

/// Centred differences with replicated borders: (d/dx along columns, d/dy along rows).
fn centered_gradients(p: &Field2D) -> (Field2D, Field2D) {
    let (h, w) = p.shape();
    let gx = Field2D::from_fn(h, w, |i, j| p[(i, (j + 1).min(w - 1))] - p[(i, j.saturating_sub(1))]);
    let gy = Field2D::from_fn(h, w, |i, j| p[((i + 1).min(h - 1), j)] - p[(i.saturating_sub(1), j)]);
    (gx, gy)
}

/// Unnormalized per-cell histograms, channel-major `bins × rows × cols`.
fn cell_histograms(p: &Field2D, cell: usize, bins: usize) -> Tensor3 {
    let (h, w) = p.shape();
    let (hc, wc) = (h / cell, w / cell);
    let (gx, gy) = centered_gradients(p);
    let mut hist = Tensor3::zeros(hc, wc, bins);
    let width = PI / bins as f64;
    for i in 0..h {
        for j in 0..w {
            let (dx, dy) = (gx[(i, j)], gy[(i, j)]);
            let mag = (dx * dx + dy * dy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let theta = dy.atan2(dx).rem_euclid(PI);
            let pos = theta / width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = (lo as usize) % bins;
            let hi = (lo + 1) % bins;
            let (ci, cj) = (i / cell, j / cell);
            hist.set(ci, cj, lo, hist.get(ci, cj, lo) + mag * (1.0 - frac));
            hist.set(ci, cj, hi, hist.get(ci, cj, hi) + mag * frac);
        }
    }
    hist
}

/// Divides each cell histogram by the L2 energy of its 3×3 cell block.
fn block_normalize(hist: &Tensor3) -> Tensor3 {
    let (hc, wc, bins) = hist.shape();
    let energy = Field2D::from_fn(hc, wc, |i, j| (0..bins).map(|b| hist.get(i, j, b).powi(2)).sum());
    let mut out = Tensor3::zeros(hc, wc, bins);
    for i in 0..hc {
        for j in 0..wc {
            let mut e = 0.0;
            for a in i.saturating_sub(1)..=(i + 1).min(hc - 1) {
                for b in j.saturating_sub(1)..=(j + 1).min(wc - 1) {
                    e += energy[(a, b)];
                }
            }
            let norm = 1.0 / (e.sqrt() + 1e-6);
            for b in 0..bins {
                out.set(i, j, b, hist.get(i, j, b) * norm);
            }
        }
    }
    out
}

/// Orientation histograms plus mean-centred cell intensity, optionally
/// windowed. Output depth is `orientation_bins + 1`.
pub fn extract_features(patch: &Field2D, cfg: &FeatureConfig) -> Result<FeatureTensor> {
    let (h, w) = patch.shape();
    let cell = cfg.cell_size;
    if cell == 0 || cfg.orientation_bins == 0 {
        return Err(Error::InvalidConfig("cell_size and orientation_bins must be positive".into()));
    }
    if h == 0 || w == 0 || h % cell != 0 || w % cell != 0 {
        return Err(Error::IndivisibleDimensions { h, w, cell });
    }
    let (hc, wc) = (h / cell, w / cell);
    let bins = cfg.orientation_bins;
    let hist = block_normalize(&cell_histograms(patch, cell, bins));

    let global = patch.mean();
    let area = (cell * cell) as f64;
    let intensity = Field2D::from_fn(hc, wc, |ci, cj| {
        let mut s = 0.0;
        for a in 0..cell {
            for b in 0..cell {
                s += patch[(ci * cell + a, cj * cell + b)];
            }
        }
        s / area - global
    });

    let mut data = Tensor3::zeros(hc, wc, bins + 1);
    data.as_mut_slice()[..hc * wc * bins].copy_from_slice(hist.as_slice());
    data.channel_mut(bins).copy_from_slice(intensity.as_slice());
    if cfg.window {
        let win = cosine_window(hc, wc)?;
        for c in 0..=bins {
            for (v, g) in data.channel_mut(c).iter_mut().zip(win.as_slice()) {
                *v *= g;
            }
        }
    }
    Ok(FeatureTensor::new(data, cell, cfg.window))
}
