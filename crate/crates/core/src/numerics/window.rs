use std::f64::consts::PI;

use super::field::Field2D;
use crate::error::{Error, Result};

/// Gaussian regression target centred on the zero-shift bin, with wrapped
/// offsets so the peak sits at `(0, 0)`.
pub fn gaussian_label(h: usize, w: usize, sigma: f64) -> Result<Field2D> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let wrap = |k: usize, n: usize| -> f64 { k.min(n - k) as f64 };
    let denom = 2.0 * sigma * sigma;
    Ok(Field2D::from_fn(h, w, |i, j| {
        let (di, dj) = (wrap(i, h), wrap(j, w));
        (-(di * di + dj * dj) / denom).exp()
    }))
}

/// 1-D raised cosine of length `n`: zero at both ends, one at the centre.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

pub fn cosine_window(h: usize, w: usize) -> Result<Field2D> {
    if h < 2 || w < 2 {
        return Err(Error::DimensionTooSmall { need: 2, h, w });
    }
    let (rows, cols) = (hann(h), hann(w));
    Ok(Field2D::from_fn(h, w, |i, j| rows[i] * cols[j]))
}
