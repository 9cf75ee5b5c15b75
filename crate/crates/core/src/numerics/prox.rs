//! Proximal maps: elementwise shrinkage and per-slice singular value
//! thresholding.

use nalgebra::{DMatrix, Dyn, SVD};

use super::field::Tensor3;
use crate::error::{Error, Result};

fn check_threshold(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeThreshold(t));
    }
    Ok(())
}

/// Sign with `sgn(0) = 0`.
#[inline]
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `sign(v) * max(|v| - lam, 0)`; `lam` is assumed validated.
#[inline]
pub fn soft_scalar(v: f64, lam: f64) -> f64 {
    sgn(v) * (v.abs() - lam).max(0.0)
}

#[inline]
pub fn hard_scalar(v: f64, tau: f64) -> f64 {
    if v.abs() > tau {
        v
    } else {
        0.0
    }
}

pub fn soft_threshold(v: &[f64], lam: f64) -> Result<Vec<f64>> {
    check_threshold(lam)?;
    Ok(v.iter().map(|&x| soft_scalar(x, lam)).collect())
}

pub fn hard_threshold(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_threshold(tau)?;
    Ok(v.iter().map(|&x| hard_scalar(x, tau)).collect())
}

pub fn soft_threshold_tensor(t: &Tensor3, lam: f64) -> Result<Tensor3> {
    check_threshold(lam)?;
    Ok(t.map(|x| soft_scalar(x, lam)))
}

pub fn hard_threshold_tensor(t: &Tensor3, tau: f64) -> Result<Tensor3> {
    check_threshold(tau)?;
    Ok(t.map(|x| hard_scalar(x, tau)))
}

fn slice_matrix(t: &Tensor3, c: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(t.height(), t.width(), t.channel(c))
}

/// SVD of `m / max|m|` with singular values scaled back.
///
/// nalgebra's bidiagonalization can return NaN singular values when a slice
/// mixes ordinary entries with ones hundreds of orders of magnitude smaller,
/// which EPSR produces near convergence. Entries negligible relative to the
/// largest are flushed to zero, retrying with a coarser cut while NaN persist.
fn scaled_svd(m: &DMatrix<f64>, want_uv: bool) -> Option<SVD<f64, Dyn, Dyn>> {
    let peak = m.amax();
    if peak == 0.0 || !peak.is_finite() {
        return None;
    }
    for cut in [1e-30, 1e-15, 1e-10] {
        let unit = m.map(|v| {
            let x = v / peak;
            if x.abs() < cut { 0.0 } else { x }
        });
        let mut svd = unit.svd_unordered(want_uv, want_uv);
        if svd.singular_values.iter().all(|s| s.is_finite()) {
            svd.singular_values *= peak;
            return Some(svd);
        }
    }
    None
}

/// Singular values of every frontal slice.
pub fn slice_singular_values(t: &Tensor3) -> Vec<Vec<f64>> {
    (0..t.channels())
        .map(|c| {
            let m = slice_matrix(t, c);
            let mut sv = match scaled_svd(&m, false) {
                Some(svd) => svd.singular_values.as_slice().to_vec(),
                None => vec![0.0; m.nrows().min(m.ncols())],
            };
            sv.sort_by(|a, b| b.total_cmp(a));
            sv
        })
        .collect()
}

/// Sum over frontal slices of the nuclear norm.
pub fn tensor_nuclear_norm(t: &Tensor3) -> f64 {
    slice_singular_values(t).iter().flatten().sum()
}

/// Tensor singular value thresholding: each frontal slice `U Σ Vᵀ` becomes
/// `U max(Σ - tau, 0) Vᵀ`.
pub fn tsvt(t: &Tensor3, tau: f64) -> Result<Tensor3> {
    check_threshold(tau)?;
    let (h, w, d) = t.shape();
    let mut out = Tensor3::zeros(h, w, d);
    for c in 0..d {
        let m = slice_matrix(t, c);
        if m.amax() == 0.0 {
            continue;
        }
        let svd = scaled_svd(&m, true).ok_or(Error::SvdFailed(c))?;
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested Vᵀ");
        let shrunk = svd.singular_values.map(|s| (s - tau).max(0.0));
        let rebuilt = &u * DMatrix::from_diagonal(&shrunk) * &v_t;
        let dst = out.channel_mut(c);
        for i in 0..h {
            for j in 0..w {
                dst[i * w + j] = rebuilt[(i, j)];
            }
        }
    }
    Ok(out)
}
