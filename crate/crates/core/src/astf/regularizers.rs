use super::config::{SpatialRegParams, TemporalRegParams};
use super::FilterBank;
use crate::error::{Error, Result};
use crate::numerics::{grad_forward, grad_n, laplacian, sgn, Field2D, Tensor3};

struct ChannelDerivatives {
    gx: Field2D,
    gy: Field2D,
    lap: Field2D,
    third: Field2D,
    fourth: Option<Field2D>,
}

fn derivatives(ch: &Field2D, with_fourth: bool) -> Result<ChannelDerivatives> {
    let (gx, gy) = grad_forward(ch)?;
    Ok(ChannelDerivatives {
        gx,
        gy,
        lap: laplacian(ch)?,
        third: grad_n(ch, 3)?,
        fourth: if with_fourth { Some(grad_n(ch, 4)?) } else { None },
    })
}

/// Higher-order spatial smoothness penalty of a filter.
///
/// Per channel and element, with `L` the Laplacian, `g` each forward
/// difference component and `∇³`, `∇⁴` the composed differences:
/// `a₂ [ Σ_g (L + λ₁g + γ₁g² + μ₁∇³)² + λ₂ (L + γ₂L² + μ₂∇⁴)² ]`.
pub fn spatial_reg(f: &FilterBank, sp: &SpatialRegParams) -> Result<f64> {
    let mut total = 0.0;
    for ch in f.weights().channel_fields() {
        let dv = derivatives(&ch, true)?;
        let fourth = dv.fourth.as_ref().expect("requested");
        for k in 0..ch.len() {
            let lap = dv.lap.as_slice()[k];
            let third = dv.third.as_slice()[k];
            for g in [dv.gx.as_slice()[k], dv.gy.as_slice()[k]] {
                let first = lap + sp.lam1_s * g + sp.gam1 * g * g + sp.mu1 * third;
                total += first * first;
            }
            let second = lap + sp.gam2 * lap * lap + sp.mu2 * fourth.as_slice()[k];
            total += sp.lam2_s * second * second;
        }
    }
    Ok(sp.a2 * total)
}

/// Elementwise p-norm of `(f + λ₁g + γ₁g² + μ₁∇³f)²` over channels, elements
/// and both difference components.
pub fn adaptive_smoothness(f: &FilterBank, sp: &SpatialRegParams) -> Result<f64> {
    if !(sp.p_norm >= 1.0) {
        return Err(Error::InvalidConfig("p_norm must be >= 1".into()));
    }
    let mut acc = 0.0;
    for ch in f.weights().channel_fields() {
        let dv = derivatives(&ch, false)?;
        for k in 0..ch.len() {
            for g in [dv.gx.as_slice()[k], dv.gy.as_slice()[k]] {
                let inner = ch.as_slice()[k] + sp.lam1_s * g + sp.gam1 * g * g + sp.mu1 * dv.third.as_slice()[k];
                acc += (inner * inner).powf(sp.p_norm);
            }
        }
    }
    Ok(acc.powf(1.0 / sp.p_norm))
}

/// Temporal regularizer with sign-dependent offsets.
pub fn temporal_reg(f_t: &Tensor3, f_prev: &Tensor3, tp: &TemporalRegParams) -> Result<f64> {
    f_t.ensure_same_shape(f_prev)?;
    let mut first = 0.0;
    let mut second = 0.0;
    for (&cur, &prev) in f_t.as_slice().iter().zip(f_prev.as_slice()) {
        let a = tp.delta_t * (cur - prev + tp.eps_off * sgn(cur));
        let b = tp.delta_t * tp.delta_t * (cur - prev + tp.gamma_off * sgn(prev));
        first += a * a;
        second += b * b;
    }
    Ok(tp.beta1 * first + tp.beta2 * second)
}

/// `f_p = (ε/β₁)·sgn(f_t) + f_prev`, elementwise.
pub fn update_p(f_t: &Tensor3, f_prev: &Tensor3, tp: &TemporalRegParams) -> Result<Tensor3> {
    if !(tp.beta1 > 0.0) {
        return Err(Error::ZeroBeta1);
    }
    f_t.zip_map(f_prev, |cur, prev| (tp.eps_off / tp.beta1) * sgn(cur) + prev)
}

/// `f_q = sqrt(γ/β₂) + f_prev`, elementwise.
pub fn update_q(f_prev: &Tensor3, tp: &TemporalRegParams) -> Result<Tensor3> {
    if !(tp.beta2 > 0.0) {
        return Err(Error::ZeroBeta2);
    }
    let ratio = tp.gamma_off / tp.beta2;
    if ratio < 0.0 {
        return Err(Error::NegativeRatio(ratio));
    }
    Ok(f_prev.map(|prev| ratio.sqrt() + prev))
}
