//! Gradient-enhanced super-resolution: response maps, the gradient-consistency
//! sparse-coding loss and the coarse-to-fine reconstruction loop.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    dft2, grad_forward, grad_forward_adjoint, idft2, soft_scalar, Field2D, Spectrum2D,
};


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GesrConfig {
    /// Sparsity weight on the code X.
    pub m: f64,
    /// Gradient-consistency weight.
    pub q: f64,
    pub lam1_sr: f64,
    pub lam2_sr: f64,
    /// Blur-fidelity weight, also the initial edge-enhancement gain.
    pub eta: f64,
    pub t_max: usize,
    /// Stop threshold per output pixel; the loop compares the squared
    /// iterate change against `stop_eps * pixel_count`.
    pub stop_eps: f64,
    pub scale: usize,
    pub blur_sigma: f64,
    pub step: f64,
}

impl Default for GesrConfig {
    fn default() -> Self {
        Self {
            m: 0.5,
            q: 1.0,
            lam1_sr: 0.1,
            lam2_sr: 0.1,
            eta: 0.05,
            t_max: 20,
            stop_eps: 1e-4,
            scale: 2,
            blur_sigma: 1.0,
            step: 0.1,
        }
    }
}

impl GesrConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("gesr: {what}")));
        if self.scale < 2 {
            return Err(Error::InvalidScale(self.scale));
        }
        if self.t_max < 1 {
            return bad("t_max must be at least 1");
        }
        if !(self.stop_eps > 0.0) {
            return bad("stop_eps must be positive");
        }
        if !(self.blur_sigma > 0.0) {
            return Err(Error::NonPositiveSigma(self.blur_sigma));
        }
        if !(self.step > 0.0) {
            return bad("step must be positive");
        }
        for (name, v) in [
            ("m", self.m),
            ("q", self.q),
            ("lam1_sr", self.lam1_sr),
            ("lam2_sr", self.lam2_sr),
            ("eta", self.eta),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(&format!("{name} must be a finite non-negative number"));
            }
        }
        Ok(())
    }
}

/// Iterate of the reconstruction loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SrState {
    pub i_lr: Field2D,
    pub i_hat: Field2D,
    pub i_prev: Field2D,
    pub x_sparse: Field2D,
    /// Reference image W whose gradients X should reproduce.
    pub w_ref: Field2D,
    /// Response spectrum Ŷ weighting the gradients of X.
    pub y_hat: Spectrum2D,
    pub iter: usize,
}

impl SrState {
    /// Starting point: Î₀ = X₀ = W = R(I_LR) and a flat unit response.
    pub fn new(i_lr: &Field2D, cfg: &GesrConfig) -> Result<Self> {
        let up = upsample(i_lr, cfg.scale)?;
        let (h, w) = up.shape();
        Ok(Self {
            i_lr: i_lr.clone(),
            i_hat: up.clone(),
            i_prev: up.clone(),
            x_sparse: up.clone(),
            w_ref: up,
            y_hat: unit_response(h, w),
            iter: 0,
        })
    }
}

/// Spectrum whose inverse transform is 1 everywhere.
pub fn unit_response(h: usize, w: usize) -> Spectrum2D {
    let mut s = Spectrum2D::zeros(h, w);
    s.as_mut_slice()[0] = Complex64::new((h * w) as f64, 0.0);
    s
}

/// Ŷ = Σ_d Ŵ_d ⊙ D̂_d.
pub fn response_spectrum(w_hats: &[Spectrum2D], d_hats: &[Spectrum2D]) -> Result<Spectrum2D> {
    if w_hats.is_empty() || d_hats.is_empty() {
        return Err(Error::EmptyChannelList);
    }
    if w_hats.len() != d_hats.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} filter channels vs {} feature channels",
            w_hats.len(),
            d_hats.len()
        )));
    }
    let (h, w) = w_hats[0].shape();
    let mut out = Spectrum2D::zeros(h, w);
    for (a, b) in w_hats.iter().zip(d_hats) {
        if a.shape() != (h, w) || b.shape() != (h, w) {
            return Err(Error::ShapeMismatch(format!(
                "channel spectra {:?} and {:?} vs {:?}",
                a.shape(),
                b.shape(),
                (h, w)
            )));
        }
        for ((o, x), y) in out.as_mut_slice().iter_mut().zip(a.as_slice()).zip(b.as_slice()) {
            *o += x * y;
        }
    }
    Ok(out)
}

/// Position and value of the maximum; ties go to the smallest row, then the
/// smallest column.
pub fn locate_peak(response: &Field2D) -> (usize, usize, f64) {
    let w = response.width();
    let mut best = (0, f64::NEG_INFINITY);
    for (k, &v) in response.as_slice().iter().enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }
    if w == 0 {
        return (0, 0, best.1);
    }
    (best.0 / w, best.0 % w, best.1)
}

fn check_shape(a: &Field2D, b: &Field2D, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{what}: {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// Weighted gradient mismatch 𝒴∘∇X − ∇W, one field per axis.
fn gradient_mismatch(x: &Field2D, w_ref: &Field2D, y: &Field2D) -> Result<(Field2D, Field2D)> {
    check_shape(x, w_ref, "code vs reference")?;
    check_shape(x, y, "code vs response")?;
    let (xg, xh) = grad_forward(x)?;
    let (wg, wh) = grad_forward(w_ref)?;
    let rx = Field2D::from_fn(x.height(), x.width(), |i, j| y[(i, j)] * xg[(i, j)] - wg[(i, j)]);
    let ry = Field2D::from_fn(x.height(), x.width(), |i, j| y[(i, j)] * xh[(i, j)] - wh[(i, j)]);
    Ok((rx, ry))
}

/// m·‖X‖₁ + q·‖𝒴∘∇X − ∇W‖² over a single whole-window patch.
pub fn fine_grained_loss(x: &Field2D, w_ref: &Field2D, y_hat: &Spectrum2D, cfg: &GesrConfig) -> Result<f64> {
    let y = idft2(y_hat);
    let (rx, ry) = gradient_mismatch(x, w_ref, &y)?;
    let l1: f64 = x.as_slice().iter().map(|v| v.abs()).sum();
    Ok(cfg.m * l1 + cfg.q * (rx.sum_sq() + ry.sum_sq()))
}

fn cubic_weight(t: f64) -> f64 {
    // Keys kernel, a = -0.5.
    let a = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a
    } else {
        0.0
    }
}

/// Per-output-coordinate taps (clamped source indices, weights).
fn cubic_taps(n_in: usize, n_out: usize) -> Vec<([usize; 4], [f64; 4])> {
    let ratio = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let src = (o as f64 + 0.5) * ratio - 0.5;
            let base = src.floor();
            let mut idx = [0usize; 4];
            let mut wt = [0.0; 4];
            for k in 0..4 {
                let p = base as i64 - 1 + k as i64;
                idx[k] = p.clamp(0, n_in as i64 - 1) as usize;
                wt[k] = cubic_weight(src - p as f64);
            }
            let s: f64 = wt.iter().sum();
            for v in &mut wt {
                *v /= s;
            }
            (idx, wt)
        })
        .collect()
}

/// Separable bicubic resize to an arbitrary shape, pixel-centre aligned,
/// without clamping.
pub(crate) fn bicubic_resize(img: &Field2D, h_out: usize, w_out: usize) -> Field2D {
    let (h, w) = img.shape();
    let rows = cubic_taps(h, h_out);
    let cols = cubic_taps(w, w_out);
    let mut tmp = Field2D::zeros(h, w_out);
    for i in 0..h {
        for (j, (idx, wt)) in cols.iter().enumerate() {
            tmp[(i, j)] = (0..4).map(|k| wt[k] * img[(i, idx[k])]).sum();
        }
    }
    let mut out = Field2D::zeros(h_out, w_out);
    for (i, (idx, wt)) in rows.iter().enumerate() {
        for j in 0..w_out {
            out[(i, j)] = (0..4).map(|k| wt[k] * tmp[(idx[k], j)]).sum();
        }
    }
    out
}

/// Bicubic interpolation to `(scale·H, scale·W)`, clamped to [0,1].
pub fn upsample(i_lr: &Field2D, scale: usize) -> Result<Field2D> {
    if scale < 2 {
        return Err(Error::InvalidScale(scale));
    }
    if i_lr.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (h, w) = i_lr.shape();
    Ok(bicubic_resize(i_lr, h * scale, w * scale).map(|v| v.clamp(0.0, 1.0)))
}

/// Block-average downsampling; the inverse geometry of [`upsample`].
pub fn downsample_mean(img: &Field2D, scale: usize) -> Result<Field2D> {
    if scale < 1 {
        return Err(Error::InvalidScale(scale));
    }
    let (h, w) = img.shape();
    if h % scale != 0 || w % scale != 0 {
        return Err(Error::IndivisibleDimensions { h, w, cell: scale });
    }
    let norm = 1.0 / (scale * scale) as f64;
    Ok(Field2D::from_fn(h / scale, w / scale, |i, j| {
        let mut s = 0.0;
        for a in 0..scale {
            for b in 0..scale {
                s += img[(i * scale + a, j * scale + b)];
            }
        }
        s * norm
    }))
}

/// Normalized Gaussian taps on offsets `-r..=r`, `r = ceil(3σ)`.
fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-r..=r).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|v| v / s).collect()
}

/// Circular convolution with a normalized Gaussian truncated at 3σ.
pub fn blur(i: &Field2D, sigma: f64) -> Result<Field2D> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as i64;
    let (h, w) = i.shape();
    let wrap = |k: i64, n: usize| k.rem_euclid(n as i64) as usize;
    let mut tmp = Field2D::zeros(h, w);
    for a in 0..h {
        for b in 0..w {
            tmp[(a, b)] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * i[(a, wrap(b as i64 + k as i64 - r, w))])
                .sum();
        }
    }
    let mut out = Field2D::zeros(h, w);
    for a in 0..h {
        for b in 0..w {
            out[(a, b)] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[(wrap(a as i64 + k as i64 - r, h), b)])
                .sum();
        }
    }
    Ok(out)
}

fn sq_dist(a: &Field2D, b: &Field2D) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Full reconstruction objective. Without a reference `I_HR` the bicubic
/// upsample of `I_LR` stands in for it.
pub fn sr_objective(s: &SrState, i_hr_ref: Option<&Field2D>, cfg: &GesrConfig) -> Result<f64> {
    let proxy = upsample(&s.i_lr, cfg.scale)?;
    let reference = i_hr_ref.unwrap_or(&proxy);
    check_shape(&s.i_hat, reference, "estimate vs reference")?;
    check_shape(&s.x_sparse, &proxy, "code vs upsampled input")?;
    let fine = fine_grained_loss(&s.x_sparse, &s.w_ref, &s.y_hat, cfg)?;
    let blurred = blur(&s.i_hat, cfg.blur_sigma)?;
    Ok(fine
        + cfg.lam1_sr * sq_dist(&s.x_sparse, &proxy)
        + cfg.lam2_sr * sq_dist(reference, &s.i_hat)
        + cfg.eta * sq_dist(&blurred, reference))
}

/// Radial high-pass: 0 at DC, rising linearly with normalized frequency
/// radius, saturating at 1 from the Nyquist radius outwards.
pub fn highpass_mask(h: usize, w: usize) -> Field2D {
    let norm = |k: usize, n: usize| {
        let f = k.min(n - k) as f64;
        if n > 1 {
            f / (n as f64 / 2.0)
        } else {
            0.0
        }
    };
    Field2D::from_fn(h, w, |u, v| {
        let (a, b) = (norm(u, h), norm(v, w));
        (a * a + b * b).sqrt().min(1.0)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrOutput {
    pub image: Field2D,
    /// ‖Î_t − Î_{t−1}‖² after each iteration.
    pub residuals: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
    pub state: SrState,
}

/// One iteration: a gradient step on Î, a proximal-gradient step on X, then
/// frequency-domain edge enhancement of Î with gain `eta_t`.
pub fn sr_step(s: &SrState, i_hr_ref: Option<&Field2D>, eta_t: f64, cfg: &GesrConfig) -> Result<SrState> {
    let proxy = upsample(&s.i_lr, cfg.scale)?;
    let reference = i_hr_ref.unwrap_or(&proxy);
    check_shape(&s.i_hat, reference, "estimate vs reference")?;

    // ∂/∂Î of λ₂‖I − Î‖² + η‖Î∗h − I‖²; h is symmetric so hᵀ = h.
    let resid = blur(&s.i_hat, cfg.blur_sigma)?.zip_map(reference, |a, b| a - b)?;
    let back = blur(&resid, cfg.blur_sigma)?;
    let (h, w) = s.i_hat.shape();
    let stepped = Field2D::from_fn(h, w, |i, j| {
        let g = 2.0 * cfg.lam2_sr * (s.i_hat[(i, j)] - reference[(i, j)]) + 2.0 * eta_t * back[(i, j)];
        s.i_hat[(i, j)] - cfg.step * g
    });

    let mask = highpass_mask(h, w);
    let mut spec = dft2(&stepped);
    for (z, g) in spec.as_mut_slice().iter_mut().zip(mask.as_slice()) {
        *z *= 1.0 + eta_t * g;
    }
    let i_hat = idft2(&spec);

    let y = idft2(&s.y_hat);
    let (rx, ry) = gradient_mismatch(&s.x_sparse, &s.w_ref, &y)?;
    let wx = rx.zip_map(&y, |a, b| a * b)?;
    let wy = ry.zip_map(&y, |a, b| a * b)?;
    let adj = grad_forward_adjoint(&wx, &wy)?;
    let x_sparse = Field2D::from_fn(h, w, |i, j| {
        let g = 2.0 * cfg.q * adj[(i, j)] + 2.0 * cfg.lam1_sr * (s.x_sparse[(i, j)] - proxy[(i, j)]);
        soft_scalar(s.x_sparse[(i, j)] - cfg.step * g, cfg.step * cfg.m)
    });

    Ok(SrState {
        i_prev: s.i_hat.clone(),
        i_hat,
        x_sparse,
        iter: s.iter + 1,
        ..s.clone()
    })
}

/// Coarse-to-fine reconstruction from `Î₀ = upsample(I_LR)`; the gain η
/// decays by 0.9 per iteration. Output is clamped to [0,1].
pub fn gesr_reconstruct(i_lr: &Field2D, cfg: &GesrConfig) -> Result<Field2D> {
    Ok(gesr_run(SrState::new(i_lr, cfg)?, None, cfg)?.image)
}

/// Reconstruction loop from an explicit starting state (custom W, Ŷ or
/// reference image).
pub fn gesr_run(mut state: SrState, i_hr_ref: Option<&Field2D>, cfg: &GesrConfig) -> Result<SrOutput> {
    cfg.validate()?;
    let threshold = cfg.stop_eps * state.i_hat.len() as f64;
    let mut eta_t = cfg.eta;
    let mut residuals = Vec::new();
    let mut converged = false;
    while state.iter < cfg.t_max {
        state = sr_step(&state, i_hr_ref, eta_t, cfg)?;
        let r = sq_dist(&state.i_hat, &state.i_prev);
        residuals.push(r);
        eta_t *= 0.9;
        if r < threshold {
            converged = true;
            break;
        }
    }
    let image = state.i_hat.map(|v| v.clamp(0.0, 1.0));
    Ok(SrOutput { image, iters: residuals.len(), residuals, converged, state })
}

/// Peak signal-to-noise ratio for images on a [0,1] scale.
pub fn psnr(estimate: &Field2D, reference: &Field2D) -> Result<f64> {
    check_shape(estimate, reference, "psnr")?;
    let mse = sq_dist(estimate, reference) / estimate.len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() })
}
