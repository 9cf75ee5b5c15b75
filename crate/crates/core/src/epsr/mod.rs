//! Edge-preserving sparse regularization (EPSR) of a trained filter tensor.
//!
//! Four coupled copies of the filter are refined by ADMM: a low-rank copy
//! `F` (tensor nuclear norm), a sparse copy `Z` (ℓ1 via hard thresholding),
//! a temporally anchored copy `R` and a structured-sparse copy `W`
//! (soft thresholding). The printed update rules are exposed verbatim as
//! `update_*`; the default sweep uses their sign-consistent counterparts
//! because the printed multiplier step and the printed proximal steps assume
//! opposite multiplier conventions and diverge when composed.

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{hard_threshold_tensor, soft_threshold_tensor, tensor_nuclear_norm, tsvt, Tensor3};

/// Which family of update rules [`epsr_run`] composes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepRules {
    /// Multipliers accumulate `μ(F − Z)`, `μ(R − W)`, `μ(F − R)`, matching the
    /// `F + Y/μ` arguments of the Z and W proximal steps.
    #[default]
    Consistent,
    /// The printed rules exactly; diverges for any non-trivial input.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsrConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub mu0: f64,
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Use the printed F-update argument without the 1/2 averaging.
    pub verbatim_eq19: bool,
    pub rules: SweepRules,
}

impl Default for EpsrConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.1,
            lambda2: 0.1,
            lambda3: 0.1,
            mu0: 1.0,
            rho: 1.1,
            max_iters: 100,
            tol: 1e-3,
            verbatim_eq19: false,
            rules: SweepRules::Consistent,
        }
    }
}

impl EpsrConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.lambda1, self.lambda2, self.lambda3].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidConfig("epsr lambdas must be finite and >= 0".into()));
        }
        if !(self.mu0 > 0.0) {
            return Err(Error::InvalidConfig("epsr.mu0 must be > 0".into()));
        }
        if !(self.rho > 1.0) {
            return Err(Error::InvalidConfig("epsr.rho must be > 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("epsr.max_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("epsr.tol must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsrState {
    pub f: Tensor3,
    pub z: Tensor3,
    pub r: Tensor3,
    pub w: Tensor3,
    pub y1: Tensor3,
    pub y2: Tensor3,
    pub y3: Tensor3,
    pub mu: f64,
    pub iter: usize,
    pub f_prev: Tensor3,
}

impl EpsrState {
    fn check(&self) -> Result<()> {
        for t in [&self.z, &self.r, &self.w, &self.y1, &self.y2, &self.y3, &self.f_prev] {
            self.f.ensure_same_shape(t)?;
        }
        Ok(())
    }

    /// `(‖Z − F‖, ‖W − R‖, ‖R − F‖)` in Frobenius norm.
    pub fn residuals(&self) -> [f64; 3] {
        [self.z.distance(&self.f), self.w.distance(&self.r), self.r.distance(&self.f)]
    }
}

/// All four primal copies seeded from the previous filter; multipliers zero.
pub fn epsr_init(f_prev: &Tensor3, cfg: &EpsrConfig) -> EpsrState {
    let (h, w, d) = f_prev.shape();
    let zero = Tensor3::zeros(h, w, d);
    EpsrState {
        f: f_prev.clone(),
        z: f_prev.clone(),
        r: f_prev.clone(),
        w: f_prev.clone(),
        y1: zero.clone(),
        y2: zero.clone(),
        y3: zero,
        mu: cfg.mu0,
        iter: 0,
        f_prev: f_prev.clone(),
    }
}

/// Low-rank step: `D_{1/μ}((Z + R + (Y1 + Y3)/μ) / 2)`; the halving is
/// dropped when `cfg.verbatim_eq19` is set.
pub fn update_f(s: &EpsrState, cfg: &EpsrConfig) -> Result<Tensor3> {
    s.check()?;
    let mu = s.mu;
    let half = if cfg.verbatim_eq19 { 1.0 } else { 0.5 };
    let arg = Tensor3::from_fn(s.f.height(), s.f.width(), s.f.channels(), |i, j, c| {
        (s.z.get(i, j, c) + s.r.get(i, j, c) + (s.y1.get(i, j, c) + s.y3.get(i, j, c)) / mu) * half
    });
    tsvt(&arg, 1.0 / mu)
}

/// `(μ/(λ₃ + μ))·(F + W + Y2/μ)`.
pub fn update_r(s: &EpsrState, cfg: &EpsrConfig) -> Result<Tensor3> {
    s.check()?;
    let mu = s.mu;
    let gain = mu / (cfg.lambda3 + mu);
    let mut out = s.f.clone();
    for (((o, &w), &y2), &f) in out
        .as_mut_slice()
        .iter_mut()
        .zip(s.w.as_slice())
        .zip(s.y2.as_slice())
        .zip(s.f.as_slice())
    {
        *o = gain * (f + w + y2 / mu);
    }
    Ok(out)
}

/// `H_{λ₁/μ}(F + Y1/μ)`.
pub fn update_z(s: &EpsrState, cfg: &EpsrConfig) -> Result<Tensor3> {
    s.check()?;
    let mu = s.mu;
    let arg = s.f.zip_map(&s.y1, |f, y| f + y / mu)?;
    hard_threshold_tensor(&arg, cfg.lambda1 / mu)
}

/// `S_{λ₂/μ}(R + Y2/μ)`.
pub fn update_w(s: &EpsrState, cfg: &EpsrConfig) -> Result<Tensor3> {
    s.check()?;
    let mu = s.mu;
    let arg = s.r.zip_map(&s.y2, |r, y| r + y / mu)?;
    soft_threshold_tensor(&arg, cfg.lambda2 / mu)
}

/// `Y1 += μ(Z − F)`, `Y2 += μ(W − R)`, `Y3 += μ(R − F)`, `μ ← ρμ`.
pub fn update_multipliers(s: &EpsrState, cfg: &EpsrConfig) -> Result<EpsrState> {
    s.check()?;
    let mu = s.mu;
    let mut next = s.clone();
    next.y1 = accumulate(&s.y1, mu, &s.z, &s.f);
    next.y2 = accumulate(&s.y2, mu, &s.w, &s.r);
    next.y3 = accumulate(&s.y3, mu, &s.r, &s.f);
    next.mu = cfg.rho * mu;
    next.iter += 1;
    Ok(next)
}

/// `y + μ(a − b)` elementwise.
fn accumulate(y: &Tensor3, mu: f64, a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let mut out = y.clone();
    for ((o, &a), &b) in out.as_mut_slice().iter_mut().zip(a.as_slice()).zip(b.as_slice()) {
        *o += mu * (a - b);
    }
    out
}

/// Exact minimizer of the low-rank subproblem under the consistent
/// convention: `D_{1/(2μ)}((Z + R − (Y1 + Y3)/μ) / 2)`.
pub fn consistent_update_f(s: &EpsrState) -> Result<Tensor3> {
    s.check()?;
    let mu = s.mu;
    let arg = Tensor3::from_fn(s.f.height(), s.f.width(), s.f.channels(), |i, j, c| {
        0.5 * (s.z.get(i, j, c) + s.r.get(i, j, c) - (s.y1.get(i, j, c) + s.y3.get(i, j, c)) / mu)
    });
    tsvt(&arg, 0.5 / mu)
}

/// Exact minimizer of `λ₃‖R − F_prev‖² + ⟨Y2, R − W⟩ + ⟨Y3, F − R⟩ +
/// (μ/2)(‖W − R‖² + ‖R − F‖²)`.
pub fn consistent_update_r(s: &EpsrState, cfg: &EpsrConfig) -> Result<Tensor3> {
    s.check()?;
    let (mu, l3) = (s.mu, cfg.lambda3);
    let denom = 2.0 * l3 + 2.0 * mu;
    Ok(Tensor3::from_fn(s.f.height(), s.f.width(), s.f.channels(), |i, j, c| {
        (2.0 * l3 * s.f_prev.get(i, j, c) + mu * (s.w.get(i, j, c) + s.f.get(i, j, c)) - s.y2.get(i, j, c)
            + s.y3.get(i, j, c))
            / denom
    }))
}

pub fn consistent_update_multipliers(s: &EpsrState, cfg: &EpsrConfig) -> Result<EpsrState> {
    s.check()?;
    let mu = s.mu;
    let mut next = s.clone();
    next.y1 = accumulate(&s.y1, mu, &s.f, &s.z);
    next.y2 = accumulate(&s.y2, mu, &s.r, &s.w);
    next.y3 = accumulate(&s.y3, mu, &s.f, &s.r);
    next.mu = cfg.rho * mu;
    next.iter += 1;
    Ok(next)
}

/// Augmented Lagrangian exactly as printed (only the first quadratic
/// coupling carries μ). The structured-sparsity norm is taken as ℓ1, the
/// norm whose proximal map the W-step applies. Diagnostics only.
pub fn lagrangian_value(s: &EpsrState, cfg: &EpsrConfig) -> Result<f64> {
    s.check()?;
    let z_f = s.z.axpy(-1.0, &s.f)?;
    let w_r = s.w.axpy(-1.0, &s.r)?;
    let r_f = s.r.axpy(-1.0, &s.f)?;
    Ok(tensor_nuclear_norm(&s.f)
        + cfg.lambda1 * s.z.l1()
        + cfg.lambda2 * s.w.l1()
        + cfg.lambda3 * s.r.sum_sq()
        + s.y1.dot(&z_f)
        + s.y2.dot(&w_r)
        + s.y3.dot(&r_f)
        + s.mu * z_f.sum_sq()
        + w_r.sum_sq()
        + r_f.sum_sq())
}

/// One structured record per sweep, for trace output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    /// μ used during the sweep.
    pub mu: f64,
    pub residuals: [f64; 3],
    /// Only evaluated by [`epsr_run_with`].
    pub lagrangian: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EpsrOutput {
    pub f: Tensor3,
    pub z: Tensor3,
    pub r: Tensor3,
    pub w: Tensor3,
    pub state: EpsrState,
    pub converged: bool,
    pub trace: Vec<SweepRecord>,
}

/// One sweep in Algorithm-2 order: F, R, Z, W, multipliers.
pub fn epsr_sweep(s: &EpsrState, cfg: &EpsrConfig) -> Result<EpsrState> {
    let mut next = s.clone();
    match cfg.rules {
        SweepRules::Consistent => {
            next.f = consistent_update_f(&next)?;
            next.r = consistent_update_r(&next, cfg)?;
            next.z = update_z(&next, cfg)?;
            next.w = update_w(&next, cfg)?;
            consistent_update_multipliers(&next, cfg)
        }
        SweepRules::Printed => {
            next.f = update_f(&next, cfg)?;
            next.r = update_r(&next, cfg)?;
            next.z = update_z(&next, cfg)?;
            next.w = update_w(&next, cfg)?;
            update_multipliers(&next, cfg)
        }
    }
}

/// Runs sweeps from [`epsr_init`] until every coupling residual is below
/// `cfg.tol` or `cfg.max_iters` sweeps have run. Non-convergence is reported
/// through `converged`, never as an error.
pub fn epsr_run(f_prev: &Tensor3, cfg: &EpsrConfig) -> Result<EpsrOutput> {
    run(f_prev, cfg, None)
}

/// [`epsr_run`] with a per-sweep diagnostics hook; records also carry the
/// Lagrangian value.
pub fn epsr_run_with(f_prev: &Tensor3, cfg: &EpsrConfig, mut hook: impl FnMut(&SweepRecord)) -> Result<EpsrOutput> {
    run(f_prev, cfg, Some(&mut hook))
}

fn run(f_prev: &Tensor3, cfg: &EpsrConfig, mut hook: Option<&mut dyn FnMut(&SweepRecord)>) -> Result<EpsrOutput> {
    cfg.validate()?;
    if !f_prev.is_finite() {
        return Err(Error::InvalidConfig("EPSR input contains non-finite values".into()));
    }
    let mut state = epsr_init(f_prev, cfg);
    let mut trace = Vec::new();
    let mut converged = false;
    while state.iter < cfg.max_iters {
        let mu = state.mu;
        state = epsr_sweep(&state, cfg)?;
        let residuals = state.residuals();
        let record = SweepRecord {
            sweep: state.iter,
            mu,
            residuals,
            lagrangian: match hook {
                Some(_) => Some(lagrangian_value(&state, cfg)?),
                None => None,
            },
        };
        if let Some(h) = hook.as_mut() {
            h(&record);
        }
        trace.push(record);
        if residuals.iter().all(|r| *r < cfg.tol) {
            converged = true;
            break;
        }
        if residuals.iter().any(|r| !r.is_finite()) {
            break;
        }
    }
    Ok(EpsrOutput {
        f: state.f.clone(),
        z: state.z.clone(),
        r: state.r.clone(),
        w: state.w.clone(),
        state,
        converged,
        trace,
    })
}
