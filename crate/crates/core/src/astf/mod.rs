//! Adaptive sparse and temporal filter (ASTF) training.
//!
//! The filter is learned by alternating three subproblems: a sparse,
//! temporally anchored fit to the current sample (`solve_f`), a fit of an
//! auxiliary filter to the previous sample (`solve_g`), and the temporal
//! offset update of the aggregation weights (`solve_w`).

mod config;
mod regularizers;
pub(crate) mod ridge;

pub use config::{AstfConfig, SpatialRegParams, TemporalRegParams};
pub use regularizers::{adaptive_smoothness, spatial_reg, temporal_reg, update_p, update_q};

use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::numerics::{
    dft2, grad_forward, soft_threshold_tensor, Field2D, Spectrum2D, Tensor3,
};
use ridge::{spectra, RidgeProblem, Sparsity};

/// Correlation filter weights with their cached per-channel spectra and the
/// previous-frame filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    weights: Tensor3,
    spectrum: Vec<Spectrum2D>,
    prev: Option<Tensor3>,
}

impl FilterBank {
    pub fn new(weights: Tensor3) -> Self {
        let spectrum = spectra(&weights);
        Self { weights, spectrum, prev: None }
    }

    pub fn with_prev(weights: Tensor3, prev: Tensor3) -> Result<Self> {
        weights.ensure_same_shape(&prev)?;
        let mut bank = Self::new(weights);
        bank.prev = Some(prev);
        Ok(bank)
    }

    pub fn zeros(h: usize, w: usize, d: usize) -> Self {
        Self::new(Tensor3::zeros(h, w, d))
    }

    pub fn weights(&self) -> &Tensor3 {
        &self.weights
    }

    pub fn spectrum(&self) -> &[Spectrum2D] {
        &self.spectrum
    }

    pub fn prev(&self) -> Option<&Tensor3> {
        self.prev.as_ref()
    }

    /// Previous-frame filter, or zeros when none has been recorded.
    pub fn prev_or_zeros(&self) -> Tensor3 {
        self.prev.clone().unwrap_or_else(|| {
            let (h, w, d) = self.weights.shape();
            Tensor3::zeros(h, w, d)
        })
    }

    pub fn set_weights(&mut self, weights: Tensor3) {
        self.spectrum = spectra(&weights);
        self.weights = weights;
    }

    pub fn set_prev(&mut self, prev: Option<Tensor3>) {
        self.prev = prev;
    }

    pub fn into_weights(self) -> Tensor3 {
        self.weights
    }
}

/// Working state of the ASTF solver for one tracked target.
#[derive(Debug, Clone)]
pub struct AstfState {
    pub f: FilterBank,
    pub g: FilterBank,
    pub w_ref: Tensor3,
    pub sample: FeatureTensor,
    pub prev_sample: FeatureTensor,
    pub label: Field2D,
    pub prev_label: Field2D,
    pub iter: usize,
}

impl AstfState {
    /// First-frame state: the previous sample/label are the current ones and
    /// every filter starts at zero.
    pub fn new(sample: FeatureTensor, label: Field2D) -> Result<Self> {
        let (h, w, d) = sample.shape();
        if label.shape() != (h, w) {
            return Err(Error::ShapeMismatch(format!(
                "label {:?} vs sample {:?}",
                label.shape(),
                (h, w)
            )));
        }
        let zeros = Tensor3::zeros(h, w, d);
        Ok(Self {
            f: FilterBank::with_prev(zeros.clone(), zeros.clone())?,
            g: FilterBank::new(zeros.clone()),
            w_ref: zeros,
            prev_sample: sample.clone(),
            sample,
            prev_label: label.clone(),
            label,
            iter: 0,
        })
    }

    fn check(&self) -> Result<()> {
        let shape = self.sample.shape();
        let consistent = self.prev_sample.shape() == shape
            && self.f.weights.shape() == shape
            && self.g.weights.shape() == shape
            && self.w_ref.shape() == shape
            && self.f.prev.as_ref().map_or(true, |p| p.shape() == shape)
            && self.label.shape() == (shape.0, shape.1)
            && self.prev_label.shape() == (shape.0, shape.1);
        if !consistent {
            return Err(Error::ShapeMismatch("ASTF state tensors disagree in shape".into()));
        }
        Ok(())
    }
}

/// Outcome of a filter subproblem.
#[derive(Debug, Clone)]
pub struct FilterSolve {
    pub bank: FilterBank,
    pub objective: f64,
    pub converged: bool,
}

/// Per-sweep diagnostics of [`admm_astf`].
#[derive(Debug, Clone, Default)]
pub struct AstfTrace {
    /// `eval_objective` at the warm start followed by one value per sweep.
    pub objective: Vec<f64>,
    /// `f_objective` at the warm start followed by the filter subproblem's
    /// value after each sweep's `solve_f`.
    pub f_objective: Vec<f64>,
    /// Relative filter change per sweep.
    pub change: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Circular convolution `Σ_d x_d ⊛ f_d`, evaluated through the spectrum.
fn response(samples: &[Spectrum2D], filters: &[Spectrum2D]) -> Spectrum2D {
    let (h, w) = samples[0].shape();
    let mut out = Spectrum2D::zeros(h, w);
    for (x, f) in samples.iter().zip(filters) {
        for ((o, a), b) in out.as_mut_slice().iter_mut().zip(x.as_slice()).zip(f.as_slice()) {
            *o += a * b;
        }
    }
    out
}

fn data_misfit(sample: &Tensor3, filter: &Tensor3, label: &Field2D) -> f64 {
    let r = response(&spectra(sample), &spectra(filter));
    let y = dft2(label);
    let n = label.len() as f64;
    r.as_slice().iter().zip(y.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n
}

fn gradient_energy(f: &Tensor3) -> Result<f64> {
    let mut total = 0.0;
    for ch in f.channel_fields() {
        let (gx, gy) = grad_forward(&ch)?;
        total += gx.sum_sq() + gy.sum_sq();
    }
    Ok(total)
}

/// The six-term training objective evaluated at `state.f`.
pub fn eval_objective(state: &AstfState, cfg: &AstfConfig) -> Result<f64> {
    state.check()?;
    let f = &state.f.weights;
    let prev = state.f.prev_or_zeros();
    let mut total = 0.5 * data_misfit(&state.sample.data, f, &state.label);
    if cfg.alpha1 != 0.0 {
        total += cfg.alpha1 * f.l1();
    }
    if cfg.alpha2 != 0.0 {
        total += cfg.alpha2 * gradient_energy(f)?;
    }
    if cfg.beta1 != 0.0 {
        total += cfg.beta1 * f.distance(&prev).powi(2);
    }
    if cfg.beta2 != 0.0 {
        total += cfg.beta2 * data_misfit(&state.prev_sample.data, &prev, &state.prev_label);
    }
    if cfg.gamma_ridge != 0.0 {
        total += cfg.gamma_ridge * f.sum_sq();
    }
    Ok(total)
}

fn f_problem<'a>(
    samples: &'a [Spectrum2D],
    label: &'a Spectrum2D,
    anchor: &'a Tensor3,
    cfg: &AstfConfig,
) -> RidgeProblem<'a> {
    RidgeProblem {
        samples,
        label,
        ridge: cfg.gamma_ridge,
        anchor: (cfg.beta1 > 0.0).then_some((anchor, cfg.beta1)),
        smooth: cfg.delta1,
        sparsity: if cfg.alpha1 > 0.0 {
            Sparsity::Ratio { weight: cfg.alpha1, eps: cfg.eps_sparse }
        } else {
            Sparsity::None
        },
    }
}

/// Objective minimized by [`solve_f`], evaluated at `state.f`.
pub fn f_objective(state: &AstfState, cfg: &AstfConfig) -> Result<f64> {
    state.check()?;
    let samples = spectra(&state.sample.data);
    let label = dft2(&state.label);
    let anchor = state.f.prev_or_zeros();
    Ok(f_problem(&samples, &label, &anchor, cfg).objective(&state.f.weights))
}

/// Sparse, temporally anchored fit of the filter to the current sample.
///
/// The returned bank carries the state's previous-frame filter.
pub fn solve_f(state: &AstfState, cfg: &AstfConfig) -> Result<FilterSolve> {
    state.check()?;
    let samples = spectra(&state.sample.data);
    let label = dft2(&state.label);
    let anchor = state.f.prev_or_zeros();
    let sol = f_problem(&samples, &label, &anchor, cfg).solve(&state.f.weights);
    let mut bank = FilterBank::new(sol.weights);
    bank.prev = state.f.prev.clone();
    Ok(FilterSolve { bank, objective: sol.objective, converged: sol.converged })
}

/// Auxiliary filter fitted to the previous sample and label, anchored to the
/// previous-frame filter.
pub fn solve_g(state: &AstfState, cfg: &AstfConfig) -> Result<FilterSolve> {
    state.check()?;
    let samples = spectra(&state.prev_sample.data);
    let label = dft2(&state.prev_label);
    let anchor = state.f.prev_or_zeros();
    let problem = RidgeProblem {
        samples: &samples,
        label: &label,
        ridge: 0.0,
        anchor: (cfg.beta2 > 0.0).then_some((&anchor, cfg.beta2)),
        smooth: 0.0,
        sparsity: if cfg.lambda1_g > 0.0 { Sparsity::L1(cfg.lambda1_g) } else { Sparsity::None },
    };
    let sol = problem.solve(&state.g.weights);
    Ok(FilterSolve { bank: FilterBank::new(sol.weights), objective: sol.objective, converged: sol.converged })
}

/// `(f + g) / 2`, keeping `f`'s previous-frame filter.
pub fn blend_g(f: &FilterBank, g: &FilterBank) -> Result<FilterBank> {
    let blended = f.weights.zip_map(&g.weights, |a, b| 0.5 * (a + b))?;
    let mut bank = FilterBank::new(blended);
    bank.prev = f.prev.clone();
    Ok(bank)
}

/// Aggregation weights from the p/q temporal subproblems: their average,
/// shrunk by `η·λ₂/(1+λ₂)`.
pub fn solve_w(state: &AstfState, cfg: &AstfConfig, tp: &TemporalRegParams) -> Result<Tensor3> {
    state.check()?;
    let prev = state.f.prev_or_zeros();
    let p = update_p(&state.f.weights, &prev, tp)?;
    let q = update_q(&prev, tp)?;
    let avg = p.zip_map(&q, |a, b| 0.5 * (a + b))?;
    let level = cfg.eta_w * cfg.lambda2_w / (1.0 + cfg.lambda2_w);
    soft_threshold_tensor(&avg, level)
}

/// One ASTF training call: alternates `solve_f`, `solve_g` (blended into the
/// filter) and `solve_w` until the relative filter change drops below
/// `cfg.tol` or `cfg.max_admm_iters` sweeps have run.
///
/// `prev` supplies the previous-frame filter, sample and label; the returned
/// state has its previous-frame slots advanced to this call's output.
pub fn admm_astf(
    x: &FeatureTensor,
    y: &Field2D,
    prev: &AstfState,
    cfg: &AstfConfig,
    sp: &SpatialRegParams,
    tp: &TemporalRegParams,
) -> Result<(AstfState, AstfTrace)> {
    cfg.validate()?;
    sp.validate()?;
    tp.validate()?;
    let mut state = prev.clone();
    state.sample = x.clone();
    state.label = y.clone();
    state.check()?;
    if state.f.prev.is_none() {
        state.f.prev = Some(state.f.weights.clone());
    }

    let mut trace = AstfTrace {
        objective: vec![eval_objective(&state, cfg)?],
        f_objective: vec![f_objective(&state, cfg)?],
        ..Default::default()
    };
    for _ in 0..cfg.max_admm_iters {
        let before = state.f.weights.clone();
        let f = solve_f(&state, cfg)?;
        trace.f_objective.push(f.objective);
        let g = solve_g(&state, cfg)?;
        state.f = blend_g(&f.bank, &g.bank)?;
        state.g = g.bank;
        let w = solve_w(&state, cfg, tp)?;
        state.w_ref = w;
        state.iter += 1;
        trace.sweeps += 1;
        trace.objective.push(eval_objective(&state, cfg)?);

        let delta = state.f.weights.distance(&before);
        let norm = before.frobenius();
        let change = if norm > 0.0 { delta / norm } else { delta };
        trace.change.push(change);
        if change < cfg.tol {
            trace.converged = true;
            break;
        }
    }

    state.f.prev = Some(state.f.weights.clone());
    state.prev_sample = state.sample.clone();
    state.prev_label = state.label.clone();
    Ok((state, trace))
}
