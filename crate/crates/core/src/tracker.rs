//! Per-frame orchestration: optional super-resolution of the search patch,
//! multi-scale detection and ASTF/EPSR model training.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::astf::{admm_astf, solve_f, AstfConfig, AstfState, FilterBank, SpatialRegParams, TemporalRegParams};
use crate::epsr::{epsr_run, EpsrConfig};
use crate::error::{Error, Result};
use crate::features::{extract_features, extract_patch, resize_bilinear, window_sides, FeatureConfig, FeatureTensor, Frame};
use crate::gesr::{gesr_reconstruct, locate_peak, response_spectrum, GesrConfig};
use crate::numerics::{dft2, gaussian_label, idft2, Field2D, Tensor3};

pub use crate::geometry::BoundingBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub astf: AstfConfig,
    pub sp: SpatialRegParams,
    pub tp: TemporalRegParams,
    pub epsr: EpsrConfig,
    pub gesr: GesrConfig,
    pub features: FeatureConfig,
    pub learning_rate: f64,
    /// GESR runs when the smaller box side is below this many pixels.
    pub sr_trigger_px: usize,
    pub scales: Vec<f64>,
    pub padding: f64,
    pub label_sigma_factor: f64,
    /// Side of the square model window in samples.
    pub window: usize,
    /// Multiplier on the peak of every non-unity scale.
    pub scale_penalty: f64,
    /// RMS the filter is normalized to before EPSR. The EPSR objective is
    /// not scale invariant, so this sets its effective strength.
    pub epsr_input_rms: f64,
    pub use_astf: bool,
    pub use_epsr: bool,
    pub use_gesr: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            astf: AstfConfig::default(),
            sp: SpatialRegParams::default(),
            tp: TemporalRegParams::default(),
            epsr: EpsrConfig::default(),
            gesr: GesrConfig::default(),
            features: FeatureConfig::default(),
            learning_rate: 0.02,
            sr_trigger_px: 32,
            scales: vec![0.985, 1.0, 1.015],
            padding: 1.5,
            label_sigma_factor: 0.1,
            window: 64,
            scale_penalty: 0.99,
            epsr_input_rms: 1.0,
            use_astf: true,
            use_epsr: true,
            use_gesr: true,
        }
    }
}

impl TrackerConfig {
    /// Plain per-bin ridge filter with every optional component disabled.
    pub fn baseline() -> Self {
        Self { use_astf: false, use_epsr: false, use_gesr: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        self.astf.validate()?;
        self.sp.validate()?;
        self.tp.validate()?;
        self.epsr.validate()?;
        self.gesr.validate()?;
        // Zero freezes the model; useful for diagnostics.
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return bad("learning_rate must lie in [0, 1]");
        }
        if self.scales.is_empty() || self.scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return bad("scales must be a nonempty list of positive numbers");
        }
        if !(self.padding >= 0.0) {
            return bad("padding must be non-negative");
        }
        if !(self.label_sigma_factor > 0.0) {
            return bad("label_sigma_factor must be positive");
        }
        if !(self.epsr_input_rms > 0.0 && self.epsr_input_rms.is_finite()) {
            return bad("epsr_input_rms must be positive");
        }
        if !(self.scale_penalty > 0.0) {
            return bad("scale_penalty must be positive");
        }
        let cell = self.features.cell_size;
        if cell == 0 || self.window == 0 || self.window % cell != 0 || self.window / cell < 4 {
            return bad("window must be a positive multiple of cell_size spanning at least 4 cells");
        }
        Ok(())
    }

    fn sr_active(&self, bbox: &BoundingBox) -> bool {
        self.use_gesr && bbox.w.min(bbox.h) < self.sr_trigger_px as f64
    }
}

#[derive(Debug, Clone)]
pub struct TrackerState {
    pub model: FilterBank,
    pub astf_state: AstfState,
    pub bbox: BoundingBox,
    pub frame_index: usize,
    pub last_response_peak: f64,
    /// Side of the model window in samples, fixed at init.
    pub window: usize,
    label: Field2D,
}

impl TrackerState {
    pub fn label(&self) -> &Field2D {
        &self.label
    }
}

/// Model window for a sequence starting at `bbox0`: `cfg.window`, multiplied
/// by the super-resolution factor when the initial box triggers GESR.
pub fn model_window(bbox0: &BoundingBox, cfg: &TrackerConfig) -> usize {
    if cfg.sr_active(bbox0) {
        cfg.window * cfg.gesr.scale
    } else {
        cfg.window
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub bbox: BoundingBox,
    pub peak: f64,
    pub used_sr: bool,
    pub solver_iters: usize,
    pub elapsed: Duration,
    /// False when ASTF or EPSR stopped on the iteration cap.
    pub converged: bool,
}

/// Search-window patch for `bbox` sampled on a `window`-sided grid,
/// super-resolved when the box is small.
pub fn search_patch(frame: &Frame, bbox: &BoundingBox, window: usize, cfg: &TrackerConfig) -> Result<(Field2D, bool)> {
    let win = (window, window);
    if !cfg.sr_active(bbox) {
        return Ok((extract_patch(frame, bbox, cfg.padding, win)?, false));
    }
    // Crop at native resolution, reconstruct at `scale`× and resample to the
    // model window.
    let (side_h, side_w) = window_sides(bbox, cfg.padding);
    let native = (side_h.round().max(2.0) as usize, side_w.round().max(2.0) as usize);
    let lr = extract_patch(frame, bbox, cfg.padding, native)?;
    let hr = gesr_reconstruct(&lr, &cfg.gesr)?;
    Ok((resize_bilinear(&hr, win.0, win.1), true))
}

pub fn search_features(
    frame: &Frame,
    bbox: &BoundingBox,
    window: usize,
    cfg: &TrackerConfig,
) -> Result<(FeatureTensor, bool)> {
    let (patch, sr) = search_patch(frame, bbox, window, cfg)?;
    Ok((extract_features(&patch, &cfg.features)?, sr))
}

/// Gaussian regression target with σ = factor·√(w·h)/cell, the target size
/// measured in model-window samples.
pub fn training_label(bbox: &BoundingBox, window: usize, cfg: &TrackerConfig) -> Result<Field2D> {
    let (side_h, side_w) = window_sides(bbox, cfg.padding);
    let tw = bbox.w * window as f64 / side_w;
    let th = bbox.h * window as f64 / side_h;
    let cell = cfg.features.cell_size as f64;
    let sigma = cfg.label_sigma_factor * (tw * th).sqrt() / cell;
    let n = window / cfg.features.cell_size;
    gaussian_label(n, n, sigma)
}

struct Trained {
    filter: Tensor3,
    astf_state: AstfState,
    iters: usize,
    converged: bool,
}

/// EPSR works on a copy of the filter normalized to `target_rms`; the result
/// is rescaled to the input norm so the response magnitude stays comparable
/// across frames. `cfg.tol` is taken relative to the normalized filter norm.
fn epsr_refine(filter: &Tensor3, target_rms: f64, cfg: &EpsrConfig) -> Result<(Tensor3, usize, bool)> {
    let norm = filter.frobenius();
    if norm == 0.0 {
        return Ok((filter.clone(), 0, true));
    }
    let rms = norm / (filter.len() as f64).sqrt();
    let input = filter.scale(target_rms / rms);
    let cfg = EpsrConfig { tol: cfg.tol * input.frobenius(), ..cfg.clone() };
    let out = epsr_run(&input, &cfg)?;
    let out_norm = out.f.frobenius();
    let refined = if out_norm > 0.0 { out.f.scale(norm / out_norm) } else { filter.clone() };
    Ok((refined, out.trace.len(), out.converged))
}

fn train(sample: &FeatureTensor, label: &Field2D, prev: &AstfState, cfg: &TrackerConfig) -> Result<Trained> {
    let (mut filter, astf_state, mut iters, mut converged) = if cfg.use_astf {
        let (state, trace) = admm_astf(sample, label, prev, &cfg.astf, &cfg.sp, &cfg.tp)?;
        (state.f.weights().clone(), state, trace.sweeps, trace.converged)
    } else {
        let fresh = AstfState::new(sample.clone(), label.clone())?;
        let solved = solve_f(&fresh, &AstfConfig::ridge_only(cfg.astf.gamma_ridge))?;
        let mut state = prev.clone();
        state.sample = sample.clone();
        state.label = label.clone();
        (solved.bank.weights().clone(), state, 1, true)
    };
    if cfg.use_epsr {
        let (refined, n, ok) = epsr_refine(&filter, cfg.epsr_input_rms, &cfg.epsr)?;
        filter = refined;
        iters += n;
        converged &= ok;
    }
    Ok(Trained { filter, astf_state, iters, converged })
}

/// Trains the first model from the ground-truth box on frame 0.
pub fn init(frame: &Frame, bbox0: &BoundingBox, cfg: &TrackerConfig) -> Result<TrackerState> {
    cfg.validate()?;
    bbox0.validate()?;
    if frame.pixels.is_empty() {
        return Err(Error::EmptyFrame);
    }
    let bbox = bbox0
        .clipped(frame.width() as f64, frame.height() as f64)
        .ok_or(Error::DegenerateBox { w: 0.0, h: 0.0 })?;
    let window = model_window(&bbox, cfg);
    let (sample, _) = search_features(frame, &bbox, window, cfg)?;
    let label = training_label(&bbox, window, cfg)?;
    let seed = AstfState::new(sample.clone(), label.clone())?;
    let trained = train(&sample, &label, &seed, cfg)?;
    Ok(TrackerState {
        model: FilterBank::new(trained.filter),
        astf_state: trained.astf_state,
        bbox,
        frame_index: 0,
        last_response_peak: 0.0,
        window,
        label,
    })
}

/// Correlation response of `model` on `features`, in the spatial domain.
pub fn response_map(model: &FilterBank, features: &FeatureTensor) -> Result<Field2D> {
    let z: Vec<_> = features.data.channel_fields().iter().map(dft2).collect();
    Ok(idft2(&response_spectrum(model.spectrum(), &z)?))
}

/// Parabolic refinement of a peak index along one circular axis.
fn subpixel(prev: f64, peak: f64, next: f64) -> f64 {
    let denom = prev - 2.0 * peak + next;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (prev - next) / denom).clamp(-0.5, 0.5)
}

/// Signed circular displacement of the response peak, in cells.
pub fn peak_shift(response: &Field2D) -> (f64, f64, f64) {
    let (h, w) = response.shape();
    let (r, c, v) = locate_peak(response);
    let up = response[((r + h - 1) % h, c)];
    let down = response[((r + 1) % h, c)];
    let left = response[(r, (c + w - 1) % w)];
    let right = response[(r, (c + 1) % w)];
    let wrap = |k: usize, n: usize| if k > n / 2 { k as f64 - n as f64 } else { k as f64 };
    (wrap(r, h) + subpixel(up, v, down), wrap(c, w) + subpixel(left, v, right), v)
}

/// Best (scale, dy, dx, peak, sr) over the scale pyramid. The comparison uses
/// penalized peaks; the returned peak is the raw one.
fn detect(state: &TrackerState, frame: &Frame, cfg: &TrackerConfig) -> Result<(f64, f64, f64, f64, bool)> {
    let mut best: Option<(f64, f64, f64, f64, f64, bool)> = None;
    for &s in &cfg.scales {
        let bbox = state.bbox.scaled(s);
        let (feat, sr) = search_features(frame, &bbox, state.window, cfg)?;
        let resp = response_map(&state.model, &feat)?;
        let (dy, dx, peak) = peak_shift(&resp);
        let score = if s == 1.0 { peak } else { peak * cfg.scale_penalty };
        if best.map_or(true, |b| score > b.0) {
            best = Some((score, s, dy, dx, peak, sr));
        }
    }
    let (_, s, dy, dx, peak, sr) = best.expect("scales validated nonempty");
    Ok((s, dy, dx, peak, sr))
}

/// Detects the target in `frame`, moves the box and updates the model.
pub fn track(state: &TrackerState, frame: &Frame, cfg: &TrackerConfig) -> Result<(TrackerState, TrackResult)> {
    let start = Instant::now();
    if frame.pixels.is_empty() {
        return Err(Error::EmptyFrame);
    }
    let (s, dy, dx, peak, used_sr) = detect(state, frame, cfg)?;

    let searched = state.bbox.scaled(s);
    let (side_h, side_w) = window_sides(&searched, cfg.padding);
    let cell = cfg.features.cell_size as f64;
    let px_y = dy * cell * side_h / state.window as f64;
    let px_x = dx * cell * side_w / state.window as f64;
    let mut bbox = searched.translated(px_x, px_y);
    // Keep the centre on the frame so the next crop stays meaningful.
    let (cx, cy) = bbox.center();
    let (fw, fh) = (frame.width() as f64, frame.height() as f64);
    bbox = bbox.translated(cx.clamp(0.0, fw) - cx, cy.clamp(0.0, fh) - cy);
    bbox.validate()?;

    let (sample, _) = search_features(frame, &bbox, state.window, cfg)?;
    let label = training_label(&bbox, state.window, cfg)?;
    let trained = train(&sample, &label, &state.astf_state, cfg)?;

    let lr = cfg.learning_rate;
    let model = if lr == 0.0 {
        state.model.clone()
    } else {
        FilterBank::new(state.model.weights().zip_map(&trained.filter, |m, f| (1.0 - lr) * m + lr * f)?)
    };

    let next = TrackerState {
        model,
        astf_state: trained.astf_state,
        bbox,
        frame_index: state.frame_index + 1,
        last_response_peak: peak,
        window: state.window,
        label,
    };
    let result = TrackResult {
        bbox,
        peak,
        used_sr,
        solver_iters: trained.iters,
        elapsed: start.elapsed(),
        converged: trained.converged,
    };
    Ok((next, result))
}

/// Runs a whole sequence one-pass from `bbox0`; the first entry is the
/// initial box itself.
pub fn run_sequence(frames: &[Frame], bbox0: &BoundingBox, cfg: &TrackerConfig) -> Result<Vec<TrackResult>> {
    let first = frames.first().ok_or(Error::EmptyInput)?;
    let start = Instant::now();
    let mut state = init(first, bbox0, cfg)?;
    let mut out = vec![TrackResult {
        bbox: state.bbox,
        peak: 1.0,
        used_sr: cfg.sr_active(&state.bbox),
        solver_iters: 0,
        elapsed: start.elapsed(),
        converged: true,
    }];
    for frame in &frames[1..] {
        let (next, res) = track(&state, frame, cfg)?;
        state = next;
        out.push(res);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
