use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights of the adaptive sparse/temporal filter objective and its
/// three-way split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AstfConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma_ridge: f64,
    pub delta1: f64,
    pub lambda1_g: f64,
    pub lambda2_w: f64,
    pub eta_w: f64,
    pub eps_sparse: f64,
    pub max_admm_iters: usize,
    pub tol: f64,
}

impl Default for AstfConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.01,
            alpha2: 0.001,
            beta1: 0.1,
            beta2: 0.1,
            gamma_ridge: 1e-4,
            delta1: 0.001,
            lambda1_g: 0.01,
            lambda2_w: 1.0,
            eta_w: 0.01,
            eps_sparse: 1e-3,
            max_admm_iters: 5,
            tol: 1e-3,
        }
    }
}

impl AstfConfig {
    /// Every regularizer off: the trainer reduces to a per-bin ridge filter.
    pub fn ridge_only(gamma_ridge: f64) -> Self {
        Self {
            alpha1: 0.0,
            alpha2: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            gamma_ridge,
            delta1: 0.0,
            lambda1_g: 0.0,
            lambda2_w: 0.0,
            eta_w: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("gamma_ridge", self.gamma_ridge),
            ("delta1", self.delta1),
            ("lambda1_g", self.lambda1_g),
            ("lambda2_w", self.lambda2_w),
            ("eta_w", self.eta_w),
        ];
        for (name, v) in weights {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("astf.{name} must be finite and >= 0")));
            }
        }
        if !(self.eps_sparse > 0.0) {
            return Err(Error::InvalidConfig("astf.eps_sparse must be > 0".into()));
        }
        if self.max_admm_iters == 0 {
            return Err(Error::InvalidConfig("astf.max_admm_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("astf.tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Coefficients of the higher-order spatial smoothness diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialRegParams {
    pub a2: f64,
    pub lam1_s: f64,
    pub gam1: f64,
    pub mu1: f64,
    pub lam2_s: f64,
    pub gam2: f64,
    pub mu2: f64,
    pub p_norm: f64,
}

impl Default for SpatialRegParams {
    fn default() -> Self {
        Self { a2: 1.0, lam1_s: 1.0, gam1: 0.0, mu1: 0.0, lam2_s: 1.0, gam2: 0.0, mu2: 0.0, p_norm: 2.0 }
    }
}

impl SpatialRegParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.a2, self.lam1_s, self.gam1, self.mu1, self.lam2_s, self.gam2, self.mu2];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidConfig("spatial coefficients must be finite and >= 0".into()));
        }
        if !(self.p_norm >= 1.0) {
            return Err(Error::InvalidConfig("sp.p_norm must be >= 1".into()));
        }
        Ok(())
    }
}

/// Temporal regularization weights and offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalRegParams {
    pub beta1: f64,
    pub beta2: f64,
    pub delta_t: f64,
    pub eps_off: f64,
    pub gamma_off: f64,
    /// Stored and validated; the printed q-update does not use it.
    pub k_weight: f64,
}

impl Default for TemporalRegParams {
    fn default() -> Self {
        Self { beta1: 0.1, beta2: 0.1, delta_t: 1.0, eps_off: 0.01, gamma_off: 0.01, k_weight: 1.0 }
    }
}

impl TemporalRegParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 >= 0.0 && self.beta2 >= 0.0 && self.eps_off >= 0.0 && self.gamma_off >= 0.0) {
            return Err(Error::InvalidConfig("temporal weights must be >= 0".into()));
        }
        if !(self.delta_t > 0.0) {
            return Err(Error::InvalidConfig("tp.delta_t must be > 0".into()));
        }
        if !(self.k_weight > 0.0) {
            return Err(Error::InvalidConfig("tp.k_weight must be > 0".into()));
        }
        Ok(())
    }
}
