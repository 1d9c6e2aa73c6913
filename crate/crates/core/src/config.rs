//! Solver hyperparameters and run reports.

use serde::{Deserialize, Serialize};

use crate::domain::{ComplexImage, Probe};
use crate::error::{invalid, Result};
use crate::metrics::{Metric, MetricKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingKind {
    Marquardt,
    FanYuan,
    Thresholded,
}

/// Levenberg-Marquardt damping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DampingRule {
    pub kind: DampingKind,
    pub mu0: f64,
    pub nu: f64,
    pub tau: f64,
    pub c0: f64,
}

impl Default for DampingRule {
    fn default() -> Self {
        Self {
            kind: DampingKind::FanYuan,
            mu0: 1e-2,
            nu: 1.0,
            tau: 1e3,
            c0: 1e-2,
        }
    }
}

impl DampingRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(invalid("damping.mu0", "must be positive"));
        }
        if !(1.0..=2.0).contains(&self.nu) {
            return Err(invalid("damping.nu", "must lie in [1, 2]"));
        }
        if !(self.tau >= 1.0 && self.tau.is_finite()) {
            return Err(invalid("damping.tau", "must be at least 1"));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(invalid("damping.c0", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Relative-change stopping threshold; 0 disables early stopping.
    pub tol: f64,
    pub seed: u64,
    /// Alternating least-squares rounds per projection onto the bilinear set.
    pub inner_steps: usize,
    pub ls_reg_probe: f64,
    pub ls_reg_sample: f64,
    pub d1: f64,
    pub d2: f64,
    /// RAAR relaxation or rPIE blend; `None` picks the algorithm default.
    pub delta: Option<f64>,
    pub momentum: f64,
    pub gamma: f64,
    pub beta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `None` picks the algorithm default.
    pub metric: Option<MetricKind>,
    pub epsilon: f64,
    pub prox_steps: usize,
    /// `None` means `1 / (1 + beta)`.
    pub prox_stepsize: Option<f64>,
    pub amp_bound_probe: Option<f64>,
    pub amp_bound_sample: Option<f64>,
    pub damping: DampingRule,
    pub cg_iters: usize,
    pub cg_tol: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub line_search_alpha_max: f64,
    pub admm_variant_inner: usize,
    /// Keep the probe at its initial value (nonblind mode).
    pub fixed_probe: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 0.0,
            seed: 0,
            inner_steps: 5,
            ls_reg_probe: 1e-8,
            ls_reg_sample: 1e-8,
            d1: 1.0,
            d2: 1.0,
            delta: None,
            momentum: 0.0,
            gamma: 0.1,
            beta: 1.0,
            alpha1: 1.0,
            alpha2: 1.0,
            metric: None,
            epsilon: 0.0,
            prox_steps: 20,
            prox_stepsize: None,
            amp_bound_probe: None,
            amp_bound_sample: None,
            damping: DampingRule::default(),
            cg_iters: 25,
            cg_tol: 1e-8,
            beta1: 0.1,
            beta2: 1.0,
            line_search_alpha_max: 1.0,
            admm_variant_inner: 10,
            fixed_probe: false,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be positive and finite"))
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(invalid("tol", "must be nonnegative"));
        }
        positive("ls_reg_probe", self.ls_reg_probe)?;
        positive("ls_reg_sample", self.ls_reg_sample)?;
        positive("d1", self.d1)?;
        positive("d2", self.d2)?;
        if let Some(d) = self.delta {
            if !(d > 0.0 && d <= 1.0) {
                return Err(invalid("delta", "must lie in (0, 1]"));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid("momentum", "must lie in [0, 1)"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be nonnegative"));
        }
        positive("beta", self.beta)?;
        positive("alpha1", self.alpha1)?;
        positive("alpha2", self.alpha2)?;
        if let Some(kind) = self.metric {
            Metric::new(kind, self.epsilon)?;
        } else if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be nonnegative"));
        }
        if let Some(s) = self.prox_stepsize {
            positive("prox_stepsize", s)?;
        }
        if let Some(c) = self.amp_bound_probe {
            positive("amp_bound_probe", c)?;
        }
        if let Some(c) = self.amp_bound_sample {
            positive("amp_bound_sample", c)?;
        }
        self.damping.validate()?;
        if !(self.cg_tol >= 0.0) {
            return Err(invalid("cg_tol", "must be nonnegative"));
        }
        positive("beta1", self.beta1)?;
        positive("beta2", self.beta2)?;
        positive("line_search_alpha_max", self.line_search_alpha_max)?;
        Ok(())
    }

    /// Metric for an algorithm whose own default is `fallback`.
    pub fn metric_or(&self, fallback: MetricKind) -> Result<Metric> {
        Metric::new(self.metric.unwrap_or(fallback), self.epsilon)
    }

    pub fn prox_delta(&self) -> f64 {
        self.prox_stepsize.unwrap_or(1.0 / (1.0 + self.beta))
    }
}

/// Errors of a reconstruction against known truth, each quotiented by a
/// global complex scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedErrors {
    pub probe: f64,
    pub sample: f64,
}

impl AlignedErrors {
    pub fn worst(&self) -> f64 {
        self.probe.max(self.sample)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub algorithm: String,
    pub iterations_run: usize,
    pub objective_history: Vec<f64>,
    /// `|| |A(w,u)| - sqrt(f) || / || sqrt(f) ||` after each iteration.
    pub residual_history: Vec<f64>,
    /// Worst aligned error after each iteration, empty without truth.
    pub error_history: Vec<f64>,
    pub final_w: Probe,
    pub final_u: ComplexImage,
    pub aligned_error: Option<f64>,
    pub errors: Option<AlignedErrors>,
    /// Ptychography only: errors quotiented by a global scalar and the
    /// shared linear phase ramp the data cannot resolve.
    #[serde(default)]
    pub ramp_errors: Option<AlignedErrors>,
    pub events: Vec<String>,
}
