//! Reconstruction algorithms for the blind problem.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dft::Dft;
use crate::config::{AlignedErrors, SolverConfig, SolverReport};
use crate::domain::{aligned_relative_error, ramp_aligned_errors, synth, ComplexImage, MeasurementStack, Model, Probe};
use crate::error::{invalid, shape, BprError, Result};
use crate::forward::forward_raw;
use crate::vecops::{norm, norm_sqr, ONE};

pub mod pie;
pub mod projection;
pub mod secondorder;
pub mod splitting;

pub use pie::{run_epie, run_rpie};
pub use projection::{inner_ls_factor, run_ap, run_dr, run_raar, ProjectionScheme, ProjectionState};
pub use secondorder::{
    jacobian_adjoint_apply, jacobian_apply, lm_step, residual, run_gn, run_lm, run_nlcg, Damping,
    Linearization, LmStep,
};
pub use splitting::{run_admm, run_admm_variant, run_phebie, run_proxalt, AdmmState};

/// A probe/sample pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub probe: Probe,
    pub sample: ComplexImage,
}

/// Everything a solver needs: the model, the data and optionally the truth
/// (for error tracking) and a starting point.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Model,
    pub data: MeasurementStack,
    pub truth: Option<Estimate>,
    pub init: Option<Estimate>,
}

impl Problem {
    pub fn new(model: Model, data: MeasurementStack) -> Result<Self> {
        if data.frame_len() != model.frame_len() || data.frame_count() != model.frame_count() {
            return Err(shape(format!(
                "data is {}x{}, model expects {}x{}",
                data.frame_count(),
                data.frame_len(),
                model.frame_count(),
                model.frame_len()
            )));
        }
        Ok(Self {
            model,
            data,
            truth: None,
            init: None,
        })
    }

    pub fn with_truth(mut self, truth: Estimate) -> Result<Self> {
        self.check_estimate(&truth)?;
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn with_init(mut self, init: Estimate) -> Result<Self> {
        self.check_estimate(&init)?;
        self.init = Some(init);
        Ok(self)
    }

    fn check_estimate(&self, e: &Estimate) -> Result<()> {
        if e.probe.len() != self.model.probe_len() || e.sample.len() != self.model.image_len() {
            return Err(shape("estimate does not match the model"));
        }
        Ok(())
    }

    /// Starting point: the supplied one, else a flat sample with a seeded
    /// random-phase disk probe scaled to the data energy.
    pub fn initial(&self, seed: u64) -> (Vec<C64>, Vec<C64>) {
        if let Some(e) = &self.init {
            return (e.probe.as_slice().to_vec(), e.sample.as_slice().to_vec());
        }
        let side = self.model.probe_side();
        let disk = synth::random_phase_disk(side, seed).into_vec();
        // Fourier ptychography starts from a flat spectrum and a disk pupil
        let (mut w, u) = match &self.model {
            Model::FourierPtycho { .. } => (
                Dft::Square(side).inverse_vec(&disk),
                Dft::Square(self.model.image_side()).inverse_vec(&vec![ONE; self.model.image_len()]),
            ),
            _ => (disk, vec![ONE; self.model.image_len()]),
        };
        let energy = norm_sqr(&forward_raw(&self.model, &w, &u));
        let total = self.data.total();
        if energy > 0.0 && total > 0.0 {
            let s = (total / energy).sqrt();
            w.iter_mut().for_each(|v| *v *= s);
        }
        (w, u)
    }

    fn probe_template(&self) -> Probe {
        match &self.init {
            Some(e) => e.probe.clone(),
            None => Probe::zeros(self.model.probe_side()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ap,
    Dr,
    Raar,
    Epie,
    Rpie,
    Phebie,
    Proxalt,
    Admm,
    AdmmVariant,
    Gn,
    Lm,
    Nlcg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 12] = [
        Algorithm::Ap,
        Algorithm::Dr,
        Algorithm::Raar,
        Algorithm::Epie,
        Algorithm::Rpie,
        Algorithm::Phebie,
        Algorithm::Proxalt,
        Algorithm::Admm,
        Algorithm::AdmmVariant,
        Algorithm::Gn,
        Algorithm::Lm,
        Algorithm::Nlcg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ap => "ap",
            Algorithm::Dr => "dr",
            Algorithm::Raar => "raar",
            Algorithm::Epie => "epie",
            Algorithm::Rpie => "rpie",
            Algorithm::Phebie => "phebie",
            Algorithm::Proxalt => "proxalt",
            Algorithm::Admm => "admm",
            Algorithm::AdmmVariant => "admm-variant",
            Algorithm::Gn => "gn",
            Algorithm::Lm => "lm",
            Algorithm::Nlcg => "nlcg",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = BprError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| invalid("algorithm", format!("unknown algorithm `{s}`")))
    }
}

pub fn run(algorithm: Algorithm, problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    match algorithm {
        Algorithm::Ap => run_ap(problem, config),
        Algorithm::Dr => run_dr(problem, config),
        Algorithm::Raar => run_raar(problem, config),
        Algorithm::Epie => run_epie(problem, config),
        Algorithm::Rpie => run_rpie(problem, config),
        Algorithm::Phebie => run_phebie(problem, config),
        Algorithm::Proxalt => run_proxalt(problem, config),
        Algorithm::Admm => run_admm(problem, config),
        Algorithm::AdmmVariant => run_admm_variant(problem, config),
        Algorithm::Gn => run_gn(problem, config),
        Algorithm::Lm => run_lm(problem, config),
        Algorithm::Nlcg => run_nlcg(problem, config),
    }
}

/// Histories and events collected during a run.
pub(crate) struct Tracker<'a> {
    problem: &'a Problem,
    algorithm: &'static str,
    sqrt_f: Vec<f64>,
    norm_sqrt_f: f64,
    objective: Vec<f64>,
    residual: Vec<f64>,
    error: Vec<f64>,
    events: Vec<String>,
}

impl<'a> Tracker<'a> {
    pub(crate) fn new(problem: &'a Problem, algorithm: Algorithm) -> Self {
        let sqrt_f = problem.data.sqrt();
        let norm_sqrt_f = sqrt_f.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            problem,
            algorithm: algorithm.name(),
            sqrt_f,
            norm_sqrt_f,
            objective: Vec::new(),
            residual: Vec::new(),
            error: Vec::new(),
            events: Vec::new(),
        }
    }

    pub(crate) fn sqrt_f(&self) -> &[f64] {
        &self.sqrt_f
    }

    /// Records one iteration given the current exit wave `A(w,u)`.
    pub(crate) fn record_exit(&mut self, objective: f64, w: &[C64], u: &[C64], exit: &[C64]) -> Result<()> {
        let r: f64 = exit
            .iter()
            .zip(&self.sqrt_f)
            .map(|(z, s)| (z.norm() - s).powi(2))
            .sum::<f64>()
            .sqrt();
        let rel = if self.norm_sqrt_f > 0.0 { r / self.norm_sqrt_f } else { r };
        if !rel.is_finite() || !objective.is_finite() {
            return Err(BprError::Numerical(format!(
                "{} produced a non-finite iterate at iteration {}",
                self.algorithm,
                self.residual.len() + 1
            )));
        }
        self.objective.push(objective);
        self.residual.push(rel);
        if let Some(e) = self.errors(w, u) {
            self.error.push(e.worst());
        }
        Ok(())
    }

    pub(crate) fn record(&mut self, objective: f64, w: &[C64], u: &[C64]) -> Result<()> {
        let exit = forward_raw(&self.problem.model, w, u);
        self.record_exit(objective, w, u, &exit)
    }

    pub(crate) fn event(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::info!("{}: {msg}", self.algorithm);
        self.events.push(msg);
    }

    pub(crate) fn iterations(&self) -> usize {
        self.residual.len()
    }

    fn errors(&self, w: &[C64], u: &[C64]) -> Option<AlignedErrors> {
        let t = self.problem.truth.as_ref()?;
        Some(AlignedErrors {
            probe: aligned_relative_error(w, t.probe.as_slice()).ok()?,
            sample: aligned_relative_error(u, t.sample.as_slice()).ok()?,
        })
    }

    pub(crate) fn finish(self, w: Vec<C64>, u: Vec<C64>) -> Result<SolverReport> {
        let errors = self.errors(&w, &u);
        let model = &self.problem.model;
        let final_w = self.problem.probe_template().with_data(w);
        let final_u = ComplexImage::new(model.image_side(), u)?;
        let ramp_errors = match (&self.problem.truth, model) {
            (Some(t), Model::Ptycho { .. }) => {
                let r = ramp_aligned_errors(&final_w, &t.probe, &final_u, &t.sample)?;
                Some(AlignedErrors { probe: r.probe, sample: r.sample })
            }
            _ => None,
        };
        Ok(SolverReport {
            algorithm: self.algorithm.to_string(),
            iterations_run: self.residual.len(),
            objective_history: self.objective,
            residual_history: self.residual,
            error_history: self.error,
            final_w,
            final_u,
            aligned_error: errors.map(|e| e.worst()),
            errors,
            ramp_errors,
            events: self.events,
        })
    }
}

/// `||a - b|| / ||b||`, or `||a - b||` when `b` vanishes.
pub(crate) fn relative_change(a: &[C64], b: &[C64]) -> f64 {
    let d = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let n = norm(b);
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

pub(crate) fn stop(tol: f64, change: f64) -> bool {
    tol > 0.0 && change < tol
}

/// Amplitude bounds from the config, falling back to the probe's own bound.
pub(crate) fn probe_bound(problem: &Problem, config: &SolverConfig) -> Option<f64> {
    config
        .amp_bound_probe
        .or_else(|| problem.init.as_ref().and_then(|e| e.probe.amp_bound))
}
