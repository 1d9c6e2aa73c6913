//! Alternating projections, Douglas-Rachford and RAAR on the exit waves.

use num_complex::Complex64 as C64;

use super::{relative_change, stop, Algorithm, Problem, Tracker};
use crate::config::{SolverConfig, SolverReport};
use crate::domain::{ComplexImage, ExitWaveStack, Model, Probe};
use crate::error::{invalid, shape, Result};
use crate::forward::{adjoint_u_raw, adjoint_w_raw, forward_raw, normal_diag_wrt_u, normal_diag_wrt_w};
use crate::metrics::project_modulus_slice;

/// Least-squares rounds used to read off the factors after DR/RAAR.
const FINAL_LS_STEPS: usize = 50;

/// `T` rounds of `w <- (A_u^*A_u + a1)^{-1} A_u^* psi`, then the same for `u`.
pub(crate) fn ls_factor_raw(
    model: &Model,
    psi: &[C64],
    w: &mut Vec<C64>,
    u: &mut Vec<C64>,
    steps: usize,
    reg_w: f64,
    reg_u: f64,
    fixed_probe: bool,
) {
    for _ in 0..steps {
        if !fixed_probe {
            *w = ls_probe(model, psi, u, reg_w);
        }
        *u = ls_sample(model, psi, w, reg_u);
    }
}

pub(crate) fn ls_probe(model: &Model, psi: &[C64], u: &[C64], reg: f64) -> Vec<C64> {
    normal_diag_wrt_w(model, u).solve(&adjoint_w_raw(model, u, psi), reg)
}

pub(crate) fn ls_sample(model: &Model, psi: &[C64], w: &[C64], reg: f64) -> Vec<C64> {
    normal_diag_wrt_u(model, w).solve(&adjoint_u_raw(model, w, psi), reg)
}

/// Approximate projection of `psi` onto the bilinear set by alternating
/// least squares started at `(w0, u0)`.
pub fn inner_ls_factor(
    model: &Model,
    psi: &ExitWaveStack,
    w0: &Probe,
    u0: &ComplexImage,
    steps: usize,
    reg_w: f64,
    reg_u: f64,
) -> Result<(Probe, ComplexImage)> {
    if psi.len() != model.measurement_len() {
        return Err(shape("exit-wave stack does not match the model"));
    }
    if w0.len() != model.probe_len() || u0.len() != model.image_len() {
        return Err(shape("starting factors do not match the model"));
    }
    if !(reg_w > 0.0 && reg_u > 0.0) {
        return Err(invalid("ls_reg", "regularizers must be positive"));
    }
    let mut w = w0.as_slice().to_vec();
    let mut u = u0.as_slice().to_vec();
    ls_factor_raw(model, psi.as_slice(), &mut w, &mut u, steps, reg_w, reg_u, false);
    Ok((w0.with_data(w), ComplexImage::new(u0.side(), u)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionScheme {
    Ap,
    Dr,
    /// relaxation weight in `(0, 1]`
    Raar(f64),
}

/// Iterate of the projection family: exit waves plus the factors fitted to
/// them.
#[derive(Debug, Clone)]
pub struct ProjectionState {
    pub psi: Vec<C64>,
    pub w: Vec<C64>,
    pub u: Vec<C64>,
    /// `A(w, u)` for the current factors
    pub psi_hat: Vec<C64>,
}

impl ProjectionState {
    /// `psi = P1(A(w, u))`.
    pub fn start(model: &Model, sqrt_f: &[f64], w: Vec<C64>, u: Vec<C64>) -> Self {
        let psi_hat = forward_raw(model, &w, &u);
        let psi = modulus_projection(&psi_hat, sqrt_f);
        Self { psi, w, u, psi_hat }
    }

    /// One outer iteration; returns the relative change of `psi`.
    pub fn step(
        &mut self,
        model: &Model,
        sqrt_f: &[f64],
        scheme: ProjectionScheme,
        config: &SolverConfig,
    ) -> f64 {
        ls_factor_raw(
            model,
            &self.psi,
            &mut self.w,
            &mut self.u,
            config.inner_steps,
            config.ls_reg_probe,
            config.ls_reg_sample,
            config.fixed_probe,
        );
        self.psi_hat = forward_raw(model, &self.w, &self.u);
        let next = match scheme {
            ProjectionScheme::Ap => modulus_projection(&self.psi_hat, sqrt_f),
            ProjectionScheme::Dr => {
                let p = modulus_projection(&reflect(&self.psi_hat, &self.psi), sqrt_f);
                self.psi
                    .iter()
                    .zip(&p)
                    .zip(&self.psi_hat)
                    .map(|((x, pv), h)| x + pv - h)
                    .collect()
            }
            ProjectionScheme::Raar(delta) => {
                let p = modulus_projection(&reflect(&self.psi_hat, &self.psi), sqrt_f);
                self.psi
                    .iter()
                    .zip(&p)
                    .zip(&self.psi_hat)
                    .map(|((x, pv), h)| delta * (x + pv - h) + (1.0 - delta) * h)
                    .collect()
            }
        };
        let change = relative_change(&next, &self.psi);
        self.psi = next;
        change
    }
}

fn reflect(hat: &[C64], psi: &[C64]) -> Vec<C64> {
    hat.iter().zip(psi).map(|(h, p)| 2.0 * h - p).collect()
}

fn modulus_projection(psi: &[C64], sqrt_f: &[f64]) -> Vec<C64> {
    let f: Vec<f64> = sqrt_f.iter().map(|s| s * s).collect();
    project_modulus_slice(psi, &f)
}

/// `1/2 || |A(w,u)| - sqrt(f) ||^2`
pub(crate) fn amplitude_misfit(exit: &[C64], sqrt_f: &[f64]) -> f64 {
    0.5 * exit
        .iter()
        .zip(sqrt_f)
        .map(|(z, s)| (z.norm() - s).powi(2))
        .sum::<f64>()
}

fn run_scheme(
    problem: &Problem,
    config: &SolverConfig,
    algorithm: Algorithm,
    scheme: ProjectionScheme,
) -> Result<SolverReport> {
    config.validate()?;
    let model = &problem.model;
    let mut tracker = Tracker::new(problem, algorithm);
    let sqrt_f = tracker.sqrt_f().to_vec();
    let (w, u) = problem.initial(config.seed);
    let mut state = ProjectionState::start(model, &sqrt_f, w, u);
    for _ in 0..config.max_iter {
        let change = state.step(model, &sqrt_f, scheme, config);
        let obj = amplitude_misfit(&state.psi_hat, &sqrt_f);
        tracker.record_exit(obj, &state.w, &state.u, &state.psi_hat)?;
        if stop(config.tol, change) {
            tracker.event(format!("stopped on relative change {change:.3e}"));
            break;
        }
    }
    if scheme != ProjectionScheme::Ap && tracker.iterations() > 0 {
        // factors of the shadow sequence P1(2 psi_hat - psi)
        let p = modulus_projection(&reflect(&state.psi_hat, &state.psi), &sqrt_f);
        ls_factor_raw(
            model,
            &p,
            &mut state.w,
            &mut state.u,
            FINAL_LS_STEPS,
            config.ls_reg_probe,
            config.ls_reg_sample,
            config.fixed_probe,
        );
    }
    tracker.finish(state.w, state.u)
}

pub fn run_ap(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    run_scheme(problem, config, Algorithm::Ap, ProjectionScheme::Ap)
}

pub fn run_dr(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    run_scheme(problem, config, Algorithm::Dr, ProjectionScheme::Dr)
}

pub fn run_raar(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    let delta = config.delta.unwrap_or(0.75);
    run_scheme(problem, config, Algorithm::Raar, ProjectionScheme::Raar(delta))
}
