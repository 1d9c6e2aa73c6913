//! PHeBIE, the proximal alternating scheme, proximal ADMM and the
//! constraint-set ADMM variant.

use num_complex::Complex64 as C64;

use super::projection::{ls_probe, ls_sample};
use super::{probe_bound, relative_change, stop, Algorithm, Problem, Tracker};
use crate::config::{SolverConfig, SolverReport};
use crate::domain::Model;
use crate::error::Result;
use crate::forward::{
    adjoint_u_raw, adjoint_w_raw, forward_raw, normal_diag_wrt_u, normal_diag_wrt_w, NormalDiag,
};
use crate::metrics::{
    metric_value_slice, project_amplitude_unchecked, project_modulus_slice, prox_penalized_slice,
    prox_slice, Metric, MetricKind,
};
use crate::vecops::{norm_sqr, real_inner, sub};

fn clip(x: Vec<C64>, bound: Option<f64>) -> Vec<C64> {
    match bound {
        Some(c) => project_amplitude_unchecked(&x, c),
        None => x,
    }
}

fn squared(sqrt_f: &[f64]) -> Vec<f64> {
    sqrt_f.iter().map(|s| s * s).collect()
}

/// `1/2 ||psi - A(w,u)||^2`
fn ls_value(exit: &[C64], psi: &[C64]) -> f64 {
    0.5 * exit
        .iter()
        .zip(psi)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
}

/// PHeBIE step constants: `||sum_j |S_j u|||_inf^2` and
/// `||sum_j S_j^T |w|||_inf^2` for ptychography, the largest normal
/// eigenvalue otherwise.
fn phebie_lipschitz_w(model: &Model, u: &[C64]) -> f64 {
    match model {
        Model::Ptycho { geometry: g } => {
            let mut acc = vec![0.0; g.frame_len()];
            let mut patch = vec![C64::new(0.0, 0.0); g.frame_len()];
            for j in 0..g.frame_count() {
                g.extract_raw(u, j, &mut patch);
                acc.iter_mut().zip(&patch).for_each(|(a, p)| *a += p.norm());
            }
            acc.iter().copied().fold(0.0, f64::max).powi(2)
        }
        _ => normal_diag_wrt_w(model, u).max(),
    }
}

fn phebie_lipschitz_u(model: &Model, w: &[C64]) -> f64 {
    match model {
        Model::Ptycho { geometry: g } => {
            let aw: Vec<f64> = w.iter().map(|v| v.norm()).collect();
            let mut acc = vec![0.0; g.image_len()];
            for j in 0..g.frame_count() {
                g.embed_add_real(&aw, j, &mut acc);
            }
            acc.iter().copied().fold(0.0, f64::max).powi(2)
        }
        _ => normal_diag_wrt_u(model, w).max(),
    }
}

pub fn run_phebie(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let model = &problem.model;
    let mut tracker = Tracker::new(problem, Algorithm::Phebie);
    let f = squared(tracker.sqrt_f());
    let cw = probe_bound(problem, config);
    let cu = config.amp_bound_sample;
    let (w0, u0) = problem.initial(config.seed);
    let mut w = clip(w0, cw);
    let mut u = clip(u0, cu);
    let mut psi = project_modulus_slice(&forward_raw(model, &w, &u), &f);
    let gamma = config.gamma;
    for _ in 0..config.max_iter {
        let w_prev = w.clone();
        if !config.fixed_probe {
            let r = sub(&forward_raw(model, &w, &u), &psi);
            let step = config.d1 * phebie_lipschitz_w(model, &u);
            if step > 0.0 {
                let g = adjoint_w_raw(model, &u, &r);
                w = clip(w.iter().zip(&g).map(|(x, d)| x - d / step).collect(), cw);
            }
        }
        let r = sub(&forward_raw(model, &w, &u), &psi);
        let step = config.d2 * phebie_lipschitz_u(model, &w);
        let u_prev = u.clone();
        if step > 0.0 {
            let g = adjoint_u_raw(model, &w, &r);
            u = clip(u.iter().zip(&g).map(|(x, d)| x - d / step).collect(), cu);
        }
        let hat = forward_raw(model, &w, &u);
        let blend: Vec<C64> = hat
            .iter()
            .zip(&psi)
            .map(|(h, p)| (h + gamma * p) / (1.0 + gamma))
            .collect();
        psi = project_modulus_slice(&blend, &f);
        tracker.record_exit(ls_value(&hat, &psi), &w, &u, &hat)?;
        let change = relative_change(&u, &u_prev).max(relative_change(&w, &w_prev));
        if stop(config.tol, change) {
            tracker.event(format!("stopped on relative change {change:.3e}"));
            break;
        }
    }
    tracker.finish(w, u)
}

pub fn run_proxalt(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let model = &problem.model;
    let metric = config.metric_or(MetricKind::Agm)?;
    let mut tracker = Tracker::new(problem, Algorithm::Proxalt);
    let f = squared(tracker.sqrt_f());
    let (mut w, mut u) = problem.initial(config.seed);
    for _ in 0..config.max_iter {
        let (w_prev, u_prev) = (w.clone(), u.clone());
        let z = z_prox(&metric, config, &forward_raw(model, &w, &u), &f, None)?;
        if !config.fixed_probe {
            w = ls_probe(model, &z, &u, config.ls_reg_probe);
        }
        u = ls_sample(model, &z, &w, config.ls_reg_sample);
        let exit = forward_raw(model, &w, &u);
        let obj = metric_value_slice(&metric, &exit, &f)?;
        tracker.record_exit(obj, &w, &u, &exit)?;
        let change = relative_change(&u, &u_prev).max(relative_change(&w, &w_prev));
        if stop(config.tol, change) {
            tracker.event(format!("stopped on relative change {change:.3e}"));
            break;
        }
    }
    tracker.finish(w, u)
}

/// Proximal step of the metric; penalized metrics run the projected
/// gradient loop from `x0` (default `|v|`).
fn z_prox(
    metric: &Metric,
    config: &SolverConfig,
    v: &[C64],
    f: &[f64],
    x0: Option<&[f64]>,
) -> Result<Vec<C64>> {
    if metric.kind.is_penalized() {
        prox_penalized_slice(
            metric,
            config.beta,
            v,
            f,
            config.prox_steps,
            config.prox_delta(),
            x0,
        )
    } else {
        prox_slice(metric, config.beta, v, f)
    }
}

/// Iterate of the proximal ADMM.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub w: Vec<C64>,
    pub u: Vec<C64>,
    pub z: Vec<C64>,
    pub lambda: Vec<C64>,
    /// proximal weights, diagonal in the basis that diagonalizes the normal
    /// operator in `w`
    pub m1: Vec<f64>,
    /// same for `u`
    pub m2: Vec<f64>,
    /// lower bound imposed on the blended denominators
    pub floor: f64,
}

/// Smallest admissible blended denominator.
const DENOMINATOR_MIN: f64 = 1e-12;

impl AdmmState {
    pub fn start(model: &Model, w: Vec<C64>, u: Vec<C64>, beta: f64) -> Self {
        let z = forward_raw(model, &w, &u);
        let lambda = vec![C64::new(0.0, 0.0); z.len()];
        Self {
            m1: vec![0.0; w.len()],
            m2: vec![0.0; u.len()],
            w,
            u,
            z,
            lambda,
            floor: 1e-3 * beta,
        }
    }

    /// `Re<z - A, Lambda> + beta/2 ||z - A||^2 + G(z)`
    pub fn lagrangian(&self, model: &Model, metric: &Metric, f: &[f64], beta: f64) -> Result<f64> {
        let exit = forward_raw(model, &self.w, &self.u);
        let d = sub(&self.z, &exit);
        Ok(metric_value_slice(metric, &self.z, f)?
            + real_inner(&d, &self.lambda)
            + 0.5 * beta * norm_sqr(&d))
    }

    /// `argmin beta/2 ||zhat - A x||^2 + alpha/2 ||x - x_prev||_M^2` in the
    /// eigenbasis of `A^*A`; refreshes `m` and returns the smallest
    /// denominator.
    fn prox_solve(
        nd: &NormalDiag,
        rhs_adj: &[C64],
        prev: &[C64],
        m: &mut [f64],
        alpha: f64,
        beta: f64,
        floor: f64,
    ) -> (Vec<C64>, f64) {
        let d = nd.diag();
        for (mi, di) in m.iter_mut().zip(d) {
            *mi = (floor - beta * di).max(0.0) / alpha;
        }
        let mut num = nd.to_basis(rhs_adj);
        let prev_b = nd.to_basis(prev);
        let mut min_den = f64::INFINITY;
        for (((nv, pv), di), mi) in num.iter_mut().zip(&prev_b).zip(d).zip(m.iter()) {
            let den = beta * di + alpha * mi;
            min_den = min_den.min(den);
            *nv = (beta * *nv + alpha * mi * pv) / den;
        }
        (nd.from_basis(&num), min_den)
    }

    /// Steps 1-4; returns the log messages raised by floor adjustments.
    pub(crate) fn step(
        &mut self,
        model: &Model,
        metric: &Metric,
        f: &[f64],
        config: &SolverConfig,
        bounds: (Option<f64>, Option<f64>),
    ) -> Result<Vec<String>> {
        let beta = config.beta;
        let mut notes = Vec::new();
        let zhat: Vec<C64> = self
            .z
            .iter()
            .zip(&self.lambda)
            .map(|(z, l)| z + l / beta)
            .collect();
        if !config.fixed_probe {
            let nd = normal_diag_wrt_w(model, &self.u);
            let adj = adjoint_w_raw(model, &self.u, &zhat);
            let w = loop {
                let (w, min_den) =
                    Self::prox_solve(&nd, &adj, &self.w, &mut self.m1, config.alpha1, beta, self.floor);
                if min_den > DENOMINATOR_MIN {
                    break w;
                }
                self.floor *= 10.0;
                notes.push(format!("raised proximal floor to {:.3e} (probe)", self.floor));
            };
            self.w = clip(w, bounds.0);
        }
        let nd = normal_diag_wrt_u(model, &self.w);
        let adj = adjoint_u_raw(model, &self.w, &zhat);
        let u = loop {
            let (u, min_den) =
                Self::prox_solve(&nd, &adj, &self.u, &mut self.m2, config.alpha2, beta, self.floor);
            if min_den > DENOMINATOR_MIN {
                break u;
            }
            self.floor *= 10.0;
            notes.push(format!("raised proximal floor to {:.3e} (sample)", self.floor));
        };
        self.u = clip(u, bounds.1);

        let exit = forward_raw(model, &self.w, &self.u);
        let zplus: Vec<C64> = exit
            .iter()
            .zip(&self.lambda)
            .map(|(a, l)| a - l / beta)
            .collect();
        let x0: Vec<f64> = self.z.iter().map(|v| v.norm()).collect();
        self.z = z_prox(metric, config, &zplus, f, Some(&x0))?;
        for ((l, z), a) in self.lambda.iter_mut().zip(&self.z).zip(&exit) {
            *l += beta * (z - a);
        }
        Ok(notes)
    }
}

pub fn run_admm(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let model = &problem.model;
    let metric = config.metric_or(MetricKind::Agm)?;
    let mut tracker = Tracker::new(problem, Algorithm::Admm);
    let f = squared(tracker.sqrt_f());
    let bounds = (probe_bound(problem, config), config.amp_bound_sample);
    let (w0, u0) = problem.initial(config.seed);
    let mut state = AdmmState::start(model, clip(w0, bounds.0), clip(u0, bounds.1), config.beta);
    for _ in 0..config.max_iter {
        let (w_prev, u_prev) = (state.w.clone(), state.u.clone());
        for note in state.step(model, &metric, &f, config, bounds)? {
            tracker.event(note);
        }
        let obj = state.lagrangian(model, &metric, &f, config.beta)?;
        tracker.record(obj, &state.w, &state.u)?;
        let change = relative_change(&state.u, &u_prev).max(relative_change(&state.w, &w_prev));
        if stop(config.tol, change) {
            tracker.event(format!("stopped on relative change {change:.3e}"));
            break;
        }
    }
    tracker.finish(state.w, state.u)
}

/// Inner ADMM for `min M(|z|^2, f)` over the range of a linear map, given
/// its least-squares projector `fit`. Returns the final `z`.
fn constrained_admm(
    metric: &Metric,
    config: &SolverConfig,
    f: &[f64],
    z0: Vec<C64>,
    fit: impl Fn(&[C64]) -> Vec<C64>,
) -> Result<Vec<C64>> {
    let beta = config.beta;
    let mut zbar = z0.clone();
    let mut z = z0;
    let mut lambda = vec![C64::new(0.0, 0.0); z.len()];
    for _ in 0..config.admm_variant_inner {
        let v: Vec<C64> = zbar.iter().zip(&lambda).map(|(b, l)| b - l / beta).collect();
        let x0: Vec<f64> = z.iter().map(|v| v.norm()).collect();
        z = z_prox(metric, config, &v, f, Some(&x0))?;
        let target: Vec<C64> = z.iter().zip(&lambda).map(|(a, l)| a + l / beta).collect();
        zbar = fit(&target);
        for ((l, a), b) in lambda.iter_mut().zip(&z).zip(&zbar) {
            *l += beta * (a - b);
        }
    }
    Ok(z)
}

pub fn run_admm_variant(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let model = &problem.model;
    let metric = config.metric_or(MetricKind::Agm)?;
    let mut tracker = Tracker::new(problem, Algorithm::AdmmVariant);
    let f = squared(tracker.sqrt_f());
    let (mut w, mut u) = problem.initial(config.seed);
    let (rw, ru) = (config.ls_reg_probe, config.ls_reg_sample);
    for _ in 0..config.max_iter {
        let (w_prev, u_prev) = (w.clone(), u.clone());
        // sample half: z constrained to {A(w, u') : u'}
        let z_half = constrained_admm(&metric, config, &f, forward_raw(model, &w, &u), |t| {
            forward_raw(model, &w, &ls_sample(model, t, &w, ru))
        })?;
        u = ls_sample(model, &z_half, &w, ru);
        if !config.fixed_probe {
            let z = constrained_admm(&metric, config, &f, forward_raw(model, &w, &u), |t| {
                forward_raw(model, &ls_probe(model, t, &u, rw), &u)
            })?;
            w = ls_probe(model, &z, &u, rw);
        }
        let exit = forward_raw(model, &w, &u);
        let obj = metric_value_slice(&metric, &exit, &f)?;
        tracker.record_exit(obj, &w, &u, &exit)?;
        let change = relative_change(&u, &u_prev).max(relative_change(&w, &w_prev));
        if stop(config.tol, change) {
            tracker.event(format!("stopped on relative change {change:.3e}"));
            break;
        }
    }
    tracker.finish(w, u)
}
