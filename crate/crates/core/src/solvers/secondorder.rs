//! Nonlinear least squares: residuals, Jacobians, Gauss-Newton and
//! Levenberg-Marquardt per block, and joint NLCG with a polynomial line
//! search.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{relative_change, stop, Algorithm, Problem, Tracker};
use crate::config::{DampingKind, DampingRule, SolverConfig, SolverReport};
use crate::domain::Model;
use crate::error::{shape, BprError, Result};
use crate::forward::{
    adjoint_u_raw, adjoint_w_raw, forward_raw, normal_diag_wrt_u, normal_diag_wrt_w, NormalDiag,
};
use crate::metrics::{metric_gradient_slice, metric_value_slice, Metric, MetricKind};
use crate::vecops::{norm, norm_sqr, real_inner, sign, ZERO};

/// Which factor varies; the other is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linearization {
    /// `u -> A(w, u)`
    Sample,
    /// `w -> A(w, u)`
    Probe,
}

fn require_nls(metric: &Metric) -> Result<()> {
    match metric.kind {
        MetricKind::Agm | MetricKind::Igm => Ok(()),
        k => Err(BprError::Unsupported(format!(
            "least-squares residual is defined for agm and igm, not {k:?}"
        ))),
    }
}

/// `|z| - sqrt(f)` (AGM) or `|z|^2 - f` (IGM).
pub fn residual(metric: &Metric, z: &[C64], f: &[f64]) -> Result<Vec<f64>> {
    require_nls(metric)?;
    if z.len() != f.len() {
        return Err(shape(format!("{} exit entries vs {} measurements", z.len(), f.len())));
    }
    Ok(match metric.kind {
        MetricKind::Agm => z.iter().zip(f).map(|(v, b)| v.norm() - b.sqrt()).collect(),
        _ => z.iter().zip(f).map(|(v, b)| v.norm_sqr() - b).collect(),
    })
}

/// Pointwise factor `c` with `J v = Re(conj(c) A v)`: `sign(z)` for AGM,
/// `2z` for IGM, zero where the AGM residual is not differentiable.
fn jacobian_weights(metric: &Metric, z: &[C64]) -> Vec<C64> {
    match metric.kind {
        MetricKind::Agm => z
            .iter()
            .map(|v| if v.norm() < 1e-12 { ZERO } else { sign(*v) })
            .collect(),
        _ => z.iter().map(|v| 2.0 * v).collect(),
    }
}

fn check_factors(model: &Model, w: &[C64], u: &[C64]) -> Result<()> {
    if w.len() != model.probe_len() || u.len() != model.image_len() {
        return Err(shape("probe or sample does not match the model"));
    }
    Ok(())
}

fn lin_forward(model: &Model, lin: Linearization, w: &[C64], u: &[C64], v: &[C64]) -> Vec<C64> {
    match lin {
        Linearization::Sample => forward_raw(model, w, v),
        Linearization::Probe => forward_raw(model, v, u),
    }
}

fn lin_adjoint(model: &Model, lin: Linearization, w: &[C64], u: &[C64], z: &[C64]) -> Vec<C64> {
    match lin {
        Linearization::Sample => adjoint_u_raw(model, w, z),
        Linearization::Probe => adjoint_w_raw(model, u, z),
    }
}

fn apply_weighted(c: &[C64], av: &[C64]) -> Vec<f64> {
    c.iter().zip(av).map(|(c, a)| (c.conj() * a).re).collect()
}

/// `J v` at `(w, u)` for the residual of `metric`.
pub fn jacobian_apply(
    metric: &Metric,
    model: &Model,
    lin: Linearization,
    w: &[C64],
    u: &[C64],
    v: &[C64],
) -> Result<Vec<f64>> {
    require_nls(metric)?;
    check_factors(model, w, u)?;
    let expected = match lin {
        Linearization::Sample => u.len(),
        Linearization::Probe => w.len(),
    };
    if v.len() != expected {
        return Err(shape(format!("direction has {} entries, expected {expected}", v.len())));
    }
    let c = jacobian_weights(metric, &forward_raw(model, w, u));
    Ok(apply_weighted(&c, &lin_forward(model, lin, w, u, v)))
}

/// `J^* r`, adjoint for the real inner product `Re<., .>`.
pub fn jacobian_adjoint_apply(
    metric: &Metric,
    model: &Model,
    lin: Linearization,
    w: &[C64],
    u: &[C64],
    r: &[f64],
) -> Result<Vec<C64>> {
    require_nls(metric)?;
    check_factors(model, w, u)?;
    if r.len() != model.measurement_len() {
        return Err(shape(format!("residual has {} entries", r.len())));
    }
    let c = jacobian_weights(metric, &forward_raw(model, w, u));
    let z: Vec<C64> = c.iter().zip(r).map(|(c, r)| c * *r).collect();
    Ok(lin_adjoint(model, lin, w, u, &z))
}

/// Matrix-free pieces of one block linearization.
struct Block<'a> {
    model: &'a Model,
    lin: Linearization,
    w: &'a [C64],
    u: &'a [C64],
    c: Vec<C64>,
}

impl Block<'_> {
    fn jtj(&self, v: &[C64]) -> Vec<C64> {
        let jv = apply_weighted(&self.c, &lin_forward(self.model, self.lin, self.w, self.u, v));
        let z: Vec<C64> = self.c.iter().zip(&jv).map(|(c, r)| c * *r).collect();
        lin_adjoint(self.model, self.lin, self.w, self.u, &z)
    }

    /// Approximate diagonal of `J^*J` in the pixel basis: the Fourier
    /// weights of each frame are replaced by their mean.
    fn approx_diag(&self) -> Vec<f64> {
        let weights: Vec<f64> = self.c.iter().map(|c| c.norm_sqr()).collect();
        if let Model::Ptycho { geometry: g } = self.model {
            let fl = g.frame_len();
            let means: Vec<f64> = weights.chunks(fl).map(|c| c.iter().sum::<f64>() / fl as f64).collect();
            return match self.lin {
                Linearization::Sample => {
                    let p: Vec<f64> = self.w.iter().map(|v| v.norm_sqr()).collect();
                    let mut acc = vec![0.0; g.image_len()];
                    for (j, m) in means.iter().enumerate() {
                        let scaled: Vec<f64> = p.iter().map(|v| v * m).collect();
                        g.embed_add_real(&scaled, j, &mut acc);
                    }
                    acc
                }
                Linearization::Probe => {
                    let mut acc = vec![0.0; fl];
                    let mut patch = vec![ZERO; fl];
                    for (j, m) in means.iter().enumerate() {
                        g.extract_raw(self.u, j, &mut patch);
                        acc.iter_mut().zip(&patch).for_each(|(a, v)| *a += m * v.norm_sqr());
                    }
                    acc
                }
            };
        }
        let cbar = weights.iter().sum::<f64>() / weights.len() as f64;
        let nd = match self.lin {
            Linearization::Sample => normal_diag_wrt_u(self.model, self.w),
            Linearization::Probe => normal_diag_wrt_w(self.model, self.u),
        };
        match &nd {
            NormalDiag::Spatial(d) => d.iter().map(|v| cbar * v).collect(),
            NormalDiag::Fourier(_, d) => {
                let mean = d.iter().sum::<f64>() / d.len() as f64;
                vec![cbar * mean; d.len()]
            }
        }
    }
}

/// Outcome of the inner linear solve.
struct CgOutcome {
    x: Vec<C64>,
    breakdown: bool,
}

/// Conjugate gradients for the real-symmetric positive operator `op`,
/// preconditioned by the positive diagonal `precond`.
fn conjugate_gradient(
    op: impl Fn(&[C64]) -> Vec<C64>,
    precond: &[f64],
    b: &[C64],
    iters: usize,
    tol: f64,
) -> CgOutcome {
    let mut x = vec![ZERO; b.len()];
    let mut r = b.to_vec();
    let apply_m = |r: &[C64]| -> Vec<C64> { r.iter().zip(precond).map(|(v, d)| v / d).collect() };
    let mut zv = apply_m(&r);
    let mut p = zv.clone();
    let mut rz = real_inner(&r, &zv);
    let stop_at = tol * tol * norm_sqr(&r);
    for _ in 0..iters {
        if norm_sqr(&r) <= stop_at || rz == 0.0 {
            break;
        }
        let ap = op(&p);
        let pap = real_inner(&p, &ap);
        if !(pap > 0.0 && pap.is_finite()) {
            return CgOutcome { x, breakdown: true };
        }
        let a = rz / pap;
        for ((xi, pi), (ri, api)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ap)) {
            *xi += a * pi;
            *ri -= a * api;
        }
        zv = apply_m(&r);
        let rz_new = real_inner(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&zv) {
            *pi = zi + beta * *pi;
        }
    }
    CgOutcome { x, breakdown: false }
}

/// Damping of one GN/LM step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping {
    Gauss,
    Levenberg(DampingRule),
}

const GN_FLOOR: f64 = 1e-12;
const MAX_REJECTIONS: usize = 8;

/// Result of one damped step on a single block.
#[derive(Debug, Clone)]
pub struct LmStep {
    pub x: Vec<C64>,
    pub objective: f64,
    pub mu: f64,
    pub accepted: bool,
    pub notes: Vec<String>,
}

/// One GN or LM step on the block selected by `lin`; steps that raise the
/// objective are retried with ten times the damping.
pub fn lm_step(
    metric: &Metric,
    model: &Model,
    lin: Linearization,
    w: &[C64],
    u: &[C64],
    f: &[f64],
    damping: Damping,
    cg_iters: usize,
    cg_tol: f64,
) -> Result<LmStep> {
    require_nls(metric)?;
    check_factors(model, w, u)?;
    let z = forward_raw(model, w, u);
    let r = residual(metric, &z, f)?;
    let q = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    let block = Block { model, lin, w, u, c: jacobian_weights(metric, &z) };
    let zr: Vec<C64> = block.c.iter().zip(&r).map(|(c, r)| c * *r).collect();
    let g = lin_adjoint(model, lin, w, u, &zr);
    let x0 = match lin {
        Linearization::Sample => u,
        Linearization::Probe => w,
    };
    let mut notes = Vec::new();
    if norm_sqr(&g) == 0.0 {
        return Ok(LmStep { x: x0.to_vec(), objective: q, mu: 0.0, accepted: true, notes });
    }
    let diag = block.approx_diag();
    // spatial-basis damping diagonal, scaled by `mu`
    let (mut mu, shape_diag): (f64, Vec<f64>) = match damping {
        Damping::Gauss => (GN_FLOOR, vec![1.0; x0.len()]),
        Damping::Levenberg(rule) => match rule.kind {
            DampingKind::Marquardt => (rule.mu0, diag.iter().map(|v| v.max(GN_FLOOR)).collect()),
            DampingKind::FanYuan => (q.powf(rule.nu / 2.0), vec![1.0; x0.len()]),
            DampingKind::Thresholded => {
                let t = if q >= rule.c0 * norm_sqr(x0) { rule.tau } else { 1.0 };
                (t * q.powf(rule.nu / 2.0), vec![1.0; x0.len()])
            }
        },
    };
    mu = mu.max(GN_FLOOR);
    let rhs: Vec<C64> = g.iter().map(|v| -v).collect();
    for attempt in 0..=MAX_REJECTIONS {
        let op = |v: &[C64]| -> Vec<C64> {
            let mut out = block.jtj(v);
            for ((o, vi), d) in out.iter_mut().zip(v).zip(&shape_diag) {
                *o += mu * d * vi;
            }
            out
        };
        let precond: Vec<f64> = diag
            .iter()
            .zip(&shape_diag)
            .map(|(a, d)| (a + mu * d).max(GN_FLOOR))
            .collect();
        let sol = conjugate_gradient(&op, &precond, &rhs, cg_iters, cg_tol);
        let s = if sol.breakdown {
            notes.push("inner solver broke down, using a gradient step".into());
            let jg = block.jtj(&g);
            let a = norm_sqr(&g) / real_inner(&g, &jg).max(f64::MIN_POSITIVE);
            g.iter().map(|v| -a * v).collect()
        } else {
            sol.x
        };
        let x: Vec<C64> = x0.iter().zip(&s).map(|(a, b)| a + b).collect();
        let z_new = match lin {
            Linearization::Sample => forward_raw(model, w, &x),
            Linearization::Probe => forward_raw(model, &x, u),
        };
        let q_new = metric_value_slice(metric, &z_new, f)?;
        if q_new.is_finite() && q_new <= q {
            return Ok(LmStep { x, objective: q_new, mu, accepted: true, notes });
        }
        if attempt < MAX_REJECTIONS {
            mu *= 10.0;
            notes.push(format!("rejected step, damping raised to {mu:.3e}"));
        }
    }
    Ok(LmStep { x: x0.to_vec(), objective: q, mu, accepted: false, notes })
}

fn run_second_order(
    problem: &Problem,
    config: &SolverConfig,
    algorithm: Algorithm,
    damping: Damping,
) -> Result<SolverReport> {
    config.validate()?;
    let model = &problem.model;
    let metric = config.metric_or(MetricKind::Igm)?;
    require_nls(&metric)?;
    let mut tracker = Tracker::new(problem, algorithm);
    let f: Vec<f64> = tracker.sqrt_f().iter().map(|s| s * s).collect();
    let (mut w, mut u) = problem.initial(config.seed);
    let rounds = config.inner_steps.max(1);
    for _ in 0..config.max_iter {
        let (w_prev, u_prev) = (w.clone(), u.clone());
        let mut q = 0.0;
        for _ in 0..rounds {
            let s = lm_step(
                &metric, model, Linearization::Sample, &w, &u, &f, damping, config.cg_iters,
                config.cg_tol,
            )?;
            s.notes.into_iter().for_each(|n| tracker.event(n));
            u = s.x;
            q = s.objective;
        }
        if !config.fixed_probe {
            for _ in 0..rounds {
                let s = lm_step(
                    &metric, model, Linearization::Probe, &w, &u, &f, damping, config.cg_iters,
                    config.cg_tol,
                )?;
                s.notes.into_iter().for_each(|n| tracker.event(n));
                w = s.x;
                q = s.objective;
            }
        }
        tracker.record(q, &w, &u)?;
        let change = relative_change(&u, &u_prev).max(relative_change(&w, &w_prev));
        if stop(config.tol, change) {
            tracker.event(format!("stopped on relative change {change:.3e}"));
            break;
        }
    }
    tracker.finish(w, u)
}

pub fn run_gn(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    run_second_order(problem, config, Algorithm::Gn, Damping::Gauss)
}

pub fn run_lm(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    run_second_order(problem, config, Algorithm::Lm, Damping::Levenberg(config.damping))
}

/// Polak-Ribiere direction update, restarting when the weight is negative.
#[derive(Debug, Clone, Default)]
pub(crate) struct PolakRibiere {
    prev: Option<(Vec<C64>, Vec<C64>)>,
}

impl PolakRibiere {
    /// New search direction from the current gradient.
    pub(crate) fn direction(&mut self, g: &[C64]) -> Vec<C64> {
        let d: Vec<C64> = match &self.prev {
            Some((g_prev, d_prev)) => {
                let gg = norm_sqr(g_prev);
                let b = if gg > 0.0 {
                    (norm_sqr(g) - real_inner(g, g_prev)) / gg
                } else {
                    0.0
                };
                let b = b.max(0.0);
                g.iter().zip(d_prev).map(|(gi, di)| -gi + b * di).collect()
            }
            None => g.iter().map(|v| -v).collect(),
        };
        self.prev = Some((g.to_vec(), d.clone()));
        d
    }
}

const LS_SAMPLES: usize = 17;
const LS_DEGREE: usize = 8;
const LS_RETRIES: usize = 5;

/// Least-squares coefficients `c_0..c_8` of the objective in `t = alpha /
/// alpha_max` from samples on `[0, 1]`.
fn fit_polynomial(ts: &[f64], vals: &[f64]) -> Option<Vec<f64>> {
    let n = LS_DEGREE + 1;
    let a = DMatrix::from_fn(ts.len(), n, |i, j| ts[i].powi(j as i32));
    let b = DVector::from_column_slice(vals);
    let c = a.svd(true, true).solve(&b, 1e-14).ok()?;
    Some(c.iter().copied().collect())
}

fn poly_derivs(c: &[f64], t: f64) -> (f64, f64) {
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (k, ck) in c.iter().enumerate().skip(1) {
        d1 += k as f64 * ck * t.powi(k as i32 - 1);
        if k >= 2 {
            d2 += (k * (k - 1)) as f64 * ck * t.powi(k as i32 - 2);
        }
    }
    (d1, d2)
}

/// Step length along `z(alpha) = z0 + alpha z1 + alpha^2 z2`.
fn polynomial_line_search(
    metric: &Metric,
    f: &[f64],
    z: [&[C64]; 3],
    alpha_max: f64,
) -> Result<Option<(f64, f64)>> {
    let eval = |a: f64| -> Result<f64> {
        let za: Vec<C64> = z[0]
            .iter()
            .zip(z[1])
            .zip(z[2])
            .map(|((p, q), r)| p + a * q + a * a * r)
            .collect();
        metric_value_slice(metric, &za, f)
    };
    let mut amax = alpha_max;
    for _ in 0..=LS_RETRIES {
        let ts: Vec<f64> = (0..LS_SAMPLES).map(|i| i as f64 / (LS_SAMPLES - 1) as f64).collect();
        let vals = ts.iter().map(|t| eval(t * amax)).collect::<Result<Vec<f64>>>()?;
        if vals.iter().any(|v| !v.is_finite()) {
            amax *= 0.5;
            continue;
        }
        let (i_best, _) = vals
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        let mut t = ts[i_best];
        if let Some(c) = fit_polynomial(&ts, &vals) {
            for _ in 0..50 {
                let (d1, d2) = poly_derivs(&c, t);
                if !(d2 > 0.0) {
                    break;
                }
                let step = d1 / d2;
                t = (t - step).clamp(0.0, 1.0);
                if step.abs() < 1e-14 {
                    break;
                }
            }
        }
        let newton = eval(t * amax)?;
        let (t, v) = if newton.is_finite() && newton <= vals[i_best] {
            (t, newton)
        } else {
            (ts[i_best], vals[i_best])
        };
        return Ok(Some((t * amax, v)));
    }
    Ok(None)
}

pub fn run_nlcg(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let model = &problem.model;
    let metric = config.metric_or(MetricKind::Igm)?;
    let mut tracker = Tracker::new(problem, Algorithm::Nlcg);
    let f: Vec<f64> = tracker.sqrt_f().iter().map(|s| s * s).collect();
    let (mut w, mut u) = problem.initial(config.seed);
    let nw = w.len();
    let mut pr = PolakRibiere::default();
    let mut alpha_prev: Option<f64> = None;
    for _ in 0..config.max_iter {
        let z0 = forward_raw(model, &w, &u);
        let gz = metric_gradient_slice(&metric, &z0, &f)?;
        let mut g = if config.fixed_probe {
            vec![ZERO; nw]
        } else {
            adjoint_w_raw(model, &u, &gz)
        };
        g.extend(adjoint_u_raw(model, &w, &gz));
        if norm_sqr(&g) == 0.0 {
            tracker.event("zero gradient");
            break;
        }
        let d = pr.direction(&g);
        let (dw, du) = d.split_at(nw);
        let z1: Vec<C64> = forward_raw(model, dw, &u)
            .iter()
            .zip(forward_raw(model, &w, du))
            .map(|(a, b)| a + b)
            .collect();
        let z2 = forward_raw(model, dw, du);
        let xnorm = (norm_sqr(&w) + norm_sqr(&u)).sqrt();
        let amax = match alpha_prev {
            Some(a) => 4.0 * a,
            None => config.line_search_alpha_max * xnorm.max(1.0) / norm(&d),
        };
        let Some((alpha, value)) = polynomial_line_search(&metric, &f, [&z0, &z1, &z2], amax)? else {
            tracker.event("line search found no finite values");
            break;
        };
        if alpha == 0.0 {
            // restart along the gradient with a fresh bracket
            pr = PolakRibiere::default();
            alpha_prev = None;
            tracker.event("line search stalled, restarting");
            tracker.record(value, &w, &u)?;
            continue;
        }
        alpha_prev = Some(alpha);
        let (w_prev, u_prev) = (w.clone(), u.clone());
        w.iter_mut().zip(dw).for_each(|(a, b)| *a += alpha * b);
        u.iter_mut().zip(du).for_each(|(a, b)| *a += alpha * b);
        tracker.record(value, &w, &u)?;
        let change = relative_change(&u, &u_prev).max(relative_change(&w, &w_prev));
        if stop(config.tol, change) {
            tracker.event(format!("stopped on relative change {change:.3e}"));
            break;
        }
    }
    tracker.finish(w, u)
}
