//! Data-fidelity metrics, their exit-wave gradients, proximal maps and the
//! constraint projections used by the solvers.
//!
//! All proximal maps act entrywise: the output keeps the phase of the input
//! and only the modulus is optimized, so every map reduces to a scalar
//! problem in `rho = |x|`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dft::Dft;
use crate::domain::{ExitWaveStack, MeasurementStack, Probe};
use crate::error::{invalid, shape, Result};
use crate::vecops::sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// amplitude, Gaussian noise
    Agm,
    /// intensity, Poisson noise
    Ipm,
    /// intensity, Gaussian noise
    Igm,
    /// smooth truncated amplitude metric
    Stagm,
    /// `Agm` evaluated at `(|z|^2 + eps, f + eps)`
    Pagm,
    /// `Ipm` evaluated at `(|z|^2 + eps, f + eps)`
    Pipm,
}

impl MetricKind {
    pub fn is_penalized(self) -> bool {
        matches!(self, MetricKind::Pagm | MetricKind::Pipm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    pub epsilon: f64,
}

/// Inner iteration count of the penalized proximal loop.
pub const DEFAULT_PENALIZED_STEPS: usize = 50;

impl Metric {
    pub fn new(kind: MetricKind, epsilon: f64) -> Result<Self> {
        let m = Self { kind, epsilon };
        m.validate()?;
        Ok(m)
    }

    pub fn agm() -> Self {
        Self { kind: MetricKind::Agm, epsilon: 0.0 }
    }

    pub fn ipm() -> Self {
        Self { kind: MetricKind::Ipm, epsilon: 0.0 }
    }

    pub fn igm() -> Self {
        Self { kind: MetricKind::Igm, epsilon: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.epsilon;
        match self.kind {
            MetricKind::Stagm if !(e > 0.0 && e < 1.0) => {
                Err(invalid("epsilon", "truncation must lie in (0, 1)"))
            }
            MetricKind::Pagm | MetricKind::Pipm if !(e > 0.0 && e.is_finite()) => {
                Err(invalid("epsilon", "penalization must be positive"))
            }
            _ if !(e >= 0.0 && e.is_finite()) => Err(invalid("epsilon", "must be nonnegative")),
            _ => Ok(()),
        }
    }

    /// Contribution of one entry with `|z| = rho`.
    pub fn entry_value(&self, rho: f64, f: f64) -> f64 {
        let e = self.epsilon;
        match self.kind {
            MetricKind::Agm => 0.5 * (rho - f.sqrt()).powi(2),
            MetricKind::Ipm => {
                let g = rho * rho;
                if f == 0.0 {
                    0.5 * g
                } else if g == 0.0 {
                    f64::INFINITY
                } else {
                    0.5 * (g - f * g.ln())
                }
            }
            MetricKind::Igm => 0.5 * (rho * rho - f).powi(2),
            MetricKind::Stagm => {
                let sb = f.sqrt();
                if rho < e * sb {
                    0.5 * (1.0 - e) * (f - rho * rho / e)
                } else {
                    0.5 * (rho - sb).powi(2)
                }
            }
            MetricKind::Pagm => 0.5 * ((rho * rho + e).sqrt() - (f + e).sqrt()).powi(2),
            MetricKind::Pipm => {
                let g = rho * rho + e;
                0.5 * (g - (f + e) * g.ln())
            }
        }
    }

    /// Gradient of the entry contribution with respect to the complex entry
    /// (`d/dRe + i d/dIm`).
    pub fn entry_gradient(&self, z: C64, f: f64) -> C64 {
        let e = self.epsilon;
        let r = z.norm();
        match self.kind {
            MetricKind::Agm => z - f.sqrt() * sign(z),
            MetricKind::Ipm => {
                if f == 0.0 {
                    z
                } else {
                    z - (f / r) * sign(z)
                }
            }
            MetricKind::Igm => 2.0 * (r * r - f) * z,
            MetricKind::Stagm => {
                if r < e * f.sqrt() {
                    -(1.0 - e) / e * z
                } else {
                    z - f.sqrt() * sign(z)
                }
            }
            MetricKind::Pagm => (1.0 - ((f + e) / (r * r + e)).sqrt()) * z,
            MetricKind::Pipm => (1.0 - (f + e) / (r * r + e)) * z,
        }
    }

    /// Scalar proximal problem `argmin_{rho >= 0} m(rho) + beta/2 (rho - a)^2`
    /// for the closed-form metrics.
    pub fn prox_modulus(&self, beta: f64, a: f64, f: f64) -> f64 {
        let e = self.epsilon;
        match self.kind {
            MetricKind::Agm => (f.sqrt() + beta * a) / (1.0 + beta),
            MetricKind::Ipm => {
                let ba = beta * a;
                (ba + (ba * ba + 4.0 * (1.0 + beta) * f).sqrt()) / (2.0 * (1.0 + beta))
            }
            MetricKind::Igm => igm_modulus(beta, a, f),
            MetricKind::Stagm => {
                let sf = f.sqrt();
                let kink = (1.0 - e) / e;
                if a < (e - (1.0 - e) / beta) * sf {
                    (beta * a / (beta - kink)).max(0.0)
                } else {
                    (sf + beta * a) / (1.0 + beta)
                }
            }
            MetricKind::Pagm | MetricKind::Pipm => penalized_modulus(
                *self,
                beta,
                a,
                f,
                a,
                DEFAULT_PENALIZED_STEPS,
                1.0 / (1.0 + beta),
            ),
        }
    }

    fn check_beta(beta: f64) -> Result<()> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Real root selection for `rho^3 + (beta/2 - f) rho - beta a / 2 = 0`.
///
/// With `D >= 0` the Cardano root is used. Otherwise all three real roots come
/// from the trigonometric form `2 sqrt((f - beta/2)/3) cos((arccos(theta) -
/// 2 pi k)/3)`; the grouping `arccos(theta)/3` inside the cosine is the one
/// that reproduces the roots. Among nonnegative roots the one with the
/// smallest objective wins.
pub fn igm_modulus(beta: f64, a: f64, f: f64) -> f64 {
    let p = beta / 2.0 - f;
    let d = p.powi(3) / 27.0 + beta * beta * a * a / 16.0;
    let obj = |rho: f64| 0.5 * (rho * rho - f).powi(2) + 0.5 * beta * (rho - a).powi(2);
    if d >= 0.0 {
        let sd = d.sqrt();
        let q = beta * a / 4.0;
        ((q + sd).cbrt() + (q - sd).cbrt()).max(0.0)
    } else {
        let m = (f - beta / 2.0) / 3.0;
        let amp = 2.0 * m.sqrt();
        let theta = (beta * a / (4.0 * (m.powi(3)).sqrt())).clamp(-1.0, 1.0);
        let phi = theta.acos();
        (0..3)
            .map(|k| amp * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos())
            .filter(|r| *r >= 0.0)
            .min_by(|x, y| obj(*x).total_cmp(&obj(*y)))
            .unwrap_or(0.0)
    }
}

fn penalized_modulus(
    metric: Metric,
    beta: f64,
    a: f64,
    f: f64,
    x0: f64,
    steps: usize,
    delta: f64,
) -> f64 {
    let e = metric.epsilon;
    let mut x = x0;
    for _ in 0..steps {
        let weight = match metric.kind {
            MetricKind::Pipm => (f + e) / (x * x + e),
            _ => ((f + e) / (x * x + e)).sqrt(),
        };
        let grad = (1.0 + beta - weight) * x - beta * a;
        x = (x - delta * grad).max(0.0);
    }
    x
}

fn check_pair(len_z: usize, f: &[f64]) -> Result<()> {
    if len_z != f.len() {
        return Err(shape(format!(
            "{len_z} exit-wave samples vs {} measurements",
            f.len()
        )));
    }
    Ok(())
}

pub fn metric_value_slice(metric: &Metric, z: &[C64], f: &[f64]) -> Result<f64> {
    metric.validate()?;
    check_pair(z.len(), f)?;
    Ok(z.iter()
        .zip(f)
        .map(|(v, &b)| metric.entry_value(v.norm(), b))
        .sum())
}

pub fn metric_value(metric: &Metric, z: &ExitWaveStack, f: &MeasurementStack) -> Result<f64> {
    metric_value_slice(metric, z.as_slice(), f.as_slice())
}

pub fn metric_gradient_slice(metric: &Metric, z: &[C64], f: &[f64]) -> Result<Vec<C64>> {
    metric.validate()?;
    check_pair(z.len(), f)?;
    Ok(z.iter()
        .zip(f)
        .map(|(v, &b)| metric.entry_gradient(*v, b))
        .collect())
}

/// The bracketed residual of the chain rule; callers apply `A^*`.
pub fn metric_gradient(
    metric: &Metric,
    z: &ExitWaveStack,
    f: &MeasurementStack,
) -> Result<ExitWaveStack> {
    ExitWaveStack::new(z.frame_len(), metric_gradient_slice(metric, z.as_slice(), f.as_slice())?)
}

pub fn prox_slice(metric: &Metric, beta: f64, v: &[C64], f: &[f64]) -> Result<Vec<C64>> {
    Metric::check_beta(beta)?;
    metric.validate()?;
    check_pair(v.len(), f)?;
    Ok(v.iter()
        .zip(f)
        .map(|(z, &b)| metric.prox_modulus(beta, z.norm(), b) * sign(*z))
        .collect())
}

/// `argmin_x M(|x|^2, f) + beta/2 ||x - v||^2`. Penalized metrics run the
/// projected-gradient inner loop with its default settings.
pub fn prox(
    metric: &Metric,
    beta: f64,
    v: &ExitWaveStack,
    f: &MeasurementStack,
) -> Result<ExitWaveStack> {
    ExitWaveStack::new(v.frame_len(), prox_slice(metric, beta, v.as_slice(), f.as_slice())?)
}

/// Projected gradient on the modulus for the penalized metrics, started from
/// `x0` (defaults to `|v|`).
pub fn prox_penalized_slice(
    metric: &Metric,
    beta: f64,
    v: &[C64],
    f: &[f64],
    steps: usize,
    delta: f64,
    x0: Option<&[f64]>,
) -> Result<Vec<C64>> {
    Metric::check_beta(beta)?;
    metric.validate()?;
    if !metric.kind.is_penalized() {
        return Err(invalid("metric", "penalized proximal loop needs pAGM or pIPM"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", "step size must be positive"));
    }
    check_pair(v.len(), f)?;
    if let Some(x0) = x0 {
        check_pair(x0.len(), f)?;
    }
    Ok(v.iter()
        .zip(f)
        .enumerate()
        .map(|(i, (z, &b))| {
            let a = z.norm();
            let start = x0.map_or(a, |x| x[i]);
            penalized_modulus(*metric, beta, a, b, start, steps, delta) * sign(*z)
        })
        .collect())
}

pub fn prox_penalized(
    metric: &Metric,
    beta: f64,
    v: &ExitWaveStack,
    f: &MeasurementStack,
    steps: usize,
    delta: f64,
) -> Result<ExitWaveStack> {
    ExitWaveStack::new(
        v.frame_len(),
        prox_penalized_slice(metric, beta, v.as_slice(), f.as_slice(), steps, delta, None)?,
    )
}

/// `sqrt(f) . sign(psi)`
pub fn project_modulus_slice(psi: &[C64], f: &[f64]) -> Vec<C64> {
    psi.iter().zip(f).map(|(z, b)| b.sqrt() * sign(*z)).collect()
}

pub fn project_modulus(psi: &ExitWaveStack, f: &MeasurementStack) -> Result<ExitWaveStack> {
    check_pair(psi.len(), f.as_slice())?;
    ExitWaveStack::new(psi.frame_len(), project_modulus_slice(psi.as_slice(), f.as_slice()))
}

/// `min(C, |x|) . sign(x)`
pub fn project_amplitude(x: &[C64], bound: f64) -> Result<Vec<C64>> {
    if !(bound > 0.0) {
        return Err(invalid("bound", "must be positive"));
    }
    Ok(project_amplitude_unchecked(x, bound))
}

pub(crate) fn project_amplitude_unchecked(x: &[C64], bound: f64) -> Vec<C64> {
    x.iter()
        .map(|z| {
            let r = z.norm();
            if r > bound {
                z * (bound / r)
            } else {
                *z
            }
        })
        .collect()
}

/// Zeroes the probe spectrum outside its support mask.
pub fn project_fourier_support(w: &Probe) -> Result<Probe> {
    let mask = w
        .fourier_support
        .as_ref()
        .ok_or_else(|| invalid("fourier_support", "probe carries no support mask"))?;
    let dft = Dft::Square(w.side());
    let mut spec = dft.forward_vec(w.as_slice());
    for (s, keep) in spec.iter_mut().zip(mask) {
        if !keep {
            *s = C64::new(0.0, 0.0);
        }
    }
    dft.inverse(&mut spec);
    Ok(w.with_data(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::synth;
    use rand::Rng;

    const KINDS: [MetricKind; 4] = [
        MetricKind::Agm,
        MetricKind::Ipm,
        MetricKind::Igm,
        MetricKind::Stagm,
    ];

    fn metric(kind: MetricKind) -> Metric {
        let epsilon = match kind {
            MetricKind::Stagm => 0.3,
            MetricKind::Pagm | MetricKind::Pipm => 1e-3,
            _ => 0.0,
        };
        Metric::new(kind, epsilon).unwrap()
    }

    /// brute-force minimizer on `[0, hi]`
    fn grid_min(m: &Metric, beta: f64, a: f64, f: f64) -> f64 {
        let hi = 2.0 * a.max(f.sqrt()).max(1e-3);
        (0..=10_000)
            .map(|i| hi * i as f64 / 10_000.0)
            .map(|r| m.entry_value(r, f) + 0.5 * beta * (r - a).powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn agm_zero_at_data() {
        let f = vec![1.0, 4.0, 0.25];
        let z: Vec<C64> = f.iter().map(|b: &f64| C64::from_polar(b.sqrt(), 0.7)).collect();
        assert!(metric_value_slice(&Metric::agm(), &z, &f).unwrap().abs() < 1e-15);
        let g = metric_gradient_slice(&Metric::agm(), &z, &f).unwrap();
        assert!(g.iter().all(|v| v.norm() < 1e-15));
        let p = prox_slice(&Metric::agm(), 0.7, &z, &f).unwrap();
        for (a, b) in p.iter().zip(&z) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn stagm_matches_agm_outside_truncation() {
        let m = metric(MetricKind::Stagm);
        for (rho, f) in [(1.0, 1.0), (0.5, 1.0), (3.0, 0.1)] {
            assert!(rho >= m.epsilon * f64::sqrt(f));
            assert_eq!(m.entry_value(rho, f), Metric::agm().entry_value(rho, f));
        }
        // large |y| falls in the AGM branch of the prox
        let beta = 2.0;
        let (a, f) = (10.0, 4.0);
        assert_eq!(m.prox_modulus(beta, a, f), (2.0 + beta * a) / (1.0 + beta));
    }

    #[test]
    fn igm_value_matches_direct_sum() {
        let mut rng = synth::rng(4);
        let z = synth::complex_gaussian(&mut rng, 50);
        let f: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..2.0)).collect();
        let direct: f64 = z
            .iter()
            .zip(&f)
            .map(|(v, b)| {
                let d = v.re * v.re + v.im * v.im - b;
                d * d
            })
            .sum::<f64>()
            / 2.0;
        let got = metric_value_slice(&Metric::igm(), &z, &f).unwrap();
        assert!((got - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn ipm_log_domain() {
        let v = metric_value_slice(&Metric::ipm(), &[C64::new(0.0, 0.0)], &[1.0]).unwrap();
        assert!(v.is_infinite());
        let v = metric_value_slice(&Metric::ipm(), &[C64::new(0.0, 0.0)], &[0.0]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn igm_gradient_with_zero_data() {
        let z = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.1)];
        let g = metric_gradient_slice(&Metric::igm(), &z, &[0.0, 0.0]).unwrap();
        for (gv, zv) in g.iter().zip(&z) {
            assert!((gv - 2.0 * zv.norm_sqr() * zv).norm() < 1e-14);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = synth::rng(21);
        let h = 1e-6;
        for kind in [
            MetricKind::Agm,
            MetricKind::Ipm,
            MetricKind::Igm,
            MetricKind::Stagm,
            MetricKind::Pagm,
            MetricKind::Pipm,
        ] {
            let m = metric(kind);
            for _ in 0..50 {
                let z = synth::complex_gaussian(&mut rng, 1)[0] * 1.5;
                let f: f64 = rng.random_range(0.05..2.0);
                // stay off the truncation kink
                if kind == MetricKind::Stagm && (z.norm() - m.epsilon * f.sqrt()).abs() < 1e-3 {
                    continue;
                }
                let g = m.entry_gradient(z, f);
                let dre = (m.entry_value((z + h).norm(), f) - m.entry_value((z - h).norm(), f))
                    / (2.0 * h);
                let ih = C64::new(0.0, h);
                let dim = (m.entry_value((z + ih).norm(), f) - m.entry_value((z - ih).norm(), f))
                    / (2.0 * h);
                let fd = C64::new(dre, dim);
                assert!(
                    (fd - g).norm() <= 1e-5 * g.norm().max(1.0),
                    "{kind:?}: fd {fd} vs {g}"
                );
            }
        }
    }

    #[test]
    fn prox_beats_grid_oracle() {
        let mut rng = synth::rng(8);
        for kind in KINDS {
            let m = metric(kind);
            for _ in 0..200 {
                let a: f64 = rng.random_range(0.0..3.0);
                let f: f64 = rng.random_range(0.0..4.0);
                let beta: f64 = 10f64.powf(rng.random_range(-1.5..1.5));
                let rho = m.prox_modulus(beta, a, f);
                let val = m.entry_value(rho, f) + 0.5 * beta * (rho - a).powi(2);
                let oracle = grid_min(&m, beta, a, f);
                assert!(val <= oracle + 1e-8, "{kind:?} beta={beta} a={a} f={f}: {val} > {oracle}");
            }
        }
    }

    #[test]
    fn igm_cardano_and_trig_branches_solve_the_cubic() {
        for (beta, a, f) in [(1.0, 0.3, 0.1), (0.2, 0.3, 2.0), (0.5, 0.0, 3.0), (3.0, 1.0, 0.0)] {
            let rho = igm_modulus(beta, a, f);
            let resid = rho.powi(3) + (beta / 2.0 - f) * rho - beta * a / 2.0;
            assert!(resid.abs() < 1e-10, "residual {resid}");
        }
    }

    #[test]
    fn prox_keeps_phase() {
        let mut rng = synth::rng(3);
        let v = synth::complex_gaussian(&mut rng, 40);
        let f: Vec<f64> = (0..40).map(|_| rng.random_range(0.1..2.0)).collect();
        for kind in KINDS {
            let out = prox_slice(&metric(kind), 1.3, &v, &f).unwrap();
            for (o, i) in out.iter().zip(&v) {
                if o.norm() > 0.0 {
                    assert!((sign(*o) - sign(*i)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn prox_rejects_bad_parameters() {
        let v = [C64::new(1.0, 0.0)];
        assert!(prox_slice(&Metric::agm(), 0.0, &v, &[1.0]).is_err());
        assert!(Metric::new(MetricKind::Stagm, 1.0).is_err());
        assert!(Metric::new(MetricKind::Pagm, 0.0).is_err());
        assert!(prox_penalized_slice(&Metric::agm(), 1.0, &v, &[1.0], 5, 0.1, None).is_err());
    }

    #[test]
    fn penalized_agm_tends_to_closed_form() {
        let mut rng = synth::rng(12);
        let m = Metric::new(MetricKind::Pagm, 1e-10).unwrap();
        let v: Vec<C64> = synth::complex_gaussian(&mut rng, 30)
            .into_iter()
            .map(|z| z + sign(z) * 0.3)
            .collect();
        let f: Vec<f64> = (0..30).map(|_| rng.random_range(0.2..2.0)).collect();
        let beta = 1.0;
        let got = prox_penalized_slice(&m, beta, &v, &f, 200, 0.1, None).unwrap();
        let want = prox_slice(&Metric::agm(), beta, &v, &f).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn penalized_ipm_fixed_point_and_monotone() {
        let m = Metric::new(MetricKind::Pipm, 0.01).unwrap();
        let v = [C64::from_polar(1.3, 0.4)];
        let f = [1.69];
        let out = prox_penalized_slice(&m, 2.0, &v, &f, 50, 0.1, None).unwrap();
        assert!((out[0] - v[0]).norm() < 1e-12);

        let pm = Metric::new(MetricKind::Pagm, 0.05).unwrap();
        for &(a, f, beta) in &[(0.2, 2.0, 0.5), (2.0, 0.1, 1.0), (1.0, 1.0, 3.0)] {
            let obj = |x: f64| pm.entry_value(x, f) + 0.5 * beta * (x - a).powi(2);
            let mut x = a;
            let mut prev = obj(x);
            for _ in 0..100 {
                x = penalized_modulus(pm, beta, a, f, x, 1, 0.05);
                let cur = obj(x);
                assert!(cur <= prev + 1e-14);
                prev = cur;
            }
        }
    }

    #[test]
    fn modulus_projection_properties() {
        let psi = vec![C64::new(0.0, 0.0), C64::new(3.0, 4.0)];
        let f = vec![4.0, 1.0];
        let p = project_modulus_slice(&psi, &f);
        assert_eq!(p[0], C64::new(2.0, 0.0));
        assert!((p[1] - C64::new(0.6, 0.8)).norm() < 1e-15);
        let pp = project_modulus_slice(&p, &f);
        for (a, b) in p.iter().zip(&pp) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn amplitude_projection() {
        let c = 1.5;
        let x = vec![C64::from_polar(1.0, 0.3), C64::from_polar(0.2, -2.0)];
        assert_eq!(project_amplitude(&x, c).unwrap(), x);
        let y = project_amplitude(&[C64::from_polar(2.0 * c, 0.9)], c).unwrap();
        assert!((y[0] - C64::from_polar(c, 0.9)).norm() < 1e-14);
        // minimizer over a grid of feasible candidates
        let mut rng = synth::rng(2);
        for z in synth::complex_gaussian(&mut rng, 20).into_iter().map(|v| v * 3.0) {
            let p = project_amplitude(&[z], 1.0).unwrap()[0];
            let d = (p - z).norm();
            for i in 0..1000 {
                let cand = C64::from_polar(
                    (i % 10) as f64 / 9.0,
                    (i / 10) as f64 / 100.0 * std::f64::consts::TAU,
                );
                assert!(d <= (cand - z).norm() + 1e-12);
            }
        }
        assert!(project_amplitude(&x, 0.0).is_err());
    }

    #[test]
    fn fourier_support_projection() {
        let side = 4;
        let mut rng = synth::rng(6);
        let w = Probe::new(side, synth::complex_gaussian(&mut rng, 16)).unwrap();
        assert!(project_fourier_support(&w).is_err());
        let full = w.clone().with_fourier_support(vec![true; 16]).unwrap();
        let p = project_fourier_support(&full).unwrap();
        for (a, b) in p.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut mask = vec![false; 16];
        mask[5] = true;
        let single = w.clone().with_fourier_support(mask.clone()).unwrap();
        let p = project_fourier_support(&single).unwrap();
        // one Fourier coefficient left: a plane wave of constant modulus
        let m0 = p.as_slice()[0].norm();
        assert!(p.as_slice().iter().all(|v| (v.norm() - m0).abs() < 1e-12));
        let pp = project_fourier_support(&p).unwrap();
        for (a, b) in p.as_slice().iter().zip(pp.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
        let _ = mask;
    }
}
