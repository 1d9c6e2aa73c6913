//! Plain-Rust layer behind the Python functions: flat complex vectors in,
//! flat vectors or JSON out.

use bpr_core::domain::{self, synth, ComplexImage, MeasurementStack, Model, Probe, ScanGeometry};
use bpr_core::forward;
use bpr_core::lifted::{random_instance, solve_lifted};
use bpr_core::metrics::{self, Metric, MetricKind};
use bpr_core::solvers::{run, Algorithm, Estimate, Problem};
use bpr_core::{Result, SolverConfig};
use num_complex::Complex64 as C64;

pub fn ptycho(image_side: usize, probe_side: usize, step: usize, jitter: usize, seed: u64, fourier: bool) -> Result<Model> {
    let g = ScanGeometry::jittered_grid(image_side, probe_side, step, jitter, seed)?;
    Ok(if fourier { Model::fourier_ptycho(g) } else { Model::ptycho(g) })
}

pub fn model_from_json(s: &str) -> Result<Model> {
    serde_json::from_str(s).map_err(|e| bpr_core::BprError::Format(e.to_string()))
}

fn pair(model: &Model, w: Vec<C64>, u: Vec<C64>) -> Result<(Probe, ComplexImage)> {
    Ok((Probe::new(model.probe_side(), w)?, ComplexImage::new(model.image_side(), u)?))
}

fn stack(model: &Model, z: Vec<C64>) -> Result<domain::ExitWaveStack> {
    domain::ExitWaveStack::new(model.frame_len(), z)
}

pub fn forward(model: &Model, w: Vec<C64>, u: Vec<C64>) -> Result<Vec<C64>> {
    let (w, u) = pair(model, w, u)?;
    Ok(forward::forward(model, &w, &u)?.into_vec())
}

pub fn adjoint_u(model: &Model, w: Vec<C64>, z: Vec<C64>) -> Result<Vec<C64>> {
    let w = Probe::new(model.probe_side(), w)?;
    Ok(forward::adjoint_wrt_u(model, &w, &stack(model, z)?)?.into_vec())
}

pub fn adjoint_w(model: &Model, u: Vec<C64>, z: Vec<C64>) -> Result<Vec<C64>> {
    let u = ComplexImage::new(model.image_side(), u)?;
    Ok(forward::adjoint_wrt_w(model, &u, &stack(model, z)?)?.into_vec())
}

pub fn intensity(model: &Model, w: Vec<C64>, u: Vec<C64>) -> Result<Vec<f64>> {
    let (w, u) = pair(model, w, u)?;
    Ok(forward::intensity(&forward::forward(model, &w, &u)?).into_vec())
}

pub fn poisson(f: Vec<f64>, scale: f64, seed: u64) -> Result<Vec<f64>> {
    let n = f.len().max(1);
    let s = MeasurementStack::new(n, f)?;
    Ok(forward::simulate_poisson(&s, scale, seed)?.into_vec())
}

pub fn metric(kind: &str, epsilon: f64) -> Result<Metric> {
    let kind: MetricKind = serde_json::from_value(serde_json::Value::String(kind.into()))
        .map_err(|_| bpr_core::BprError::InvalidParameter { name: "metric", reason: format!("unknown metric `{kind}`") })?;
    Metric::new(kind, epsilon)
}

pub fn prox(kind: &str, epsilon: f64, beta: f64, v: Vec<C64>, f: Vec<f64>) -> Result<Vec<C64>> {
    metrics::prox_slice(&metric(kind, epsilon)?, beta, &v, &f)
}

pub fn random_probe(side: usize, seed: u64) -> Vec<C64> {
    synth::random_probe(side, seed).into_vec()
}

pub fn random_sample(side: usize, seed: u64) -> Vec<C64> {
    synth::random_sample(side, seed).into_vec()
}

fn config_from_json(config: Option<&str>) -> Result<SolverConfig> {
    match config {
        Some(s) => serde_json::from_str(s).map_err(|e| bpr_core::BprError::Format(e.to_string())),
        None => Ok(SolverConfig::default()),
    }
}

/// Runs `algorithm` and returns the report as JSON.
pub fn reconstruct(
    model: &Model,
    data: Vec<f64>,
    algorithm: &str,
    config: Option<&str>,
    truth: Option<(Vec<C64>, Vec<C64>)>,
) -> Result<String> {
    let algorithm: Algorithm = algorithm.parse()?;
    let cfg = config_from_json(config)?;
    let mut p = Problem::new(model.clone(), MeasurementStack::new(model.frame_len(), data)?)?;
    if let Some((w, u)) = truth {
        let (probe, sample) = pair(model, w, u)?;
        p = p.with_truth(Estimate { probe, sample })?;
    }
    let report = run(algorithm, &p, &cfg)?;
    Ok(serde_json::to_string(&report).expect("reports serialize"))
}

/// Random subspace instance solved by the lifted ADMM; returns
/// `(h, m, h_true, m_true, rank_ratios)`.
pub fn lifted_random(
    n: usize,
    k1: usize,
    k2: usize,
    seed: u64,
    config: Option<&str>,
) -> Result<(Vec<C64>, Vec<C64>, Vec<C64>, Vec<C64>, (f64, f64))> {
    let (inst, h, m) = random_instance(n, k1, k2, seed)?;
    let sol = solve_lifted(&inst, &config_from_json(config)?)?;
    let ratios = sol.rank_ratios();
    Ok((sol.h, sol.m, h, m, ratios))
}
