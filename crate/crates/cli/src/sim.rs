//! Simulation configs and the on-disk layout of simulated data sets.
//!
//! A bilinear data set directory holds `manifest.json`, `model.json`,
//! `data.bin` and the ground truth `probe.bin`, `sample.bin`. A lifted one
//! holds `manifest.json`, `bhat.bin`, `chat.bin`, `fbar.bin`, `h.bin` and
//! `m.bin`.

use std::fs;
use std::path::Path;

use bpr_core::domain::{synth, ComplexImage, MeasurementStack, Model, Probe, ScanGeometry};
use bpr_core::forward::{forward, intensity, simulate_poisson};
use bpr_core::io::Array;
use bpr_core::lifted::{random_instance, LiftedInstance};
use bpr_core::solvers::{Estimate, Problem};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::{config_err, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Ptycho {
        image_side: usize,
        probe_side: usize,
        step: usize,
        #[serde(default)]
        jitter: usize,
    },
    FourierPtycho {
        image_side: usize,
        probe_side: usize,
        step: usize,
        #[serde(default)]
        jitter: usize,
    },
    Frog {
        side: usize,
        frames: usize,
        shift_step: usize,
    },
    Convolution {
        side: usize,
        #[serde(default)]
        fourier: bool,
    },
    Lifted {
        n: usize,
        k1: usize,
        k2: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// Photon scale of the Poisson model; absent means noiseless.
    #[serde(default)]
    pub poisson_scale: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Ptycho { image_side: 32, probe_side: 8, step: 2, jitter: 1 },
            poisson_scale: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Bilinear,
    Lifted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub kind: DatasetKind,
    pub seed: u64,
    pub config: SimConfig,
}

pub enum Dataset {
    Bilinear {
        model: Model,
        data: MeasurementStack,
        truth: Option<Estimate>,
    },
    Lifted {
        instance: LiftedInstance,
        truth: Option<(Vec<C64>, Vec<C64>)>,
    },
}

impl Dataset {
    pub fn kind(&self) -> DatasetKind {
        match self {
            Dataset::Bilinear { .. } => DatasetKind::Bilinear,
            Dataset::Lifted { .. } => DatasetKind::Lifted,
        }
    }

    pub fn problem(&self) -> CliResult<Problem> {
        match self {
            Dataset::Bilinear { model, data, truth } => {
                let mut p = Problem::new(model.clone(), data.clone())?;
                if let Some(t) = truth {
                    p = p.with_truth(t.clone())?;
                }
                Ok(p)
            }
            Dataset::Lifted { .. } => Err(config_err("a lifted data set only supports the `lifted` algorithm")),
        }
    }
}

fn build_model(s: &Scenario, seed: u64) -> CliResult<Model> {
    Ok(match *s {
        Scenario::Ptycho { image_side, probe_side, step, jitter } => {
            Model::ptycho(ScanGeometry::jittered_grid(image_side, probe_side, step, jitter, seed)?)
        }
        Scenario::FourierPtycho { image_side, probe_side, step, jitter } => {
            Model::fourier_ptycho(ScanGeometry::jittered_grid(image_side, probe_side, step, jitter, seed)?)
        }
        Scenario::Frog { side, frames, shift_step } => Model::frog(side, frames, shift_step)?,
        Scenario::Convolution { side, fourier } => Model::convolution(side, fourier)?,
        Scenario::Lifted { .. } => unreachable!("lifted scenarios carry no bilinear model"),
    })
}

/// Draws geometry from `seed`, probe from `seed + 1`, sample from `seed + 2`
/// and Poisson noise from `seed + 3`.
pub fn simulate(config: &SimConfig, seed: u64) -> CliResult<Dataset> {
    if let Scenario::Lifted { n, k1, k2 } = config.scenario {
        if config.poisson_scale.is_some() {
            return Err(config_err("lifted scenarios are noiseless"));
        }
        let (instance, h, m) = random_instance(n, k1, k2, seed)?;
        return Ok(Dataset::Lifted { instance, truth: Some((h, m)) });
    }
    let model = build_model(&config.scenario, seed)?;
    let w = synth::random_probe(model.probe_side(), seed.wrapping_add(1));
    let u = synth::random_sample(model.image_side(), seed.wrapping_add(2));
    let mut data = intensity(&forward(&model, &w, &u)?);
    if let Some(scale) = config.poisson_scale {
        data = simulate_poisson(&data, scale, seed.wrapping_add(3))?;
    }
    Ok(Dataset::Bilinear { model, data, truth: Some(Estimate { probe: w, sample: u }) })
}

fn matrix_array(x: &DMatrix<C64>) -> CliResult<Array> {
    let rows: Vec<C64> = (0..x.nrows()).flat_map(|i| (0..x.ncols()).map(move |j| (i, j))).map(|(i, j)| x[(i, j)]).collect();
    Ok(Array::complex(vec![x.nrows(), x.ncols()], rows)?)
}

fn array_matrix(a: Array) -> CliResult<DMatrix<C64>> {
    let (shape, v) = a.into_complex()?;
    match shape.as_slice() {
        [r, c] => Ok(DMatrix::from_row_slice(*r, *c, &v)),
        _ => Err(config_err(format!("expected a matrix, got shape {shape:?}"))),
    }
}

fn vector_array(v: &[C64]) -> CliResult<Array> {
    Ok(Array::complex(vec![v.len()], v.to_vec())?)
}

fn array_vector(a: Array) -> CliResult<Vec<C64>> {
    Ok(a.into_complex()?.1)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let s = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&s).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn save(a: &Array, path: &Path) -> CliResult<()> {
    a.save(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> CliResult<Array> {
    Array::load(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

pub fn write_dataset(dir: &Path, set: &Dataset, manifest: &Manifest) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| config_err(format!("{}: {e}", dir.display())))?;
    write_json(&dir.join("manifest.json"), manifest)?;
    match set {
        Dataset::Bilinear { model, data, truth } => {
            write_json(&dir.join("model.json"), model)?;
            save(&Array::from(data), &dir.join("data.bin"))?;
            if let Some(t) = truth {
                save(&Array::from(&t.probe), &dir.join("probe.bin"))?;
                save(&Array::from(&t.sample), &dir.join("sample.bin"))?;
            }
        }
        Dataset::Lifted { instance, truth } => {
            save(&matrix_array(&instance.bhat)?, &dir.join("bhat.bin"))?;
            save(&matrix_array(&instance.chat)?, &dir.join("chat.bin"))?;
            save(&Array::real(vec![instance.n()], instance.fbar.clone())?, &dir.join("fbar.bin"))?;
            if let Some((h, m)) = truth {
                save(&vector_array(h)?, &dir.join("h.bin"))?;
                save(&vector_array(m)?, &dir.join("m.bin"))?;
            }
        }
    }
    Ok(())
}

pub fn read_dataset(dir: &Path) -> CliResult<Dataset> {
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    match manifest.kind {
        DatasetKind::Bilinear => {
            let model: Model = read_json(&dir.join("model.json"))?;
            let data = MeasurementStack::try_from(load(&dir.join("data.bin"))?)?;
            let (p, s) = (dir.join("probe.bin"), dir.join("sample.bin"));
            let truth = if p.exists() && s.exists() {
                Some(Estimate {
                    probe: Probe::try_from(load(&p)?)?,
                    sample: ComplexImage::try_from(load(&s)?)?,
                })
            } else {
                None
            };
            Ok(Dataset::Bilinear { model, data, truth })
        }
        DatasetKind::Lifted => {
            let bhat = array_matrix(load(&dir.join("bhat.bin"))?)?;
            let chat = array_matrix(load(&dir.join("chat.bin"))?)?;
            let fbar = load(&dir.join("fbar.bin"))?.into_real()?.1;
            let instance = LiftedInstance::new(bhat, chat, fbar)?;
            let (h, m) = (dir.join("h.bin"), dir.join("m.bin"));
            let truth = if h.exists() && m.exists() {
                Some((array_vector(load(&h)?)?, array_vector(load(&m)?)?))
            } else {
                None
            };
            Ok(Dataset::Lifted { instance, truth })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_intensities_are_exact() {
        let set = simulate(&SimConfig::default(), 4).unwrap();
        let Dataset::Bilinear { model, data, truth } = set else { panic!() };
        let t = truth.unwrap();
        let f = intensity(&forward(&model, &t.probe, &t.sample).unwrap());
        assert_eq!(f, data);
    }

    #[test]
    fn lifted_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimConfig { scenario: Scenario::Lifted { n: 12, k1: 2, k2: 3 }, poisson_scale: None };
        let set = simulate(&cfg, 1).unwrap();
        let man = Manifest { kind: set.kind(), seed: 1, config: cfg };
        write_dataset(dir.path(), &set, &man).unwrap();
        let (Dataset::Lifted { instance: a, truth: ta }, Dataset::Lifted { instance: b, truth: tb }) =
            (set, read_dataset(dir.path()).unwrap())
        else {
            panic!()
        };
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn unknown_config_keys_fail() {
        let bad = r#"{"scenario": {"case": "ptycho", "image_side": 8, "probe_side": 4, "step": 2, "jiter": 1}}"#;
        assert!(serde_json::from_str::<SimConfig>(bad).is_err());
    }

    #[test]
    fn poisson_scale_is_applied() {
        let cfg = SimConfig { poisson_scale: Some(1e6), ..Default::default() };
        let Dataset::Bilinear { data, truth, model } = simulate(&cfg, 2).unwrap() else { panic!() };
        let t = truth.unwrap();
        let f = intensity(&forward(&model, &t.probe, &t.sample).unwrap());
        let dev: f64 = data.as_slice().iter().zip(f.as_slice()).map(|(a, b)| (a - b).abs()).sum();
        assert!(dev / f.total() <= 1e-2);
    }
}
