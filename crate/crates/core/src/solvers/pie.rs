//! Stochastic single-frame engines ePIE and rPIE.
//!
//! Fourier ptychography runs the same updates on the spectra `Fw`, `Fu`,
//! with the roles of the forward and inverse DFT swapped.

use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;

use super::projection::amplitude_misfit;
use super::{relative_change, stop, Algorithm, Problem, Tracker};
use crate::config::{SolverConfig, SolverReport};
use crate::dft::Dft;
use crate::domain::{synth, Model, ScanGeometry};
use crate::error::{BprError, Result};
use crate::forward::forward_raw;
use crate::vecops::{sign, ZERO};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum PieRule {
    /// step weights `d1` (sample) and `d2` (probe)
    Epie { d1: f64, d2: f64 },
    /// blend between the max-norm and pointwise denominators
    Rpie { delta: f64 },
}

pub(crate) struct PieEngine<'a> {
    geometry: &'a ScanGeometry,
    fourier: bool,
    frame_dft: Dft,
    image_dft: Dft,
    sqrt_f: &'a [f64],
    pub(crate) w: Vec<C64>,
    pub(crate) u: Vec<C64>,
    rule: PieRule,
    fixed_probe: bool,
}

impl<'a> PieEngine<'a> {
    pub(crate) fn new(
        model: &'a Model,
        sqrt_f: &'a [f64],
        w: &[C64],
        u: &[C64],
        rule: PieRule,
        fixed_probe: bool,
    ) -> Result<Self> {
        let (geometry, fourier) = match model {
            Model::Ptycho { geometry } => (geometry, false),
            Model::FourierPtycho { geometry } => (geometry, true),
            _ => {
                return Err(BprError::Unsupported(
                    "PIE engines handle ptychography and Fourier ptychography only".into(),
                ))
            }
        };
        let frame_dft = Dft::Square(geometry.frame_side());
        let image_dft = Dft::Square(geometry.image_side());
        let (w, u) = if fourier {
            (frame_dft.forward_vec(w), image_dft.forward_vec(u))
        } else {
            (w.to_vec(), u.to_vec())
        };
        Ok(Self {
            geometry,
            fourier,
            frame_dft,
            image_dft,
            sqrt_f,
            w,
            u,
            rule,
            fixed_probe,
        })
    }

    /// Current factors in the spatial domain.
    pub(crate) fn factors(&self) -> (Vec<C64>, Vec<C64>) {
        if self.fourier {
            (
                self.frame_dft.inverse_vec(&self.w),
                self.image_dft.inverse_vec(&self.u),
            )
        } else {
            (self.w.clone(), self.u.clone())
        }
    }

    fn propagate(&self, x: &mut [C64]) {
        if self.fourier {
            self.frame_dft.inverse(x)
        } else {
            self.frame_dft.forward(x)
        }
    }

    fn back_propagate(&self, x: &mut [C64]) {
        if self.fourier {
            self.frame_dft.forward(x)
        } else {
            self.frame_dft.inverse(x)
        }
    }

    /// Updates with frame `j`; probe and sample move in parallel.
    pub(crate) fn step(&mut self, j: usize) -> Result<()> {
        let fl = self.geometry.frame_len();
        let mut patch = vec![ZERO; fl];
        self.geometry.extract_raw(&self.u, j, &mut patch);
        let mut psi: Vec<C64> = self.w.iter().zip(&patch).map(|(a, b)| a * b).collect();
        self.propagate(&mut psi);
        let target = &self.sqrt_f[j * fl..(j + 1) * fl];
        // residual psi - P1(psi), back in the object domain
        let mut diff: Vec<C64> = psi
            .iter()
            .zip(target)
            .map(|(z, s)| z - s * sign(*z))
            .collect();
        self.back_propagate(&mut diff);

        let patch_max = patch.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        let w_max = self.w.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        if patch_max == 0.0 || w_max == 0.0 {
            return Err(BprError::Numerical(format!(
                "PIE denominator vanished on frame {j}"
            )));
        }
        let (probe_step, sample_step): (Vec<f64>, Vec<f64>) = match self.rule {
            PieRule::Epie { d1, d2 } => (vec![d2 / patch_max; fl], vec![d1 / w_max; fl]),
            PieRule::Rpie { delta } => (
                patch
                    .iter()
                    .map(|p| 1.0 / (delta * patch_max + (1.0 - delta) * p.norm_sqr()))
                    .collect(),
                self.w
                    .iter()
                    .map(|p| 1.0 / (delta * w_max + (1.0 - delta) * p.norm_sqr()))
                    .collect(),
            ),
        };
        let du: Vec<C64> = self
            .w
            .iter()
            .zip(&diff)
            .zip(&sample_step)
            .map(|((a, d), s)| -s * a.conj() * d)
            .collect();
        if !self.fixed_probe {
            for (((wv, p), d), s) in self.w.iter_mut().zip(&patch).zip(&diff).zip(&probe_step) {
                *wv -= s * p.conj() * d;
            }
        }
        self.geometry.embed_add_raw(&du, j, &mut self.u);
        Ok(())
    }
}

fn run_pie(
    problem: &Problem,
    config: &SolverConfig,
    algorithm: Algorithm,
    rule: PieRule,
) -> Result<SolverReport> {
    config.validate()?;
    let model = &problem.model;
    let mut tracker = Tracker::new(problem, algorithm);
    let sqrt_f = tracker.sqrt_f().to_vec();
    let (w0, u0) = problem.initial(config.seed);
    let mut engine = PieEngine::new(model, &sqrt_f, &w0, &u0, rule, config.fixed_probe)?;
    let mut rng = synth::rng(config.seed.wrapping_add(0x5eed));
    let mut order: Vec<usize> = (0..model.frame_count()).collect();
    let mut vel_w = vec![ZERO; engine.w.len()];
    let mut vel_u = vec![ZERO; engine.u.len()];
    for _ in 0..config.max_iter {
        let (w_start, u_start) = (engine.w.clone(), engine.u.clone());
        order.shuffle(&mut rng);
        for &j in &order {
            engine.step(j)?;
        }
        if config.momentum > 0.0 {
            apply_momentum(&mut engine.w, &w_start, &mut vel_w, config.momentum);
            apply_momentum(&mut engine.u, &u_start, &mut vel_u, config.momentum);
        }
        let change = relative_change(&engine.u, &u_start);
        let (w, u) = engine.factors();
        let exit = forward_raw(model, &w, &u);
        tracker.record_exit(amplitude_misfit(&exit, &sqrt_f), &w, &u, &exit)?;
        if stop(config.tol, change) {
            tracker.event(format!("stopped on relative change {change:.3e}"));
            break;
        }
    }
    let (w, u) = engine.factors();
    tracker.finish(w, u)
}

/// `v <- eta v + (x - x_start)`, `x <- x_start + v`.
fn apply_momentum(x: &mut [C64], start: &[C64], vel: &mut [C64], eta: f64) {
    for ((xv, s), v) in x.iter_mut().zip(start).zip(vel.iter_mut()) {
        *v = eta * *v + (*xv - s);
        *xv = s + *v;
    }
}

pub fn run_epie(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    let rule = PieRule::Epie {
        d1: config.d1,
        d2: config.d2,
    };
    run_pie(problem, config, Algorithm::Epie, rule)
}

pub fn run_rpie(problem: &Problem, config: &SolverConfig) -> Result<SolverReport> {
    let delta = config.delta.unwrap_or(0.1);
    run_pie(problem, config, Algorithm::Rpie, PieRule::Rpie { delta })
}
