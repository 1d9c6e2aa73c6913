//! Seeded generators for test objects and initial guesses.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{ComplexImage, Probe};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// i.i.d. standard complex Gaussian entries (unit variance overall).
pub fn complex_gaussian(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re * s, im * s)
        })
        .collect()
}

/// Sample with moduli in `[0.5, 1]` and phases in `[-pi/2, pi/2]`, both drawn
/// pixelwise and lightly smoothed by a 3x3 box filter.
pub fn random_sample(side: usize, seed: u64) -> ComplexImage {
    let mut rng = rng(seed);
    let amp: Vec<f64> = (0..side * side).map(|_| rng.random::<f64>()).collect();
    let phs: Vec<f64> = (0..side * side).map(|_| rng.random::<f64>()).collect();
    let amp = box3(&amp, side);
    let phs = box3(&phs, side);
    let (amin, amax) = min_max(&amp);
    let (pmin, pmax) = min_max(&phs);
    ComplexImage::from_fn(side, |r, c| {
        let i = r * side + c;
        let a = 0.5 + 0.5 * unit(amp[i], amin, amax);
        let p = PI * (unit(phs[i], pmin, pmax) - 0.5);
        C64::from_polar(a, p)
    })
}

/// Gaussian-apodized probe with a random quadratic (defocus-like) phase plus a
/// small random linear tilt.
pub fn random_probe(side: usize, seed: u64) -> Probe {
    let mut rng = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let sigma = side as f64 / 3.0;
    let curv = rng.random_range(0.5..1.5) * PI / (side * side) as f64;
    let tilt_r = rng.random_range(-0.2..0.2);
    let tilt_c = rng.random_range(-0.2..0.2);
    let mid = (side as f64 - 1.0) / 2.0;
    let img = ComplexImage::from_fn(side, |r, c| {
        let (dr, dc) = (r as f64 - mid, c as f64 - mid);
        let rho2 = dr * dr + dc * dc;
        let amp = (-rho2 / (2.0 * sigma * sigma)).exp();
        C64::from_polar(amp, curv * rho2 + tilt_r * dr + tilt_c * dc)
    });
    Probe::from(img)
}

/// Disk-supported probe with i.i.d. uniform random phase, the default initial
/// guess. The disk radius is half the side.
pub fn random_phase_disk(side: usize, seed: u64) -> Probe {
    let mut rng = rng(seed);
    let mid = (side as f64 - 1.0) / 2.0;
    let radius = side as f64 / 2.0;
    let img = ComplexImage::from_fn(side, |r, c| {
        let (dr, dc) = (r as f64 - mid, c as f64 - mid);
        let phase = rng.random_range(-PI..PI);
        if dr * dr + dc * dc <= radius * radius {
            C64::from_polar(1.0, phase)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Probe::from(img)
}

fn box3(x: &[f64], side: usize) -> Vec<f64> {
    let s = side as i64;
    let mut out = vec![0.0; x.len()];
    for r in 0..s {
        for c in 0..s {
            let mut acc = 0.0;
            let mut n = 0.0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr >= 0 && rr < s && cc >= 0 && cc < s {
                        acc += x[(rr * s + cc) as usize];
                        n += 1.0;
                    }
                }
            }
            out[(r * s + c) as usize] = acc / n;
        }
    }
    out
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

fn unit(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}
