//! Unitary discrete Fourier transforms on lexicographically stored data.
//!
//! Both directions carry a `1/sqrt(N)` factor, so `forward` and `inverse` are
//! exact adjoints of each other and preserve the Euclidean norm.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let fwd = matches!(direction, FftDirection::Forward);
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, fwd))
            .or_insert_with(|| planner.plan_fft(len, direction))
            .clone()
    })
}

/// Transform layout: a flat line of `n` samples or a `side x side` raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dft {
    Line(usize),
    Square(usize),
}

impl Dft {
    pub fn len(&self) -> usize {
        match *self {
            Dft::Line(n) => n,
            Dft::Square(s) => s * s,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.apply(data, FftDirection::Forward);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.apply(data, FftDirection::Inverse);
    }

    pub fn forward_vec(&self, data: &[C64]) -> Vec<C64> {
        let mut out = data.to_vec();
        self.forward(&mut out);
        out
    }

    pub fn inverse_vec(&self, data: &[C64]) -> Vec<C64> {
        let mut out = data.to_vec();
        self.inverse(&mut out);
        out
    }

    fn apply(&self, data: &mut [C64], direction: FftDirection) {
        assert_eq!(data.len(), self.len(), "dft length mismatch");
        match *self {
            Dft::Line(n) => {
                plan(n, direction).process(data);
                scale(data, 1.0 / (n as f64).sqrt());
            }
            Dft::Square(s) => {
                let fft = plan(s, direction);
                // rows
                fft.process(data);
                // columns via transpose
                let mut t = transpose(data, s);
                fft.process(&mut t);
                let back = transpose(&t, s);
                data.copy_from_slice(&back);
                scale(data, 1.0 / s as f64);
            }
        }
    }
}

fn scale(data: &mut [C64], k: f64) {
    for x in data.iter_mut() {
        *x *= k;
    }
}

fn transpose(data: &[C64], s: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); s * s];
    for r in 0..s {
        for c in 0..s {
            out[c * s + r] = data[r * s + c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft2(x: &[C64], s: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); s * s];
        for k1 in 0..s {
            for k2 in 0..s {
                let mut acc = C64::new(0.0, 0.0);
                for n1 in 0..s {
                    for n2 in 0..s {
                        let ang = -2.0 * std::f64::consts::PI * ((k1 * n1 + k2 * n2) as f64)
                            / s as f64;
                        acc += x[n1 * s + n2] * C64::from_polar(1.0, ang);
                    }
                }
                out[k1 * s + k2] = acc / s as f64;
            }
        }
        out
    }

    #[test]
    fn square_matches_naive_sum() {
        let s = 5;
        let x: Vec<C64> = (0..s * s)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let fast = Dft::Square(s).forward_vec(&x);
        let slow = naive_dft2(&x, s);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_line_goes_to_dc() {
        let x = vec![C64::new(1.0, 0.0); 4];
        let y = Dft::Line(4).forward_vec(&x);
        assert!((y[0] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert!(y[1..].iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn unitary_round_trip() {
        for dft in [Dft::Line(12), Dft::Square(6)] {
            let x: Vec<C64> = (0..dft.len())
                .map(|i| C64::new(i as f64, -(i as f64).sqrt()))
                .collect();
            let y = dft.forward_vec(&x);
            let nx: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            let ny: f64 = y.iter().map(|v| v.norm_sqr()).sum();
            assert!((nx - ny).abs() <= 1e-12 * nx);
            let z = dft.inverse_vec(&y);
            for (a, b) in x.iter().zip(&z) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
