//! Bilinear measurement operators `A(w, u)`, their partial linear maps
//! `A_w`, `A_u`, adjoints, normal operators and noise simulation.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::dft::Dft;
use crate::domain::{cyclic_shift, ComplexImage, ExitWaveStack, MeasurementStack, Model, Probe};
use crate::error::{invalid, shape, Result};
use crate::vecops::ZERO;

fn per_frame(frames: usize, frame_len: usize, f: impl Fn(usize, &mut [C64]) + Sync) -> Vec<C64> {
    let mut out = vec![ZERO; frames * frame_len];
    out.par_chunks_mut(frame_len)
        .enumerate()
        .with_min_len(8)
        .for_each(|(j, chunk)| f(j, chunk));
    out
}

fn mul_in_place(x: &mut [C64], y: &[C64]) {
    for (a, b) in x.iter_mut().zip(y) {
        *a *= b;
    }
}

fn mul_conj_in_place(x: &mut [C64], y: &[C64]) {
    for (a, b) in x.iter_mut().zip(y) {
        *a *= b.conj();
    }
}

/// `a (*) b`, circular 2-D convolution on `side x side` rasters.
pub(crate) fn circ_conv(a: &[C64], b: &[C64], side: usize) -> Vec<C64> {
    let dft = Dft::Square(side);
    let mut fa = dft.forward_vec(a);
    let fb = dft.forward_vec(b);
    mul_in_place(&mut fa, &fb);
    dft.inverse(&mut fa);
    fa.iter_mut().for_each(|v| *v *= side as f64);
    fa
}

/// Adjoint of `x -> a (*) x`, i.e. circular correlation with `a`.
pub(crate) fn circ_corr(a: &[C64], z: &[C64], side: usize) -> Vec<C64> {
    let dft = Dft::Square(side);
    let fa = dft.forward_vec(a);
    let mut fz = dft.forward_vec(z);
    mul_conj_in_place(&mut fz, &fa);
    dft.inverse(&mut fz);
    fz.iter_mut().for_each(|v| *v *= side as f64);
    fz
}

/// `A(w, u)` on raw slices.
pub(crate) fn forward_raw(model: &Model, w: &[C64], u: &[C64]) -> Vec<C64> {
    let fl = model.frame_len();
    let jn = model.frame_count();
    match model {
        Model::Ptycho { geometry: g } => {
            let dft = Dft::Square(g.frame_side());
            per_frame(jn, fl, |j, out| {
                g.extract_raw(u, j, out);
                mul_in_place(out, w);
                dft.forward(out);
            })
        }
        Model::FourierPtycho { geometry: g } => {
            let uh = Dft::Square(g.image_side()).forward_vec(u);
            let dft = Dft::Square(g.frame_side());
            let wh = dft.forward_vec(w);
            per_frame(jn, fl, |j, out| {
                g.extract_raw(&uh, j, out);
                mul_in_place(out, &wh);
                dft.inverse(out);
            })
        }
        Model::Frog { side, .. } => {
            let dft = Dft::Line(side * side);
            per_frame(jn, fl, |j, out| {
                let s = cyclic_shift(u, model.shift_of(j));
                for ((o, a), b) in out.iter_mut().zip(w).zip(&s) {
                    *o = a * b;
                }
                dft.forward(out);
            })
        }
        Model::Convolution { side, fourier } => {
            let mut c = circ_conv(w, u, *side);
            if *fourier {
                Dft::Square(*side).forward(&mut c);
            }
            c
        }
    }
}

/// `A_w^* z`, image-sized.
pub(crate) fn adjoint_u_raw(model: &Model, w: &[C64], z: &[C64]) -> Vec<C64> {
    let fl = model.frame_len();
    let jn = model.frame_count();
    match model {
        Model::Ptycho { geometry: g } => {
            let dft = Dft::Square(g.frame_side());
            let parts = per_frame(jn, fl, |j, out| {
                out.copy_from_slice(&z[j * fl..(j + 1) * fl]);
                dft.inverse(out);
                mul_conj_in_place(out, w);
            });
            let mut img = vec![ZERO; g.image_len()];
            for j in 0..jn {
                g.embed_add_raw(&parts[j * fl..(j + 1) * fl], j, &mut img);
            }
            img
        }
        Model::FourierPtycho { geometry: g } => {
            let dft = Dft::Square(g.frame_side());
            let wh = dft.forward_vec(w);
            let parts = per_frame(jn, fl, |j, out| {
                out.copy_from_slice(&z[j * fl..(j + 1) * fl]);
                dft.forward(out);
                mul_conj_in_place(out, &wh);
            });
            let mut img = vec![ZERO; g.image_len()];
            for j in 0..jn {
                g.embed_add_raw(&parts[j * fl..(j + 1) * fl], j, &mut img);
            }
            Dft::Square(g.image_side()).inverse(&mut img);
            img
        }
        Model::Frog { side, .. } => {
            let dft = Dft::Line(side * side);
            let parts = per_frame(jn, fl, |j, out| {
                out.copy_from_slice(&z[j * fl..(j + 1) * fl]);
                dft.inverse(out);
                mul_conj_in_place(out, w);
            });
            let mut img = vec![ZERO; fl];
            for j in 0..jn {
                let back = cyclic_shift(&parts[j * fl..(j + 1) * fl], -model.shift_of(j));
                img.iter_mut().zip(&back).for_each(|(a, b)| *a += b);
            }
            img
        }
        Model::Convolution { side, fourier } => {
            let y = if *fourier {
                Dft::Square(*side).inverse_vec(z)
            } else {
                z.to_vec()
            };
            circ_corr(w, &y, *side)
        }
    }
}

/// `A_u^* z`, probe-sized.
pub(crate) fn adjoint_w_raw(model: &Model, u: &[C64], z: &[C64]) -> Vec<C64> {
    let fl = model.frame_len();
    let jn = model.frame_count();
    match model {
        Model::Ptycho { geometry: g } => {
            let dft = Dft::Square(g.frame_side());
            let parts = per_frame(jn, fl, |j, out| {
                out.copy_from_slice(&z[j * fl..(j + 1) * fl]);
                dft.inverse(out);
                let mut patch = vec![ZERO; fl];
                g.extract_raw(u, j, &mut patch);
                mul_conj_in_place(out, &patch);
            });
            sum_frames(&parts, fl, jn)
        }
        Model::FourierPtycho { geometry: g } => {
            let uh = Dft::Square(g.image_side()).forward_vec(u);
            let dft = Dft::Square(g.frame_side());
            let parts = per_frame(jn, fl, |j, out| {
                out.copy_from_slice(&z[j * fl..(j + 1) * fl]);
                dft.forward(out);
                let mut patch = vec![ZERO; fl];
                g.extract_raw(&uh, j, &mut patch);
                mul_conj_in_place(out, &patch);
            });
            let mut acc = sum_frames(&parts, fl, jn);
            dft.inverse(&mut acc);
            acc
        }
        Model::Frog { side, .. } => {
            let dft = Dft::Line(side * side);
            let parts = per_frame(jn, fl, |j, out| {
                out.copy_from_slice(&z[j * fl..(j + 1) * fl]);
                dft.inverse(out);
                let s = cyclic_shift(u, model.shift_of(j));
                mul_conj_in_place(out, &s);
            });
            sum_frames(&parts, fl, jn)
        }
        Model::Convolution { side, fourier } => {
            let y = if *fourier {
                Dft::Square(*side).inverse_vec(z)
            } else {
                z.to_vec()
            };
            circ_corr(u, &y, *side)
        }
    }
}

fn sum_frames(parts: &[C64], fl: usize, jn: usize) -> Vec<C64> {
    let mut acc = vec![ZERO; fl];
    for j in 0..jn {
        acc.iter_mut()
            .zip(&parts[j * fl..(j + 1) * fl])
            .for_each(|(a, b)| *a += b);
    }
    acc
}

/// A normal operator `A^*A`, which for every model is diagonal either in
/// the pixel basis or in the Fourier basis.
#[derive(Debug, Clone)]
pub enum NormalDiag {
    Spatial(Vec<f64>),
    Fourier(Dft, Vec<f64>),
}

impl NormalDiag {
    pub fn diag(&self) -> &[f64] {
        match self {
            NormalDiag::Spatial(d) | NormalDiag::Fourier(_, d) => d,
        }
    }

    /// Largest eigenvalue of the operator.
    pub fn max(&self) -> f64 {
        self.diag().iter().copied().fold(0.0, f64::max)
    }

    pub fn to_basis(&self, x: &[C64]) -> Vec<C64> {
        match self {
            NormalDiag::Spatial(_) => x.to_vec(),
            NormalDiag::Fourier(dft, _) => dft.forward_vec(x),
        }
    }

    pub fn from_basis(&self, x: &[C64]) -> Vec<C64> {
        match self {
            NormalDiag::Spatial(_) => x.to_vec(),
            NormalDiag::Fourier(dft, _) => dft.inverse_vec(x),
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = self.to_basis(x);
        y.iter_mut().zip(self.diag()).for_each(|(v, d)| *v *= d);
        self.from_basis(&y)
    }

    /// `(A^*A + alpha I)^{-1} rhs`
    pub fn solve(&self, rhs: &[C64], alpha: f64) -> Vec<C64> {
        let mut y = self.to_basis(rhs);
        y.iter_mut()
            .zip(self.diag())
            .for_each(|(v, d)| *v /= d + alpha);
        self.from_basis(&y)
    }
}

/// `A_w^* A_w` in closed form.
pub fn normal_diag_wrt_u(model: &Model, w: &[C64]) -> NormalDiag {
    match model {
        Model::Ptycho { geometry: g } => {
            let w2: Vec<f64> = w.iter().map(|v| v.norm_sqr()).collect();
            let mut d = vec![0.0; g.image_len()];
            for j in 0..g.frame_count() {
                g.embed_add_real(&w2, j, &mut d);
            }
            NormalDiag::Spatial(d)
        }
        Model::FourierPtycho { geometry: g } => {
            let wh = Dft::Square(g.frame_side()).forward_vec(w);
            let w2: Vec<f64> = wh.iter().map(|v| v.norm_sqr()).collect();
            let mut d = vec![0.0; g.image_len()];
            for j in 0..g.frame_count() {
                g.embed_add_real(&w2, j, &mut d);
            }
            NormalDiag::Fourier(Dft::Square(g.image_side()), d)
        }
        Model::Frog { .. } => {
            let w2: Vec<f64> = w.iter().map(|v| v.norm_sqr()).collect();
            let mut d = vec![0.0; w.len()];
            for j in 0..model.frame_count() {
                let s = cyclic_shift(&w2, -model.shift_of(j));
                d.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
            }
            NormalDiag::Spatial(d)
        }
        Model::Convolution { side, .. } => conv_normal(w, *side),
    }
}

/// `A_u^* A_u` in closed form.
pub fn normal_diag_wrt_w(model: &Model, u: &[C64]) -> NormalDiag {
    match model {
        Model::Ptycho { geometry: g } => {
            let fl = g.frame_len();
            let mut d = vec![0.0; fl];
            let mut patch = vec![ZERO; fl];
            for j in 0..g.frame_count() {
                g.extract_raw(u, j, &mut patch);
                d.iter_mut().zip(&patch).for_each(|(a, b)| *a += b.norm_sqr());
            }
            NormalDiag::Spatial(d)
        }
        Model::FourierPtycho { geometry: g } => {
            let uh = Dft::Square(g.image_side()).forward_vec(u);
            let fl = g.frame_len();
            let mut d = vec![0.0; fl];
            let mut patch = vec![ZERO; fl];
            for j in 0..g.frame_count() {
                g.extract_raw(&uh, j, &mut patch);
                d.iter_mut().zip(&patch).for_each(|(a, b)| *a += b.norm_sqr());
            }
            NormalDiag::Fourier(Dft::Square(g.frame_side()), d)
        }
        Model::Frog { .. } => {
            let mut d = vec![0.0; u.len()];
            for j in 0..model.frame_count() {
                let s = cyclic_shift(u, model.shift_of(j));
                d.iter_mut().zip(&s).for_each(|(a, b)| *a += b.norm_sqr());
            }
            NormalDiag::Spatial(d)
        }
        Model::Convolution { side, .. } => conv_normal(u, *side),
    }
}

fn conv_normal(a: &[C64], side: usize) -> NormalDiag {
    let dft = Dft::Square(side);
    let n = (side * side) as f64;
    let d = dft.forward_vec(a).iter().map(|v| n * v.norm_sqr()).collect();
    NormalDiag::Fourier(dft, d)
}

fn check_sizes(model: &Model, w: usize, u: usize) -> Result<()> {
    if w != model.probe_len() {
        return Err(shape(format!(
            "probe has {w} samples, model expects {}",
            model.probe_len()
        )));
    }
    if u != model.image_len() {
        return Err(shape(format!(
            "sample has {u} samples, model expects {}",
            model.image_len()
        )));
    }
    Ok(())
}

fn check_stack(model: &Model, z: &ExitWaveStack) -> Result<()> {
    if z.frame_len() != model.frame_len() || z.frame_count() != model.frame_count() {
        return Err(shape(format!(
            "stack is {}x{}, model expects {}x{}",
            z.frame_count(),
            z.frame_len(),
            model.frame_count(),
            model.frame_len()
        )));
    }
    Ok(())
}

pub fn forward(model: &Model, w: &Probe, u: &ComplexImage) -> Result<ExitWaveStack> {
    check_sizes(model, w.len(), u.len())?;
    ExitWaveStack::new(model.frame_len(), forward_raw(model, w.as_slice(), u.as_slice()))
}

/// `A_w^* z`
pub fn adjoint_wrt_u(model: &Model, w: &Probe, z: &ExitWaveStack) -> Result<ComplexImage> {
    check_sizes(model, w.len(), model.image_len())?;
    check_stack(model, z)?;
    ComplexImage::new(
        model.image_side(),
        adjoint_u_raw(model, w.as_slice(), z.as_slice()),
    )
}

/// `A_u^* z`
pub fn adjoint_wrt_w(model: &Model, u: &ComplexImage, z: &ExitWaveStack) -> Result<Probe> {
    check_sizes(model, model.probe_len(), u.len())?;
    check_stack(model, z)?;
    Probe::new(
        model.probe_side(),
        adjoint_w_raw(model, u.as_slice(), z.as_slice()),
    )
}

/// `A_w^* A_w u`
pub fn normal_wrt_u(model: &Model, w: &Probe, u: &ComplexImage) -> Result<ComplexImage> {
    check_sizes(model, w.len(), u.len())?;
    ComplexImage::new(
        model.image_side(),
        normal_diag_wrt_u(model, w.as_slice()).apply(u.as_slice()),
    )
}

/// `A_u^* A_u w`
pub fn normal_wrt_w(model: &Model, u: &ComplexImage, w: &Probe) -> Result<Probe> {
    check_sizes(model, w.len(), u.len())?;
    Probe::new(
        model.probe_side(),
        normal_diag_wrt_w(model, u.as_slice()).apply(w.as_slice()),
    )
}

pub fn intensity(z: &ExitWaveStack) -> MeasurementStack {
    MeasurementStack::new(
        z.frame_len(),
        z.as_slice().iter().map(|v| v.norm_sqr()).collect(),
    )
    .expect("squared moduli are nonnegative")
}

/// Entry-wise `Poisson(scale * f) / scale`, reproducible from `seed`.
pub fn simulate_poisson(f: &MeasurementStack, scale: f64, seed: u64) -> Result<MeasurementStack> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("scale", "must be positive and finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(f.len());
    for &v in f.as_slice() {
        let lambda = scale * v;
        let draw = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| invalid("intensities", e.to_string()))?
                .sample(&mut rng)
        } else {
            0.0
        };
        out.push(draw / scale);
    }
    MeasurementStack::new(f.frame_len(), out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::domain::{synth, ScanGeometry};
    use crate::vecops::{inner, norm, norm_sqr};
    use rand::Rng;

    /// One small instance of each measurement case.
    pub(crate) fn all_models() -> Vec<Model> {
        let g = ScanGeometry::jittered_grid(12, 6, 2, 1, 5).unwrap();
        vec![
            Model::ptycho(g.clone()),
            Model::fourier_ptycho(g),
            Model::frog(4, 5, 3).unwrap(),
            Model::convolution(6, false).unwrap(),
            Model::convolution(6, true).unwrap(),
        ]
    }

    fn draw(rng: &mut impl Rng, n: usize) -> Vec<C64> {
        synth::complex_gaussian(rng, n)
    }

    fn close(a: C64, b: C64, scale: f64) -> bool {
        (a - b).norm() <= 1e-10 * scale.max(1e-300)
    }

    #[test]
    fn constant_frame_has_dc_two() {
        let g = ScanGeometry::new(vec![(0, 0)], 2, 2).unwrap();
        let m = Model::ptycho(g);
        let w = Probe::new(2, vec![C64::new(1.0, 0.0); 4]).unwrap();
        let u = ComplexImage::filled(2, C64::new(1.0, 0.0));
        let z = forward(&m, &w, &u).unwrap();
        assert!((z.as_slice()[0] - 2.0).norm() < 1e-14);
        assert!(z.as_slice()[1..].iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn delta_kernel_is_identity() {
        let m = Model::convolution(5, false).unwrap();
        let mut d = vec![ZERO; 25];
        d[0] = C64::new(1.0, 0.0);
        let w = Probe::new(5, d).unwrap();
        let u = synth::random_sample(5, 1);
        let z = forward(&m, &w, &u).unwrap();
        for (a, b) in z.as_slice().iter().zip(u.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn frog_frames_obey_parseval() {
        let m = Model::frog(4, 6, 3).unwrap();
        let mut rng = synth::rng(9);
        let w = draw(&mut rng, 16);
        let u = draw(&mut rng, 16);
        let z = forward_raw(&m, &w, &u);
        for j in 0..6 {
            let s = cyclic_shift(&u, m.shift_of(j));
            let direct: f64 = w.iter().zip(&s).map(|(a, b)| (a * b).norm_sqr()).sum();
            let got = norm_sqr(&z[j * 16..(j + 1) * 16]);
            assert!((got - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn adjoint_identities_hold() {
        let mut rng = synth::rng(77);
        for m in all_models() {
            for _ in 0..100 {
                let w = draw(&mut rng, m.probe_len());
                let u = draw(&mut rng, m.image_len());
                let z = draw(&mut rng, m.measurement_len());
                let au = forward_raw(&m, &w, &u);
                let lhs = inner(&au, &z);
                let rhs = inner(&u, &adjoint_u_raw(&m, &w, &z));
                let rhs2 = inner(&w, &adjoint_w_raw(&m, &u, &z));
                let scale = norm(&au) * norm(&z);
                assert!(close(lhs, rhs, scale), "{:?}: {lhs} vs {rhs}", m.case());
                assert!(close(lhs, rhs2, scale), "{:?}: {lhs} vs {rhs2}", m.case());
            }
        }
    }

    #[test]
    fn zero_residual_gives_zero_adjoint() {
        let mut rng = synth::rng(1);
        for m in all_models() {
            let w = draw(&mut rng, m.probe_len());
            let u = draw(&mut rng, m.image_len());
            let z = vec![ZERO; m.measurement_len()];
            assert!(adjoint_u_raw(&m, &w, &z).iter().all(|v| *v == ZERO));
            assert!(adjoint_w_raw(&m, &u, &z).iter().all(|v| *v == ZERO));
        }
    }

    #[test]
    fn unit_probe_single_frame_adjoint_embeds_inverse_dft() {
        let g = ScanGeometry::new(vec![(1, 2)], 3, 6).unwrap();
        let m = Model::ptycho(g.clone());
        let mut rng = synth::rng(2);
        let z = draw(&mut rng, 9);
        let w = vec![C64::new(1.0, 0.0); 9];
        let got = adjoint_u_raw(&m, &w, &z);
        let back = Dft::Square(3).inverse_vec(&z);
        let mut want = vec![ZERO; 36];
        g.embed_add_raw(&back, 0, &mut want);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn conv_adjoint_matches_dft_domain() {
        let side = 5;
        let n = 25;
        let mut rng = synth::rng(31);
        let u = draw(&mut rng, n);
        let z = draw(&mut rng, n);
        // direct circular correlation sum
        let mut direct = vec![ZERO; n];
        for r in 0..side {
            for c in 0..side {
                let mut acc = ZERO;
                for a in 0..side {
                    for b in 0..side {
                        let ur = (a + side - r) % side;
                        let uc = (b + side - c) % side;
                        acc += u[ur * side + uc].conj() * z[a * side + b];
                    }
                }
                direct[r * side + c] = acc;
            }
        }
        let m = Model::convolution(side, false).unwrap();
        let got = adjoint_w_raw(&m, &u, &z);
        for (a, b) in got.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-10 * norm(&direct));
        }
    }

    #[test]
    fn normal_operators_match_composition() {
        let mut rng = synth::rng(13);
        for m in all_models() {
            for _ in 0..10 {
                let w = draw(&mut rng, m.probe_len());
                let u = draw(&mut rng, m.image_len());
                let au = forward_raw(&m, &w, &u);
                let nu = normal_diag_wrt_u(&m, &w).apply(&u);
                let comp_u = adjoint_u_raw(&m, &w, &au);
                let nw = normal_diag_wrt_w(&m, &u).apply(&w);
                let comp_w = adjoint_w_raw(&m, &u, &au);
                let su = norm(&comp_u);
                let sw = norm(&comp_w);
                for (a, b) in nu.iter().zip(&comp_u) {
                    assert!((a - b).norm() <= 1e-10 * su, "{:?}", m.case());
                }
                for (a, b) in nw.iter().zip(&comp_w) {
                    assert!((a - b).norm() <= 1e-10 * sw, "{:?}", m.case());
                }
            }
        }
    }

    #[test]
    fn normal_solve_inverts_shifted_operator() {
        let mut rng = synth::rng(14);
        for m in all_models() {
            let w = draw(&mut rng, m.probe_len());
            let x = draw(&mut rng, m.image_len());
            let nd = normal_diag_wrt_u(&m, &w);
            let alpha = 0.3;
            let mut rhs = nd.apply(&x);
            rhs.iter_mut().zip(&x).for_each(|(r, v)| *r += alpha * v);
            let back = nd.solve(&rhs, alpha);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unit_probe_normal_is_coverage() {
        let g = ScanGeometry::jittered_grid(10, 4, 2, 1, 3).unwrap();
        let m = Model::ptycho(g.clone());
        let w = Probe::new(4, vec![C64::new(1.0, 0.0); 16]).unwrap();
        let u = synth::random_sample(10, 4);
        let nu = normal_wrt_u(&m, &w, &u).unwrap();
        for ((a, b), c) in nu.as_slice().iter().zip(u.as_slice()).zip(g.coverage()) {
            assert!((a - b * c as f64).norm() < 1e-12);
        }
        let zero = ComplexImage::zeros(10);
        let n0 = normal_wrt_u(&m, &w, &zero).unwrap();
        assert!(n0.as_slice().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn typed_api_checks_sizes() {
        let m = Model::convolution(4, false).unwrap();
        let w = Probe::zeros(3);
        let u = ComplexImage::zeros(4);
        assert!(forward(&m, &w, &u).is_err());
        let z = ExitWaveStack::zeros(2, 16);
        assert!(adjoint_wrt_u(&m, &Probe::zeros(4), &z).is_err());
    }

    #[test]
    fn intensity_is_squared_modulus() {
        let mut rng = synth::rng(5);
        let z = ExitWaveStack::new(4, draw(&mut rng, 12)).unwrap();
        let f = intensity(&z);
        for (a, v) in f.as_slice().iter().zip(z.as_slice()) {
            assert!((a - (v.conj() * v).re).abs() < 1e-15);
        }
        let rot: Vec<C64> = z.as_slice().iter().map(|v| v * C64::from_polar(1.0, 1.1)).collect();
        let f2 = intensity(&ExitWaveStack::new(4, rot).unwrap());
        for (a, b) in f.as_slice().iter().zip(f2.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
        let real = ExitWaveStack::new(2, vec![C64::new(2.0, 0.0), C64::new(3.0, 0.0)]).unwrap();
        assert_eq!(intensity(&real).as_slice(), &[4.0, 9.0]);
    }

    #[test]
    fn poisson_noise() {
        let zero = MeasurementStack::new(3, vec![0.0; 6]).unwrap();
        assert!(simulate_poisson(&zero, 10.0, 1).unwrap().as_slice().iter().all(|v| *v == 0.0));
        let f = MeasurementStack::new(5, (0..20).map(|i| 1.0 + i as f64).collect()).unwrap();
        let a = simulate_poisson(&f, 1e6, 42).unwrap();
        let b = simulate_poisson(&f, 1e6, 42).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        for (x, y) in a.as_slice().iter().zip(f.as_slice()) {
            assert!((x - y).abs() <= 0.01 * y);
        }
        assert!(simulate_poisson(&f, 0.0, 1).is_err());
        assert!(MeasurementStack::new(1, vec![-1.0]).is_err());
    }
}
