//! Lifted convex relaxation for convolutional phase retrieval with known
//! subspaces, solved by a six-block ADMM.

mod jacobi;

pub use jacobi::{hermitian_eigen, hermitian_part, jacobi_eigen, psd_project, SymEig};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::dft::Dft;
use crate::domain::synth;
use crate::error::{invalid, shape, BprError, Result};

/// Largest subspace dimension accepted by the dense solver.
pub const MAX_SUBSPACE: usize = 16;

/// `B^ = sqrt(n) F B`, `C^ = sqrt(n) F C` and the lifted data `fbar`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedInstance {
    pub bhat: DMatrix<C64>,
    pub chat: DMatrix<C64>,
    pub fbar: Vec<f64>,
}

impl LiftedInstance {
    pub fn new(bhat: DMatrix<C64>, chat: DMatrix<C64>, fbar: Vec<f64>) -> Result<Self> {
        let n = bhat.nrows();
        if chat.nrows() != n || fbar.len() != n {
            return Err(shape("B^, C^ and fbar must share the row count"));
        }
        if bhat.ncols() > n || chat.ncols() > n {
            return Err(shape("subspace dimension exceeds n"));
        }
        if fbar.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("fbar", "must be nonnegative and finite"));
        }
        Ok(Self { bhat, chat, fbar })
    }

    pub fn n(&self) -> usize {
        self.fbar.len()
    }

    /// `f_cov = fbar / n`
    pub fn fcov(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.fbar.iter().map(|v| v / n).collect()
    }
}

/// `sqrt(n) F X` applied column by column.
fn lift_basis(x: &DMatrix<C64>, dft: Dft) -> Result<DMatrix<C64>> {
    if dft.len() != x.nrows() {
        return Err(shape(format!("transform length {} vs {} rows", dft.len(), x.nrows())));
    }
    let s = (x.nrows() as f64).sqrt();
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let mut v: Vec<C64> = col.iter().copied().collect();
        dft.forward(&mut v);
        col.iter_mut().zip(v).for_each(|(c, x)| *c = x * s);
    }
    Ok(out)
}

/// Data of `kappa = B h`, `u = C m`: `fbar = |B^h o C^m|^2`, so that
/// `f_cov = fbar / n` and `<b_l b_l^*, H><c_l c_l^*, M> = fbar(l)` at the
/// lifted truth.
pub fn build_instance(
    h: &[C64],
    m: &[C64],
    b: &DMatrix<C64>,
    c: &DMatrix<C64>,
    dft: Dft,
) -> Result<LiftedInstance> {
    if b.ncols() != h.len() || c.ncols() != m.len() {
        return Err(shape("coefficient lengths do not match the subspaces"));
    }
    let bhat = lift_basis(b, dft)?;
    let chat = lift_basis(c, dft)?;
    let bh = &bhat * DMatrix::from_column_slice(h.len(), 1, h);
    let cm = &chat * DMatrix::from_column_slice(m.len(), 1, m);
    let fbar = bh.iter().zip(cm.iter()).map(|(x, y)| (x * y).norm_sqr()).collect();
    LiftedInstance::new(bhat, chat, fbar)
}

/// Random instance with complex Gaussian subspaces (entries of variance
/// `1/n`) and coefficients; returns `(instance, h, m)`.
pub fn random_instance(
    n: usize,
    k1: usize,
    k2: usize,
    seed: u64,
) -> Result<(LiftedInstance, Vec<C64>, Vec<C64>)> {
    let mut rng = synth::rng(seed);
    let s = 1.0 / (n as f64).sqrt();
    let b = DMatrix::from_vec(n, k1, synth::complex_gaussian(&mut rng, n * k1)) * C64::new(s, 0.0);
    let c = DMatrix::from_vec(n, k2, synth::complex_gaussian(&mut rng, n * k2)) * C64::new(s, 0.0);
    let h = synth::complex_gaussian(&mut rng, k1);
    let m = synth::complex_gaussian(&mut rng, k2);
    let inst = build_instance(&h, &m, &b, &c, Dft::Line(n))?;
    Ok((inst, h, m))
}

/// `<b b^*, H> = b^* H b` for the conjugated row `b^*` of `B^`.
fn row_form(rows: &DMatrix<C64>, l: usize, x: &DMatrix<C64>) -> C64 {
    let k = rows.ncols();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            s += rows[(l, i)] * x[(i, j)] * rows[(l, j)].conj();
        }
    }
    s
}

/// Real values of `<b_l b_l^*, X>` over all rows.
pub fn lifted_measurements(rows: &DMatrix<C64>, x: &DMatrix<C64>) -> Vec<f64> {
    (0..rows.nrows()).map(|l| row_form(rows, l, x).re).collect()
}

/// `vec(b_l b_l^*)`, column-major, for the conjugated row `b_l^*`.
fn outer_vec(rows: &DMatrix<C64>, l: usize) -> Vec<C64> {
    let k = rows.ncols();
    let mut v = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..k {
            v.push(rows[(l, i)].conj() * rows[(l, j)]);
        }
    }
    v
}

/// Factored `T = beta1 sum_l vec(b b^*) vec(b b^*)^* + beta2 I`.
struct NormalSystem {
    rows: DMatrix<C64>,
    chol: nalgebra::Cholesky<C64, nalgebra::Dyn>,
    k: usize,
}

impl NormalSystem {
    fn new(rows: &DMatrix<C64>, beta1: f64, beta2: f64) -> Result<Self> {
        let k = rows.ncols();
        let mut t = DMatrix::from_element(k * k, k * k, C64::new(0.0, 0.0));
        for l in 0..rows.nrows() {
            let v = outer_vec(rows, l);
            for p in 0..k * k {
                for q in 0..k * k {
                    t[(p, q)] += beta1 * v[p] * v[q].conj();
                }
            }
        }
        for p in 0..k * k {
            t[(p, p)] += beta2;
        }
        let chol = t
            .cholesky()
            .ok_or_else(|| BprError::Numerical("lifted normal system is not positive definite".into()))?;
        Ok(Self { rows: rows.clone(), chol, k })
    }

    /// Solves for `X` with right-hand side
    /// `beta1 sum_l weight(l) b_l b_l^* + beta2 anchor - I`.
    fn solve(&self, weight: &[f64], anchor: &DMatrix<C64>, beta1: f64, beta2: f64) -> DMatrix<C64> {
        let k = self.k;
        let mut rhs = anchor * C64::new(beta2, 0.0);
        for i in 0..k {
            rhs[(i, i)] -= 1.0;
        }
        for (l, w) in weight.iter().enumerate() {
            let v = outer_vec(&self.rows, l);
            for (p, vp) in v.iter().enumerate() {
                rhs[(p % k, p / k)] += beta1 * w * vp;
            }
        }
        let x = self.chol.solve(&DMatrix::from_column_slice(k * k, 1, rhs.as_slice()));
        let x = DMatrix::from_column_slice(k, k, x.as_slice());
        (&x + x.adjoint()) * C64::new(0.5, 0.0)
    }
}

/// Nearest point of `{v1 v2 >= fbar, v1 >= 0}` to `(p1, p2)`.
pub fn project_hyperbolic(p1: f64, p2: f64, fbar: f64) -> (f64, f64) {
    if fbar <= 0.0 {
        if p1 >= 0.0 && p2 >= 0.0 {
            return (p1, p2);
        }
        if p1 <= 0.0 {
            return (0.0, p2);
        }
        // p1 > 0 > p2: the set is the closed quadrant plus the v2 axis
        return if -p2 <= p1 { (p1, 0.0) } else { (0.0, p2) };
    }
    if p1 > 0.0 && p1 * p2 >= fbar {
        return (p1, p2);
    }
    // stationary points on v2 = fbar / v1 solve
    // g(v) = v^4 - p1 v^3 + p2 fbar v - fbar^2 = 0, with g(0) < 0
    let g = |v: f64| v.powi(4) - p1 * v.powi(3) + p2 * fbar * v - fbar * fbar;
    let dg = |v: f64| 4.0 * v.powi(3) - 3.0 * p1 * v * v + p2 * fbar;
    let mut hi = fbar.sqrt().max(p1.abs()).max(1e-300);
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let mut v = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gv = g(v);
        if gv == 0.0 {
            break;
        }
        if gv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let d = dg(v);
        let newton = if d != 0.0 { v - gv / d } else { f64::NAN };
        v = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    (v, fbar / v)
}

/// Iterate of the lifted ADMM; multipliers are kept in scaled form.
#[derive(Debug, Clone)]
pub struct LiftedState {
    pub h: DMatrix<C64>,
    pub h_psd: DMatrix<C64>,
    pub m: DMatrix<C64>,
    pub m_psd: DMatrix<C64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: DMatrix<C64>,
    pub lambda4: DMatrix<C64>,
}

impl LiftedState {
    pub fn start(inst: &LiftedInstance) -> Self {
        let (k1, k2, n) = (inst.bhat.ncols(), inst.chat.ncols(), inst.n());
        let z = |k| DMatrix::from_element(k, k, C64::new(0.0, 0.0));
        let root: Vec<f64> = inst.fbar.iter().map(|v| v.sqrt()).collect();
        Self {
            h: z(k1),
            h_psd: z(k1),
            m: z(k2),
            m_psd: z(k2),
            v1: root.clone(),
            v2: root,
            lambda1: vec![0.0; n],
            lambda2: vec![0.0; n],
            lambda3: z(k1),
            lambda4: z(k2),
        }
    }

    /// Largest primal residual of the four coupling constraints.
    pub fn primal_residual(&self, inst: &LiftedInstance) -> f64 {
        let a1 = lifted_measurements(&inst.bhat, &self.h);
        let a2 = lifted_measurements(&inst.chat, &self.m);
        let r1 = self.v1.iter().zip(&a1).map(|(v, a)| (v - a).powi(2)).sum::<f64>().sqrt();
        let r2 = self.v2.iter().zip(&a2).map(|(v, a)| (v - a).powi(2)).sum::<f64>().sqrt();
        let r3 = (&self.h_psd - &self.h).norm();
        let r4 = (&self.m_psd - &self.m).norm();
        r1.max(r2).max(r3).max(r4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedReport {
    pub iterations_run: usize,
    /// `Tr(H) + Tr(M)` after each iteration
    pub objective_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    pub events: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LiftedSolution {
    pub h_mat: DMatrix<C64>,
    pub m_mat: DMatrix<C64>,
    pub h: Vec<C64>,
    pub m: Vec<C64>,
    /// descending eigenvalues of `H` and `M`
    pub h_spectrum: Vec<f64>,
    pub m_spectrum: Vec<f64>,
    pub report: LiftedReport,
}

impl LiftedSolution {
    /// `lambda_2 / lambda_1` of `H` and of `M`.
    pub fn rank_ratios(&self) -> (f64, f64) {
        let ratio = |s: &[f64]| {
            if s.len() < 2 || s[0] <= 0.0 {
                0.0
            } else {
                s[1].abs() / s[0]
            }
        };
        (ratio(&self.h_spectrum), ratio(&self.m_spectrum))
    }
}

/// One sweep: `H, M`, then `H', M'`, then `v1, v2`, then the multipliers.
fn lifted_step(
    inst: &LiftedInstance,
    s: &mut LiftedState,
    t1: &NormalSystem,
    t2: &NormalSystem,
    beta1: f64,
    beta2: f64,
) -> Result<()> {
    let w1: Vec<f64> = s.v1.iter().zip(&s.lambda1).map(|(v, l)| v + l).collect();
    let w2: Vec<f64> = s.v2.iter().zip(&s.lambda2).map(|(v, l)| v + l).collect();
    s.h = t1.solve(&w1, &(&s.h_psd + &s.lambda3), beta1, beta2);
    s.m = t2.solve(&w2, &(&s.m_psd + &s.lambda4), beta1, beta2);
    s.h_psd = psd_project(&(&s.h - &s.lambda3))?;
    s.m_psd = psd_project(&(&s.m - &s.lambda4))?;
    let a1 = lifted_measurements(&inst.bhat, &s.h);
    let a2 = lifted_measurements(&inst.chat, &s.m);
    for l in 0..inst.n() {
        let (x, y) = project_hyperbolic(a1[l] - s.lambda1[l], a2[l] - s.lambda2[l], inst.fbar[l]);
        s.v1[l] = x;
        s.v2[l] = y;
        s.lambda1[l] += x - a1[l];
        s.lambda2[l] += y - a2[l];
    }
    s.lambda3 += &s.h_psd - &s.h;
    s.lambda4 += &s.m_psd - &s.m;
    Ok(())
}

fn top_factor(x: &DMatrix<C64>) -> Result<(Vec<C64>, Vec<f64>)> {
    let (vals, vecs) = hermitian_eigen(x)?;
    let s = vals[0].max(0.0).sqrt();
    Ok((vecs[0].iter().map(|v| v * s).collect(), vals))
}

/// Runs the ADMM with `beta1`, `beta2`, `max_iter` and `tol` (relative
/// primal residual) from `config`, then extracts rank-one factors.
pub fn solve_lifted(inst: &LiftedInstance, config: &SolverConfig) -> Result<LiftedSolution> {
    config.validate()?;
    let (k1, k2) = (inst.bhat.ncols(), inst.chat.ncols());
    if k1 > MAX_SUBSPACE || k2 > MAX_SUBSPACE {
        return Err(invalid("subspace", format!("dimensions above {MAX_SUBSPACE} are not supported")));
    }
    if k1 == 0 || k2 == 0 {
        return Err(shape("empty subspace"));
    }
    let (beta1, beta2) = (config.beta1, config.beta2);
    let t1 = NormalSystem::new(&inst.bhat, beta1, beta2)?;
    let t2 = NormalSystem::new(&inst.chat, beta1, beta2)?;
    let mut state = LiftedState::start(inst);
    let scale = inst.fbar.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let mut report = LiftedReport {
        iterations_run: 0,
        objective_history: Vec::new(),
        residual_history: Vec::new(),
        events: Vec::new(),
    };
    for _ in 0..config.max_iter {
        lifted_step(inst, &mut state, &t1, &t2, beta1, beta2)?;
        let obj = state.h.trace().re + state.m.trace().re;
        let res = state.primal_residual(inst) / scale;
        if !(obj.is_finite() && res.is_finite()) {
            return Err(BprError::Numerical("lifted ADMM produced non-finite values".into()));
        }
        report.objective_history.push(obj);
        report.residual_history.push(res);
        report.iterations_run += 1;
        if config.tol > 0.0 && res < config.tol {
            report.events.push(format!("stopped on primal residual {res:.3e}"));
            break;
        }
    }
    let (h, h_spectrum) = top_factor(&state.h_psd)?;
    let (m, m_spectrum) = top_factor(&state.m_psd)?;
    Ok(LiftedSolution {
        h_mat: state.h_psd,
        m_mat: state.m_psd,
        h,
        m,
        h_spectrum,
        m_spectrum,
        report,
    })
}
