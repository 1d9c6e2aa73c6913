//! Cyclic Jacobi eigensolver for real symmetric matrices and its use on
//! Hermitian matrices through the real embedding `[[A, -B], [B, A]]`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{invalid, BprError, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (descending) and column eigenvectors of a real symmetric
/// matrix stored row-major, `n x n`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// row-major, column `j` is the eigenvector of `values[j]`
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl SymEig {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.n + j]).collect()
    }
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls
/// below `tol` times the full norm.
pub fn jacobi_eigen(a: &[f64], n: usize, tol: f64) -> Result<SymEig> {
    if a.len() != n * n {
        return Err(crate::error::shape(format!("{} entries for a {n}x{n} matrix", a.len())));
    }
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = tol * total.max(f64::MIN_POSITIVE);
    let mut converged = off_norm(&a, n) <= target;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_norm(&a, n) <= target;
    }
    if !converged {
        return Err(BprError::Numerical("Jacobi sweeps did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (jn, &jo) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + jn] = v[i * n + jo];
        }
    }
    Ok(SymEig { values, vectors, n })
}

/// Off-diagonal tolerance used for Hermitian problems.
pub const JACOBI_TOL: f64 = 1e-12;

fn embed(x: &DMatrix<C64>) -> Vec<f64> {
    let k = x.nrows();
    let n = 2 * k;
    let mut a = vec![0.0; n * n];
    for i in 0..k {
        for j in 0..k {
            let z = x[(i, j)];
            a[i * n + j] = z.re;
            a[(i + k) * n + (j + k)] = z.re;
            a[i * n + (j + k)] = -z.im;
            a[(i + k) * n + j] = z.im;
        }
    }
    a
}

/// Hermitian part of `x`, after checking the asymmetry is below `1e-10`
/// relative to the largest entry.
pub fn hermitian_part(x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if x.nrows() != x.ncols() {
        return Err(crate::error::shape("matrix is not square"));
    }
    let scale = x.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = (x - x.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > 1e-10 * scale {
        return Err(invalid("matrix", format!("not Hermitian (asymmetry {asym:.2e})")));
    }
    Ok((x + x.adjoint()) * C64::new(0.5, 0.0))
}

/// Eigenvalues of a Hermitian matrix in descending order, with unit
/// eigenvectors.
pub fn hermitian_eigen(x: &DMatrix<C64>) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let x = hermitian_part(x)?;
    let k = x.nrows();
    let e = jacobi_eigen(&embed(&x), 2 * k, JACOBI_TOL)?;
    // each eigenvalue appears twice; (a; b) and (-b; a) both map to a
    // complex multiple of a + ib
    let mut values = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(k);
    for j in 0..2 * k {
        if values.len() == k {
            break;
        }
        let col = e.vector(j);
        let mut z: Vec<C64> = (0..k).map(|i| C64::new(col[i], col[i + k])).collect();
        // drop the partner of an already accepted vector
        for prev in &vectors {
            let c: C64 = prev.iter().zip(&z).map(|(p, q)| p.conj() * q).sum();
            z.iter_mut().zip(prev).for_each(|(q, p)| *q -= c * p);
        }
        let nz = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if nz < 0.5 {
            continue;
        }
        z.iter_mut().for_each(|v| *v /= nz);
        values.push(e.values[j]);
        vectors.push(z);
    }
    Ok((values, vectors))
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn psd_project(x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let x = hermitian_part(x)?;
    let k = x.nrows();
    let n = 2 * k;
    let e = jacobi_eigen(&embed(&x), n, JACOBI_TOL)?;
    let mut out = DMatrix::from_element(k, k, C64::new(0.0, 0.0));
    for (j, &lam) in e.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let v = e.vector(j);
        // average of the two diagonal (real part) and two off-diagonal
        // (imaginary part) blocks, each eigenvalue being doubled
        for r in 0..k {
            for c in 0..k {
                let re = v[r] * v[c] + v[r + k] * v[c + k];
                let im = v[r + k] * v[c] - v[r] * v[c + k];
                out[(r, c)] += C64::new(lam * re, lam * im) * 0.5;
            }
        }
    }
    Ok(out)
}
