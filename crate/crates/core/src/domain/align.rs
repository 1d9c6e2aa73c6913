use num_complex::Complex64 as C64;

use crate::domain::{cyclic_shift, cyclic_shift_2d, ComplexImage, Model, Probe};
use crate::error::{invalid, shape, BprError, Result};
use crate::vecops::{inner, norm_sqr};

/// `min_c ||c x - x_ref|| / ||x_ref||` over complex scalars `c`.
pub fn aligned_relative_error(x: &[C64], x_ref: &[C64]) -> Result<f64> {
    if x.len() != x_ref.len() {
        return Err(shape(format!("lengths {} and {} differ", x.len(), x_ref.len())));
    }
    let rr = norm_sqr(x_ref);
    if rr == 0.0 {
        return Err(invalid("x_ref", "reference vector is zero"));
    }
    let xx = norm_sqr(x);
    if xx == 0.0 {
        return Ok(1.0);
    }
    let c = inner(x, x_ref) / xx;
    let err: f64 = x
        .iter()
        .zip(x_ref)
        .map(|(a, b)| (c * a - b).norm_sqr())
        .sum();
    Ok((err / rr).sqrt())
}

/// Optimal scalar `c` aligning `x` to `x_ref`.
pub fn alignment_scalar(x: &[C64], x_ref: &[C64]) -> C64 {
    let xx = norm_sqr(x);
    if xx == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        inner(x, x_ref) / xx
    }
}

/// Scalar-aligned errors after removing the best shared linear phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampAligned {
    pub probe: f64,
    pub sample: f64,
    /// `(k_row, k_col)` in radians per pixel
    pub ramp: (f64, f64),
}

fn ramped(x: &[C64], side: usize, k: (f64, f64), sign: f64) -> Vec<C64> {
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            let t = sign * (k.0 * (i / side) as f64 + k.1 * (i % side) as f64);
            v * C64::from_polar(1.0, t)
        })
        .collect()
}

/// Mean phase increment of `x conj(x_ref)` along rows and columns.
fn phase_slope(x: &[C64], x_ref: &[C64], side: usize) -> (f64, f64) {
    let q: Vec<C64> = x.iter().zip(x_ref).map(|(a, b)| a * b.conj()).collect();
    let (mut sr, mut sc) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            if r + 1 < side {
                sr += q[i + side] * q[i].conj();
            }
            if c + 1 < side {
                sc += q[i + 1] * q[i].conj();
            }
        }
    }
    (sr.arg(), sc.arg())
}

/// Errors of `(w, u)` against the references up to the windowed-model
/// ambiguity `(c w e^{ik.x}, u e^{-ik.y} / c)`, which leaves every
/// ptychographic intensity unchanged.
pub fn ramp_aligned_errors(
    w: &Probe,
    w_ref: &Probe,
    u: &ComplexImage,
    u_ref: &ComplexImage,
) -> Result<RampAligned> {
    if w.len() != w_ref.len() || u.len() != u_ref.len() {
        return Err(shape("estimate and reference sizes differ"));
    }
    let (ws, us) = (w.side(), u.side());
    let eval = |k: (f64, f64)| -> Result<(f64, f64)> {
        Ok((
            aligned_relative_error(&ramped(w.as_slice(), ws, k, -1.0), w_ref.as_slice())?,
            aligned_relative_error(&ramped(u.as_slice(), us, k, 1.0), u_ref.as_slice())?,
        ))
    };
    let cost = |k: (f64, f64)| -> Result<f64> {
        let (a, b) = eval(k)?;
        Ok(a * a + b * b)
    };
    let s = phase_slope(u.as_slice(), u_ref.as_slice(), us);
    let mut k = (-s.0, -s.1);
    let mut best = cost(k)?;
    let zero = cost((0.0, 0.0))?;
    if zero < best {
        k = (0.0, 0.0);
        best = zero;
    }
    let mut h = 0.05;
    while h > 1e-9 {
        let mut moved = false;
        for d in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let cand = (k.0 + d.0, k.1 + d.1);
            let c = cost(cand)?;
            if c < best {
                best = c;
                k = cand;
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    let (probe, sample) = eval(k)?;
    Ok(RampAligned { probe, sample, ramp: k })
}

#[derive(Debug, Clone)]
pub struct Recentered {
    pub probe: Probe,
    pub sample: ComplexImage,
    /// Applied translation `(rows, cols)`; for the cyclic-shift model the
    /// shift acts on the flat index and is reported in `.1`.
    pub shift: (i64, i64),
}

/// Centroid of `|w|^2` on a `side x side` raster.
pub fn mass_center(w: &[C64], side: usize) -> Option<(f64, f64)> {
    let mut total = 0.0;
    let (mut sr, mut sc) = (0.0, 0.0);
    for (i, v) in w.iter().enumerate() {
        let m = v.norm_sqr();
        total += m;
        sr += m * (i / side) as f64;
        sc += m * (i % side) as f64;
    }
    (total > 0.0).then(|| (sr / total, sc / total))
}

/// Translates the probe so its intensity centroid sits on the center pixel.
///
/// For the convolution model the sample is translated the opposite way, for
/// the cyclic-shift model it follows the probe, so `|A(w,u)|^2` is unchanged.
/// Windowed models leave the sample alone.
pub fn recenter_probe(model: &Model, w: &Probe, u: &ComplexImage) -> Result<Recentered> {
    if w.len() != model.probe_len() || u.len() != model.image_len() {
        return Err(shape("probe/sample do not match model"));
    }
    let side = w.side();
    match model {
        Model::Frog { .. } => {
            let n = w.len();
            let mut total = 0.0;
            let mut s = 0.0;
            for (i, v) in w.as_slice().iter().enumerate() {
                total += v.norm_sqr();
                s += v.norm_sqr() * i as f64;
            }
            if total == 0.0 {
                return Err(BprError::Domain("probe is identically zero".into()));
            }
            let k = ((n / 2) as f64 - s / total).round() as i64;
            Ok(Recentered {
                probe: w.with_data(cyclic_shift(w.as_slice(), k)),
                sample: ComplexImage::new(u.side(), cyclic_shift(u.as_slice(), k))?,
                shift: (0, k),
            })
        }
        _ => {
            let (cr, cc) = mass_center(w.as_slice(), side)
                .ok_or_else(|| BprError::Domain("probe is identically zero".into()))?;
            let target = (side / 2) as f64;
            let dr = (target - cr).round() as i64;
            let dc = (target - cc).round() as i64;
            let probe = w.with_data(cyclic_shift_2d(w.as_slice(), side, dr, dc));
            let sample = match model {
                Model::Convolution { .. } => ComplexImage::new(
                    u.side(),
                    cyclic_shift_2d(u.as_slice(), u.side(), -dr, -dc),
                )?,
                _ => u.clone(),
            };
            Ok(Recentered {
                probe,
                sample,
                shift: (dr, dc),
            })
        }
    }
}
