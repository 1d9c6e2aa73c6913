use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::ComplexImage;
use crate::error::{invalid, shape, BprError, Result};
use crate::vecops::ZERO;

/// Scan positions of a windowed (non-wrapping) illumination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct ScanGeometry {
    offsets: Vec<(usize, usize)>,
    frame_side: usize,
    image_side: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    offsets: Vec<(usize, usize)>,
    frame_side: usize,
    image_side: usize,
}

impl TryFrom<RawGeometry> for ScanGeometry {
    type Error = BprError;
    fn try_from(r: RawGeometry) -> Result<Self> {
        ScanGeometry::new(r.offsets, r.frame_side, r.image_side)
    }
}

impl From<ScanGeometry> for RawGeometry {
    fn from(g: ScanGeometry) -> Self {
        RawGeometry {
            offsets: g.offsets,
            frame_side: g.frame_side,
            image_side: g.image_side,
        }
    }
}

impl ScanGeometry {
    pub fn new(offsets: Vec<(usize, usize)>, frame_side: usize, image_side: usize) -> Result<Self> {
        if frame_side == 0 || image_side == 0 {
            return Err(invalid("frame_side", "sides must be positive"));
        }
        if frame_side > image_side {
            return Err(invalid("frame_side", "frame larger than image"));
        }
        if offsets.is_empty() {
            return Err(invalid("offsets", "at least one frame is required"));
        }
        for (j, &(r, c)) in offsets.iter().enumerate() {
            if r + frame_side > image_side || c + frame_side > image_side {
                return Err(invalid(
                    "offsets",
                    format!("frame {j} at ({r}, {c}) crosses the image border"),
                ));
            }
        }
        Ok(Self {
            offsets,
            frame_side,
            image_side,
        })
    }

    /// Raster grid with spacing `step`, each interior position perturbed by a
    /// uniform integer jitter in `[-jitter, jitter]`. The first and last rows
    /// and columns keep their exact positions so the whole image stays covered.
    pub fn jittered_grid(
        image_side: usize,
        frame_side: usize,
        step: usize,
        jitter: usize,
        seed: u64,
    ) -> Result<Self> {
        if step == 0 {
            return Err(invalid("step", "must be positive"));
        }
        if frame_side > image_side {
            return Err(invalid("frame_side", "frame larger than image"));
        }
        let last = image_side - frame_side;
        let mut positions: Vec<usize> = (0..=last).step_by(step).collect();
        if *positions.last().unwrap() != last {
            positions.push(last);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let np = positions.len();
        let mut offsets = Vec::with_capacity(np * np);
        for (a, &r0) in positions.iter().enumerate() {
            for (b, &c0) in positions.iter().enumerate() {
                let mut jit = |base: usize, edge: bool| -> usize {
                    if edge || jitter == 0 {
                        return base;
                    }
                    let d = rng.random_range(-(jitter as i64)..=jitter as i64);
                    (base as i64 + d).clamp(0, last as i64) as usize
                };
                let r = jit(r0, a == 0 || a + 1 == np);
                let c = jit(c0, b == 0 || b + 1 == np);
                offsets.push((r, c));
            }
        }
        Self::new(offsets, frame_side, image_side)
    }

    pub fn offsets(&self) -> &[(usize, usize)] {
        &self.offsets
    }

    pub fn frame_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn frame_side(&self) -> usize {
        self.frame_side
    }

    pub fn frame_len(&self) -> usize {
        self.frame_side * self.frame_side
    }

    pub fn image_side(&self) -> usize {
        self.image_side
    }

    pub fn image_len(&self) -> usize {
        self.image_side * self.image_side
    }

    fn check(&self, j: usize) -> Result<(usize, usize)> {
        self.offsets
            .get(j)
            .copied()
            .ok_or(BprError::IndexOutOfRange {
                index: j,
                count: self.offsets.len(),
            })
    }

    /// Number of frames covering each image pixel.
    pub fn coverage(&self) -> Vec<u32> {
        let mut cov = vec![0u32; self.image_len()];
        let (fs, is) = (self.frame_side, self.image_side);
        for &(r0, c0) in &self.offsets {
            for r in 0..fs {
                for c in 0..fs {
                    cov[(r0 + r) * is + c0 + c] += 1;
                }
            }
        }
        cov
    }

    pub fn covers_all(&self) -> bool {
        self.coverage().iter().all(|&c| c > 0)
    }

    /// Linear overlap fraction between horizontally adjacent frames of the
    /// nominal grid, `1 - step/frame_side`.
    pub fn nominal_overlap(step: usize, frame_side: usize) -> f64 {
        1.0 - step as f64 / frame_side as f64
    }

    pub(crate) fn extract_raw(&self, u: &[C64], j: usize, out: &mut [C64]) {
        let (r0, c0) = self.offsets[j];
        let (fs, is) = (self.frame_side, self.image_side);
        for r in 0..fs {
            let src = (r0 + r) * is + c0;
            out[r * fs..(r + 1) * fs].copy_from_slice(&u[src..src + fs]);
        }
    }

    /// `image += S_j^T v`
    pub(crate) fn embed_add_raw(&self, v: &[C64], j: usize, image: &mut [C64]) {
        let (r0, c0) = self.offsets[j];
        let (fs, is) = (self.frame_side, self.image_side);
        for r in 0..fs {
            let dst = (r0 + r) * is + c0;
            for (d, s) in image[dst..dst + fs].iter_mut().zip(&v[r * fs..(r + 1) * fs]) {
                *d += s;
            }
        }
    }

    pub(crate) fn embed_add_real(&self, v: &[f64], j: usize, image: &mut [f64]) {
        let (r0, c0) = self.offsets[j];
        let (fs, is) = (self.frame_side, self.image_side);
        for r in 0..fs {
            let dst = (r0 + r) * is + c0;
            for (d, s) in image[dst..dst + fs].iter_mut().zip(&v[r * fs..(r + 1) * fs]) {
                *d += s;
            }
        }
    }
}

/// Copy of the `j`-th window of `u`, row-major.
pub fn extract_frame(u: &ComplexImage, g: &ScanGeometry, j: usize) -> Result<Vec<C64>> {
    g.check(j)?;
    if u.side() != g.image_side() {
        return Err(shape(format!(
            "image side {} does not match geometry {}",
            u.side(),
            g.image_side()
        )));
    }
    let mut out = vec![ZERO; g.frame_len()];
    g.extract_raw(u.as_slice(), j, &mut out);
    Ok(out)
}

/// Zero image carrying `v` in the `j`-th window; adjoint of [`extract_frame`].
pub fn embed_frame(v: &[C64], g: &ScanGeometry, j: usize) -> Result<ComplexImage> {
    g.check(j)?;
    if v.len() != g.frame_len() {
        return Err(shape(format!(
            "frame has {} samples, expected {}",
            v.len(),
            g.frame_len()
        )));
    }
    let mut img = vec![ZERO; g.image_len()];
    g.embed_add_raw(v, j, &mut img);
    ComplexImage::new(g.image_side(), img)
}

/// `out[i] = u[(i - k) mod n]`.
pub fn cyclic_shift<T: Copy>(u: &[T], k: i64) -> Vec<T> {
    let n = u.len();
    if n == 0 {
        return Vec::new();
    }
    let k = k.rem_euclid(n as i64) as usize;
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&u[n - k..]);
    out.extend_from_slice(&u[..n - k]);
    out
}

/// Two-dimensional cyclic translation of a `side x side` raster by `(dr, dc)`.
pub fn cyclic_shift_2d<T: Copy>(u: &[T], side: usize, dr: i64, dc: i64) -> Vec<T> {
    debug_assert_eq!(u.len(), side * side);
    let s = side as i64;
    let mut out = u.to_vec();
    for r in 0..side {
        for c in 0..side {
            let sr = (r as i64 - dr).rem_euclid(s) as usize;
            let sc = (c as i64 - dc).rem_euclid(s) as usize;
            out[r * side + c] = u[sr * side + sc];
        }
    }
    out
}
