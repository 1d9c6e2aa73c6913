use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::vecops::ZERO;

/// Square complex raster stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexImage {
    side: usize,
    data: Vec<C64>,
}

impl ComplexImage {
    pub fn new(side: usize, data: Vec<C64>) -> Result<Self> {
        if side == 0 {
            return Err(invalid("side", "must be positive"));
        }
        if data.len() != side * side {
            return Err(shape(format!(
                "image of side {side} needs {} samples, got {}",
                side * side,
                data.len()
            )));
        }
        Ok(Self { side, data })
    }

    pub fn zeros(side: usize) -> Self {
        Self {
            side,
            data: vec![ZERO; side * side],
        }
    }

    pub fn filled(side: usize, value: C64) -> Self {
        Self {
            side,
            data: vec![value; side * side],
        }
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                data.push(f(r, c));
            }
        }
        Self { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }
}

/// Probe (or pupil / kernel) raster with its optional constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    side: usize,
    data: Vec<C64>,
    /// Modulus bound `C_w`.
    pub amp_bound: Option<f64>,
    /// `true` where the Fourier transform of the probe may be nonzero.
    pub fourier_support: Option<Vec<bool>>,
}

impl Probe {
    pub fn new(side: usize, data: Vec<C64>) -> Result<Self> {
        let image = ComplexImage::new(side, data)?;
        Ok(Self {
            side,
            data: image.into_vec(),
            amp_bound: None,
            fourier_support: None,
        })
    }

    pub fn zeros(side: usize) -> Self {
        Self {
            side,
            data: vec![ZERO; side * side],
            amp_bound: None,
            fourier_support: None,
        }
    }

    pub fn with_amp_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(invalid("amp_bound", "must be positive and finite"));
        }
        self.amp_bound = Some(bound);
        Ok(self)
    }

    pub fn with_fourier_support(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.data.len() {
            return Err(shape(format!(
                "support mask has {} entries, probe has {}",
                mask.len(),
                self.data.len()
            )));
        }
        self.fourier_support = Some(mask);
        Ok(self)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    /// Same constraints, new values.
    pub fn with_data(&self, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            side: self.side,
            data,
            amp_bound: self.amp_bound,
            fourier_support: self.fourier_support.clone(),
        }
    }
}

impl From<Probe> for ComplexImage {
    fn from(p: Probe) -> Self {
        ComplexImage {
            side: p.side,
            data: p.data,
        }
    }
}

impl From<ComplexImage> for Probe {
    fn from(u: ComplexImage) -> Self {
        Probe {
            side: u.side,
            data: u.data,
            amp_bound: None,
            fourier_support: None,
        }
    }
}
