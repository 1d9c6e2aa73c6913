use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::vecops::ZERO;

/// Exit waves `Psi_j`, stored frame after frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitWaveStack {
    frame_len: usize,
    data: Vec<C64>,
}

impl ExitWaveStack {
    pub fn new(frame_len: usize, data: Vec<C64>) -> Result<Self> {
        if frame_len == 0 || data.is_empty() || data.len() % frame_len != 0 {
            return Err(shape(format!(
                "{} samples do not split into frames of {frame_len}",
                data.len()
            )));
        }
        Ok(Self { frame_len, data })
    }

    pub fn zeros(frames: usize, frame_len: usize) -> Self {
        Self {
            frame_len,
            data: vec![ZERO; frames * frame_len],
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn frame_count(&self) -> usize {
        self.data.len() / self.frame_len
    }

    pub fn frame(&self, j: usize) -> &[C64] {
        &self.data[j * self.frame_len..(j + 1) * self.frame_len]
    }

    pub fn frame_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.frame_len..(j + 1) * self.frame_len]
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Nonnegative intensities `f_j`, stored frame after frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementStack {
    frame_len: usize,
    data: Vec<f64>,
}

impl MeasurementStack {
    pub fn new(frame_len: usize, data: Vec<f64>) -> Result<Self> {
        if frame_len == 0 || data.is_empty() || data.len() % frame_len != 0 {
            return Err(shape(format!(
                "{} samples do not split into frames of {frame_len}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid(
                "intensities",
                format!("entry {bad} is negative or not finite ({})", data[bad]),
            ));
        }
        Ok(Self { frame_len, data })
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn frame_count(&self) -> usize {
        self.data.len() / self.frame_len
    }

    pub fn frame(&self, j: usize) -> &[f64] {
        &self.data[j * self.frame_len..(j + 1) * self.frame_len]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn sqrt(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.sqrt()).collect()
    }
}
