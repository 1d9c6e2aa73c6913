use serde::{Deserialize, Serialize};

use crate::domain::ScanGeometry;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    PtychoI,
    FourierPtychoII,
    FrogIII,
    ConvIV,
}

/// One of the four bilinear measurement models.
///
/// * `Ptycho`: `F(w . S_j u)`
/// * `FourierPtycho`: `F^-1(Fw . S_j Fu)`
/// * `Frog`: `F(w . T_j u)` with `T_j` the cyclic shift of the lexicographic
///   vector by `j * shift_step` and `F` the 1-D DFT of length `n`
/// * `Convolution`: `w (*) u` or `F(w (*) u)`, circular 2-D convolution, one frame
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    Ptycho {
        geometry: ScanGeometry,
    },
    FourierPtycho {
        geometry: ScanGeometry,
    },
    Frog {
        side: usize,
        frames: usize,
        shift_step: usize,
    },
    Convolution {
        side: usize,
        fourier: bool,
    },
}

impl Model {
    pub fn ptycho(geometry: ScanGeometry) -> Self {
        Model::Ptycho { geometry }
    }

    pub fn fourier_ptycho(geometry: ScanGeometry) -> Self {
        Model::FourierPtycho { geometry }
    }

    pub fn frog(side: usize, frames: usize, shift_step: usize) -> Result<Self> {
        if side == 0 {
            return Err(invalid("side", "must be positive"));
        }
        if frames == 0 {
            return Err(invalid("frames", "at least one frame is required"));
        }
        if shift_step == 0 {
            return Err(invalid("shift_step", "must be positive"));
        }
        Ok(Model::Frog {
            side,
            frames,
            shift_step,
        })
    }

    pub fn convolution(side: usize, fourier: bool) -> Result<Self> {
        if side == 0 {
            return Err(invalid("side", "must be positive"));
        }
        Ok(Model::Convolution { side, fourier })
    }

    pub fn case(&self) -> Case {
        match self {
            Model::Ptycho { .. } => Case::PtychoI,
            Model::FourierPtycho { .. } => Case::FourierPtychoII,
            Model::Frog { .. } => Case::FrogIII,
            Model::Convolution { .. } => Case::ConvIV,
        }
    }

    pub fn geometry(&self) -> Option<&ScanGeometry> {
        match self {
            Model::Ptycho { geometry } | Model::FourierPtycho { geometry } => Some(geometry),
            _ => None,
        }
    }

    pub fn probe_side(&self) -> usize {
        match self {
            Model::Ptycho { geometry } | Model::FourierPtycho { geometry } => {
                geometry.frame_side()
            }
            Model::Frog { side, .. } | Model::Convolution { side, .. } => *side,
        }
    }

    pub fn image_side(&self) -> usize {
        match self {
            Model::Ptycho { geometry } | Model::FourierPtycho { geometry } => {
                geometry.image_side()
            }
            Model::Frog { side, .. } | Model::Convolution { side, .. } => *side,
        }
    }

    pub fn probe_len(&self) -> usize {
        self.probe_side().pow(2)
    }

    pub fn image_len(&self) -> usize {
        self.image_side().pow(2)
    }

    pub fn frame_count(&self) -> usize {
        match self {
            Model::Ptycho { geometry } | Model::FourierPtycho { geometry } => {
                geometry.frame_count()
            }
            Model::Frog { frames, .. } => *frames,
            Model::Convolution { .. } => 1,
        }
    }

    /// Samples per measured frame.
    pub fn frame_len(&self) -> usize {
        match self {
            Model::Ptycho { geometry } | Model::FourierPtycho { geometry } => geometry.frame_len(),
            Model::Frog { side, .. } | Model::Convolution { side, .. } => side * side,
        }
    }

    pub fn measurement_len(&self) -> usize {
        self.frame_count() * self.frame_len()
    }

    /// Translation of frame `j` for the cyclic-shift model.
    pub(crate) fn shift_of(&self, j: usize) -> i64 {
        match self {
            Model::Frog { shift_step, .. } => (j * shift_step) as i64,
            _ => 0,
        }
    }

    /// Whether every sample pixel is seen by at least one frame.
    pub fn covers_all(&self) -> bool {
        match self {
            Model::Ptycho { geometry } => geometry.covers_all(),
            _ => true,
        }
    }
}
