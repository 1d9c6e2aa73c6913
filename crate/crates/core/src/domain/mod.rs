//! Domain types, scan geometry, ambiguity-aware error and seeded generators.

mod align;
mod geometry;
mod image;
mod model;
mod stack;
pub mod synth;

pub use align::{
    aligned_relative_error, alignment_scalar, mass_center, ramp_aligned_errors, recenter_probe, RampAligned,
    Recentered,
};
pub use geometry::{cyclic_shift, cyclic_shift_2d, embed_frame, extract_frame, ScanGeometry};
pub use image::{ComplexImage, Probe};
pub use model::{Case, Model};
pub use stack::{ExitWaveStack, MeasurementStack};
