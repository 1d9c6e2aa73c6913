//! Blind phase retrieval for bilinear measurement models.

pub mod config;
pub mod dft;
pub mod domain;
pub mod error;
pub mod forward;
pub mod io;
pub mod lifted;
pub mod metrics;
pub mod solvers;
pub mod vecops;

pub use config::{AlignedErrors, DampingKind, DampingRule, SolverConfig, SolverReport};
pub use error::{BprError, Result};
