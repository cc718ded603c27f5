//! Mixed-state geometric phases of spin-½ systems in thermal environments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod gp;
pub mod lindblad;
pub mod models;
pub mod qmat;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
pub use gp::Angle;
pub use qmat::{BlochVector, CMatrix, DensityMatrix, C64};
