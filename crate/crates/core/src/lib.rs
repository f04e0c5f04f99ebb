//! Ultrafast compound imaging with patch-wise SVD aberration correction.
//!
//! The crate simulates plane-wave RF data, beamforms it into the ultrafast
//! compound matrix `R` (pixels x angles), extracts per-patch angular
//! aberration laws from the leading singular vectors of `R`, and measures
//! the resulting images.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arraysim;
pub mod bench;
pub mod beamform;
pub mod coherence;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod svdcore;

pub use error::{Error, Result};
