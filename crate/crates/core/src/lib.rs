//! Simulation engine for a scanning NV-center electrometer.

// Validation uses `!(x > 0.0)` so that NaN is rejected along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod field;
pub mod pulse;
pub mod rng;
pub mod scan;
pub mod screening;
pub mod spin;

pub use error::{Error, Result};
