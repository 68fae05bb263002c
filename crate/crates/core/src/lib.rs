//! Two-photon and three-photon correlations of Rydberg polaritons propagating
//! through a cold atomic medium, and estimators for measured photon tags.

// Negated comparisons reject NaN inputs along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlation;
pub mod error;
pub mod linear;
pub mod pair;
pub mod params;
pub mod pulse;
pub mod stats;
pub mod tags;
pub mod triple;

pub use error::{Error, Result};
