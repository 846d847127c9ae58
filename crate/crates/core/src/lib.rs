//! Adjacent-possible growth simulation and the trace measurements used to
//! relate it to language-model behaviour.
//!
//! * [`tap`]: classic, sequence and resource-bounded growth steps.
//! * [`semantic`]: accuracy, attention entropy, effective dimensionality.
//! * [`constraints`]: the (β, γ, δ) constraint triple and its combinations.
//! * [`transition`]: threshold, power-law, correlation and stability statistics.
//! * [`path`]: path-dependence between normal and shuffled solutions.
//! * [`trace`]: the `taptrace/1` file format and synthetic generators.
//! * [`analysis`]: per-group summaries of trace records.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constraints;
pub mod error;
pub mod path;
pub mod semantic;
pub mod tap;
pub mod trace;
pub mod transition;

pub use error::{Error, Result};
