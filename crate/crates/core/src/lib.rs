//! Monte Carlo engine for price paths enlarged with their occupation flow.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lov;
pub mod occupation;
pub mod pricing;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod stopping;

pub use error::{OccError, Result};
