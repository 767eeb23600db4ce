//! Deforms almost-cocycles on compact groups into exact cocycles.

// Negated comparisons reject NaN on purpose; index loops mirror the textbook kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cochain;
pub mod error;
pub mod groups;
pub mod linalg;
pub mod oracles;
pub mod quadrature;
pub mod rectify;
pub mod rng;
pub mod scenarios;
pub mod target;

pub use error::{Error, Result};
