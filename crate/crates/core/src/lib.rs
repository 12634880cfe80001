//! Characteristic roots, spectral gaps and dichotomy projections of
//! `x'(t) + cx'(t-1) + ax(t) + bx(t-1) = 0`.

// Negated float comparisons are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristic;
pub mod classifier;
pub mod cli;
pub mod config;
mod error;
pub mod funcspace;
pub mod projections;
pub mod rootfinder;
pub mod simulator;

pub use characteristic::NeutralParams;
pub use config::Tolerances;
pub use error::{Error, Result};
pub use funcspace::GridFunction;
