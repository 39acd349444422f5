//! Finite-difference laboratory for variable-coefficient magnetic Schrödinger
//! and wave flows in three dimensions, with term-by-term virial audits.

pub mod error;
pub mod fields;
pub mod par;
pub mod scenario;

pub mod flows;
pub mod multipliers;
pub mod operators;
pub mod virial_audit;

pub use error::{LabError, Result};
