//! Grid, field storage, quadrature and raw finite differences.

mod calculus;
pub mod datum;
mod field;
mod grid;
pub mod snapshot;

pub use calculus::{
    central_diff, central_diff_real, gradient, gradient_real, integrate, integrate_real,
    shell_sup, tail_mass, RadialIndex,
};
pub(crate) use calculus::quad;
pub use field::{RealField, ScalarField, VectorField, C64};
pub use grid::GridSpec;
