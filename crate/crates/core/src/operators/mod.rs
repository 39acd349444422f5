//! Covariant calculus, coefficient fields and the discrete Hamiltonian.

mod coefficients;
mod geometry;
mod hamiltonian;
mod potentials;

pub use coefficients::{
    eig_bounds, mat_vec, scale, symmetrize, CoefficientField, DecayProfile, Mat3, RadialScalar,
    IDENTITY,
};
pub use geometry::{
    bilinear_a, bilinear_at, distorted_hessian_at, distorted_hessian_form, magnetic_2form, mat_c,
    radial_derivative_v, radial_tangential_split, split_at, tangential_b_at, tangential_field_b,
    tangential_field_b_oriented, MagneticTwoForm, RealVector, MAGNETIC_ORIENTATION,
};
pub use hamiltonian::{apply_a, apply_a_real, covariant_gradient, Hamiltonian};
pub use potentials::{ElectricPreset, MagneticPreset, Potentials};
