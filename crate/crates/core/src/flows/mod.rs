//! Time propagation and spectral norms of the discrete Hamiltonian.

mod cayley;
mod eigen;
mod krylov;
mod trajectory;
mod wave;

pub use cayley::{schrodinger_step, CayleyStepper, SolverOptions, StepStats};
pub use eigen::{eigenmodes, EigenOptions, Eigenpair};
pub use krylov::{lowest_ritz_value, positivity_shift, sobolev_norm, SobolevNorm, SobolevOptions};
pub use trajectory::{
    conservation_monitor, run_schrodinger, ConservationReport, Observation, RunOptions, Trajectory,
};
pub use wave::{stability_bound, wave_step, WaveIntegrator, WaveSign, WaveState};
