//! Term-by-term numerical audit of the virial identities, the Hardy and
//! interpolation inequalities, Morrey sizes, and the structural hypotheses.
//!
//! The commutator `⟨u, [H, T] u⟩` of the discrete operator is the reference
//! value; the expanded identity is checked against it, never the reverse.

mod hypotheses;
mod inequalities;
mod report;
mod schrodinger;
mod smoothing;
mod util;
mod wave;

pub use hypotheses::{hypothesis_check, smoothing_certificate, Certificate, DecayTier, HypothesisReport, DECAY_MARGIN};
pub use inequalities::{
    c1_c2_quantities, hardy_check, interpol_endpoints, morrey_campanato, morrey_campanato_radial,
    CompactConstants, HardyResult, InterpolBounds, MorreyNorm, ORIGIN_LATTICE_CORRECTION,
};
pub use report::{record_three_way, three_way, AuditReport, ThreeWay, VERSION};
pub use schrodinger::{
    apply_t, apply_t_leibniz, attribute_gap, inpart_residual, theta_ddot_commutator, theta_ddot_expanded,
    theta_dot_commutator, theta_s, theta_s_dot_formula, theta_sampled, AuxTerms, GapAttribution,
    InpartResidual, VirialExpansion, VirialTerms,
};
pub use smoothing::{smoothing_seminorm, SmoothingSeminorm, SWEEP_RADII};
pub use util::{convergence_order, first_difference, second_difference};
pub use wave::{wave_energy, WaveMultipliers, WaveTerms};
