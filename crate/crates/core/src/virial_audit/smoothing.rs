use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::{RadialIndex, ScalarField};
use crate::operators::{covariant_gradient, Potentials};

/// Number of logarithmically spaced radii in the sweep.
pub const SWEEP_RADII: usize = 40;

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingSeminorm {
    /// `sup_R R^{−1} ∫₀^T ∫_{|x|≤R} |∇_b u|²`
    pub value: f64,
    pub argmax_radius: f64,
    pub argmax_interior: bool,
    pub t_final: f64,
    pub radii: Vec<f64>,
    /// `R^{−1} ∫₀^T ∫_{|x|≤R} |∇_b u|²` per radius.
    pub profile: Vec<f64>,
}

/// Trapezoid in time over the snapshots, radii in `[2h, L/2]`.
pub fn smoothing_seminorm(states: &[(f64, ScalarField)], pot: &Potentials) -> Result<SmoothingSeminorm> {
    let Some((_, first)) = states.first() else {
        return Err(LabError::InvalidParameter("empty trajectory".into()));
    };
    let g = *first.grid();
    let idx = RadialIndex::new(g);
    let (r0, r1) = (2.0 * g.h(), 0.5 * g.half_width());
    let radii: Vec<f64> = (0..SWEEP_RADII)
        .map(|k| r0 * (r1 / r0).powf(k as f64 / (SWEEP_RADII - 1) as f64))
        .collect();
    // Ball integrals per snapshot via one pass over the radially sorted nodes.
    let mut per_state: Vec<Vec<f64>> = Vec::with_capacity(states.len());
    for (_, u) in states {
        let grad = covariant_gradient(u, pot)?;
        let dens = grad.norm_sqr_density();
        let sorted = idx.ball(r1);
        let mut balls = Vec::with_capacity(radii.len());
        let (mut acc, mut upto) = (0.0, 0);
        for &r in &radii {
            let end = idx.ball(r).len();
            acc += sorted[upto..end].iter().map(|&i| dens.data()[i]).sum::<f64>();
            upto = end;
            balls.push(acc * g.cell_volume());
        }
        per_state.push(balls);
    }
    let mut profile = vec![0.0; radii.len()];
    for w in 0..states.len().saturating_sub(1) {
        let dt = states[w + 1].0 - states[w].0;
        for (k, p) in profile.iter_mut().enumerate() {
            *p += 0.5 * dt * (per_state[w][k] + per_state[w + 1][k]);
        }
    }
    for (p, r) in profile.iter_mut().zip(&radii) {
        *p /= r;
    }
    let (kbest, value) = profile
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (k, &v)| if v > b.1 { (k, v) } else { b });
    Ok(SmoothingSeminorm {
        value: value.max(0.0),
        argmax_radius: radii[kbest],
        argmax_interior: kbest > 0 && kbest + 1 < radii.len(),
        t_final: states.last().map_or(0.0, |s| s.0),
        radii,
        profile,
    })
}
