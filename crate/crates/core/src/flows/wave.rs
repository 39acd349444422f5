use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::{ScalarField, C64};
use crate::operators::Hamiltonian;

/// Sign convention for the wave flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WaveSign {
    /// `u_tt = −H u`, oscillatory for `H ≥ 0`.
    Dispersive,
    /// `u_tt = +H u`, exponentially growing; audit mode only.
    Literal,
}

/// Position, velocity and cached acceleration of a wave state.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub t: f64,
    pub u: ScalarField,
    pub ut: ScalarField,
    accel: ScalarField,
}

/// Velocity-Verlet leapfrog for `u_tt = ∓H u`.
#[derive(Debug, Clone, Copy)]
pub struct WaveIntegrator<'a> {
    h: &'a Hamiltonian,
    dt: f64,
    sign: WaveSign,
}

impl<'a> WaveIntegrator<'a> {
    /// Refuses `dt` above `2 / sqrt(λ_max)` in the dispersive convention.
    pub fn new(h: &'a Hamiltonian, dt: f64, sign: WaveSign) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LabError::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if sign == WaveSign::Dispersive {
            let bound = stability_bound(h);
            if dt > bound {
                return Err(LabError::Stability { dt, bound });
            }
        }
        Ok(Self { h, dt, sign })
    }

    fn accel(&self, u: &ScalarField) -> ScalarField {
        let s = match self.sign {
            WaveSign::Dispersive => -1.0,
            WaveSign::Literal => 1.0,
        };
        self.h.apply(u).scaled(C64::new(s, 0.0))
    }

    pub fn start(&self, u: ScalarField, ut: ScalarField) -> WaveState {
        let accel = self.accel(&u);
        WaveState { t: 0.0, u, ut, accel }
    }

    pub fn step(&self, s: &WaveState) -> WaveState {
        let half = C64::new(0.5 * self.dt, 0.0);
        let mut v = s.ut.clone();
        v.axpy(half, &s.accel);
        let mut u = s.u.clone();
        u.axpy(C64::new(self.dt, 0.0), &v);
        let accel = self.accel(&u);
        v.axpy(half, &accel);
        WaveState { t: s.t + self.dt, u, ut: v, accel }
    }

    /// `‖u_t‖² + ⟨H u, u⟩`
    pub fn energy(&self, s: &WaveState) -> f64 {
        s.ut.norm_sqr() + self.h.energy(&s.u)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// `2 / sqrt(12 max λ(a) / h² + max V⁺)`; equals `h / sqrt(3C)` without potential.
pub fn stability_bound(h: &Hamiltonian) -> f64 {
    2.0 / h.spectral_upper_bound().sqrt()
}

/// One leapfrog step of `u_tt = −H u`.
pub fn wave_step(
    u: &ScalarField,
    ut: &ScalarField,
    dt: f64,
    h: &Hamiltonian,
) -> Result<(ScalarField, ScalarField)> {
    let w = WaveIntegrator::new(h, dt, WaveSign::Dispersive)?;
    let s = w.step(&w.start(u.clone(), ut.clone()));
    Ok((s.u, s.ut))
}
