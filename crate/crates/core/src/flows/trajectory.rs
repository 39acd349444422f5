use std::io::Write;

use serde::{Deserialize, Serialize};

use super::cayley::{CayleyStepper, SolverOptions};
use super::krylov::{sobolev_norm, SobolevOptions};
use crate::error::{LabError, Result};
use crate::fields::{tail_mass, RealField, ScalarField};
use crate::multipliers::{sample, RadialProfile};
use crate::operators::Hamiltonian;
use crate::virial_audit::{theta_dot_commutator, theta_sampled};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub dt: f64,
    pub t_final: f64,
    /// Observables (and kept states) every this many steps.
    pub snapshot_every: usize,
    pub solver: SolverOptions,
    pub sobolev: SobolevOptions,
    pub record_hs_half: bool,
    pub keep_states: bool,
    pub tail_margin: f64,
    pub tail_guard: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_final: 1.0,
            snapshot_every: 10,
            solver: SolverOptions::default(),
            sobolev: SobolevOptions::default(),
            record_hs_half: true,
            keep_states: false,
            tail_margin: 0.1,
            tail_guard: 1e-8,
        }
    }
}

impl RunOptions {
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.t_final >= 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "need dt > 0 and t_final >= 0, got dt = {}, t_final = {}",
                self.dt, self.t_final
            )));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
            return Err(LabError::InvalidParameter(format!(
                "t_final = {} is not a multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Observation {
    pub t: f64,
    pub l2: f64,
    pub hs_half: Option<f64>,
    /// `⟨u, H u⟩^{1/2}` (with the positivity shift when `V` is negative).
    pub h1: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub tail: f64,
}

/// A Crank–Nicolson run: observables at snapshots, the weighted mass at every
/// step, and optionally the snapshot states.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub steps: usize,
    pub observations: Vec<Observation>,
    /// `∫φ|u|²` after every step, starting at `t = 0`.
    pub theta_series: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<(f64, ScalarField)>,
    pub valid: bool,
    pub guard_violation: Option<String>,
    /// Largest `|‖u⁺‖ − ‖u‖| / ‖u‖` over single steps.
    pub max_step_l2_drift: f64,
    pub max_residual: f64,
    pub total_iterations: usize,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,l2,hs_half,theta,theta_dot,tail")?;
        for o in &self.observations {
            let hs = o.hs_half.map_or(String::new(), |v| format!("{v:.15e}"));
            writeln!(
                w,
                "{:.12},{:.15e},{},{:.15e},{:.15e},{:.6e}",
                o.t, o.l2, hs, o.theta, o.theta_dot, o.tail
            )?;
        }
        Ok(())
    }
}

fn observe(
    t: f64,
    u: &ScalarField,
    h: &Hamiltonian,
    phi: &RealField,
    opts: &RunOptions,
) -> Result<Observation> {
    let hs_half = if opts.record_hs_half {
        Some(sobolev_norm(u, 0.5, h, opts.sobolev)?.value)
    } else {
        None
    };
    Ok(Observation {
        t,
        l2: u.norm(),
        hs_half,
        h1: sobolev_norm(u, 1.0, h, opts.sobolev)?.value,
        theta: theta_sampled(u, phi),
        theta_dot: theta_dot_commutator(u, phi, h),
        tail: tail_mass(u, opts.tail_margin)?,
    })
}

/// Propagate `i u_t = H u` from `u0`; `hook(step, t, u)` sees every state.
pub fn run_schrodinger(
    u0: &ScalarField,
    h: &Hamiltonian,
    phi: &RadialProfile,
    opts: &RunOptions,
    mut hook: impl FnMut(usize, f64, &ScalarField) -> Result<()>,
) -> Result<Trajectory> {
    u0.check_finite()?;
    h.grid().check_same(u0.grid())?;
    let steps = opts.steps()?;
    let every = opts.snapshot_every.max(1);
    let stepper = CayleyStepper::new(h, opts.dt, opts.solver)?;
    let phi_field = sample(*h.grid(), phi);
    let mut traj = Trajectory {
        dt: opts.dt,
        steps,
        observations: Vec::new(),
        theta_series: Vec::with_capacity(steps + 1),
        states: Vec::new(),
        valid: true,
        guard_violation: None,
        max_step_l2_drift: 0.0,
        max_residual: 0.0,
        total_iterations: 0,
    };
    let mut u = u0.clone();
    for n in 0..=steps {
        let t = n as f64 * opts.dt;
        traj.theta_series.push(theta_sampled(&u, &phi_field));
        hook(n, t, &u)?;
        if n % every == 0 || n == steps {
            let obs = observe(t, &u, h, &phi_field, opts)?;
            if obs.tail > opts.tail_guard && traj.valid {
                traj.valid = false;
                traj.guard_violation = Some(format!(
                    "tail mass {:.3e} exceeds guard {:.1e} at t = {t}",
                    obs.tail, opts.tail_guard
                ));
            }
            traj.observations.push(obs);
            if opts.keep_states {
                traj.states.push((t, u.clone()));
            }
        }
        if n == steps {
            break;
        }
        let before = u.norm();
        let (next, stats) = stepper.step(&u)?;
        if before > 0.0 {
            traj.max_step_l2_drift = traj.max_step_l2_drift.max((next.norm() - before).abs() / before);
        }
        traj.max_residual = traj.max_residual.max(stats.residual);
        traj.total_iterations += stats.iterations;
        u = next;
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConservationReport {
    pub l2_drift: f64,
    pub hs_half_drift: Option<f64>,
    pub h1_drift: f64,
    pub max_step_l2_drift: f64,
}

fn rel_drift(vals: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = vals.collect();
    match v.first() {
        Some(&v0) if v0 != 0.0 => v.iter().map(|x| (x - v0).abs() / v0.abs()).fold(0.0, f64::max),
        _ => 0.0,
    }
}

/// Largest relative drift of `‖u(t)‖_{Ḣ^s}` for `s ∈ {0, 1/2, 1}` over the snapshots.
pub fn conservation_monitor(traj: &Trajectory) -> ConservationReport {
    let obs = &traj.observations;
    let hs = if obs.iter().all(|o| o.hs_half.is_some()) {
        Some(rel_drift(obs.iter().map(|o| o.hs_half.unwrap_or(0.0))))
    } else {
        None
    };
    ConservationReport {
        l2_drift: rel_drift(obs.iter().map(|o| o.l2)),
        hs_half_drift: hs,
        h1_drift: rel_drift(obs.iter().map(|o| o.h1)),
        max_step_l2_drift: traj.max_step_l2_drift,
    }
}
