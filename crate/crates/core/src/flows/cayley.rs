use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{ScalarField, C64};
use crate::operators::Hamiltonian;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target on `(I + iαH) x = rhs`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 5000 }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StepStats {
    pub iterations: usize,
    /// `‖rhs − (I + iαH) x‖ / ‖rhs‖`
    pub residual: f64,
}

/// Crank–Nicolson (Cayley) propagator for `i u_t = H u`.
#[derive(Debug, Clone, Copy)]
pub struct CayleyStepper<'a> {
    h: &'a Hamiltonian,
    alpha: f64,
    opts: SolverOptions,
}

impl<'a> CayleyStepper<'a> {
    pub fn new(h: &'a Hamiltonian, dt: f64, opts: SolverOptions) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LabError::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        Ok(Self { h, alpha: 0.5 * dt, opts })
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.alpha
    }

    /// Solve `(I + iαH) u⁺ = (I − iαH) u`.
    ///
    /// Conjugate gradients on the normal equations `(I + α²H²) u⁺ = (I − iαH)² u`;
    /// the normal residual bounds the residual of the original system from above.
    pub fn step(&self, u: &ScalarField) -> Result<(ScalarField, StepStats)> {
        let a = self.alpha;
        let ia = C64::new(0.0, a);
        let hu = self.h.apply(u);
        let mut rhs = u.clone();
        rhs.axpy(-ia, &hu);
        let rhs_norm = rhs.norm();
        if rhs_norm == 0.0 {
            return Ok((rhs, StepStats::default()));
        }
        let mut b = rhs.clone();
        b.axpy(-ia, &self.h.apply(&rhs));

        let normal = |p: &ScalarField| {
            let mut out = p.clone();
            out.axpy(C64::new(a * a, 0.0), &self.h.apply(&self.h.apply(p)));
            out
        };
        // Initial guess (I − 2iαH) u, second-order accurate in α.
        let mut x = u.clone();
        x.axpy(C64::new(0.0, -2.0 * a), &hu);
        let mut r = b.clone();
        r.axpy(C64::new(-1.0, 0.0), &normal(&x));
        let mut p = r.clone();
        let mut rr = r.norm_sqr();
        let target = (self.opts.tol * rhs_norm).powi(2);
        let mut iterations = 0;
        while rr > target {
            if iterations >= self.opts.max_iter {
                return Err(LabError::SolverDiverged {
                    residual: rr.sqrt() / rhs_norm,
                    iterations,
                });
            }
            let ap = normal(&p);
            let step = rr / p.inner(&ap).re;
            x.axpy(C64::new(step, 0.0), &p);
            r.axpy(C64::new(-step, 0.0), &ap);
            let rr_new = r.norm_sqr();
            p.scale_add(C64::new(rr_new / rr, 0.0), &r);
            rr = rr_new;
            iterations += 1;
        }
        let mut res = rhs;
        res.axpy(C64::new(-1.0, 0.0), &x);
        res.axpy(-ia, &self.h.apply(&x));
        Ok((
            x,
            StepStats {
                iterations,
                residual: res.norm() / rhs_norm,
            },
        ))
    }
}

/// One Crank–Nicolson step of `i u_t = H u`.
pub fn schrodinger_step(
    u: &ScalarField,
    dt: f64,
    h: &Hamiltonian,
    opts: SolverOptions,
) -> Result<(ScalarField, StepStats)> {
    CayleyStepper::new(h, dt, opts)?.step(u)
}
