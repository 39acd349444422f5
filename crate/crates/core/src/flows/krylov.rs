use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{ScalarField, C64};
use crate::operators::Hamiltonian;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevOptions {
    /// Relative tolerance on `⟨f, H^s f⟩`.
    pub tol: f64,
    pub krylov_dim: usize,
}

impl Default for SobolevOptions {
    fn default() -> Self {
        Self { tol: 1e-10, krylov_dim: 600 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevNorm {
    /// `⟨f, H^s f⟩^{1/2}`
    pub value: f64,
    pub iterations: usize,
    /// Shift added to `H` because `V` takes negative values.
    pub shift: f64,
}

/// Shift making `H + shift ≥ 0`: `max(0, −min V)`, since the kinetic part is nonnegative.
pub fn positivity_shift(h: &Hamiltonian) -> f64 {
    (-h.potentials().min_v()).max(0.0)
}

/// `‖f‖_{Ḣ^s} = ⟨f, H^s f⟩^{1/2}`.
///
/// `s ∈ {0, 1, 2}` are evaluated directly; other orders use Gauss quadrature
/// from the Lanczos tridiagonalization started at `f`
/// (`⟨f, g(H) f⟩ ≈ ‖f‖² e₁ᵀ g(T_k) e₁`), checked every ten steps. Two Lanczos
/// vectors are kept; no basis is stored.
pub fn sobolev_norm(f: &ScalarField, s: f64, h: &Hamiltonian, opts: SobolevOptions) -> Result<SobolevNorm> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(LabError::InvalidParameter(format!("order must be >= 0, got {s}")));
    }
    let shift = positivity_shift(h);
    let nf = f.norm();
    if nf == 0.0 {
        return Ok(SobolevNorm { value: 0.0, iterations: 0, shift });
    }
    if s == 0.0 {
        return Ok(SobolevNorm { value: nf, iterations: 0, shift });
    }
    if s == 1.0 {
        let q = h.energy(f) + shift * nf * nf;
        return Ok(SobolevNorm { value: q.max(0.0).sqrt(), iterations: 1, shift });
    }
    if s == 2.0 {
        let mut hf = h.apply(f);
        hf.axpy(C64::new(shift, 0.0), f);
        return Ok(SobolevNorm { value: hf.norm(), iterations: 1, shift });
    }
    match lanczos_quadrature(f, s, h, shift, opts.tol, opts.krylov_dim) {
        Ok((q, it)) => Ok(SobolevNorm { value: (q * nf * nf).sqrt(), iterations: it, shift }),
        Err(_) => {
            let (q, it) = lanczos_quadrature(f, s, h, shift, opts.tol, 2 * opts.krylov_dim)?;
            Ok(SobolevNorm { value: (q * nf * nf).sqrt(), iterations: it, shift })
        }
    }
}

/// `e₁ᵀ (T_k + shift)^s e₁` for the Lanczos matrix of `H` started at `f / ‖f‖`.
fn lanczos_quadrature(
    f: &ScalarField,
    s: f64,
    h: &Hamiltonian,
    shift: f64,
    tol: f64,
    max_dim: usize,
) -> Result<(f64, usize)> {
    let mut q = f.scaled(C64::new(1.0 / f.norm(), 0.0));
    let mut q_prev: Option<ScalarField> = None;
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut beta_prev = 0.0;
    let mut last: Option<f64> = None;
    let scale = h.spectral_upper_bound() + shift;
    for k in 1..=max_dim {
        let mut w = h.apply(&q);
        w.axpy(C64::new(shift, 0.0), &q);
        if let Some(p) = &q_prev {
            w.axpy(C64::new(-beta_prev, 0.0), p);
        }
        let alpha = q.inner(&w).re;
        w.axpy(C64::new(-alpha, 0.0), &q);
        let beta = w.norm();
        alphas.push(alpha);
        let breakdown = beta <= 1e-13 * scale;
        if k % 10 == 0 || breakdown || k == max_dim {
            let est = gauss_estimate(&alphas, &betas, s);
            if breakdown {
                return Ok((est, k));
            }
            if let Some(prev) = last {
                if (est - prev).abs() <= tol * est.abs() {
                    return Ok((est, k));
                }
            }
            last = Some(est);
        }
        betas.push(beta);
        let next = w.scaled(C64::new(1.0 / beta, 0.0));
        q_prev = Some(std::mem::replace(&mut q, next));
        beta_prev = beta;
    }
    Err(LabError::KrylovBreakdown(format!(
        "quadrature for order {s} not converged in {max_dim} Lanczos steps"
    )))
}

fn gauss_estimate(alphas: &[f64], betas: &[f64], s: f64) -> f64 {
    let k = alphas.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    (0..k)
        .map(|i| {
            let w = eig.eigenvectors[(0, i)];
            w * w * eig.eigenvalues[i].max(0.0).powf(s)
        })
        .sum()
}

/// Smallest Ritz value of `H` after `steps` Lanczos iterations from `start`.
pub fn lowest_ritz_value(start: &ScalarField, h: &Hamiltonian, steps: usize) -> f64 {
    let mut q = start.scaled(C64::new(1.0 / start.norm(), 0.0));
    let mut q_prev: Option<ScalarField> = None;
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut beta_prev = 0.0;
    for _ in 0..steps {
        let mut w = h.apply(&q);
        if let Some(p) = &q_prev {
            w.axpy(C64::new(-beta_prev, 0.0), p);
        }
        let alpha = q.inner(&w).re;
        w.axpy(C64::new(-alpha, 0.0), &q);
        let beta = w.norm();
        alphas.push(alpha);
        if beta < 1e-14 {
            break;
        }
        betas.push(beta);
        let next = w.scaled(C64::new(1.0 / beta, 0.0));
        q_prev = Some(std::mem::replace(&mut q, next));
        beta_prev = beta;
    }
    betas.truncate(alphas.len().saturating_sub(1));
    let k = alphas.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(t).eigenvalues.min()
}
