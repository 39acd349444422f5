use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{ScalarField, C64};
use crate::operators::Hamiltonian;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Target `‖Hx − λx‖ / max(1, |λ|)` for unit `x`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 4000, seed: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: ScalarField,
    pub residual: f64,
}

/// Lowest `count` eigenpairs of `H` by block LOBPCG with one guard vector.
///
/// The trial basis `[X, W, P]` is orthonormalized explicitly before each
/// Rayleigh–Ritz step; nearly dependent directions are dropped.
pub fn eigenmodes(h: &Hamiltonian, count: usize, opts: EigenOptions) -> Result<Vec<Eigenpair>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let g = *h.grid();
    let m = count + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sigma2 = (g.half_width() / 3.0).powi(2);
    let mut x: Vec<ScalarField> = (0..m)
        .map(|_| {
            let noise: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            ScalarField::from_index_fn(g, |i| {
                let r2 = g.radius(i).powi(2);
                C64::new((1.0 + 0.5 * noise[i]) * (-r2 / (2.0 * sigma2)).exp(), 0.0)
            })
        })
        .collect();
    x = orthonormalize(Vec::new(), x);
    let hx0: Vec<ScalarField> = x.iter().map(|v| h.apply(v)).collect();
    let (mut x, c0) = rayleigh_ritz(&x, &hx0, m);
    let mut hx = combine(&hx0, &c0);
    let mut p: Vec<ScalarField> = Vec::new();
    let mut last_res = vec![f64::INFINITY; m];
    let mut fresh = true;
    for it in 0..opts.max_iter {
        if it % 25 == 24 {
            hx = x.iter().map(|v| h.apply(v)).collect();
            fresh = true;
        }
        let lambdas: Vec<f64> = x.iter().zip(&hx).map(|(v, hv)| v.inner(hv).re).collect();
        let w: Vec<ScalarField> = x
            .iter()
            .zip(&hx)
            .zip(&lambdas)
            .map(|((v, hv), &l)| {
                let mut r = hv.clone();
                r.axpy(C64::new(-l, 0.0), v);
                r
            })
            .collect();
        last_res = w
            .iter()
            .zip(&lambdas)
            .map(|(r, l)| r.norm() / l.abs().max(1.0))
            .collect();
        if last_res[..count].iter().all(|&r| r <= opts.tol) {
            if !fresh {
                // Confirm against a fresh application of H.
                hx = x.iter().map(|v| h.apply(v)).collect();
                fresh = true;
                continue;
            }
            return Ok((0..count)
                .map(|i| Eigenpair { value: lambdas[i], vector: x[i].clone(), residual: last_res[i] })
                .collect());
        }
        let mut extra: Vec<ScalarField> = w;
        extra.append(&mut p);
        let basis = orthonormalize(x.clone(), extra);
        let mut hb = hx.clone();
        hb.extend(basis[m..].iter().map(|v| h.apply(v)));
        let (nx, coeffs) = rayleigh_ritz(&basis, &hb, m);
        // New search directions: components of the Ritz vectors outside span(X).
        p = (0..m)
            .map(|c| {
                let mut acc = ScalarField::zeros(g);
                for (j, b) in basis.iter().enumerate().skip(m) {
                    acc.axpy(coeffs[(j, c)], b);
                }
                acc
            })
            .filter(|v| v.norm() > 1e-14)
            .collect();
        hx = combine(&hb, &coeffs);
        fresh = false;
        x = nx;
    }
    Err(LabError::SolverDiverged {
        residual: last_res[..count].iter().cloned().fold(0.0, f64::max),
        iterations: opts.max_iter,
    })
}

/// `Σ_r coeffs[r, c] · vs[r]` for every column `c`.
fn combine(vs: &[ScalarField], coeffs: &DMatrix<C64>) -> Vec<ScalarField> {
    let g = *vs[0].grid();
    (0..coeffs.ncols())
        .map(|c| {
            let mut acc = ScalarField::zeros(g);
            for (r, v) in vs.iter().enumerate() {
                acc.axpy(coeffs[(r, c)], v);
            }
            acc
        })
        .collect()
}

/// Orthonormal basis for `span(keep ∪ extra)`, keeping `keep` (already orthonormal) first.
fn orthonormalize(keep: Vec<ScalarField>, extra: Vec<ScalarField>) -> Vec<ScalarField> {
    let mut out = keep;
    for mut v in extra {
        let n0 = v.norm();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &out {
                let c = b.inner(&v);
                v.axpy(-c, b);
            }
        }
        let n = v.norm();
        if n > 1e-10 * n0 {
            out.push(v.scaled(C64::new(1.0 / n, 0.0)));
        }
    }
    out
}

/// Lowest `m` Ritz vectors of `H` on an orthonormal basis, with the coefficient matrix.
fn rayleigh_ritz(basis: &[ScalarField], hb: &[ScalarField], m: usize) -> (Vec<ScalarField>, DMatrix<C64>) {
    let k = basis.len();
    let mut a = DMatrix::from_fn(k, k, |i, j| basis[i].inner(&hb[j]));
    let at = a.adjoint();
    a = (a + at) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let coeffs = DMatrix::from_fn(k, m.min(k), |r, c| eig.eigenvectors[(r, order[c])]);
    (combine(basis, &coeffs), coeffs)
}
