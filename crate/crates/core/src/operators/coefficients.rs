use nalgebra::{Matrix3, SymmetricEigen};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::{central_diff_real, GridSpec};
use crate::par;

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Radial shape `g(r)` of a scalar perturbation `ã = g(|x|) Id`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DecayProfile {
    Zero,
    Constant,
    /// `⟨r⟩^{-p}`
    InvBracket(f64),
}

impl DecayProfile {
    /// `[g, g', g'', g''']` at radius `r`.
    pub fn derivatives(&self, r: f64) -> [f64; 4] {
        match *self {
            DecayProfile::Zero => [0.0; 4],
            DecayProfile::Constant => [1.0, 0.0, 0.0, 0.0],
            DecayProfile::InvBracket(p) => {
                let q = 1.0 + r * r;
                let g = q.powf(-p / 2.0);
                let g1 = -p * r * g / q;
                let g2 = -p * g / q + p * (p + 2.0) * r * r * g / (q * q);
                let g3 = 3.0 * p * (p + 2.0) * r * g / (q * q)
                    - p * (p + 2.0) * (p + 4.0) * r.powi(3) * g / (q * q * q);
                [g, g1, g2, g3]
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivatives(r)[0]
    }
}

/// `a = (1 + ε g(|x|)) Id` described in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialScalar {
    pub epsilon: f64,
    pub profile: DecayProfile,
}

impl RadialScalar {
    /// `[α, α', α'', α''']` for `α = 1 + ε g`.
    pub fn alpha(&self, r: f64) -> [f64; 4] {
        let g = self.profile.derivatives(r);
        [
            1.0 + self.epsilon * g[0],
            self.epsilon * g[1],
            self.epsilon * g[2],
            self.epsilon * g[3],
        ]
    }
}

/// Symmetric coefficient matrix `a(x)` sampled at nodes, with first derivatives.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    grid: GridSpec,
    mats: Vec<Mat3>,
    /// `deriv[idx][l][j][k] = ∂_l a_jk`
    deriv: Vec<[Mat3; 3]>,
    epsilon: f64,
    /// `ã` at nodes when `a = Id + ε ã` is declared.
    tilde: Option<Vec<Mat3>>,
    radial: Option<RadialScalar>,
    declared_c: f64,
}

impl CoefficientField {
    /// Flat metric `a = Id`.
    pub fn identity(grid: GridSpec) -> Self {
        Self::radial(grid, RadialScalar { epsilon: 0.0, profile: DecayProfile::Zero }, 1.0)
            .expect("identity is elliptic")
    }

    /// `a = (1 + ε g(|x|)) Id` with closed-form derivatives.
    pub fn radial(grid: GridSpec, model: RadialScalar, declared_c: f64) -> Result<Self> {
        let mats = par::collect(grid.len(), |i| {
            let al = model.alpha(grid.radius(i))[0];
            scale(&IDENTITY, al)
        });
        let deriv = par::collect(grid.len(), |i| {
            let r = grid.radius(i);
            let x = grid.point(i);
            let d = model.alpha(r)[1];
            let mut out = [[[0.0; 3]; 3]; 3];
            if r > 0.0 {
                for (l, o) in out.iter_mut().enumerate() {
                    *o = scale(&IDENTITY, d * x[l] / r);
                }
            }
            out
        });
        let tilde = par::collect(grid.len(), |i| {
            scale(&IDENTITY, model.profile.value(grid.radius(i)))
        });
        let field = Self {
            grid,
            mats,
            deriv,
            epsilon: model.epsilon,
            tilde: Some(tilde),
            radial: Some(model),
            declared_c,
        };
        field.check_ellipticity()?;
        Ok(field)
    }

    /// Coefficients from a closure; derivatives by fourth-order differences of the closure.
    pub fn from_fn(
        grid: GridSpec,
        f: impl Fn([f64; 3]) -> Mat3 + Sync + Send,
        declared_c: f64,
    ) -> Result<Self> {
        let step = 1e-3;
        let mats = par::collect(grid.len(), |i| symmetrize(&f(grid.point(i))));
        let deriv = par::collect(grid.len(), |i| {
            let x = grid.point(i);
            let mut out = [[[0.0; 3]; 3]; 3];
            for (l, o) in out.iter_mut().enumerate() {
                let at = |s: f64| {
                    let mut y = x;
                    y[l] += s * step;
                    symmetrize(&f(y))
                };
                let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
                for j in 0..3 {
                    for k in 0..3 {
                        o[j][k] = (8.0 * (p1[j][k] - m1[j][k]) - (p2[j][k] - m2[j][k]))
                            / (12.0 * step);
                    }
                }
            }
            out
        });
        let field = Self {
            grid,
            mats,
            deriv,
            epsilon: 0.0,
            tilde: None,
            radial: None,
            declared_c,
        };
        field.check_ellipticity()?;
        Ok(field)
    }

    /// Node-sampled coefficients with central-difference derivatives.
    pub fn from_tabulated(grid: GridSpec, mats: Vec<Mat3>, declared_c: f64) -> Result<Self> {
        if mats.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "expected {} matrices, got {}",
                grid.len(),
                mats.len()
            )));
        }
        for (i, m) in mats.iter().enumerate() {
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(LabError::NonFinite { index: i, point: grid.point(i) });
            }
            if !is_symmetric(m) {
                return Err(LabError::Asymmetric(i));
            }
        }
        let comp: Vec<Vec<f64>> = (0..9)
            .map(|c| mats.iter().map(|m| m[c / 3][c % 3]).collect())
            .collect();
        let deriv = par::collect(grid.len(), |i| {
            let mut out = [[[0.0; 3]; 3]; 3];
            for (l, o) in out.iter_mut().enumerate() {
                for c in 0..9 {
                    o[c / 3][c % 3] = one_sided_aware_diff(&grid, &comp[c], i, l);
                }
            }
            out
        });
        let field = Self {
            grid,
            mats,
            deriv,
            epsilon: 0.0,
            tilde: None,
            radial: None,
            declared_c,
        };
        field.check_ellipticity()?;
        Ok(field)
    }

    /// Declare the decomposition `a = Id + ε ã`; `ã` is recovered from the stored matrices.
    pub fn with_perturbation(mut self, epsilon: f64) -> Result<Self> {
        if epsilon == 0.0 || !epsilon.is_finite() {
            return Err(LabError::InvalidParameter("epsilon must be finite and nonzero".into()));
        }
        let tilde = self
            .mats
            .iter()
            .map(|m| {
                let mut t = [[0.0; 3]; 3];
                for j in 0..3 {
                    for k in 0..3 {
                        t[j][k] = (m[j][k] - IDENTITY[j][k]) / epsilon;
                    }
                }
                t
            })
            .collect();
        self.epsilon = epsilon;
        self.tilde = Some(tilde);
        Ok(self)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &Mat3 {
        &self.mats[idx]
    }

    /// `∂_l a_jk` at a node, indexed `[l][j][k]`.
    #[inline]
    pub fn deriv(&self, idx: usize) -> &[Mat3; 3] {
        &self.deriv[idx]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tilde(&self) -> Option<&[Mat3]> {
        self.tilde.as_deref()
    }

    pub fn radial_model(&self) -> Option<&RadialScalar> {
        self.radial.as_ref()
    }

    pub fn declared_c(&self) -> f64 {
        self.declared_c
    }

    pub fn is_identity(&self) -> bool {
        self.mats.iter().all(|m| *m == IDENTITY) && self.deriv.iter().flatten().flatten().flatten().all(|&v| v == 0.0)
    }

    /// Smallest `C` with `C^{-1} ≤ eig(a(x)) ≤ C` over all nodes.
    pub fn measured_c(&self) -> f64 {
        let per_node = par::collect(self.grid.len(), |i| {
            let (lo, hi) = eig_bounds(&self.mats[i]);
            (1.0 / lo).max(hi)
        });
        per_node.into_iter().fold(1.0, f64::max)
    }

    /// Reject nodes whose eigenvalues leave `[1/C, C]` for the declared `C`.
    pub fn check_ellipticity(&self) -> Result<()> {
        let c = self.declared_c;
        let worst = par::max_by_key(self.grid.len(), |i| {
            let (lo, hi) = eig_bounds(&self.mats[i]);
            if lo <= 0.0 {
                f64::INFINITY
            } else {
                (1.0 / lo).max(hi)
            }
        });
        match worst {
            Some((idx, measured)) if measured > c * (1.0 + 1e-12) => Err(LabError::Ellipticity {
                measured,
                declared: c,
                point: self.grid.point(idx),
            }),
            _ => Ok(()),
        }
    }

    /// `∂_j a_jk` at a node.
    pub fn divergence(&self, idx: usize) -> [f64; 3] {
        let d = &self.deriv[idx];
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| d[j][j][k]).sum();
        }
        out
    }
}

fn one_sided_aware_diff(grid: &GridSpec, data: &[f64], idx: usize, axis: usize) -> f64 {
    let h = grid.h();
    match (grid.neighbor(idx, axis, true), grid.neighbor(idx, axis, false)) {
        (Some(p), Some(m)) => (data[p] - data[m]) / (2.0 * h),
        (Some(p), None) => (data[p] - data[idx]) / h,
        (None, Some(m)) => (data[idx] - data[m]) / h,
        (None, None) => central_diff_real(grid, data, idx, axis),
    }
}

pub fn scale(m: &Mat3, s: f64) -> Mat3 {
    let mut out = *m;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

pub fn symmetrize(m: &Mat3) -> Mat3 {
    let mut out = *m;
    for j in 0..3 {
        for k in 0..j {
            let s = 0.5 * (m[j][k] + m[k][j]);
            out[j][k] = s;
            out[k][j] = s;
        }
    }
    out
}

fn is_symmetric(m: &Mat3) -> bool {
    (0..3).all(|j| (0..3).all(|k| m[j][k] == m[k][j]))
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn eig_bounds(m: &Mat3) -> (f64, f64) {
    let mat = Matrix3::from_fn(|j, k| m[j][k]);
    let eig = SymmetricEigen::new(mat);
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// `m v` for a real matrix and real vector.
#[inline]
pub fn mat_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inv_bracket_derivatives_match_differences() {
        let p = DecayProfile::InvBracket(1.3);
        let s = 1e-4;
        for &r in &[0.0, 0.4, 1.0, 2.7] {
            let d = p.derivatives(r);
            for n in 0..3 {
                let fd = (p.derivatives(r + s)[n] - p.derivatives(r - s)[n]) / (2.0 * s);
                assert_relative_eq!(d[n + 1], fd, epsilon = 1e-7, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn identity_is_elliptic_with_c_one() {
        let g = GridSpec::new(2.0, 9).unwrap();
        let a = CoefficientField::identity(g);
        assert_eq!(a.measured_c(), 1.0);
        assert!(a.is_identity());
    }

    #[test]
    fn ellipticity_violation_is_rejected() {
        let g = GridSpec::new(2.0, 9).unwrap();
        let err = CoefficientField::from_fn(g, |_| scale(&IDENTITY, 3.0), 2.0).unwrap_err();
        assert!(matches!(err, LabError::Ellipticity { .. }));
    }

    #[test]
    fn closure_derivatives_match_radial_closed_form() {
        let g = GridSpec::new(3.0, 13).unwrap();
        let model = RadialScalar { epsilon: 0.2, profile: DecayProfile::InvBracket(1.0) };
        let a = CoefficientField::radial(g, model, 2.0).unwrap();
        let b = CoefficientField::from_fn(
            g,
            |x| scale(&IDENTITY, model.alpha((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())[0]),
            2.0,
        )
        .unwrap();
        for i in (0..g.len()).step_by(37) {
            for l in 0..3 {
                assert_relative_eq!(a.deriv(i)[l][0][0], b.deriv(i)[l][0][0], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn asymmetric_table_is_rejected() {
        let g = GridSpec::new(1.0, 9).unwrap();
        let mut mats = vec![IDENTITY; g.len()];
        mats[5][0][1] = 0.1;
        assert!(matches!(
            CoefficientField::from_tabulated(g, mats, 2.0),
            Err(LabError::Asymmetric(5))
        ));
    }

    #[test]
    fn perturbation_recovers_tilde() {
        let g = GridSpec::new(1.0, 9).unwrap();
        let a = CoefficientField::from_fn(g, |_| scale(&IDENTITY, 1.1), 2.0)
            .unwrap()
            .with_perturbation(0.1)
            .unwrap();
        assert_relative_eq!(a.tilde().unwrap()[0][1][1], 1.0, epsilon = 1e-12);
    }
}
