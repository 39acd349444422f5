//! Radial multipliers with closed-form derivatives, Hardy weights and the
//! auxiliary multiplier built from the coefficient perturbation.

mod profile;

pub use profile::RadialProfile;
pub(crate) use profile::norm;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{gradient_real, GridSpec, RadialIndex, RealField};
use crate::operators::{mat_vec, CoefficientField};
use crate::par;

/// Hardy weight with `|w| ≤ c1` and `r|w'| ≤ c2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyWeight {
    pub profile: RadialProfile,
    pub c1: f64,
    pub c2: f64,
    pub name: String,
}

impl HardyWeight {
    /// Named preset: `one` or `inv_bracket(s)`.
    pub fn preset(name: &str) -> Result<Self> {
        let trimmed = name.trim();
        if trimmed == "one" {
            return Ok(Self::one());
        }
        if let Some(arg) = trimmed.strip_prefix("inv_bracket(").and_then(|r| r.strip_suffix(')')) {
            let s: f64 = arg
                .trim()
                .parse()
                .map_err(|_| LabError::UnknownPreset(trimmed.to_string()))?;
            return Self::inv_bracket(s);
        }
        Err(LabError::UnknownPreset(trimmed.to_string()))
    }

    pub fn one() -> Self {
        Self {
            profile: RadialProfile::Constant { c: 1.0 },
            c1: 1.0,
            c2: 0.0,
            name: "one".into(),
        }
    }

    /// `w = ⟨x⟩^{−s}`: `c1 = 1`, `c2 = sup s r²⟨r⟩^{−s−2} = 2 (1 + 2/s)^{−s/2−1}`.
    pub fn inv_bracket(s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(LabError::InvalidParameter(format!("weight exponent must be > 0, got {s}")));
        }
        Ok(Self {
            profile: RadialProfile::InvBracket { s },
            c1: 1.0,
            c2: 2.0 * (1.0 + 2.0 / s).powf(-s / 2.0 - 1.0),
            name: format!("inv_bracket({s})"),
        })
    }

    /// `C(n, c1, c2) = 4 / ((n−2) c1 + c2)²`
    pub fn hardy_constant(&self, n: usize) -> f64 {
        let d = (n as f64 - 2.0) * self.c1 + self.c2;
        4.0 / (d * d)
    }

    /// Grid check of `|w| ≤ c1` and `|x||w'| ≤ c2`; returns the two measured sups.
    pub fn measured_bounds(&self, grid: &GridSpec) -> (f64, f64) {
        let sup_w = par::max_by_key(grid.len(), |i| self.profile.value(grid.radius(i)).abs())
            .map_or(0.0, |m| m.1);
        let sup_dw = par::max_by_key(grid.len(), |i| {
            let r = grid.radius(i);
            r * self.profile.d1(r).abs()
        })
        .map_or(0.0, |m| m.1);
        (sup_w, sup_dw)
    }
}

/// Auxiliary multiplier sampled at nodes with its closed-form gradient.
#[derive(Debug, Clone)]
pub struct AuxMultiplier {
    pub values: RealField,
    pub grad: [RealField; 3],
    /// Unbounded near the origin (value at the origin node is set to 0).
    pub singular_origin: bool,
}

impl AuxMultiplier {
    pub fn zero(grid: GridSpec) -> Self {
        Self {
            values: RealField::zeros(grid),
            grad: [RealField::zeros(grid), RealField::zeros(grid), RealField::zeros(grid)],
            singular_origin: false,
        }
    }

    /// Sample a radial profile and its gradient.
    pub fn from_profile(grid: GridSpec, p: &RadialProfile) -> Self {
        let comp = |k: usize| RealField::from_fn(grid, |x| p.gradient(x)[k]);
        Self {
            values: RealField::from_fn(grid, |x| p.value(norm(x))),
            grad: [comp(0), comp(1), comp(2)],
            singular_origin: false,
        }
    }
}

/// Decay measurement of the auxiliary multiplier.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    /// Log-log slope of the shell sups against `⟨ρ⟩` over the outer shells.
    pub far_exponent: f64,
    /// `max |ϕ| ⟨x⟩^{1+δ}` over nodes away from the origin.
    pub weighted_sup: f64,
    /// Largest `|ϕ|` on the first shell around the origin.
    pub near_origin_max: f64,
    pub declared_c: f64,
    pub declared_delta: f64,
    pub satisfied: bool,
}

/// `ϕ = −ε Ãφ` with `Ã` the divergence-form operator of `ã`, together with
/// `∇ϕ`, and the pointwise `|Aφ + ϕ − Δφ|` defect.
#[derive(Debug, Clone)]
pub struct Varphi {
    pub field: AuxMultiplier,
    pub identity_defect: f64,
    pub decay: DecayReport,
}

/// `Aφ` at a node; `None` at the origin when `φ` has a cone there.
pub fn a_phi_at(a: &CoefficientField, phi: &RadialProfile, idx: usize) -> Option<f64> {
    let g = a.grid();
    let x = g.point(idx);
    let r = norm(x);
    if let Some(m) = a.radial_model() {
        if r == 0.0 && phi.has_origin_cone() {
            return None;
        }
        let al = m.alpha(r);
        return Some(al[1] * phi.d1(r) + al[0] * phi.laplacian(r));
    }
    let hess = phi.hessian(x)?;
    let div = a.divergence(idx);
    let grad = phi.gradient(x);
    let am = a.at(idx);
    let mut v = 0.0;
    for j in 0..3 {
        v += div[j] * grad[j];
        for k in 0..3 {
            v += am[j][k] * hess[j][k];
        }
    }
    Some(v)
}

/// `Aφ` sampled at nodes (origin node set to 0 when singular).
pub fn a_phi_field(a: &CoefficientField, phi: &RadialProfile) -> RealField {
    RealField::from_index_fn_all(*a.grid(), |i| a_phi_at(a, phi, i).unwrap_or(0.0))
}

/// `a ∇(Aφ)`: closed form for radial-scalar `a`, central differences otherwise.
pub fn a_grad_a_phi(a: &CoefficientField, phi: &RadialProfile) -> [RealField; 3] {
    let g = *a.grid();
    if let Some(m) = a.radial_model() {
        let m = *m;
        return cell_averaged(g, &phi.breakpoints(), |x| {
            let r = norm(x);
            if r == 0.0 {
                return [0.0; 3];
            }
            let al = m.alpha(r);
            let d = phi.derivatives(r);
            let radial =
                al[2] * d[1] + al[1] * d[2] + al[1] * phi.laplacian(r) + al[0] * phi.laplacian_d1(r);
            x.map(|c| al[0] * radial * c / r)
        });
    }
    let ap = a_phi_field(a, phi);
    apply_matrix(a, &gradient_real(&ap))
}

/// `a ∇(Δφ)` with the closed-form radial derivative of `Δφ`.
pub fn a_grad_laplacian(a: &CoefficientField, phi: &RadialProfile) -> [RealField; 3] {
    let g = *a.grid();
    let grad = cell_averaged(g, &phi.breakpoints(), |x| {
        let r = norm(x);
        if r == 0.0 {
            [0.0; 3]
        } else {
            x.map(|c| phi.laplacian_d1(r) * c / r)
        }
    });
    apply_matrix(a, &grad)
}

/// Sub-cell points per axis used by [`cell_averaged`].
const SUBCELL: usize = 6;

/// Sample a vector field at the nodes, replacing the value by its average
/// over the node's cell wherever the cell may meet a sphere `|x| = b` across
/// which the field jumps. Keeps node quadrature second order.
pub fn cell_averaged(
    g: GridSpec,
    breakpoints: &[f64],
    f: impl Fn([f64; 3]) -> [f64; 3] + Sync + Send,
) -> [RealField; 3] {
    let h = g.h();
    let reach = 0.5 * 3f64.sqrt() * h;
    let vals: Vec<[f64; 3]> = par::collect(g.len(), |i| {
        let x = g.point(i);
        let r = norm(x);
        if !breakpoints.iter().any(|b| (r - b).abs() < reach) {
            return f(x);
        }
        let mut acc = [0.0; 3];
        let off = |s: usize| h * ((s as f64 + 0.5) / SUBCELL as f64 - 0.5);
        for a in 0..SUBCELL {
            for b in 0..SUBCELL {
                for c in 0..SUBCELL {
                    let v = f([x[0] + off(a), x[1] + off(b), x[2] + off(c)]);
                    for k in 0..3 {
                        acc[k] += v[k];
                    }
                }
            }
        }
        acc.map(|v| v / (SUBCELL * SUBCELL * SUBCELL) as f64)
    });
    let comp = |k: usize| RealField::from_vec(g, vals.iter().map(|v| v[k]).collect()).expect("len");
    [comp(0), comp(1), comp(2)]
}

fn apply_matrix(a: &CoefficientField, v: &[RealField; 3]) -> [RealField; 3] {
    let g = *a.grid();
    let prod: Vec<[f64; 3]> = par::collect(g.len(), |i| {
        mat_vec(a.at(i), &[v[0].data()[i], v[1].data()[i], v[2].data()[i]])
    });
    let comp = |k: usize| RealField::from_vec(g, prod.iter().map(|p| p[k]).collect()).expect("len");
    [comp(0), comp(1), comp(2)]
}

/// Build `ϕ = −ε Ãφ` and check its decay against `C_ε ⟨x⟩^{−(1+δ)}`.
pub fn varphi_from(
    a: &CoefficientField,
    phi: &RadialProfile,
    declared_c: f64,
    declared_delta: f64,
) -> Result<Varphi> {
    let g = *a.grid();
    let eps = a.epsilon();
    if a.tilde().is_none() || eps == 0.0 {
        let field = AuxMultiplier::zero(g);
        let decay = decay_report(&field.values, declared_c, declared_delta);
        return Ok(Varphi { field, identity_defect: 0.0, decay });
    }
    let (values, grad) = if let Some(m) = a.radial_model() {
        let prof = m.profile;
        let values = RealField::from_index_fn_all(g, |i| {
            let r = g.radius(i);
            if r == 0.0 && phi.has_origin_cone() {
                return 0.0;
            }
            let t = prof.derivatives(r);
            -eps * (t[1] * phi.d1(r) + t[0] * phi.laplacian(r))
        });
        let grad = cell_averaged(g, &phi.breakpoints(), |x| {
            let r = norm(x);
            if r == 0.0 {
                return [0.0; 3];
            }
            let t = prof.derivatives(r);
            let d = phi.derivatives(r);
            let radial =
                t[2] * d[1] + t[1] * d[2] + t[1] * phi.laplacian(r) + t[0] * phi.laplacian_d1(r);
            x.map(|c| -eps * radial * c / r)
        });
        (values, grad)
    } else {
        let tilde = a.tilde().expect("checked");
        let values = RealField::from_index_fn_all(g, |i| {
            let x = g.point(i);
            let Some(hess) = phi.hessian(x) else { return 0.0 };
            let div = a.divergence(i);
            let grad = phi.gradient(x);
            let mut v = 0.0;
            for j in 0..3 {
                v += div[j] / eps * grad[j];
                for k in 0..3 {
                    v += tilde[i][j][k] * hess[j][k];
                }
            }
            -eps * v
        });
        let grad = gradient_real(&values);
        (values, grad)
    };
    let identity_defect = (0..g.len())
        .filter_map(|i| {
            let r = g.radius(i);
            if r == 0.0 && phi.has_origin_cone() {
                return None;
            }
            let ap = a_phi_at(a, phi, i)?;
            Some((ap + values.data()[i] - phi.laplacian(r)).abs())
        })
        .fold(0.0, f64::max);
    let field = AuxMultiplier { values, grad, singular_origin: phi.has_origin_cone() };
    let decay = decay_report(&field.values, declared_c, declared_delta);
    Ok(Varphi { field, identity_defect, decay })
}

fn decay_report(values: &RealField, declared_c: f64, declared_delta: f64) -> DecayReport {
    let g = *values.grid();
    let idx = RadialIndex::new(g);
    let width = g.default_shell_width();
    let l = g.half_width();
    let h = g.h();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let n_shells = 12;
    let (lo, hi) = (l / 3.0, l - 2.0 * h);
    for s in 0..n_shells {
        let rho = lo + (hi - lo) * s as f64 / (n_shells - 1) as f64;
        if let Some(sup) = idx.shell_sup(values, rho, width) {
            if sup > 0.0 {
                xs.push((1.0 + rho * rho).sqrt().ln());
                ys.push(sup.ln());
            }
        }
    }
    let far_exponent = if xs.len() >= 2 { -fit_slope(&xs, &ys) } else { f64::INFINITY };
    let weighted_sup = (0..g.len())
        .filter(|&i| g.radius(i) > 1.5 * h)
        .map(|i| {
            let r = g.radius(i);
            values.data()[i].abs() * (1.0 + r * r).powf((1.0 + declared_delta) / 2.0)
        })
        .fold(0.0, f64::max);
    let near_origin_max = idx.shell_sup(values, h, width).unwrap_or(0.0);
    DecayReport {
        far_exponent,
        weighted_sup,
        near_origin_max,
        declared_c,
        declared_delta,
        satisfied: weighted_sup <= declared_c && far_exponent >= 1.0 + declared_delta,
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// The multipliers used by one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSet {
    pub phi: RadialProfile,
    pub psi: RadialProfile,
    /// Auxiliary multiplier for the weak identity audit on eigenstates.
    pub aux: RadialProfile,
}

impl Default for MultiplierSet {
    fn default() -> Self {
        Self {
            phi: RadialProfile::Classical,
            psi: RadialProfile::zero(),
            aux: RadialProfile::GaussianBump { amp: 1.0, width: 1.5 },
        }
    }
}

/// `φ(|x|)` sampled at nodes.
pub fn sample(grid: GridSpec, p: &RadialProfile) -> RealField {
    RealField::from_fn(grid, |x| p.value(norm(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{DecayProfile, RadialScalar};
    use approx::assert_relative_eq;

    #[test]
    fn weight_constants() {
        let one = HardyWeight::preset("one").unwrap();
        assert_eq!((one.c1, one.c2), (1.0, 0.0));
        assert_eq!(one.hardy_constant(3), 4.0);
        for s in [1.0, 2.0, 0.5] {
            let w = HardyWeight::preset(&format!("inv_bracket({s})")).unwrap();
            // Dense 1D maximization of r |w'(r)|.
            let oracle = (1..200_000)
                .map(|k| {
                    let r = k as f64 * 1e-4;
                    s * r * r * (1.0 + r * r).powf(-s / 2.0 - 1.0)
                })
                .fold(0.0, f64::max);
            assert_relative_eq!(w.c2, oracle, max_relative = 1e-8);
        }
        assert_relative_eq!(HardyWeight::inv_bracket(1.0).unwrap().c2, 0.3849, epsilon = 1e-4);
        assert!(matches!(HardyWeight::preset("cubic"), Err(LabError::UnknownPreset(_))));
    }

    #[test]
    fn weight_bounds_hold_on_grid() {
        let g = GridSpec::new(6.0, 25).unwrap();
        for w in [HardyWeight::one(), HardyWeight::inv_bracket(1.0).unwrap()] {
            let (s1, s2) = w.measured_bounds(&g);
            assert!(s1 <= w.c1 + 1e-15 && s2 <= w.c2 + 1e-15);
        }
    }

    #[test]
    fn varphi_zero_without_perturbation() {
        let g = GridSpec::new(3.0, 13).unwrap();
        let a = CoefficientField::identity(g);
        let v = varphi_from(&a, &RadialProfile::Classical, 1.0, 0.1).unwrap();
        assert!(v.field.values.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn varphi_classical_weighted_oracle() {
        // ã = ⟨x⟩^{−1} Id, φ = |x|²/2: Ãφ = 3⟨x⟩^{−1} − |x|²⟨x⟩^{−3}.
        let g = GridSpec::new(4.0, 17).unwrap();
        let eps = 0.05;
        let a = CoefficientField::radial(g, RadialScalar { epsilon: eps, profile: DecayProfile::InvBracket(1.0) }, 2.0).unwrap();
        let v = varphi_from(&a, &RadialProfile::Classical, 1.0, 0.5).unwrap();
        for i in (0..g.len()).step_by(29) {
            let r2 = g.radius(i).powi(2);
            let q = (1.0 + r2).sqrt();
            let oracle = -eps * (3.0 / q - r2 / q.powi(3));
            assert_relative_eq!(v.field.values.get(i), oracle, epsilon = 1e-14);
        }
        assert!(v.identity_defect <= 1e-12);
    }

    #[test]
    fn varphi_for_smoothing_profile_is_singular_at_origin() {
        let g = GridSpec::new(8.0, 33).unwrap();
        let a = CoefficientField::radial(g, RadialScalar { epsilon: 0.05, profile: DecayProfile::InvBracket(1.0) }, 2.0).unwrap();
        let phi = RadialProfile::smoothing(1.0, 0.5).unwrap();
        let v = varphi_from(&a, &phi, 1.0, 0.5).unwrap();
        assert!(v.field.singular_origin);
        assert!(v.identity_defect <= 1e-12);
        assert!(v.decay.far_exponent > 1.5, "{:?}", v.decay);
    }

    #[test]
    fn a_phi_closed_form_matches_grid_operator() {
        // Second-order agreement: the error at a fixed point drops ~4x when h halves.
        let p = RadialProfile::GaussianBump { amp: 1.0, width: 1.0 };
        let model = RadialScalar { epsilon: 0.2, profile: DecayProfile::InvBracket(1.0) };
        let err = |n: usize| {
            let g = GridSpec::new(3.0, n).unwrap();
            let a = CoefficientField::radial(g, model, 2.0).unwrap();
            let grid_val = crate::operators::apply_a_real(&sample(g, &p), &a).unwrap();
            let c = (n - 1) / 2;
            let s = (n - 1) / 12;
            let i = g.index(c + s, c - s, c);
            (a_phi_at(&a, &p, i).unwrap() - grid_val.get(i)).abs()
        };
        let (e1, e2) = (err(25), err(49));
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "{e1} {e2}");
    }
}
