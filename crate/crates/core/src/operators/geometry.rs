use super::coefficients::{mat_vec, CoefficientField, Mat3};
use super::potentials::Potentials;
use crate::error::Result;
use crate::fields::{GridSpec, RealField, ScalarField, VectorField, C64};
use crate::multipliers::RadialProfile;
use crate::par;

/// Sign applied to `a_lm x̂_l B_mk` in [`tangential_field_b`].
///
/// Fixed by the calibration test `magnetic_orientation_calibration` in the
/// virial audit: with `−1` (the contraction against `∂_k b_m − ∂_m b_k`) the
/// expanded second derivative of the weighted mass misses the commutator
/// value by twice the magnetic term.
pub const MAGNETIC_ORIENTATION: f64 = 1.0;

pub type RealVector = [RealField; 3];

/// Antisymmetric `B_jk = ∂_j b_k − ∂_k b_j` at every node.
#[derive(Debug, Clone)]
pub struct MagneticTwoForm {
    grid: GridSpec,
    data: Vec<Mat3>,
}

impl MagneticTwoForm {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &Mat3 {
        &self.data[idx]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `a(v, w) = a_jk v̄_j w_k` pointwise.
pub fn bilinear_a(v: &VectorField, w: &VectorField, a: &CoefficientField) -> Result<ScalarField> {
    v.grid().check_same(w.grid())?;
    v.grid().check_same(a.grid())?;
    let g = *v.grid();
    let data = par::collect(g.len(), |i| bilinear_at(a.at(i), &v.at(i), &w.at(i)));
    ScalarField::from_vec(g, data)
}

#[inline]
pub fn bilinear_at(a: &Mat3, v: &[C64; 3], w: &[C64; 3]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for j in 0..3 {
        for k in 0..3 {
            s += v[j].conj() * w[k] * a[j][k];
        }
    }
    s
}

pub fn magnetic_2form(pot: &Potentials) -> MagneticTwoForm {
    let g = *pot.grid();
    let data = par::collect(g.len(), |i| {
        let jac = pot.jacobian(i);
        let mut m = [[0.0; 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                m[j][k] = jac[j][k] - jac[k][j];
            }
        }
        m
    });
    MagneticTwoForm { grid: g, data }
}

#[inline]
pub(crate) fn unit(x: [f64; 3]) -> Option<[f64; 3]> {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    (r > 0.0).then(|| [x[0] / r, x[1] / r, x[2] / r])
}

/// `(B^a_τ)_k = σ a_lm x̂_l B_mk` at a node, zero at the origin, with
/// `σ =` [`MAGNETIC_ORIENTATION`].
pub fn tangential_b_at(a: &Mat3, two_form: &Mat3, x: [f64; 3], orientation: f64) -> [f64; 3] {
    let Some(xh) = unit(x) else { return [0.0; 3] };
    let ax = mat_vec(a, &xh);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        *o = orientation * (0..3).map(|m| ax[m] * two_form[m][k]).sum::<f64>();
    }
    out
}

/// Twisted tangential field `B^a_τ`; the origin node is set to zero.
pub fn tangential_field_b(a: &CoefficientField, pot: &Potentials) -> Result<RealVector> {
    tangential_field_b_oriented(a, pot, MAGNETIC_ORIENTATION)
}

/// [`tangential_field_b`] with an explicit orientation sign, for calibration.
pub fn tangential_field_b_oriented(
    a: &CoefficientField,
    pot: &Potentials,
    orientation: f64,
) -> Result<RealVector> {
    a.grid().check_same(pot.grid())?;
    let g = *a.grid();
    let b = magnetic_2form(pot);
    let vals: Vec<[f64; 3]> =
        par::collect(g.len(), |i| tangential_b_at(a.at(i), b.at(i), g.point(i), orientation));
    Ok(split3(g, &vals))
}

/// `V^a_r = a_jk x̂_j ∂_k V`; zero at the origin.
pub fn radial_derivative_v(a: &CoefficientField, pot: &Potentials) -> Result<RealField> {
    a.grid().check_same(pot.grid())?;
    let g = *a.grid();
    Ok(RealField::from_index_fn_all(g, |i| {
        let Some(xh) = unit(g.point(i)) else { return 0.0 };
        let ax = mat_vec(a.at(i), &xh);
        let dv = pot.grad_v(i);
        ax[0] * dv[0] + ax[1] * dv[1] + ax[2] * dv[2]
    }))
}

/// Radial/tangential split of `|a g|²` with respect to `a`:
/// `(|a(x̂, g)|², |a g|² − |a(x̂, g)|²)`, the second clamped at zero.
pub fn radial_tangential_split(g: &VectorField, a: &CoefficientField) -> Result<(RealField, RealField)> {
    g.grid().check_same(a.grid())?;
    let grid = *g.grid();
    let pairs: Vec<(f64, f64)> = par::collect(grid.len(), |i| split_at(a.at(i), &g.at(i), grid.point(i)));
    let rad = RealField::from_vec(grid, pairs.iter().map(|p| p.0).collect())?;
    let tan = RealField::from_vec(grid, pairs.iter().map(|p| p.1).collect())?;
    Ok((rad, tan))
}

pub fn split_at(a: &Mat3, g: &[C64; 3], x: [f64; 3]) -> (f64, f64) {
    let ag = mat_c(a, g);
    let total: f64 = ag.iter().map(|z| z.norm_sqr()).sum();
    let Some(xh) = unit(x) else { return (0.0, 0.0) };
    let radial = (xh[0] * ag[0] + xh[1] * ag[1] + xh[2] * ag[2]).norm_sqr();
    (radial, (total - radial).max(0.0))
}

#[inline]
pub fn mat_c(a: &Mat3, v: &[C64; 3]) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for (j, o) in out.iter_mut().enumerate() {
        *o = v[0] * a[j][0] + v[1] * a[j][1] + v[2] * a[j][2];
    }
    out
}

/// `Re ḡ_k (a_kj a_lm ∂_j∂_m φ) g_l`; zero where the Hessian is undefined.
pub fn distorted_hessian_form(g: &VectorField, phi: &RadialProfile, a: &CoefficientField) -> Result<RealField> {
    g.grid().check_same(a.grid())?;
    let grid = *g.grid();
    Ok(RealField::from_index_fn_all(grid, |i| {
        distorted_hessian_at(a.at(i), phi, grid.point(i), &g.at(i))
    }))
}

pub fn distorted_hessian_at(a: &Mat3, phi: &RadialProfile, x: [f64; 3], g: &[C64; 3]) -> f64 {
    let Some(hess) = phi.hessian(x) else { return 0.0 };
    // a g, then contract with the Hessian.
    let ag = mat_c(a, g);
    let mut s = C64::new(0.0, 0.0);
    for j in 0..3 {
        for m in 0..3 {
            s += ag[j].conj() * ag[m] * hess[j][m];
        }
    }
    s.re
}

pub(crate) fn split3(g: GridSpec, vals: &[[f64; 3]]) -> RealVector {
    let comp = |k: usize| RealField::from_vec(g, vals.iter().map(|v| v[k]).collect()).expect("len");
    [comp(0), comp(1), comp(2)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::gradient_real;
    use crate::operators::coefficients::{scale, IDENTITY};
    use crate::operators::potentials::{ElectricPreset, MagneticPreset};
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng) -> Mat3 {
        let m = Matrix3::from_fn(|_, _| rng.random_range(-0.3..0.3));
        let s = Matrix3::identity() + m * m.transpose();
        [[s[(0, 0)], s[(0, 1)], s[(0, 2)]], [s[(1, 0)], s[(1, 1)], s[(1, 2)]], [s[(2, 0)], s[(2, 1)], s[(2, 2)]]]
    }

    fn random_c3(rng: &mut ChaCha8Rng) -> [C64; 3] {
        [0, 1, 2].map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn bilinear_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_spd(&mut rng);
            let (v, w) = (random_c3(&mut rng), random_c3(&mut rng));
            let am = nalgebra::Matrix3::from_fn(|j, k| C64::new(a[j][k], 0.0));
            let vv = Vector3::from_iterator(v.iter().copied());
            let ww = Vector3::from_iterator(w.iter().copied());
            let oracle = vv.conjugate().transpose() * am * ww;
            assert_relative_eq!((bilinear_at(&a, &v, &w) - oracle[(0, 0)]).norm(), 0.0, epsilon = 1e-14);
        }
        let e = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert_relative_eq!(bilinear_at(&scale(&IDENTITY, 2.0), &e, &e).re, 2.0);
    }

    #[test]
    fn two_form_of_rotating_potential() {
        let g = GridSpec::new(2.0, 9).unwrap();
        let p = Potentials::from_presets(g, MagneticPreset::Rotating { strength: 1.0 }, ElectricPreset::Zero);
        let b = magnetic_2form(&p);
        let m = b.at(40);
        assert_relative_eq!(m[0][1], 1.0, epsilon = 1e-10);
        assert_relative_eq!(m[1][0], -1.0, epsilon = 1e-10);
        assert_relative_eq!(m[0][2].abs() + m[1][2].abs(), 0.0, epsilon = 1e-10);
        assert_eq!(magnetic_2form(&Potentials::zero(g)).max_abs(), 0.0);
    }

    #[test]
    fn two_form_of_gradient_vanishes() {
        let g = GridSpec::new(3.0, 25).unwrap();
        let chi = RealField::from_fn(g, |x| (0.7 * x[0]).sin() * (0.4 * x[1] + 0.2 * x[2]).cos());
        let b = gradient_real(&chi);
        let p = Potentials::from_tabulated(b, RealField::zeros(g)).unwrap();
        let two = magnetic_2form(&p);
        let interior_max = (0..g.len())
            .filter(|&i| g.ijk(i).iter().all(|&c| c >= 2 && c + 2 < g.n()))
            .map(|i| two.at(i).iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())))
            .fold(0.0, f64::max);
        assert!(interior_max < 1e-12, "{interior_max}");
    }

    #[test]
    fn tangential_contraction_oracle() {
        let mut b = [[0.0; 3]; 3];
        b[0][1] = 1.0;
        b[1][0] = -1.0;
        let raw = tangential_b_at(&IDENTITY, &b, [0.0, 1.0, 0.0], 1.0);
        assert_eq!(raw, [-1.0, 0.0, 0.0]);
        let calibrated = tangential_b_at(&IDENTITY, &b, [0.0, 1.0, 0.0], MAGNETIC_ORIENTATION);
        assert_eq!(calibrated, [-MAGNETIC_ORIENTATION, 0.0, 0.0]);
        assert_eq!(tangential_b_at(&IDENTITY, &b, [0.0; 3], 1.0), [0.0; 3]);
    }

    #[test]
    fn radial_derivative_of_regularized_coulomb() {
        let g = GridSpec::new(4.0, 17).unwrap();
        let a = CoefficientField::identity(g);
        let p = Potentials::from_fns(g, |_| [0.0; 3], |x| 1.0 / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + 1e-12).sqrt());
        let vr = radial_derivative_v(&a, &p).unwrap();
        let i = g.index(12, 9, 5);
        let r = g.radius(i);
        assert_relative_eq!(vr.get(i), -1.0 / (r * r), max_relative = 1e-8);
        let c = Potentials::from_fns(g, |_| [0.0; 3], |_| 2.0);
        assert_eq!(radial_derivative_v(&a, &c).unwrap().get(i), 0.0);
    }

    #[test]
    fn split_is_pythagorean_and_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_spd(&mut rng);
            let gv = random_c3(&mut rng);
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let (rad, tan) = split_at(&a, &gv, x);
            let am = Matrix3::from_fn(|j, k| C64::new(a[j][k], 0.0));
            let agv = am * Vector3::from_iterator(gv.iter().copied());
            let total = agv.norm_squared();
            assert_relative_eq!(rad + tan, total, max_relative = 1e-13);
            let xh = unit(x).unwrap();
            let dense_rad = (agv[0] * xh[0] + agv[1] * xh[1] + agv[2] * xh[2]).norm_sqr();
            assert_relative_eq!(rad, dense_rad, max_relative = 1e-12);
        }
    }

    #[test]
    fn hessian_form_identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gv = random_c3(&mut rng);
        let x = [0.4, -0.3, 1.1];
        let total: f64 = gv.iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(distorted_hessian_at(&IDENTITY, &RadialProfile::Classical, x, &gv), total, max_relative = 1e-14);
        let p = RadialProfile::smoothing(1.0, 0.5).unwrap();
        let r = 1.1799f64;
        let (rad, tan) = split_at(&IDENTITY, &gv, x);
        let r_exact = (0.4f64 * 0.4 + 0.09 + 1.21).sqrt();
        let _ = r;
        assert_relative_eq!(
            distorted_hessian_at(&IDENTITY, &p, x, &gv),
            p.d2(r_exact) * rad + p.d1(r_exact) / r_exact * tan,
            max_relative = 1e-12
        );
    }

    #[test]
    fn hessian_form_quadratic_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_spd(&mut rng);
        let gv = random_c3(&mut rng);
        let am = Matrix3::from_fn(|j, k| C64::new(a[j][k], 0.0));
        let m = am * am;
        let gvec = Vector3::from_iterator(gv.iter().copied());
        let oracle = (gvec.conjugate().transpose() * m * gvec)[(0, 0)].re;
        assert_relative_eq!(distorted_hessian_at(&a, &RadialProfile::Classical, [0.2, 0.1, 0.3], &gv), oracle, max_relative = 1e-12);
    }
}
