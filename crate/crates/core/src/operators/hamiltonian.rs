use super::coefficients::{eig_bounds, CoefficientField};
use super::potentials::Potentials;
use crate::error::Result;
use crate::fields::{central_diff, GridSpec, RealField, ScalarField, VectorField, C64};
use crate::par;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Discrete `H = −∂ᵇ_j a_jk ∂ᵇ_k + V` in Peierls form.
///
/// The kinetic part is `½ Σ_± Σ_jk (D^±_j)* a_jk D^±_k` with forward/backward
/// covariant differences built from link phases `exp(i h b_k)` at edge
/// midpoints, so the matrix is exactly Hermitian on the interior nodes.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    coeff: CoefficientField,
    pot: Potentials,
    links: [Vec<C64>; 3],
    flat: bool,
}

impl Hamiltonian {
    pub fn new(coeff: CoefficientField, pot: Potentials) -> Result<Self> {
        coeff.grid().check_same(pot.grid())?;
        coeff.check_ellipticity()?;
        let grid = *coeff.grid();
        let h = grid.h();
        let link = |k: usize| {
            let be = pot.b_edge(k);
            par::collect(grid.len(), |i| C64::from_polar(1.0, h * be[i]))
        };
        let links = [link(0), link(1), link(2)];
        let flat = coeff.is_identity();
        Ok(Self { coeff, pot, links, flat })
    }

    /// Flat free operator `−Δ` on `grid`.
    pub fn free(grid: GridSpec) -> Self {
        Self::new(CoefficientField::identity(grid), Potentials::zero(grid)).expect("flat case")
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        self.coeff.grid()
    }

    #[inline]
    pub fn coefficients(&self) -> &CoefficientField {
        &self.coeff
    }

    #[inline]
    pub fn potentials(&self) -> &Potentials {
        &self.pot
    }

    /// `H u`
    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        self.apply_with(u, true)
    }

    /// `H₀ u`, the kinetic part without `V`.
    pub fn apply_kinetic(&self, u: &ScalarField) -> ScalarField {
        self.apply_with(u, false)
    }

    fn apply_with(&self, u: &ScalarField, with_v: bool) -> ScalarField {
        let g = *self.grid();
        let n = g.n();
        let h_inv = 1.0 / g.h();
        let data = u.data();
        let links = &self.links;
        let strides = [g.stride(0), g.stride(1), g.stride(2)];
        let v = self.pot.v().data();
        if self.flat {
            return self.apply_flat(u, with_v);
        }
        // Fluxes a·D⁺u and a·D⁻u at every node, ghost zeros outside the box.
        let flux: Vec<[[C64; 3]; 2]> = par::collect(g.len(), |i| {
            let c = g.ijk(i);
            let mut dp = [ZERO; 3];
            let mut dm = [ZERO; 3];
            for k in 0..3 {
                let s = strides[k];
                let fwd = if c[k] + 1 < n { links[k][i] * data[i + s] } else { ZERO };
                let bwd = if c[k] > 0 { links[k][i - s].conj() * data[i - s] } else { ZERO };
                dp[k] = (fwd - data[i]) * h_inv;
                dm[k] = (data[i] - bwd) * h_inv;
            }
            let a = self.coeff.at(i);
            let mut fp = [ZERO; 3];
            let mut fm = [ZERO; 3];
            for j in 0..3 {
                for k in 0..3 {
                    fp[j] += dp[k] * a[j][k];
                    fm[j] += dm[k] * a[j][k];
                }
            }
            [fp, fm]
        });
        let out = par::collect(g.len(), |i| {
            if g.ijk(i).iter().any(|&c| c == 0 || c + 1 == n) {
                return ZERO;
            }
            let mut acc = ZERO;
            for j in 0..3 {
                let s = strides[j];
                // −D⁻_j F⁺_j
                let prev = links[j][i - s].conj() * flux[i - s][0][j];
                acc -= (flux[i][0][j] - prev) * h_inv;
                // −D⁺_j F⁻_j
                let next = links[j][i] * flux[i + s][1][j];
                acc -= (next - flux[i][1][j]) * h_inv;
            }
            let mut val = acc * 0.5;
            if with_v {
                val += data[i] * v[i];
            }
            val
        });
        ScalarField::from_vec(g, out).expect("same length")
    }

    /// `a = Id`: the Peierls form reduces to the seven-point covariant Laplacian.
    fn apply_flat(&self, u: &ScalarField, with_v: bool) -> ScalarField {
        let g = *self.grid();
        let n = g.n();
        let h2_inv = 1.0 / (g.h() * g.h());
        let data = u.data();
        let links = &self.links;
        let strides = [g.stride(0), g.stride(1), g.stride(2)];
        let v = self.pot.v().data();
        let out = par::collect(g.len(), |i| {
            if g.ijk(i).iter().any(|&c| c == 0 || c + 1 == n) {
                return ZERO;
            }
            let mut acc = data[i] * 6.0;
            for j in 0..3 {
                let s = strides[j];
                acc -= links[j][i] * data[i + s] + links[j][i - s].conj() * data[i - s];
            }
            let mut val = acc * h2_inv;
            if with_v {
                val += data[i] * v[i];
            }
            val
        });
        ScalarField::from_vec(g, out).expect("same length")
    }

    /// `Re⟨u, H u⟩`
    pub fn energy(&self, u: &ScalarField) -> f64 {
        u.inner(&self.apply(u)).re
    }

    /// Upper bound on the spectrum: `12 max λ(a) / h² + max V⁺`.
    pub fn spectral_upper_bound(&self) -> f64 {
        let g = self.grid();
        let amax = par::max_by_key(g.len(), |i| eig_bounds(self.coeff.at(i)).1)
            .map_or(1.0, |(_, v)| v);
        12.0 * amax / (g.h() * g.h()) + self.pot.max_positive_v()
    }
}

/// `∂_k u + i b_k u` by central differences.
pub fn covariant_gradient(u: &ScalarField, pot: &Potentials) -> Result<VectorField> {
    u.grid().check_same(pot.grid())?;
    let g = *u.grid();
    let comp = |k: usize| {
        let b = pot.b()[k].data();
        ScalarField::from_vec(
            g,
            par::collect(g.len(), |i| {
                central_diff(&g, u.data(), i, k) + C64::new(0.0, b[i]) * u.data()[i]
            }),
        )
        .expect("length")
    };
    VectorField::new(comp(0), comp(1), comp(2))
}

/// `∂_j(a_jk ∂_k ψ)` with both derivatives by central differences.
pub fn apply_a(psi: &ScalarField, a: &CoefficientField) -> Result<ScalarField> {
    psi.grid().check_same(a.grid())?;
    let g = *psi.grid();
    let d = psi.data();
    let flux: Vec<[C64; 3]> = par::collect(g.len(), |i| {
        let grad = [central_diff(&g, d, i, 0), central_diff(&g, d, i, 1), central_diff(&g, d, i, 2)];
        let m = a.at(i);
        let mut f = [ZERO; 3];
        for j in 0..3 {
            for k in 0..3 {
                f[j] += grad[k] * m[j][k];
            }
        }
        f
    });
    let comps: Vec<Vec<C64>> = (0..3).map(|j| flux.iter().map(|f| f[j]).collect()).collect();
    let out = par::collect(g.len(), |i| {
        (0..3).map(|j| central_diff(&g, &comps[j], i, j)).sum::<C64>()
    });
    ScalarField::from_vec(g, out)
}

/// Real-valued convenience for [`apply_a`].
pub fn apply_a_real(psi: &RealField, a: &CoefficientField) -> Result<RealField> {
    Ok(apply_a(&psi.to_complex(), a)?.real_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::coefficients::{DecayProfile, RadialScalar};
    use crate::operators::potentials::{ElectricPreset, MagneticPreset};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(g: GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
        let vals: Vec<C64> = (0..g.len())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut f = ScalarField::from_vec(g, vals).unwrap();
        f.zero_boundary();
        f
    }

    #[test]
    fn flat_stencil_matches_general_path() {
        let g = GridSpec::new(3.0, 13).unwrap();
        let pot = Potentials::from_presets(g, MagneticPreset::RotatingGaussian { strength: 1.0 }, ElectricPreset::Gaussian { amp: 0.3 });
        let fast = Hamiltonian::new(CoefficientField::identity(g), pot).unwrap();
        assert!(fast.flat);
        let mut general = fast.clone();
        general.flat = false;
        let u = random_field(g, &mut ChaCha8Rng::seed_from_u64(5));
        let (a, b) = (fast.apply(&u), general.apply(&u));
        let scale = b.norm();
        assert!(a.add_scaled(C64::new(-1.0, 0.0), &b).norm() < 1e-13 * scale);
    }

    fn perturbed(g: GridSpec) -> Hamiltonian {
        let a = CoefficientField::radial(
            g,
            RadialScalar { epsilon: 0.3, profile: DecayProfile::InvBracket(1.0) },
            2.0,
        )
        .unwrap();
        let p = Potentials::from_presets(
            g,
            MagneticPreset::Rotating { strength: 0.8 },
            ElectricPreset::Gaussian { amp: 0.5 },
        );
        Hamiltonian::new(a, p).unwrap()
    }

    #[test]
    fn free_gaussian_matches_closed_form_laplacian() {
        let err = |n: usize| {
            let g = GridSpec::new(6.0, n).unwrap();
            let h = Hamiltonian::free(g);
            let u = ScalarField::from_fn_dirichlet(g, |x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                C64::new((-r2 / 2.0).exp(), 0.0)
            });
            let hu = h.apply(&u);
            let c = (n - 1) / 2;
            let s = (n - 1) / 24;
            let i = g.index(c + s, c, c - s);
            let x = g.point(i);
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let exact = (3.0 - r2) * (-r2 / 2.0).exp();
            (hu.get(i).re - exact).abs()
        };
        let (e1, e2) = (err(25), err(49));
        assert!(e2 < 0.05 && (3.5..4.5).contains(&(e1 / e2)), "{e1} {e2}");
    }

    #[test]
    fn hermitian_on_random_pairs() {
        let g = GridSpec::new(3.0, 13).unwrap();
        let h = perturbed(g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = random_field(g, &mut rng);
            let v = random_field(g, &mut rng);
            let lhs = h.apply(&u).inner(&v);
            let rhs = u.inner(&h.apply(&v));
            assert!((lhs - rhs).norm() / (u.norm() * v.norm()) <= 1e-10);
        }
    }

    #[test]
    fn covariant_gradient_of_constant() {
        let g = GridSpec::new(2.0, 9).unwrap();
        let p = Potentials::from_fns(g, |_| [1.0, 0.0, 0.0], |_| 0.0);
        let u = ScalarField::from_fn(g, |_| C64::new(1.0, 0.0));
        let gu = covariant_gradient(&u, &p).unwrap();
        let i = g.origin_index();
        assert_relative_eq!(gu.comps[0].get(i).im, 1.0, epsilon = 1e-14);
        assert_relative_eq!(gu.comps[0].get(i).re, 0.0, epsilon = 1e-14);
        assert_eq!(gu.comps[1].get(i), C64::new(0.0, 0.0));
    }

    #[test]
    fn apply_a_examples() {
        let g = GridSpec::new(2.0, 17).unwrap();
        let id = CoefficientField::identity(g);
        let q = RealField::from_fn(g, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        let aq = apply_a_real(&q, &id).unwrap();
        assert_relative_eq!(aq.get(g.index(7, 9, 10)), 6.0, epsilon = 1e-10);
        let c = RealField::from_fn(g, |_| 2.5);
        assert_relative_eq!(apply_a_real(&c, &id).unwrap().get(g.index(8, 8, 8)), 0.0);
    }

    #[test]
    fn spectral_bound_dominates_rayleigh_quotients() {
        let g = GridSpec::new(3.0, 13).unwrap();
        let h = perturbed(g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bound = h.spectral_upper_bound();
        for _ in 0..5 {
            let u = random_field(g, &mut rng);
            assert!(h.energy(&u) / u.norm_sqr() <= bound);
        }
    }
}
