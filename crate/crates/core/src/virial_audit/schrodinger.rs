use serde::Serialize;

use super::util::{interior, sphere_integral, Sums};
use crate::error::Result;
use crate::fields::{quad, RealField, ScalarField, VectorField, C64};
use crate::multipliers::{a_grad_a_phi, a_grad_laplacian, a_phi_field, sample, AuxMultiplier, RadialProfile};
use crate::operators::{
    covariant_gradient, distorted_hessian_at, mat_vec, radial_derivative_v, tangential_field_b,
    Hamiltonian, RealVector,
};
use crate::par;

/// `∫φ|u|²` with `φ` already sampled at the nodes.
pub fn theta_sampled(u: &ScalarField, phi: &RealField) -> f64 {
    let (d, p) = (u.data(), phi.data());
    quad(u.grid(), |i| p[i] * d[i].norm_sqr())
}

/// `Θ(u) = ∫φ(|x|)|u|²`.
pub fn theta_s(u: &ScalarField, phi: &RadialProfile) -> f64 {
    theta_sampled(u, &sample(*u.grid(), phi))
}

/// `Θ̇ = −i⟨u, T u⟩ = 2 Im⟨φu, Hu⟩` along `i u_t = H u`.
pub fn theta_dot_commutator(u: &ScalarField, phi: &RealField, h: &Hamiltonian) -> f64 {
    let hu = h.apply(u);
    2.0 * u.mul_real(phi).inner(&hu).im
}

/// `Θ̇ = 2 Im ∫ ū a(∇φ, ∇_b u)` with central covariant differences.
pub fn theta_s_dot_formula(u: &ScalarField, phi: &RadialProfile, h: &Hamiltonian) -> Result<f64> {
    let g = *u.grid();
    let grad = covariant_gradient(u, h.potentials())?;
    let a = h.coefficients();
    Ok(2.0 * quad(&g, |i| {
        let c = mat_vec(a.at(i), &phi.gradient(g.point(i)));
        let gv = grad.at(i);
        let s: C64 = (0..3).map(|k| gv[k] * c[k]).sum();
        (u.data()[i].conj() * s).im
    }))
}

/// `T u = φ H u − H(φ u)`, the commutator `−[H, φ]` of the discrete operator.
pub fn apply_t(u: &ScalarField, phi: &RealField, h: &Hamiltonian) -> ScalarField {
    let hu = h.apply(u);
    t_with(u, &hu, phi, h)
}

fn t_with(u: &ScalarField, hu: &ScalarField, phi: &RealField, h: &Hamiltonian) -> ScalarField {
    let mut out = h.apply(&u.mul_real(phi));
    let (p, hd) = (phi.data(), hu.data());
    par::update(out.data_mut(), |i, v| *v = hd[i] * p[i] - *v);
    out
}

/// `T u = (Aφ) u + 2 a(∇φ, ∇_b u)` evaluated pointwise; boundary nodes are zero.
pub fn apply_t_leibniz(u: &ScalarField, phi: &RadialProfile, h: &Hamiltonian) -> Result<ScalarField> {
    let g = *u.grid();
    let a = h.coefficients();
    let grad = covariant_gradient(u, h.potentials())?;
    let ap = a_phi_field(a, phi);
    Ok(ScalarField::from_index_fn(g, |i| {
        let c = mat_vec(a.at(i), &phi.gradient(g.point(i)));
        let gv = grad.at(i);
        let s: C64 = (0..3).map(|k| gv[k] * c[k]).sum();
        u.data()[i] * ap.data()[i] + s * 2.0
    }))
}

/// `Θ̈ = ⟨u, [H, T] u⟩ = 2 Re⟨H u, T u⟩`, by operator application only.
pub fn theta_ddot_commutator(u: &ScalarField, phi: &RealField, h: &Hamiltonian) -> f64 {
    let hu = h.apply(u);
    let tu = t_with(u, &hu, phi, h);
    2.0 * hu.inner(&tu).re
}

/// Terms of the auxiliary-multiplier identity at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxTerms {
    /// `∫ϕ a(∇_b u, ∇_b u)`
    pub energy: f64,
    /// `∫ϕ V |u|²`
    pub potential: f64,
    /// `Im ∫ u_t ϕ ū`
    pub time: f64,
    /// `∫|u|² Aϕ`, weak form.
    pub laplacian: f64,
    /// `−∫|u|² A(Δφ)`, weak form.
    pub bilaplacian_radial: f64,
    /// `∫Aϕ|u|² − ∫ϕ a(∇_b u,∇_b u) − ∫ϕV|u|²` as printed.
    pub inpart_printed: f64,
    /// Expanded total minus the printed identity.
    pub combined_printed: f64,
    /// Expanded total rewritten with the time-corrected identity.
    pub combined_corrected: f64,
}

/// Named terms of the expanded second derivative of `Θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialTerms {
    /// `4 ∫ ∇_b u D²_aφ ∇_b ū`
    pub hessian: f64,
    /// `−∫|u|² A²φ` as `∫∇|u|² · a∇(Aφ)`.
    pub bilaplacian: f64,
    /// `−2 ∫ φ' V^a_r |u|²`
    pub electric: f64,
    /// `4 Im ∫ u φ' a(∇_b u, B^a_τ)`
    pub magnetic: f64,
    /// `2 ∫ [2 a(∇_b u, ∇a(∇φ,∇_b u)) − a(∇φ, ∇a(∇_b u,∇_b u))]`
    pub coeff_deriv: f64,
    pub total: f64,
    pub aux: Option<AuxTerms>,
    /// `(bilaplacian − R^{−2}∫_{|x|=R}|u|²) / |u(0)|²` for the smoothing profile with `a = Id`.
    pub origin_charge: Option<f64>,
}

impl VirialTerms {
    pub const NAMES: [&'static str; 5] = ["hessian", "bilaplacian", "electric", "magnetic", "coeff_deriv"];

    pub fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("hessian", self.hessian),
            ("bilaplacian", self.bilaplacian),
            ("electric", self.electric),
            ("magnetic", self.magnetic),
            ("coeff_deriv", self.coeff_deriv),
        ]
    }
}

/// Stationary fields of the expanded identity for one `(H, φ)` pair.
pub struct VirialExpansion<'a> {
    h: &'a Hamiltonian,
    phi: RadialProfile,
    a_grad_a_phi: RealVector,
    a_grad_lap: Option<RealVector>,
    v_radial: RealField,
    b_tan: RealVector,
}

impl<'a> VirialExpansion<'a> {
    pub fn new(h: &'a Hamiltonian, phi: &RadialProfile) -> Result<Self> {
        let a = h.coefficients();
        let pot = h.potentials();
        Ok(Self {
            h,
            phi: phi.clone(),
            a_grad_a_phi: a_grad_a_phi(a, phi),
            a_grad_lap: phi.laplacian_higher(1.0).map(|_| a_grad_laplacian(a, phi)),
            v_radial: radial_derivative_v(a, pot)?,
            b_tan: tangential_field_b(a, pot)?,
        })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        self.h
    }

    /// Terms at `u`; `aux` adds the auxiliary-multiplier block with `u_t = −i H u`.
    pub fn terms(&self, u: &ScalarField, aux: Option<&AuxMultiplier>) -> Result<VirialTerms> {
        let g = *u.grid();
        g.check_same(self.h.grid())?;
        let grad = covariant_gradient(u, self.h.potentials())?;
        let s = self.base_sums(u, &grad);
        let [hessian, bilaplacian, electric, magnetic, coeff_deriv] = s;
        let total = hessian + bilaplacian + electric + magnetic + coeff_deriv;
        let aux = match aux {
            Some(m) => Some(self.aux_terms(u, &grad, m, total, &s)?),
            None => None,
        };
        let origin_charge = match self.phi {
            RadialProfile::Smoothing { radius, .. } if self.h.coefficients().is_identity() => {
                let u0 = u.data()[g.origin_index()].norm_sqr();
                (u0 > 0.0).then(|| {
                    let shell = sphere_integral(&u.density(), radius, 4000) / (radius * radius);
                    (bilaplacian - shell) / u0
                })
            }
            _ => None,
        };
        Ok(VirialTerms { hessian, bilaplacian, electric, magnetic, coeff_deriv, total, aux, origin_charge })
    }

    fn base_sums(&self, u: &ScalarField, grad: &VectorField) -> [f64; 5] {
        let g = *u.grid();
        let a = self.h.coefficients();
        let phi = &self.phi;
        let ud = u.data();
        let flat = a.is_identity();
        let s = par::sum(g.len(), Sums::<5>::ZERO, |i| {
            if !interior(&g, i) {
                return Sums::ZERO;
            }
            let x = g.point(i);
            let r = g.radius(i);
            let m = a.at(i);
            let gv = grad.at(i);
            let ui = ud[i];
            let dens_grad: [f64; 3] = std::array::from_fn(|k| 2.0 * (ui.conj() * gv[k]).re);
            let hess = distorted_hessian_at(m, phi, x, &gv);
            let agp = [
                self.a_grad_a_phi[0].data()[i],
                self.a_grad_a_phi[1].data()[i],
                self.a_grad_a_phi[2].data()[i],
            ];
            let bilap: f64 = (0..3).map(|k| dens_grad[k] * agp[k]).sum();
            let dphi = if r > 0.0 { phi.d1(r) } else { 0.0 };
            let elec = -2.0 * dphi * self.v_radial.data()[i] * ui.norm_sqr();
            let bt = [self.b_tan[0].data()[i], self.b_tan[1].data()[i], self.b_tan[2].data()[i]];
            let mut ab = C64::new(0.0, 0.0);
            for j in 0..3 {
                for k in 0..3 {
                    ab += gv[j].conj() * (m[j][k] * bt[k]);
                }
            }
            let mag = 4.0 * (ui * dphi * ab).im;
            let curv = if flat { 0.0 } else { curvature_density(a.at(i), a.deriv(i), &phi.gradient(x), &gv) };
            Sums([4.0 * hess, bilap, elec, mag, curv])
        });
        let w = g.cell_volume();
        s.0.map(|v| v * w)
    }

    fn aux_terms(
        &self,
        u: &ScalarField,
        grad: &VectorField,
        aux: &AuxMultiplier,
        total: f64,
        base: &[f64; 5],
    ) -> Result<AuxTerms> {
        let g = *u.grid();
        let a = self.h.coefficients();
        let v = self.h.potentials().v().data();
        let ut = self.h.apply(u).scaled(C64::new(0.0, -1.0));
        let (ud, utd) = (u.data(), ut.data());
        let lap = self.a_grad_lap.as_ref();
        let s = par::sum(g.len(), Sums::<5>::ZERO, |i| {
            if !interior(&g, i) {
                return Sums::ZERO;
            }
            let w = aux.values.data()[i];
            let gv = grad.at(i);
            let ui = ud[i];
            let m = a.at(i);
            let mut energy = C64::new(0.0, 0.0);
            for j in 0..3 {
                for k in 0..3 {
                    energy += gv[j].conj() * gv[k] * m[j][k];
                }
            }
            let dens_grad: [f64; 3] = std::array::from_fn(|k| 2.0 * (ui.conj() * gv[k]).re);
            let agw = mat_vec(m, &[aux.grad[0].data()[i], aux.grad[1].data()[i], aux.grad[2].data()[i]]);
            let laplacian: f64 = -(0..3).map(|k| dens_grad[k] * agw[k]).sum::<f64>();
            let bilap_radial = lap.map_or(0.0, |l| (0..3).map(|k| dens_grad[k] * l[k].data()[i]).sum());
            Sums([
                w * energy.re,
                w * v[i] * ui.norm_sqr(),
                (utd[i] * w * ui.conj()).im,
                laplacian,
                bilap_radial,
            ])
        });
        let [energy, potential, time, laplacian, bilaplacian_radial] = s.0.map(|x| x * g.cell_volume());
        let inpart_printed = laplacian - energy - potential;
        let [hessian, _, electric, magnetic, coeff] = *base;
        Ok(AuxTerms {
            energy,
            potential,
            time,
            laplacian,
            bilaplacian_radial,
            inpart_printed,
            combined_printed: total - inpart_printed,
            combined_corrected: hessian + bilaplacian_radial + electric + magnetic + coeff
                + 2.0 * energy
                + 2.0 * potential
                + 2.0 * time,
        })
    }
}

/// Pointwise `2 [2 Re a(g, ∇a(∇φ, g)) − a(∇φ, ∇a(g, g))]`, where
/// `∇a(w, z)_l = ∂_l a_jk w̄_j z_k`.
fn curvature_density(m: &crate::operators::Mat3, d: &[crate::operators::Mat3; 3], dphi: &[f64; 3], g: &[C64; 3]) -> f64 {
    let mut first = [C64::new(0.0, 0.0); 3];
    let mut second = [0.0; 3];
    for l in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                first[l] += g[k] * (d[l][j][k] * dphi[j]);
                second[l] += d[l][j][k] * (g[j].conj() * g[k]).re;
            }
        }
    }
    let mut t1 = C64::new(0.0, 0.0);
    let mut t2 = 0.0;
    for p in 0..3 {
        for l in 0..3 {
            t1 += g[p].conj() * first[l] * m[p][l];
            t2 += m[p][l] * dphi[p] * second[l];
        }
    }
    2.0 * (2.0 * t1.re - t2)
}

/// Expanded `Θ̈` at `u` (builds a one-off [`VirialExpansion`]).
pub fn theta_ddot_expanded(
    u: &ScalarField,
    phi: &RadialProfile,
    aux: Option<&AuxMultiplier>,
    h: &Hamiltonian,
) -> Result<VirialTerms> {
    VirialExpansion::new(h, phi)?.terms(u, aux)
}

/// Effect of dropping or flipping each term on the expanded-vs-commutator gap.
#[derive(Debug, Clone, Serialize)]
pub struct GapAttribution {
    pub residual: f64,
    pub without: Vec<(String, f64)>,
    pub flipped: Vec<(String, f64)>,
    /// The single term whose removal or sign flip closes the gap, if any.
    pub isolated: Option<String>,
}

/// Zero (and flip) the terms one at a time; a term is isolated when its
/// change cuts the residual at least tenfold while every other change leaves
/// at least half of it.
pub fn attribute_gap(terms: &VirialTerms, commutator: f64) -> GapAttribution {
    let residual = (terms.total - commutator).abs();
    let named = terms.named();
    let without: Vec<(String, f64)> = named
        .iter()
        .map(|(n, v)| (n.to_string(), (terms.total - v - commutator).abs()))
        .collect();
    let flipped: Vec<(String, f64)> = named
        .iter()
        .map(|(n, v)| (n.to_string(), (terms.total - 2.0 * v - commutator).abs()))
        .collect();
    let best = |list: &[(String, f64)]| -> Option<(usize, f64)> {
        list.iter().enumerate().map(|(i, p)| (i, p.1)).min_by(|a, b| a.1.total_cmp(&b.1))
    };
    let mut isolated = None;
    if residual > 0.0 {
        for list in [&without, &flipped] {
            if let Some((idx, best_res)) = best(list) {
                let others_large = list
                    .iter()
                    .enumerate()
                    .all(|(j, p)| j == idx || p.1 >= 0.5 * residual);
                if best_res <= 0.1 * residual && others_large {
                    isolated = Some(list[idx].0.clone());
                    break;
                }
            }
        }
    }
    GapAttribution { residual, without, flipped, isolated }
}

/// Residuals of the auxiliary identity at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InpartResidual {
    /// `∫Aϕ|u|² − ∫ϕ a(∇_b u,∇_b u) − ∫ϕV|u|²`
    pub printed: f64,
    /// `½∫Aϕ|u|² − ∫ϕ a(∇_b u,∇_b u) − ∫ϕ(V − λ)|u|²`, when `λ` is given.
    pub half_variant: Option<f64>,
    /// `Im ∫u_t ϕ ū`, the term a non-stationary state adds.
    pub time_term: f64,
    /// `∫ϕ a(∇_b u,∇_b u) − ½∫Aϕ|u|² + ∫ϕV|u|² + Im∫u_t ϕ ū`, zero for every solution.
    pub time_corrected: f64,
}

/// Evaluate the auxiliary identity at `(u, u_t)`; `eigenvalue` enables the ½-variant.
pub fn inpart_residual(
    u: &ScalarField,
    ut: &ScalarField,
    aux: &AuxMultiplier,
    h: &Hamiltonian,
    eigenvalue: Option<f64>,
) -> Result<InpartResidual> {
    let g = *u.grid();
    g.check_same(ut.grid())?;
    let a = h.coefficients();
    let v = h.potentials().v().data();
    let grad = covariant_gradient(u, h.potentials())?;
    let (ud, utd) = (u.data(), ut.data());
    let s = par::sum(g.len(), Sums::<5>::ZERO, |i| {
        if !interior(&g, i) {
            return Sums::ZERO;
        }
        let w = aux.values.data()[i];
        let gv = grad.at(i);
        let ui = ud[i];
        let m = a.at(i);
        let mut energy = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                energy += (gv[j].conj() * gv[k]).re * m[j][k];
            }
        }
        let agw = mat_vec(m, &[aux.grad[0].data()[i], aux.grad[1].data()[i], aux.grad[2].data()[i]]);
        let lap: f64 = -(0..3).map(|k| 2.0 * (ui.conj() * gv[k]).re * agw[k]).sum::<f64>();
        Sums([w * energy, w * v[i] * ui.norm_sqr(), (utd[i] * w * ui.conj()).im, lap, w * ui.norm_sqr()])
    });
    let [energy, potential, time, lap, mass] = s.0.map(|x| x * g.cell_volume());
    Ok(InpartResidual {
        printed: lap - energy - potential,
        half_variant: eigenvalue.map(|l| 0.5 * lap - energy - potential + l * mass),
        time_term: time,
        time_corrected: energy - 0.5 * lap + potential + time,
    })
}
