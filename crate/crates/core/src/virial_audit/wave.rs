use serde::Serialize;

use super::schrodinger::{theta_ddot_commutator, VirialExpansion, VirialTerms};
use super::util::{interior, Sums};
use crate::error::Result;
use crate::fields::{RealField, ScalarField};
use crate::multipliers::{a_phi_field, RadialProfile};
use crate::operators::{covariant_gradient, mat_vec, Hamiltonian};
use crate::par;

/// Multiplier pair of the wave branch with its sampled fields.
pub struct WaveMultipliers<'a> {
    expansion: VirialExpansion<'a>,
    phi: RealField,
    a_phi: RealField,
    psi_profile: RadialProfile,
    psi: RealField,
}

impl<'a> WaveMultipliers<'a> {
    pub fn new(h: &'a Hamiltonian, phi: &RadialProfile, psi: &RadialProfile) -> Result<Self> {
        let g = *h.grid();
        Ok(Self {
            expansion: VirialExpansion::new(h, phi)?,
            phi: crate::multipliers::sample(g, phi),
            a_phi: a_phi_field(h.coefficients(), phi),
            psi_profile: psi.clone(),
            psi: crate::multipliers::sample(g, psi),
        })
    }

    fn h(&self) -> &Hamiltonian {
        self.expansion.hamiltonian()
    }

    /// `Θ_W = ∫φ|u_t|² + φ a(∇_b u,∇_b u) − ½(Aφ)|u|² + ∫|u|²(Vφ + ψ)`.
    pub fn theta_w(&self, u: &ScalarField, ut: &ScalarField) -> Result<f64> {
        let g = *u.grid();
        let h = self.h();
        let a = h.coefficients();
        let v = h.potentials().v().data();
        let grad = covariant_gradient(u, h.potentials())?;
        let (ud, utd) = (u.data(), ut.data());
        let (p, ap, q) = (self.phi.data(), self.a_phi.data(), self.psi.data());
        let s = par::sum(g.len(), 0.0, |i| {
            if !interior(&g, i) {
                return 0.0;
            }
            let gv = grad.at(i);
            let m = a.at(i);
            let mut e = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    e += (gv[j].conj() * gv[k]).re * m[j][k];
                }
            }
            let d = ud[i].norm_sqr();
            p[i] * utd[i].norm_sqr() + p[i] * e - 0.5 * ap[i] * d + d * (v[i] * p[i] + q[i])
        });
        Ok(s * g.cell_volume())
    }

    /// Same functional through the discrete operator:
    /// `⟨u_t, φu_t⟩ + Re⟨u, φHu⟩ + ⟨u, ψu⟩`.
    pub fn theta_w_discrete(&self, u: &ScalarField, ut: &ScalarField) -> f64 {
        let hu = self.h().apply(u);
        ut.inner(&ut.mul_real(&self.phi)).re + u.mul_real(&self.phi).inner(&hu).re
            + u.inner(&u.mul_real(&self.psi)).re
    }

    /// Expanded `Θ̈_W` along `u_tt = −H u`, with the printed and corrected assemblies.
    pub fn terms(&self, u: &ScalarField, ut: &ScalarField) -> Result<WaveTerms> {
        let g = *u.grid();
        let h = self.h();
        let a = h.coefficients();
        let v = h.potentials().v().data();
        let grad = covariant_gradient(u, h.potentials())?;
        let (ud, utd) = (u.data(), ut.data());
        let q = self.psi.data();
        let psi = &self.psi_profile;
        let s = par::sum(g.len(), Sums::<4>::ZERO, |i| {
            if !interior(&g, i) {
                return Sums::ZERO;
            }
            let gv = grad.at(i);
            let m = a.at(i);
            let ui = ud[i];
            let mut e = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    e += (gv[j].conj() * gv[k]).re * m[j][k];
                }
            }
            let agq = mat_vec(m, &psi.gradient(g.point(i)));
            let lap: f64 = -(0..3).map(|k| 2.0 * (ui.conj() * gv[k]).re * agq[k]).sum::<f64>();
            Sums([
                2.0 * q[i] * utd[i].norm_sqr(),
                -2.0 * q[i] * e,
                lap,
                -2.0 * q[i] * v[i] * ui.norm_sqr(),
            ])
        });
        let [psi_kinetic, psi_gradient, psi_laplacian, psi_potential] = s.0.map(|x| x * g.cell_volume());
        let base = self.expansion.terms(u, None)?;
        let half_comm = 0.5 * theta_ddot_commutator(u, &self.phi, h);
        let psi_sum = psi_kinetic + psi_gradient + psi_laplacian + psi_potential;
        let printed = 0.5 * (base.hessian + base.bilaplacian + base.electric + base.magnetic)
            + base.coeff_deriv
            + psi_kinetic
            + psi_gradient
            + psi_laplacian
            - psi_potential;
        Ok(WaveTerms {
            multiplier: base,
            psi_kinetic,
            psi_gradient,
            psi_laplacian,
            psi_potential,
            commutator_half: half_comm,
            total_corrected: 0.5 * base.total + psi_sum,
            total_printed: printed,
            total_commutator: half_comm + psi_sum,
        })
    }
}

/// Wave-branch terms at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveTerms {
    /// The Schrödinger-branch terms; the wave identity uses half of each.
    pub multiplier: VirialTerms,
    /// `2∫|u_t|²ψ`
    pub psi_kinetic: f64,
    /// `−2∫ψ a(∇_b u, ∇_b u)`
    pub psi_gradient: f64,
    /// `∫|u|² Aψ`, weak form.
    pub psi_laplacian: f64,
    /// `−2∫ψV|u|²`
    pub psi_potential: f64,
    /// `½⟨u, [H, T] u⟩`
    pub commutator_half: f64,
    /// Half the multiplier terms plus the ψ-terms.
    pub total_corrected: f64,
    /// As printed: `+2ψV` and the coefficient-derivative block at full weight.
    pub total_printed: f64,
    /// `½⟨u,[H,T]u⟩` plus the ψ-terms.
    pub total_commutator: f64,
}

/// `∫|u_t|²` plus `⟨u, Hu⟩`; used to document blow-up of the literal-sign run.
pub fn wave_energy(u: &ScalarField, ut: &ScalarField, h: &Hamiltonian) -> f64 {
    ut.norm_sqr() + h.energy(u)
}

