use serde::Serialize;

use super::inequalities::{morrey_campanato, MorreyNorm};
use crate::error::Result;
use crate::fields::{central_diff_real, GridSpec, RadialIndex, RealField};
use crate::multipliers::fit_slope;
use crate::operators::{radial_derivative_v, tangential_field_b, Hamiltonian};
use crate::par;

/// Decay of `sup_{|γ|=p} |∂^γ ã|` for one derivative order.
#[derive(Debug, Clone, Serialize)]
pub struct DecayTier {
    pub order: usize,
    /// Fitted `q` in `sup ≈ C⟨ρ⟩^{−q}` over the outer shells; `None` when identically zero.
    pub exponent: Option<f64>,
    pub required: f64,
    pub identically_zero: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub measured_c: f64,
    pub declared_c: f64,
    pub ellipticity_pass: bool,
    pub tiers: Vec<DecayTier>,
    pub decay_pass: bool,
    /// `‖|B^a_τ|²‖` with `α = 3`.
    pub b_norm: MorreyNorm,
    /// `‖(V^a_r)₊‖` with `α = 2`.
    pub v_norm: MorreyNorm,
    pub threshold: f64,
    pub potentials_pass: bool,
    pub sup_x2_v: f64,
    pub epsilon: f64,
    pub pass: bool,
}

/// Margin above `p` that a fitted exponent must clear.
pub const DECAY_MARGIN: f64 = 0.05;

fn derivative(g: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    par::collect(g.len(), |i| central_diff_real(g, f, i, axis))
}

/// Pointwise `max_{j≤k} max_{|γ|=p} |∂^γ ã_jk|` for `p = 0..=3`.
fn tier_fields(g: &GridSpec, tilde: &[crate::operators::Mat3]) -> [Vec<f64>; 4] {
    let mut out: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; g.len()]);
    let bump = |dst: &mut Vec<f64>, src: &[f64]| {
        for (d, s) in dst.iter_mut().zip(src) {
            *d = d.max(s.abs());
        }
    };
    for j in 0..3 {
        for k in j..3 {
            let base: Vec<f64> = tilde.iter().map(|m| m[j][k]).collect();
            bump(&mut out[0], &base);
            // Multi-indices with non-decreasing axes cover every |γ| = p once.
            let mut level: Vec<(usize, Vec<f64>)> = vec![(0, base)];
            for p in 1..=3 {
                let mut next = Vec::new();
                for (last, f) in &level {
                    for axis in *last..3 {
                        let d = derivative(g, f, axis);
                        bump(&mut out[p], &d);
                        next.push((axis, d));
                    }
                }
                level = next;
            }
        }
    }
    out
}

/// Fit over shells in `[ρ_cut/2, ρ_cut]` with `ρ_cut = L − 5h`.
fn fit_tier(g: &GridSpec, idx: &RadialIndex, field: Vec<f64>, order: usize) -> DecayTier {
    let required = order as f64 + DECAY_MARGIN;
    let h = g.h();
    let cut = g.half_width() - 5.0 * h;
    let scale = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let f = RealField::from_vec(*g, field).expect("len");
    let within = idx.ball(cut).iter().fold(0.0f64, |m, &i| m.max(f.data()[i].abs()));
    if within == 0.0 || scale == 0.0 {
        return DecayTier { order, exponent: None, required, identically_zero: true, pass: true };
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut rho = 0.5 * cut;
    while rho <= cut {
        if let Some(s) = idx.shell_sup(&f, rho, 0.5 * h) {
            if s > 0.0 {
                xs.push((1.0 + rho * rho).sqrt().ln());
                ys.push(s.ln());
            }
        }
        rho += h;
    }
    let exponent = if xs.len() >= 2 { -fit_slope(&xs, &ys) } else { 0.0 };
    DecayTier { order, exponent: Some(exponent), required, identically_zero: false, pass: exponent >= required }
}

/// Ellipticity, derivative decay of the perturbation, Morrey sizes of the
/// potentials against `(1−ε)/2`, and `sup |x|²|V|`. Report only.
pub fn hypothesis_check(h: &Hamiltonian) -> Result<HypothesisReport> {
    let g = *h.grid();
    let a = h.coefficients();
    let pot = h.potentials();
    let eps = a.epsilon();
    let measured_c = a.measured_c();
    let declared_c = a.declared_c();
    let idx = RadialIndex::new(g);
    let tiers: Vec<DecayTier> = match a.tilde() {
        Some(t) if eps != 0.0 => tier_fields(&g, t)
            .into_iter()
            .enumerate()
            .map(|(p, f)| fit_tier(&g, &idx, f, p))
            .collect(),
        _ => (0..4)
            .map(|p| DecayTier {
                order: p,
                exponent: None,
                required: p as f64 + DECAY_MARGIN,
                identically_zero: true,
                pass: true,
            })
            .collect(),
    };
    let bt = tangential_field_b(a, pot)?;
    let b2 = RealField::from_index_fn_all(g, |i| (0..3).map(|k| bt[k].data()[i].powi(2)).sum());
    let vr = radial_derivative_v(a, pot)?.map(|v| v.max(0.0));
    let b_norm = morrey_campanato(&b2, 3.0)?;
    let v_norm = morrey_campanato(&vr, 2.0)?;
    let threshold = 0.5 * (1.0 - eps);
    let sup_x2_v = par::max_by_key(g.len(), |i| {
        let r = g.radius(i);
        r * r * pot.v().data()[i].abs()
    })
    .map_or(0.0, |m| m.1);
    let decay_pass = tiers.iter().all(|t| t.pass);
    let ellipticity_pass = measured_c <= declared_c;
    let potentials_pass = b_norm.value + v_norm.value <= threshold;
    Ok(HypothesisReport {
        measured_c,
        declared_c,
        ellipticity_pass,
        pass: decay_pass && ellipticity_pass && potentials_pass,
        tiers,
        decay_pass,
        b_norm,
        v_norm,
        threshold,
        potentials_pass,
        sup_x2_v,
        epsilon: eps,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Certificate {
    pub m: f64,
    pub epsilon: f64,
    /// `(M+½)²/M · B + 2(M+½) V`
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Minimiser of `value` over `M > 0`; `0` when `B = 0` (infimum, not attained).
    pub optimal_m: f64,
    pub optimal_value: f64,
    /// `B + V` against `(1−ε)/2`, the `M = ½` instance.
    pub half_lhs: f64,
    pub half_threshold: f64,
    pub half_pass: bool,
    /// `min_{C₂>0}` of the positivity quadratic with `C₁ = 1`.
    pub positivity_min: f64,
}

/// Smallness condition on the potential sizes for a given `M`.
pub fn smoothing_certificate(b_norm: f64, v_norm: f64, m: f64, epsilon: f64) -> Certificate {
    let value_at = |m: f64| (m + 0.5).powi(2) / m * b_norm + 2.0 * (m + 0.5) * v_norm;
    let (optimal_m, optimal_value) = if b_norm > 0.0 {
        let mo = 0.5 / (1.0 + 2.0 * v_norm / b_norm).sqrt();
        (mo, value_at(mo))
    } else {
        (0.0, v_norm)
    };
    let threshold = 1.0 - epsilon;
    let value = value_at(m);
    // C(C₂) = q C₂² − 2 p C₂ + 2M
    let q = 0.5 * (1.0 - epsilon) - (m + 0.5) * v_norm;
    let p = (m + 0.5) * b_norm.sqrt();
    let positivity_min = if q > 0.0 {
        if p > 0.0 { 2.0 * m - p * p / q } else { 2.0 * m }
    } else {
        f64::NEG_INFINITY
    };
    Certificate {
        m,
        epsilon,
        value,
        threshold,
        pass: value <= threshold,
        optimal_m,
        optimal_value,
        half_lhs: b_norm + v_norm,
        half_threshold: 0.5 * (1.0 - epsilon),
        half_pass: b_norm + v_norm <= 0.5 * (1.0 - epsilon),
        positivity_min,
    }
}
