use serde::Serialize;

use super::util::{interior, Sums};
use crate::error::{LabError, Result};
use crate::fields::{RadialIndex, RealField, ScalarField, C64};
use crate::flows::{sobolev_norm, SobolevOptions};
use crate::multipliers::{fit_slope, HardyWeight, RadialProfile};
use crate::operators::{covariant_gradient, mat_vec, radial_tangential_split, Hamiltonian, Potentials};
use crate::par;

/// Lattice constant `−Σ'_{n∈ℤ³} |n|^{−2}` (analytically continued): the
/// node-sum of `|f|²/|x|²` that skips the origin falls short of the integral
/// by this times `h |f(0)|²`.
pub const ORIGIN_LATTICE_CORRECTION: f64 = 8.913_632_917_585_15;

#[derive(Debug, Clone, Serialize)]
pub struct HardyResult {
    /// `∫|f|² w / |x|²`, origin-corrected.
    pub lhs: f64,
    /// `∫|∇_b f|² w` over grid edges.
    pub rhs: f64,
    pub constant: f64,
    pub ratio: f64,
    pub pass: bool,
    pub origin_correction: f64,
    pub warning: Option<String>,
}

/// Both sides of the weighted magnetic Hardy inequality on the grid.
///
/// The gradient side is the edge form with Peierls links, `w` sampled at edge
/// midpoints, so it is the quadratic form of the discrete operator.
pub fn hardy_check(f: &ScalarField, w: &HardyWeight, pot: &Potentials) -> Result<HardyResult> {
    let g = *f.grid();
    g.check_same(pot.grid())?;
    f.check_finite()?;
    let h = g.h();
    let d = f.data();
    let origin = g.origin_index();
    let wp = &w.profile;
    let s = par::sum(g.len(), Sums::<2>::ZERO, |i| {
        let x = g.point(i);
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let lhs = if i == origin { 0.0 } else { d[i].norm_sqr() * wp.value(r2.sqrt()) / r2 };
        let mut rhs = 0.0;
        for axis in 0..3 {
            if let Some(j) = g.neighbor(i, axis, true) {
                let mut mid = x;
                mid[axis] += 0.5 * h;
                let link = C64::from_polar(1.0, h * pot.b_edge(axis)[i]);
                rhs += (link * d[j] - d[i]).norm_sqr() * wp.value(crate::multipliers::norm(mid));
            }
        }
        Sums([lhs, rhs / (h * h)])
    });
    let vol = g.cell_volume();
    let origin_correction = ORIGIN_LATTICE_CORRECTION * h * d[origin].norm_sqr() * wp.value(0.0);
    let lhs = s.0[0] * vol + origin_correction;
    let rhs = s.0[1] * vol;
    let constant = w.hardy_constant(3);
    let warning = (origin_correction > 0.25 * lhs && lhs > 0.0).then(|| {
        format!(
            "field concentrated at the origin: lattice correction is {:.0}% of the left side",
            100.0 * origin_correction / lhs
        )
    });
    let ratio = if rhs > 0.0 { lhs / rhs } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(HardyResult { lhs, rhs, constant, ratio, pass: lhs <= constant * rhs, origin_correction, warning })
}

#[derive(Debug, Clone, Serialize)]
pub struct MorreyNorm {
    /// Truncated integral plus the estimated tail.
    pub value: f64,
    pub truncated: f64,
    /// Power-law estimate of `∫_{ρmax}^∞ ρ^α sup|f|`; infinite when the fitted decay is too slow.
    pub tail: f64,
    pub rho_max: f64,
    /// Empty shells filled by linear interpolation.
    pub interpolated_shells: usize,
}

fn tail_estimate(rho: &[f64], sups: &[f64], alpha: f64) -> f64 {
    let last = *sups.last().unwrap_or(&0.0);
    if last == 0.0 {
        return 0.0;
    }
    let k = rho.len();
    let lo = k - (k / 4).max(3).min(k);
    let (xs, ys): (Vec<f64>, Vec<f64>) = rho[lo..]
        .iter()
        .zip(&sups[lo..])
        .filter(|(r, s)| **r > 0.0 && **s > 0.0)
        // Normalizing by the last value keeps binary rescalings of f exact.
        .map(|(r, s)| (r.ln(), (s / last).ln()))
        .unzip();
    if xs.len() < 2 {
        return f64::INFINITY;
    }
    let q = -fit_slope(&xs, &ys);
    let rmax = rho[k - 1];
    if q > alpha + 1.0 {
        last * rmax.powf(alpha + 1.0) / (q - alpha - 1.0)
    } else {
        f64::INFINITY
    }
}

/// `∫₀^∞ ρ^α sup_{|x|=ρ}|f| dρ` on shells `ρ_k = k h` up to the inscribed radius `L`.
pub fn morrey_campanato(f: &RealField, alpha: f64) -> Result<MorreyNorm> {
    if !(alpha >= 0.0) {
        return Err(LabError::InvalidParameter(format!("Morrey exponent must be ≥ 0, got {alpha}")));
    }
    let g = *f.grid();
    let idx = RadialIndex::new(g);
    let h = g.h();
    let k_max = ((g.half_width() / h) + 1e-9).floor() as usize;
    let rho: Vec<f64> = (0..=k_max).map(|k| k as f64 * h).collect();
    let mut sups: Vec<Option<f64>> = rho
        .iter()
        .map(|&r| if r == 0.0 { Some(f.data()[g.origin_index()].abs()) } else { idx.shell_sup(f, r, 0.5 * h) })
        .collect();
    let mut interpolated = 0;
    for k in 0..sups.len() {
        if sups[k].is_none() {
            interpolated += 1;
            let prev = (0..k).rev().find_map(|j| sups[j].map(|v| (j, v)));
            let next = (k + 1..sups.len()).find_map(|j| sups[j].map(|v| (j, v)));
            sups[k] = Some(match (prev, next) {
                (Some((a, va)), Some((b, vb))) => va + (vb - va) * (k - a) as f64 / (b - a) as f64,
                (Some((_, v)), None) | (None, Some((_, v))) => v,
                (None, None) => 0.0,
            });
        }
    }
    let sups: Vec<f64> = sups.into_iter().map(|s| s.unwrap_or(0.0)).collect();
    let integrand: Vec<f64> = rho.iter().zip(&sups).map(|(r, s)| r.powf(alpha) * s).collect();
    let truncated = integrand.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum::<f64>();
    let tail = tail_estimate(&rho, &sups, alpha);
    Ok(MorreyNorm { value: truncated + tail, truncated, tail, rho_max: *rho.last().unwrap_or(&0.0), interpolated_shells: interpolated })
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn gauss_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, hw) = (0.5 * (a + b), 0.5 * (b - a));
    GL5.iter().map(|(x, w)| w * f(c + hw * x)).sum::<f64>() * hw
}

/// The same norm for a radial profile `sup_{|x|=ρ}|f| = s(ρ)`, by composite
/// Gauss–Legendre on `[0, ρmax]` with the power-law tail beyond.
pub fn morrey_campanato_radial(s: impl Fn(f64) -> f64, alpha: f64, rho_max: f64) -> Result<MorreyNorm> {
    if !(alpha >= 0.0 && rho_max > 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "need alpha ≥ 0 and rho_max > 1, got {alpha}, {rho_max}"
        )));
    }
    let integrand = |r: f64| r.powf(alpha) * s(r).abs();
    let mut truncated = 0.0;
    let inner = 200;
    for p in 0..inner {
        truncated += gauss_panel(&integrand, p as f64 / inner as f64, (p + 1) as f64 / inner as f64);
    }
    let outer = (200.0 * rho_max.ln()).ceil() as usize;
    let ratio = rho_max.powf(1.0 / outer as f64);
    let mut a = 1.0;
    for _ in 0..outer {
        let b = (a * ratio).min(rho_max);
        truncated += gauss_panel(&integrand, a, b);
        a = b;
    }
    let rs: Vec<f64> = (0..6).map(|k| rho_max * (1.0 - 0.02 * (5 - k) as f64)).collect();
    let sups: Vec<f64> = rs.iter().map(|&r| s(r).abs()).collect();
    let tail = tail_estimate(&rs, &sups, alpha);
    Ok(MorreyNorm { value: truncated + tail, truncated, tail, rho_max, interpolated_shells: 0 })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompactConstants {
    /// `(∫|∇^{a,τ}_b u|² / |x|)^{1/2}`, origin node excluded.
    pub c1: f64,
    /// `(sup_R R^{−2} ∫_{|x|=R}|u|²)^{1/2}` over node shells.
    pub c2: f64,
    pub c2_argmax: f64,
}

/// `C₁` and `C₂`; the sphere integral is `4πR²` times the shell mean.
pub fn c1_c2_quantities(u: &ScalarField, h: &Hamiltonian) -> Result<CompactConstants> {
    let g = *u.grid();
    let grad = covariant_gradient(u, h.potentials())?;
    let (_, tan) = radial_tangential_split(&grad, h.coefficients())?;
    let origin = g.origin_index();
    let c1sq = par::sum(g.len(), 0.0, |i| if i == origin { 0.0 } else { tan.data()[i] / g.radius(i) })
        * g.cell_volume();
    let dens = u.density();
    let idx = RadialIndex::new(g);
    let hh = g.h();
    let mut best = (0.0, 0.0);
    let mut k = 1;
    while k as f64 * hh <= g.half_width() {
        let r = k as f64 * hh;
        if let Some(m) = idx.shell_mean(&dens, r, 0.5 * hh) {
            let v = 4.0 * std::f64::consts::PI * m;
            if v > best.0 {
                best = (v, r);
            }
        }
        k += 1;
    }
    Ok(CompactConstants { c1: c1sq.sqrt(), c2: best.0.sqrt(), c2_argmax: best.1 })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterpolBounds {
    /// `T(f,g) = ∫ f̄ a_jk ∂^b_j g ∂_kφ`
    pub t_re: f64,
    pub t_im: f64,
    /// `‖f‖_{L²} ‖g‖_{Ḣ¹}`
    pub l2_h1: f64,
    /// `‖f‖_{Ḣ¹} ‖g‖_{L²}`
    pub h1_l2: f64,
    /// `‖f‖_{Ḣ^{1/2}} ‖g‖_{Ḣ^{1/2}}`
    pub half: f64,
    /// `|T| / half`
    pub kappa: f64,
}

/// The bilinear form of the interpolation bound, with its three right-hand sides.
pub fn interpol_endpoints(
    f: &ScalarField,
    gfield: &ScalarField,
    phi: &RadialProfile,
    h: &Hamiltonian,
    opts: SobolevOptions,
) -> Result<InterpolBounds> {
    let grid = *f.grid();
    let a = h.coefficients();
    let grad = covariant_gradient(gfield, h.potentials())?;
    let t = par::sum(grid.len(), C64::new(0.0, 0.0), |i| {
        if !interior(&grid, i) {
            return C64::new(0.0, 0.0);
        }
        let c = mat_vec(a.at(i), &phi.gradient(grid.point(i)));
        let gv = grad.at(i);
        f.data()[i].conj() * (0..3).map(|j| gv[j] * c[j]).sum::<C64>()
    }) * grid.cell_volume();
    let n = |u: &ScalarField, s: f64| sobolev_norm(u, s, h, opts).map(|r| r.value);
    let (f0, f1, fh) = (f.norm(), n(f, 1.0)?, n(f, 0.5)?);
    let (g0, g1, gh) = (gfield.norm(), n(gfield, 1.0)?, n(gfield, 0.5)?);
    let half = fh * gh;
    Ok(InterpolBounds {
        t_re: t.re,
        t_im: t.im,
        l2_h1: f0 * g1,
        h1_l2: f1 * g0,
        half,
        kappa: if half > 0.0 { t.norm() / half } else { 0.0 },
    })
}
