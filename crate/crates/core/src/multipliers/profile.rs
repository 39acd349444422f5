use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::operators::{DecayProfile, Mat3};

/// Piecewise-analytic radial function with closed-form derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RadialProfile {
    /// Slope `M + r/(3R)` inside `R`, `M + 1/2 − R²/(6r²)` outside.
    Smoothing {
        #[serde(rename = "R")]
        radius: f64,
        #[serde(rename = "M")]
        inner_slope: f64,
    },
    /// `|x|²/2`
    Classical,
    /// `amp · e^{−r²/width²}`
    GaussianBump { amp: f64, width: f64 },
    /// `⟨r⟩^{−s}`
    InvBracket { s: f64 },
    Constant { c: f64 },
    /// `factor · Δ(base)`
    ScaledLaplacian { base: Box<RadialProfile>, factor: f64 },
}

impl RadialProfile {
    /// The two-regime profile; rejects non-positive `radius` or `inner_slope`.
    pub fn smoothing(radius: f64, inner_slope: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(LabError::InvalidParameter(format!("profile radius must be > 0, got {radius}")));
        }
        if !(inner_slope > 0.0 && inner_slope.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "profile slope must be > 0, got {inner_slope}"
            )));
        }
        Ok(RadialProfile::Smoothing { radius, inner_slope })
    }

    pub fn classical() -> Self {
        RadialProfile::Classical
    }

    pub fn zero() -> Self {
        RadialProfile::Constant { c: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::Smoothing { radius, inner_slope } => {
                Self::smoothing(*radius, *inner_slope).map(|_| ())
            }
            RadialProfile::GaussianBump { width, .. } if *width <= 0.0 => {
                Err(LabError::InvalidParameter("bump width must be > 0".into()))
            }
            RadialProfile::ScaledLaplacian { base, .. } => {
                base.validate()?;
                if base.laplacian_higher(1.0).is_none() {
                    return Err(LabError::InvalidParameter(
                        "base profile lacks closed-form Laplacian derivatives".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `[f, f', f'', f''']` at radius `r ≥ 0`.
    pub fn derivatives(&self, r: f64) -> [f64; 4] {
        match self {
            RadialProfile::Smoothing { radius, inner_slope } => {
                smoothing_branch(*radius, *inner_slope, r, r > *radius)
            }
            RadialProfile::Classical => [0.5 * r * r, r, 1.0, 0.0],
            RadialProfile::GaussianBump { amp, width } => {
                let c = 1.0 / (width * width);
                let f = amp * (-c * r * r).exp();
                [
                    f,
                    -2.0 * c * r * f,
                    (-2.0 * c + 4.0 * c * c * r * r) * f,
                    (12.0 * c * c * r - 8.0 * c.powi(3) * r.powi(3)) * f,
                ]
            }
            RadialProfile::InvBracket { s } => DecayProfile::InvBracket(*s).derivatives(r),
            RadialProfile::Constant { c } => [*c, 0.0, 0.0, 0.0],
            RadialProfile::ScaledLaplacian { base, factor } => {
                let hi = base.laplacian_higher(r).unwrap_or([f64::NAN; 2]);
                [
                    factor * base.laplacian(r),
                    factor * base.laplacian_d1(r),
                    factor * hi[0],
                    factor * hi[1],
                ]
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivatives(r)[0]
    }

    pub fn d1(&self, r: f64) -> f64 {
        self.derivatives(r)[1]
    }

    pub fn d2(&self, r: f64) -> f64 {
        self.derivatives(r)[2]
    }

    pub fn d3(&self, r: f64) -> f64 {
        self.derivatives(r)[3]
    }

    /// Radii where the closed form switches branch.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::Smoothing { radius, .. } => vec![*radius],
            RadialProfile::ScaledLaplacian { base, .. } => base.breakpoints(),
            _ => Vec::new(),
        }
    }

    /// Whether `f'(0) ≠ 0`, i.e. the profile has a cone at the origin.
    pub fn has_origin_cone(&self) -> bool {
        self.d1(0.0) != 0.0
    }

    /// `Δf = f'' + 2f'/r` (three dimensions).
    pub fn laplacian(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Smoothing { radius, inner_slope } => {
                if r <= *radius {
                    1.0 / radius + 2.0 * inner_slope / r
                } else {
                    (1.0 + 2.0 * inner_slope) / r
                }
            }
            RadialProfile::Classical => 3.0,
            _ => {
                let d = self.derivatives(r);
                if r == 0.0 {
                    if d[1] == 0.0 {
                        3.0 * d[2]
                    } else {
                        f64::INFINITY
                    }
                } else {
                    d[2] + 2.0 * d[1] / r
                }
            }
        }
    }

    /// `(Δf)' = f''' + 2f''/r − 2f'/r²`
    pub fn laplacian_d1(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Smoothing { radius, inner_slope } => {
                if r <= *radius {
                    -2.0 * inner_slope / (r * r)
                } else {
                    -(1.0 + 2.0 * inner_slope) / (r * r)
                }
            }
            RadialProfile::Classical => 0.0,
            _ => {
                let d = self.derivatives(r);
                if r == 0.0 {
                    0.0
                } else {
                    d[3] + 2.0 * d[2] / r - 2.0 * d[1] / (r * r)
                }
            }
        }
    }

    /// `[(Δf)'', (Δf)''']` where a closed form is available.
    pub fn laplacian_higher(&self, r: f64) -> Option<[f64; 2]> {
        match self {
            RadialProfile::Smoothing { radius, inner_slope } => {
                let q = if r <= *radius { 2.0 * inner_slope } else { 1.0 + 2.0 * inner_slope };
                Some([2.0 * q / r.powi(3), -6.0 * q / r.powi(4)])
            }
            RadialProfile::Classical | RadialProfile::Constant { .. } => Some([0.0, 0.0]),
            RadialProfile::GaussianBump { amp, width } => {
                let c = 1.0 / (width * width);
                let f = amp * (-c * r * r).exp();
                Some([
                    f * (20.0 * c * c - 64.0 * c.powi(3) * r * r + 16.0 * c.powi(4) * r.powi(4)),
                    f * (-168.0 * c.powi(3) * r + 192.0 * c.powi(4) * r.powi(3)
                        - 32.0 * c.powi(5) * r.powi(5)),
                ])
            }
            _ => None,
        }
    }

    /// `∇f(x) = f'(r) x̂`, zero at the origin.
    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let r = norm(x);
        if r == 0.0 {
            return [0.0; 3];
        }
        let d = self.d1(r) / r;
        [d * x[0], d * x[1], d * x[2]]
    }

    /// Hessian `f'' x̂x̂ᵀ + (f'/r)(Id − x̂x̂ᵀ)`; `None` at the origin when the profile has a cone there.
    pub fn hessian(&self, x: [f64; 3]) -> Option<Mat3> {
        let r = norm(x);
        let d = self.derivatives(r);
        if r == 0.0 {
            if d[1] != 0.0 {
                return None;
            }
            let mut m = [[0.0; 3]; 3];
            for (j, row) in m.iter_mut().enumerate() {
                row[j] = d[2];
            }
            return Some(m);
        }
        let xh = [x[0] / r, x[1] / r, x[2] / r];
        let t = d[1] / r;
        let mut m = [[0.0; 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                let id = if j == k { 1.0 } else { 0.0 };
                m[j][k] = d[2] * xh[j] * xh[k] + t * (id - xh[j] * xh[k]);
            }
        }
        Some(m)
    }

    /// `sup_r f'(r)` for the monotone-slope profiles, `None` otherwise.
    pub fn sup_slope(&self) -> Option<f64> {
        match self {
            RadialProfile::Smoothing { inner_slope, .. } => Some(inner_slope + 0.5),
            RadialProfile::Constant { .. } => Some(0.0),
            _ => None,
        }
    }
}

fn smoothing_branch(big_r: f64, m: f64, r: f64, outer: bool) -> [f64; 4] {
    if !outer {
        [m * r + r * r / (6.0 * big_r), m + r / (3.0 * big_r), 1.0 / (3.0 * big_r), 0.0]
    } else {
        let at_r = m * big_r + big_r / 6.0;
        let r2 = big_r * big_r;
        [
            at_r + (m + 0.5) * (r - big_r) + r2 / 6.0 * (1.0 / r - 1.0 / big_r),
            m + 0.5 - r2 / (6.0 * r * r),
            r2 / (3.0 * r.powi(3)),
            -r2 / r.powi(4),
        ]
    }
}

#[inline]
pub(crate) fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fd(f: impl Fn(f64) -> f64, r: f64) -> f64 {
        let s = 1e-5;
        (f(r + s) - f(r - s)) / (2.0 * s)
    }

    #[test]
    fn smoothing_slope_continuous_at_radius() {
        let p = RadialProfile::smoothing(1.7, 0.5).unwrap();
        let (inner, outer) = (p.derivatives(1.7), p.derivatives(1.7 * (1.0 + 1e-15)));
        assert_relative_eq!(inner[1], 0.5 + 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(outer[1], 0.5 + 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(inner[0], outer[0], epsilon = 1e-14);
        assert_relative_eq!(inner[2], outer[2], epsilon = 1e-14);
    }

    #[test]
    fn smoothing_branches_agree_at_radius() {
        for &(big_r, m) in &[(1.0, 0.5), (2.0, 0.7), (0.3, 2.5)] {
            let inner = smoothing_branch(big_r, m, big_r, false);
            let outer = smoothing_branch(big_r, m, big_r, true);
            for k in 0..3 {
                assert!((inner[k] - outer[k]).abs() <= 4.0 * f64::EPSILON * inner[k].abs());
            }
        }
    }

    #[test]
    fn smoothing_laplacian_far_branch() {
        let p = RadialProfile::smoothing(1.0, 0.5).unwrap();
        assert_relative_eq!(p.laplacian(2.0), (1.0 + 2.0 * 0.5) / 2.0, epsilon = 1e-15);
        assert_eq!(p.sup_slope(), Some(1.0));
    }

    #[test]
    fn smoothing_rejects_bad_parameters() {
        assert!(RadialProfile::smoothing(0.0, 1.0).is_err());
        assert!(RadialProfile::smoothing(1.0, -0.1).is_err());
    }

    #[test]
    fn classical_profile() {
        let p = RadialProfile::classical();
        assert_eq!(p.d2(1.3), 1.0);
        assert_eq!(p.laplacian(0.4), 3.0);
        assert_eq!(p.laplacian_d1(0.4), 0.0);
    }

    #[test]
    fn closed_forms_match_differences() {
        let profiles = [
            RadialProfile::smoothing(1.2, 0.3).unwrap(),
            RadialProfile::GaussianBump { amp: 0.7, width: 1.3 },
            RadialProfile::InvBracket { s: 1.5 },
            RadialProfile::ScaledLaplacian {
                base: Box::new(RadialProfile::GaussianBump { amp: 1.0, width: 0.9 }),
                factor: 0.25,
            },
        ];
        for p in &profiles {
            for &r in &[0.3, 0.9, 1.9, 3.1] {
                let d = p.derivatives(r);
                for n in 0..3 {
                    assert_relative_eq!(d[n + 1], fd(|t| p.derivatives(t)[n], r), epsilon = 1e-6, max_relative = 1e-6);
                }
                assert_relative_eq!(p.laplacian_d1(r), fd(|t| p.laplacian(t), r), epsilon = 1e-6, max_relative = 1e-6);
                if let Some(hi) = p.laplacian_higher(r) {
                    assert_relative_eq!(hi[0], fd(|t| p.laplacian_d1(t), r), epsilon = 1e-5, max_relative = 1e-6);
                    assert_relative_eq!(hi[1], fd(|t| p.laplacian_higher(t).unwrap()[0], r), epsilon = 1e-5, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn hessian_of_classical_is_identity() {
        let h = RadialProfile::classical().hessian([0.3, -1.0, 2.0]).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert_relative_eq!(h[j][k], if j == k { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
        assert!(RadialProfile::smoothing(1.0, 0.5).unwrap().hessian([0.0; 3]).is_none());
    }

    proptest! {
        #[test]
        fn smoothing_laplacian_matches_branch_value(r in 1e-3f64..20.0, big_r in 0.2f64..5.0, m in 0.05f64..3.0) {
            let p = RadialProfile::smoothing(big_r, m).unwrap();
            let d = p.derivatives(r);
            let generic = d[2] + 2.0 * d[1] / r;
            prop_assert!((generic - p.laplacian(r)).abs() <= 1e-12 * (1.0 + p.laplacian(r).abs()));
        }

        #[test]
        fn smoothing_r_times_laplacian_bounded(r in 1e-6f64..1e3, big_r in 0.2f64..5.0, m in 0.05f64..3.0) {
            let p = RadialProfile::smoothing(big_r, m).unwrap();
            prop_assert!(r * p.laplacian(r) <= 1.0 + 2.0 * m + 1e-12);
        }

        #[test]
        fn smoothing_slope_monotone_below_sup(r in 0.0f64..50.0, dr in 1e-6f64..5.0, m in 0.05f64..3.0) {
            let p = RadialProfile::smoothing(1.0, m).unwrap();
            prop_assert!(p.d1(r) <= p.d1(r + dr) + 1e-15);
            prop_assert!(p.d1(r + dr) <= m + 0.5);
        }
    }
}
