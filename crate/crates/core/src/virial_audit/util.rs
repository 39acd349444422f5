use std::ops::Add;

use crate::fields::{GridSpec, RealField};

/// Fixed-width vector of partial sums for one-pass reductions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sums<const K: usize>(pub [f64; K]);

impl<const K: usize> Add for Sums<K> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
        self
    }
}

impl<const K: usize> Sums<K> {
    pub(crate) const ZERO: Self = Sums([0.0; K]);
}

/// Trilinear interpolation of a node field; zero outside the box.
pub(crate) fn trilinear(f: &RealField, x: [f64; 3]) -> f64 {
    let g = f.grid();
    let n = g.n();
    let h = g.h();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let s = (x[a] + g.half_width()) / h;
        if !(0.0..=(n - 1) as f64).contains(&s) {
            return 0.0;
        }
        let i = (s.floor() as usize).min(n - 2);
        base[a] = i;
        frac[a] = s - i as f64;
    }
    let mut v = 0.0;
    for corner in 0..8 {
        let mut w = 1.0;
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let up = (corner >> a) & 1 == 1;
            ijk[a] = base[a] + up as usize;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
        }
        if w != 0.0 {
            v += w * f.data()[g.index(ijk[0], ijk[1], ijk[2])];
        }
    }
    v
}

/// `∫_{|x|=r} f dσ` on a Fibonacci sphere with trilinear interpolation.
pub(crate) fn sphere_integral(f: &RealField, r: f64, points: usize) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut s = 0.0;
    for p in 0..points {
        let z = 1.0 - (2.0 * p as f64 + 1.0) / points as f64;
        let rho = (1.0 - z * z).sqrt();
        let th = golden * p as f64;
        s += trilinear(f, [r * rho * th.cos(), r * rho * th.sin(), r * z]);
    }
    4.0 * std::f64::consts::PI * r * r * s / points as f64
}

/// Centered second difference of a uniformly sampled series at `n`.
pub fn second_difference(series: &[f64], dt: f64, n: usize) -> Option<f64> {
    if n == 0 || n + 1 >= series.len() {
        return None;
    }
    Some((series[n + 1] - 2.0 * series[n] + series[n - 1]) / (dt * dt))
}

/// Centered first difference of a uniformly sampled series at `n`.
pub fn first_difference(series: &[f64], dt: f64, n: usize) -> Option<f64> {
    if n == 0 || n + 1 >= series.len() {
        return None;
    }
    Some((series[n + 1] - series[n - 1]) / (2.0 * dt))
}

/// Empirical order `p` in `err ≈ C h^p`, least squares over the sequence.
pub fn convergence_order(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.abs().max(f64::MIN_POSITIVE).ln()).collect();
    crate::multipliers::fit_slope(&xs, &ys)
}

pub(crate) fn interior(g: &GridSpec, i: usize) -> bool {
    !g.is_boundary(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trilinear_reproduces_affine() {
        let g = GridSpec::new(2.0, 9).unwrap();
        let f = RealField::from_fn(g, |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2]);
        let x = [0.37, -0.81, 1.13];
        assert_relative_eq!(trilinear(&f, x), 1.0 + 0.74 + 0.81 + 0.565, epsilon = 1e-12);
    }

    #[test]
    fn sphere_area() {
        let g = GridSpec::new(3.0, 13).unwrap();
        let one = RealField::from_fn(g, |_| 1.0);
        let r = 1.7;
        assert_relative_eq!(sphere_integral(&one, r, 2000), 4.0 * std::f64::consts::PI * r * r, max_relative = 1e-12);
    }

    #[test]
    fn order_of_exact_power() {
        let hs = [0.4, 0.2, 0.1];
        let errs: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        assert_relative_eq!(convergence_order(&hs, &errs), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn differences_of_quadratic() {
        let dt = 0.1;
        let s: Vec<f64> = (0..5).map(|n| 0.75 + 3.0 * (n as f64 * dt).powi(2)).collect();
        assert_relative_eq!(second_difference(&s, dt, 2).unwrap(), 6.0, epsilon = 1e-10);
        assert_relative_eq!(first_difference(&s, dt, 2).unwrap(), 1.2, epsilon = 1e-12);
        assert!(second_difference(&s, dt, 0).is_none());
    }
}
