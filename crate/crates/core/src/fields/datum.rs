use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GridSpec, ScalarField, C64};

/// `π^{−3/4} w^{−3/2} e^{−|x−c|²/(2w²)} e^{i k·x}`, unit `L²` norm in `ℝ³`.
pub fn gaussian(grid: GridSpec, width: f64, center: [f64; 3], momentum: [f64; 3]) -> ScalarField {
    let norm = std::f64::consts::PI.powf(-0.75) * width.powf(-1.5);
    ScalarField::from_fn_dirichlet(grid, |x| {
        let d2: f64 = (0..3).map(|k| (x[k] - center[k]).powi(2)).sum();
        let phase: f64 = (0..3).map(|k| momentum[k] * x[k]).sum();
        C64::from_polar(norm * (-d2 / (2.0 * width * width)).exp(), phase)
    })
}

/// `(−Δ)^m` of a centred Gaussian of width `w`, normalized in the discrete `L²` norm.
///
/// The spectrum is `|ξ|^{2m} e^{−w²|ξ|²/2}`, so low frequencies are suppressed.
pub fn laplacian_gaussian(grid: GridSpec, width: f64, order: usize) -> ScalarField {
    let q = laplacian_gaussian_poly(order);
    let f = ScalarField::from_fn_dirichlet(grid, |x| {
        let s = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (width * width);
        let p = q.iter().rev().fold(0.0, |acc, c| acc * s + c);
        C64::new(p * (-0.5 * s).exp(), 0.0)
    });
    let n = f.norm();
    if n > 0.0 {
        f.scaled(C64::new(1.0 / n, 0.0))
    } else {
        f
    }
}

/// Coefficients in `s = r²/w²` of `q` with `(−w²Δ)^m e^{−s/2} = q(s) e^{−s/2}`.
fn laplacian_gaussian_poly(order: usize) -> Vec<f64> {
    // −w²Δ[q e^{−s/2}] = −[4s q'' + (6 − 4s) q' + (s − 3) q] e^{−s/2}
    let mut q = vec![1.0];
    for _ in 0..order {
        let mut next = vec![0.0; q.len() + 1];
        for (k, &c) in q.iter().enumerate() {
            let kf = k as f64;
            next[k + 1] -= c;
            next[k] += (3.0 + 4.0 * kf) * c;
            if k > 0 {
                next[k - 1] -= (4.0 * kf * (kf - 1.0) + 6.0 * kf) * c;
            }
        }
        q = next;
    }
    q
}

/// Largest wavenumber of [`random_bandlimited`].
pub const BAND_LIMIT: f64 = 1.5;
const MODES: usize = 24;

/// Sum of random plane waves with `|k| ≤ 1.5` under a centred Gaussian
/// envelope of width `L/5`, normalized in the discrete `L²` norm.
pub fn random_bandlimited(grid: GridSpec, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<([f64; 3], C64)> = (0..MODES)
        .map(|_| {
            let k = loop {
                let k = [
                    rng.random_range(-BAND_LIMIT..BAND_LIMIT),
                    rng.random_range(-BAND_LIMIT..BAND_LIMIT),
                    rng.random_range(-BAND_LIMIT..BAND_LIMIT),
                ];
                if k.iter().map(|v| v * v).sum::<f64>() <= BAND_LIMIT * BAND_LIMIT {
                    break k;
                }
            };
            (k, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        })
        .collect();
    let center = [
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
    ];
    let sigma = grid.half_width() / 5.0;
    let f = ScalarField::from_fn_dirichlet(grid, |x| {
        let d2: f64 = (0..3).map(|k| (x[k] - center[k]).powi(2)).sum();
        let env = (-d2 / (2.0 * sigma * sigma)).exp();
        let s: C64 = modes
            .iter()
            .map(|(k, c)| c * C64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]))
            .sum();
        s * env
    });
    let n = f.norm();
    if n > 0.0 {
        f.scaled(C64::new(1.0 / n, 0.0))
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_is_normalized() {
        let g = GridSpec::new(8.0, 49).unwrap();
        let u = gaussian(g, 1.0, [0.3, -0.2, 0.1], [0.5, 0.0, 0.0]);
        assert_relative_eq!(u.norm(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn laplacian_gaussian_polynomials() {
        assert_eq!(laplacian_gaussian_poly(1), vec![3.0, -1.0]);
        assert_eq!(laplacian_gaussian_poly(2), vec![15.0, -10.0, 1.0]);
        assert_eq!(laplacian_gaussian_poly(3), vec![105.0, -105.0, 21.0, -1.0]);
    }

    #[test]
    fn laplacian_gaussian_matches_discrete_laplacian() {
        let err = |n: usize| {
            let g = GridSpec::new(6.0, n).unwrap();
            let base = gaussian(g, 1.2, [0.0; 3], [0.0; 3]);
            let lap = crate::operators::Hamiltonian::free(g).apply(&base);
            let lap = lap.scaled(C64::new(1.0 / lap.norm(), 0.0));
            let exact = laplacian_gaussian(g, 1.2, 1);
            lap.add_scaled(C64::new(-1.0, 0.0), &exact).norm()
        };
        let (coarse, fine) = (err(25), err(49));
        assert!(fine < 0.01 && coarse / fine > 3.5, "{coarse} {fine}");
    }

    #[test]
    fn random_fields_are_seeded() {
        let g = GridSpec::new(6.0, 17).unwrap();
        assert_eq!(random_bandlimited(g, 7), random_bandlimited(g, 7));
        assert_ne!(random_bandlimited(g, 7), random_bandlimited(g, 8));
        assert_relative_eq!(random_bandlimited(g, 3).norm(), 1.0, epsilon = 1e-12);
    }
}
