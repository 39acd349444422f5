use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use virlab_core::fields::{gradient, integrate, shell_sup, GridSpec, RealField, ScalarField, C64};
use virlab_core::multipliers::{sample, RadialProfile};
use virlab_core::operators::*;
use virlab_core::virial_audit::*;

fn random_field(g: GridSpec, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<C64> = (0..g.len()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let mut f = ScalarField::from_vec(g, vals).unwrap();
    f.zero_boundary();
    f
}

fn bump(x: [f64; 3], c: [f64; 3], w: f64) -> f64 {
    let r2 = (0..3).map(|k| (x[k] - c[k]).powi(2)).sum::<f64>();
    (-r2 / (w * w)).exp()
}

fn perturbed(g: GridSpec, eps: f64, mag: f64, v: f64) -> Hamiltonian {
    let a = CoefficientField::radial(g, RadialScalar { epsilon: eps, profile: DecayProfile::InvBracket(1.0) }, 2.0).unwrap();
    let pot = Potentials::from_presets(g, MagneticPreset::RotatingGaussian { strength: mag }, ElectricPreset::Gaussian { amp: v });
    Hamiltonian::new(a, pot).unwrap()
}

fn cheap() -> ProptestConfig {
    ProptestConfig { cases: 12, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn integrate_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), ar in -5.0f64..5.0, ai in -5.0f64..5.0, b in -5.0f64..5.0) {
        let g = GridSpec::new(2.0, 9).unwrap();
        let (f, h) = (random_field(g, s1), random_field(g, s2));
        let alpha = C64::new(ar, ai);
        let beta = C64::new(b, 0.0);
        let combo = f.scaled(alpha).add_scaled(beta, &h);
        let lhs = integrate(&combo).unwrap() - alpha * integrate(&f).unwrap() - beta * integrate(&h).unwrap();
        let scale = alpha.norm() * f.norm() + beta.norm() * h.norm();
        prop_assert!(lhs.norm() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn shell_sup_monotone_under_domination(seed in any::<u64>(), rho in 0.0f64..2.0, width in 0.2f64..0.6) {
        let g = GridSpec::new(2.0, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let dom: Vec<f64> = f.iter().map(|v| v + rng.random_range(0.0..0.5)).collect();
        let f = RealField::from_vec(g, f).unwrap();
        let dom = RealField::from_vec(g, dom).unwrap();
        prop_assert!(shell_sup(&f, rho, width).unwrap() <= shell_sup(&dom, rho, width).unwrap());
    }

    #[test]
    fn distorted_hessian_splits_radially(seed in any::<u64>(), big_r in 0.3f64..3.0, m in 0.1f64..2.0, eps in 0.0f64..0.5) {
        let g = GridSpec::new(3.0, 13).unwrap();
        let a = CoefficientField::radial(g, RadialScalar { epsilon: eps, profile: DecayProfile::InvBracket(1.0) }, 2.0).unwrap();
        let phi = RadialProfile::smoothing(big_r, m).unwrap();
        let u = random_field(g, seed);
        let grad = gradient(&u);
        let form = distorted_hessian_form(&grad, &phi, &a).unwrap();
        let (rad, tan) = radial_tangential_split(&grad, &a).unwrap();
        for i in 0..g.len() {
            let r = g.radius(i);
            if r == 0.0 || phi.breakpoints().iter().any(|b| (r - b).abs() < 1e-9) {
                continue;
            }
            let split = phi.d2(r) * rad.get(i) + phi.d1(r) / r * tan.get(i);
            let scale = rad.get(i) + tan.get(i);
            prop_assert!((form.get(i) - split).abs() <= 1e-10 * (1.0 + scale), "node {i}: {} vs {split}", form.get(i));
        }
    }

    #[test]
    fn smoothing_profile_continuous_at_radius(big_r in 0.05f64..10.0, m in 0.01f64..5.0) {
        let p = RadialProfile::smoothing(big_r, m).unwrap();
        let below = p.derivatives(big_r * (1.0 - 1e-14));
        let above = p.derivatives(big_r * (1.0 + 1e-14));
        for k in 0..3 {
            let tol = 1e-11 * (1.0 + below[k].abs()) * (1.0 + 1.0 / big_r).powi(k as i32);
            prop_assert!((below[k] - above[k]).abs() <= tol, "derivative {k}: {} vs {}", below[k], above[k]);
        }
    }

    #[test]
    fn smoothing_slope_sup_is_limit(m in 0.01f64..5.0) {
        let p = RadialProfile::smoothing(1.0, m).unwrap();
        prop_assert_eq!(p.sup_slope(), Some(m + 0.5));
        prop_assert!((p.d1(1e9) - (m + 0.5)).abs() < 1e-8);
    }

    #[test]
    fn morrey_scaling_by_power_of_two_is_exact(k in -20i32..20, neg in any::<bool>(), c in -0.5f64..0.5) {
        let g = GridSpec::new(2.0, 17).unwrap();
        let f = RealField::from_fn(g, |x| {
            let r2: f64 = (0..3).map(|j| (x[j] - c).powi(2)).sum();
            (1.0 - r2).max(0.0).powi(2)
        });
        let alpha = if neg { -(2f64.powi(k)) } else { 2f64.powi(k) };
        let base = morrey_campanato(&f, 1.0).unwrap().value;
        let scaled = morrey_campanato(&f.map(|v| alpha * v), 1.0).unwrap().value;
        prop_assert_eq!(scaled, alpha.abs() * base);
    }

    #[test]
    fn morrey_homogeneous(alpha in -10.0f64..10.0, c in -0.5f64..0.5) {
        let g = GridSpec::new(2.0, 17).unwrap();
        let f = RealField::from_fn(g, |x| bump(x, [c, 0.0, 0.0], 0.4));
        let base = morrey_campanato(&f, 1.0).unwrap().value;
        let scaled = morrey_campanato(&f.map(|v| alpha * v), 1.0).unwrap().value;
        prop_assert!((scaled - alpha.abs() * base).abs() <= 1e-13 * alpha.abs() * base);
    }

    #[test]
    fn certificate_at_half_reduces_to_sum(b in 0.0f64..1.0, v in 0.0f64..1.0, eps in 0.0f64..0.9) {
        let c = smoothing_certificate(b, v, 0.5, eps);
        prop_assert!((c.value - 2.0 * (b + v)).abs() <= 1e-14 * (1.0 + c.value));
        prop_assert_eq!(c.half_lhs, b + v);
        prop_assert_eq!(c.half_threshold, 0.5 * (1.0 - eps));
        // Both sides are compared in exact binary scalings of one another.
        prop_assert_eq!(c.pass, c.half_pass);
    }

    #[test]
    fn certificate_optimum_is_a_minimum(b in 1e-3f64..1.0, v in 0.0f64..1.0, m in 0.01f64..5.0) {
        let c = smoothing_certificate(b, v, m, 0.1);
        prop_assert!(c.optimal_value <= c.value * (1.0 + 1e-12));
    }

    #[test]
    fn theta_scales_quadratically(seed in any::<u64>(), ar in -3.0f64..3.0, ai in -3.0f64..3.0) {
        let g = GridSpec::new(2.0, 9).unwrap();
        let u = random_field(g, seed);
        let phi = RadialProfile::smoothing(1.0, 0.5).unwrap();
        let alpha = C64::new(ar, ai);
        let base = theta_s(&u, &phi);
        let scaled = theta_s(&u.scaled(alpha), &phi);
        prop_assert!((scaled - alpha.norm_sqr() * base).abs() <= 1e-12 * (1.0 + alpha.norm_sqr() * base));
    }
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn hamiltonian_hermitian_on_random_pairs(seed in any::<u64>(), eps in 0.0f64..0.3, mag in -2.0f64..2.0, v in -1.0f64..1.0) {
        let g = GridSpec::new(3.0, 11).unwrap();
        let h = perturbed(g, eps, mag, v);
        let mut worst = 0.0f64;
        for k in 0..20 {
            let u = random_field(g, seed ^ (2 * k));
            let w = random_field(g, seed ^ (2 * k + 1));
            let d = (h.apply(&u).inner(&w) - u.inner(&h.apply(&w))).norm() / (u.norm() * w.norm());
            worst = worst.max(d);
        }
        prop_assert!(worst <= 1e-10, "worst relative asymmetry {worst}");
    }

    #[test]
    fn nonnegative_potential_gives_psd(seed in any::<u64>(), eps in 0.0f64..0.3, mag in -2.0f64..2.0, v in 0.0f64..1.0) {
        let g = GridSpec::new(3.0, 11).unwrap();
        let h = perturbed(g, eps, mag, v);
        let u = random_field(g, seed);
        prop_assert!(h.energy(&u) >= -1e-12 * h.spectral_upper_bound() * u.norm_sqr());
    }

    #[test]
    fn commutator_is_antisymmetric(seed in any::<u64>(), eps in 0.0f64..0.3, mag in -2.0f64..2.0, big_r in 0.3f64..3.0) {
        let g = GridSpec::new(3.0, 11).unwrap();
        let h = perturbed(g, eps, mag, 0.1);
        let phi = sample(g, &RadialProfile::smoothing(big_r, 0.5).unwrap());
        let v = random_field(g, seed);
        let tv = apply_t(&v, &phi, &h);
        prop_assert!(v.inner(&tv).re.abs() <= 1e-10 * v.norm() * tv.norm());
    }

    #[test]
    fn discrete_leibniz_second_order(c in prop::array::uniform3(-0.5f64..0.5), d in prop::array::uniform3(-0.5f64..0.5), k in -2.0f64..2.0) {
        let err = |n: usize| {
            let g = GridSpec::new(3.0, n).unwrap();
            let f = ScalarField::from_fn(g, |x| C64::from_polar(bump(x, c, 1.0), k * x[0]));
            let w = ScalarField::from_fn(g, |x| C64::new(bump(x, d, 1.3), 0.0));
            let fw = ScalarField::from_index_fn(g, |i| f.get(i) * w.get(i));
            let (gf, gw, gfw) = (gradient(&f), gradient(&w), gradient(&fw));
            let mut worst = 0.0f64;
            for i in 0..g.len() {
                if g.radius(i) > 1.5 {
                    continue;
                }
                let (a, b, ab) = (gf.at(i), gw.at(i), gfw.at(i));
                for j in 0..3 {
                    worst = worst.max((ab[j] - f.get(i) * b[j] - w.get(i) * a[j]).norm());
                }
            }
            worst
        };
        let (coarse, fine) = (err(25), err(49));
        prop_assert!(fine < 0.35 * coarse, "{coarse} -> {fine}");
    }

    #[test]
    fn gauge_covariance_second_order(p in prop::array::uniform3(-0.5f64..0.5), mag in -1.0f64..1.0) {
        let chi = move |x: [f64; 3]| p[0] * x[0] * x[1] + p[1] * (x[2] * 1.3).sin() + p[2] * x[0];
        let grad_chi = move |x: [f64; 3]| [p[0] * x[1] + p[2], p[0] * x[0], 1.3 * p[1] * (x[2] * 1.3).cos()];
        let b = MagneticPreset::RotatingGaussian { strength: mag };
        let gap = |n: usize| {
            let g = GridSpec::new(4.0, n).unwrap();
            let u = ScalarField::from_fn(g, |x| C64::new(bump(x, [0.2, -0.1, 0.0], 1.0), 0.0));
            let base = Hamiltonian::new(CoefficientField::identity(g), Potentials::from_fns(g, |x| b.eval(x), |_| 0.0)).unwrap();
            let moved = Potentials::from_fns(g, |x| {
                let (b0, d) = (b.eval(x), grad_chi(x));
                [b0[0] + d[0], b0[1] + d[1], b0[2] + d[2]]
            }, |_| 0.0);
            let gauged = Hamiltonian::new(CoefficientField::identity(g), moved).unwrap();
            let ug = ScalarField::from_index_fn(g, |i| u.get(i) * C64::from_polar(1.0, -chi(g.point(i))));
            let e0 = base.energy(&u);
            let grad0 = covariant_gradient(&u, base.potentials()).unwrap().norm_sqr_density();
            let grad1 = covariant_gradient(&ug, gauged.potentials()).unwrap().norm_sqr_density();
            let dens = grad0.data().iter().zip(grad1.data()).map(|(a, b)| (a - b).abs()).sum::<f64>() * g.cell_volume();
            ((gauged.energy(&ug) - e0).abs() / e0, dens)
        };
        let ((e1, d1), (e2, d2)) = (gap(25), gap(49));
        prop_assert!(e2 < 0.35 * e1 || e1 < 1e-9, "energy {e1} -> {e2}");
        prop_assert!(d2 < 0.31 * d1 || d1 < 1e-9, "density {d1} -> {d2}");
    }

    #[test]
    fn two_form_of_pure_gauge_vanishes(p in prop::array::uniform3(-1.0f64..1.0)) {
        let two = |n: usize| {
            let g = GridSpec::new(2.0, n).unwrap();
            let pot = Potentials::from_fns(g, |x| [p[0] * x[1] + p[2] * x[0].cos(), p[0] * x[0], 2.0 * p[1] * x[2]], |_| 0.0);
            magnetic_2form(&pot).max_abs()
        };
        prop_assert!(two(17) < 1e-8 && two(33) < 1e-8);
    }
}
