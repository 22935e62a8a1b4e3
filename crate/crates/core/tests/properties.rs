use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use wqed_core::asymptotics::{self, Sign};
use wqed_core::kernel;
use wqed_core::model::{self, ModelParams, PairMomentum};
use wqed_core::poly::{self, RootOptions};
use wqed_core::solver::{self, SolverOptions};
use wqed_core::C64;

const CASES: u32 = 256;

/// Parameters away from the chiral limit and momenta at least `margin`
/// from the singular set.
fn params_and_k(margin: f64) -> impl Strategy<Value = (ModelParams, f64)> {
    (0.1..0.45f64, 0.05..1.0f64, 0.02..0.98f64)
        .prop_map(|(phi, xi, k)| (ModelParams::new(phi * PI, 1.0, xi).unwrap(), k * TAU))
        .prop_filter("near a singular momentum", move |(p, k)| p.singular_distance(*k).0 > margin)
}

fn complex() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn omegas(p: &ModelParams, k: f64) -> Vec<C64> {
    let m = PairMomentum::new(p, k).unwrap();
    solver::solve_states(p, &m).unwrap().iter().map(|s| s.omega).collect()
}

fn same_multiset(a: &[C64], b: &[C64], tol: f64) -> bool {
    let mut used = vec![false; b.len()];
    a.len() == b.len()
        && a.iter().all(|x| {
            let hit = b
                .iter()
                .enumerate()
                .filter(|(i, y)| !used[*i] && (*x - **y).norm() < tol * (1.0 + x.norm()))
                .min_by(|p, q| (*x - *p.1).norm().total_cmp(&(*x - *q.1).norm()));
            match hit {
                Some((i, _)) => {
                    used[i] = true;
                    true
                }
                None => false,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn swap_symmetry_of_spectra((p, k) in params_and_k(0.02)) {
        let a = omegas(&p, k);
        let b = omegas(&p.mirrored(), TAU - k);
        prop_assert!(same_multiset(&a, &b, 1e-9), "{a:?} vs {b:?}");
    }

    #[test]
    fn raw_solutions_closed_under_conjugation((p, k) in params_and_k(0.02)) {
        let m = PairMomentum::new(&p, k).unwrap();
        let raw = solver::raw_solutions(&p, &m, &SolverOptions::default()).unwrap();
        let w: Vec<C64> = raw.iter().map(|s| s.omega).collect();
        let wc: Vec<C64> = w.iter().map(|x| x.conj()).collect();
        prop_assert!(same_multiset(&w, &wc, 1e-9), "{w:?}");
    }

    #[test]
    fn quartic_roots_form_reciprocal_pairs((p, k) in params_and_k(0.02)) {
        let m = PairMomentum::new(&p, k).unwrap();
        let parts = kernel::CoeffParts::new(&p, &m).unwrap();
        for s in solver::solve_states(&p, &m).unwrap() {
            let q = kernel::quartic(&parts.at(s.omega));
            let r = poly::roots(&q, RootOptions::default()).unwrap();
            prop_assert_eq!(r.len(), 4);
            let prod = r.iter().fold(C64::new(1.0, 0.0), |acc, z| acc * z);
            prop_assert!((prod - 1.0).norm() < 1e-8, "product {prod}");
            for z in &r {
                let mate = r.iter().map(|y| (y * z - 1.0).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(mate < 1e-6, "no reciprocal partner for {z}");
            }
            // Both Bloch factors of the state are among the roots.
            for z in [s.z_a, s.z_b] {
                let d = r.iter().map(|y| (y - z).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(d < 1e-6 * (1.0 + z.norm()));
            }
        }
    }

    #[test]
    fn every_state_passes_the_residual_gate((p, k) in params_and_k(0.0065)) {
        let m = PairMomentum::new(&p, k).unwrap();
        for s in solver::solve_states(&p, &m).unwrap() {
            prop_assert!(s.residual < 1e-9, "residual {}", s.residual);
            prop_assert!(s.omega.im <= 1e-8);
            prop_assert!((s.a.norm_sqr() + s.b.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dispersion_is_reciprocal((p, k) in params_and_k(0.02), w in complex(), z in complex()) {
        prop_assume!(z.norm() > 0.05);
        let c = kernel::coeffs(&p, &PairMomentum::new(&p, k).unwrap(), w).unwrap();
        let d1 = kernel::dispersion_value(&c, z).unwrap();
        let d2 = kernel::dispersion_value(&c, z.inv()).unwrap();
        let scale = c.as_array().iter().map(|x| x.norm()).sum::<f64>() * (z.norm() + z.norm().recip()).powi(2);
        prop_assert!((d1 - d2).norm() < 1e-12 * scale);
    }

    #[test]
    fn coefficients_are_affine((p, k) in params_and_k(0.02), w1 in complex(), w2 in complex()) {
        let m = PairMomentum::new(&p, k).unwrap();
        let c = |w: C64| kernel::coeffs(&p, &m, w).unwrap().as_array();
        let (a, b, z, s) = (c(w1), c(w2), c(C64::new(0.0, 0.0)), c(w1 + w2));
        for i in 0..6 {
            let lhs = a[i] + b[i] - z[i];
            prop_assert!((lhs - s[i]).norm() < 1e-10 * (1.0 + s[i].norm() + a[i].norm() + b[i].norm()));
        }
    }

    #[test]
    fn coefficients_are_real_for_real_frequency((p, k) in params_and_k(0.02), w in -5.0..5.0f64) {
        let m = PairMomentum::new(&p, k).unwrap();
        for c in kernel::coeffs(&p, &m, C64::new(w, 0.0)).unwrap().as_array() {
            prop_assert_eq!(c.im, 0.0);
        }
    }

    #[test]
    fn polariton_dispersion_is_real(phi in 0.1..0.45f64, xi in 0.0..1.0f64, q in -3.1..3.1f64) {
        let p = ModelParams::new(phi * PI, 1.0, xi).unwrap();
        prop_assume!((q - p.phi()).abs() > 1e-3 && (q + p.phi()).abs() > 1e-3);
        let d = model::polariton_dispersion(&p, q).unwrap();
        prop_assert!(d.is_finite());
        let mirrored = model::polariton_dispersion(&p.mirrored(), -q).unwrap();
        prop_assert!((d - mirrored).abs() < 1e-9 * (1.0 + d.abs()));
    }

    #[test]
    fn small_k_asymptotes_are_conjugate(phi in 0.1..0.45f64, xi in 0.0..=1.0f64, k in 0.001..0.1f64) {
        let p = ModelParams::new(phi * PI, 1.0, xi).unwrap();
        let plus = asymptotics::omega_k0(&p, k, Sign::Plus).unwrap();
        let minus = asymptotics::omega_k0(&p, k, Sign::Minus).unwrap();
        prop_assert!((plus - minus.conj()).norm() < 1e-12 * plus.norm());
        let (wp, wm) = asymptotics::discriminant_omega(&p);
        prop_assert!((wp.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((wm.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn continua_are_swap_symmetric((p, k) in params_and_k(0.02)) {
        let a = model::continuum_bands(&p, &PairMomentum::new(&p, k).unwrap(), 2000).unwrap();
        let q = p.mirrored();
        let b = model::continuum_bands(&q, &PairMomentum::new(&q, TAU - k).unwrap(), 2000).unwrap();
        prop_assert_eq!(a.bands.len(), b.bands.len());
        for (x, y) in a.bands.iter().zip(&b.bands) {
            prop_assert_eq!(x.label, y.label);
            for (u, v) in [(x.lo, y.lo), (x.hi, y.hi)] {
                prop_assert!(u == v || (u - v).abs() < 1e-9 * (1.0 + u.abs()), "{u} vs {v}");
            }
        }
    }
}
