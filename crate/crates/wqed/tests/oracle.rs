use std::f64::consts::PI;

use wqed::oracle::{self, Corners};
use wqed_core::{CoeffParts, ModelParams, PairEigenstate, PairMomentum, StateClass, C64};

fn params(phi_over_pi: f64, xi: f64) -> ModelParams {
    ModelParams::new(phi_over_pi * PI, 1.0, xi).unwrap()
}

fn bound_state(p: &ModelParams, m: &PairMomentum) -> PairEigenstate {
    wqed_core::solver::solve_states(p, m)
        .unwrap()
        .into_iter()
        .find(|s| s.class == StateClass::Bound)
        .expect("a bound state")
}

#[test]
fn chiral_state_is_an_oracle_eigenpair() {
    let p = params(0.3, 0.0);
    let m = PairMomentum::new(&p, PI).unwrap();
    let s = bound_state(&p, &m);
    let spec = oracle::eig_all(&oracle::build_hk(&p, &m, 400).unwrap(), true).unwrap();
    let parts = CoeffParts::new(&p, &m).unwrap();
    let hit = oracle::match_state(&spec, &s, &parts, 200).unwrap();
    assert!(hit.distance < 1e-8, "{hit:?}");
    assert!(hit.overlap > 1.0 - 1e-6, "{hit:?}");

    // The same amplitude against a continuum eigenvector.
    let omegas = spec.omegas();
    let far = omegas
        .iter()
        .filter(|w| (*w - s.omega).norm() > 0.5)
        .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
        .unwrap();
    let probe = PairEigenstate { omega: *far, ..s };
    let miss = oracle::match_state(&spec, &probe, &parts, 200).unwrap();
    assert!(miss.overlap < 0.5, "{miss:?}");
}

#[test]
fn truncation_error_shrinks_with_n() {
    // A chiral bound state with |z| = 0.96 decays slowly enough that the
    // truncation shows.
    let p = params(0.3, 0.0);
    let k = 2.0 * (p.phi() + 0.96f64.acos());
    let m = PairMomentum::new(&p, k).unwrap();
    let s = bound_state(&p, &m);
    assert!((s.z_a.norm() - 0.96).abs() < 1e-12);
    let parts = CoeffParts::new(&p, &m).unwrap();
    let dist: Vec<f64> = [50, 100, 200]
        .into_iter()
        .map(|n| {
            let spec = oracle::eig_all(&oracle::build_hk(&p, &m, n).unwrap(), true).unwrap();
            oracle::match_state(&spec, &s, &parts, n / 2).unwrap().distance
        })
        .collect();
    assert!(dist[0] > dist[1] && dist[1] > dist[2], "{dist:?}");
    assert!(dist[0] > 1e-6, "{dist:?}");
    assert!(dist[2] < 1e-3, "{dist:?}");
}

#[test]
fn nonreciprocal_bound_states_match() {
    for xi in [0.1, 0.4, 0.9] {
        let (d, o) = wqed::commands::bound_state_match(&params(0.3, xi), PI, 200).unwrap().unwrap();
        assert!(d < 1e-6 && o > 0.999, "xi {xi}: {d:e} {o}");
    }
}

#[test]
fn pencil_is_similar_to_the_dense_operator() {
    for (xi, k) in [(0.4, PI), (0.9, 0.5 * PI), (0.2, 1.3 * PI)] {
        let (d, im, c) = wqed::commands::similarity_errors(&params(0.3, xi), k, 120).unwrap();
        assert!(d < 1e-8, "xi {xi}: {d:e}");
        assert!(im <= 1e-10, "xi {xi}: {im:e}");
        assert!(c < 1e-8, "xi {xi}: {c:e}");
    }
}

#[test]
fn real_corners_give_a_real_pencil() {
    let p = params(0.25, 0.6);
    let m = PairMomentum::new(&p, 0.8 * PI).unwrap();
    let pencil = oracle::build_generalized(&p, &m, 60, Corners::Real).unwrap();
    for op in [&pencil.p, &pencil.q] {
        assert!(op.entries.iter().all(|x| x.im.abs() < 1e-14));
    }
}

#[test]
fn single_excitation_sum_matches_closed_form() {
    for xi in [0.0, 0.4, 1.0] {
        let p = params(0.3, xi);
        for q in [0.0, PI, 0.5, -1.3, 2.0] {
            let e = oracle::single_excitation_check(&p, q).unwrap();
            assert!(e < 1e-10, "xi {xi}, q {q}: {e:e}");
        }
        let fit = oracle::pole_fit(&p, 1e-3).unwrap();
        assert!(fit.worst_relative() < 1e-6, "{fit:?}");
    }
}

#[test]
fn dense_spectrum_is_lossy() {
    // Every eigenvalue of the truncated operator lies in the lower half plane.
    let p = params(0.3, 0.4);
    let m = PairMomentum::new(&p, 1.1 * PI).unwrap();
    let spec = oracle::eig_all(&oracle::build_hk(&p, &m, 150).unwrap(), false).unwrap();
    assert_eq!(spec.lambda.len(), 150);
    assert!(spec.omegas().iter().all(|w: &C64| w.im <= 1e-10));
}
