use std::f64::consts::{PI, SQRT_2};

use approx::assert_abs_diff_eq;
use nalgebra::DVector;
use pcs_core::doa::{
    build_grid_model, estimate_doa, kappa, model_error_bound, mse_lower_bound, per_source_remainder_bound,
    scene_ground_truth, simulate_scene, standard_cs_estimate, steering_derivative, steering_vector, taylor_remainder,
    DoaGrid, DoaScene,
};
use pcs_core::recovery::AaOptions;
use pcs_core::rng::seeded;
use pcs_core::solvers::SolverOptions;
use pcs_core::C64;
use proptest::prelude::*;
use rand::Rng as _;

#[test]
fn steering_vector_cases() {
    let a = steering_vector(1, 0.4);
    assert_abs_diff_eq!(a[0].re, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(a[0].im, 0.0, epsilon = 1e-15);
    let b = steering_vector(4, 0.0);
    assert!(b.iter().all(|v| (v.re - 0.5).abs() < 1e-15 && v.im.abs() < 1e-15));
    // broadside symmetry: conjugate entries around the array centre
    let c = steering_vector(5, 0.3);
    for l in 0..5 {
        assert_abs_diff_eq!((c[l] - c[4 - l].conj()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c[l].norm(), 1.0 / 5f64.sqrt(), epsilon = 1e-15);
    }
    assert_abs_diff_eq!((c[3] / c[2]).arg(), PI * 0.3, epsilon = 1e-12);
}

#[test]
fn derivative_matches_finite_difference() {
    let h = 1e-6;
    for theta in [-0.9, 0.0, 0.42] {
        let fd = (steering_vector(7, theta + h) - steering_vector(7, theta - h)) / C64::new(2.0 * h, 0.0);
        assert!((fd - steering_derivative(7, theta)).norm() < 1e-8);
    }
}

#[test]
fn grid_model_blocks_are_normalised() {
    let model = build_grid_model(12, 30).unwrap();
    assert_abs_diff_eq!(model.kappa, kappa(12), epsilon = 1e-15);
    assert_abs_diff_eq!(model.r, kappa(12) / 30.0, epsilon = 1e-15);
    for (l, &t) in model.grid.points.iter().enumerate() {
        assert_abs_diff_eq!(steering_derivative(12, t).norm(), model.kappa, epsilon = 1e-12);
        assert_abs_diff_eq!(model.ens.a().column(l).norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(model.ens.b().column(l).norm(), 1.0, epsilon = 1e-12);
    }
    assert!(build_grid_model(1, 30).is_err());
    assert!(build_grid_model(10, 31).is_err());
}

#[test]
fn grid_is_uniform_and_centred() {
    let g = DoaGrid::new(90).unwrap();
    assert_abs_diff_eq!(g.points[0], -1.0 + 1.0 / 90.0, epsilon = 1e-15);
    assert_abs_diff_eq!(g.points[89], 1.0 - 1.0 / 90.0, epsilon = 1e-15);
    for w in g.points.windows(2) {
        assert_abs_diff_eq!(w[1] - w[0], g.spacing(), epsilon = 1e-14);
    }
    let mut rng = seeded(3);
    for _ in 0..1000 {
        let t: f64 = rng.random_range(-1.0..1.0);
        let l = g.nearest(t);
        assert!((t - g.points[l]).abs() <= 1.0 / 90.0 + 1e-15);
    }
}

#[test]
fn model_error_bound_values() {
    assert_abs_diff_eq!(model_error_bound(30, 90, 2, SQRT_2).unwrap(), 0.1224, epsilon = 1e-3);
    let ratio = per_source_remainder_bound(30, 90) / per_source_remainder_bound(30, 180);
    assert_abs_diff_eq!(ratio, 4.0, epsilon = 1e-12);
    // two sensors: √((48 − 40 + 7)/15) = 1
    assert_abs_diff_eq!(per_source_remainder_bound(2, 10), PI * PI / 800.0, epsilon = 1e-15);
    assert!(model_error_bound(1, 90, 1, 1.0).is_err());
    assert!(model_error_bound(10, 90, 0, 1.0).is_err());
}

#[test]
fn single_source_error_stays_in_cell() {
    let m = 30;
    let n = 90;
    let model = build_grid_model(m, n).unwrap().with_sources(1, 1.0).unwrap();
    let mut rng = seeded(77);
    let trials = 50;
    let mut sq = 0.0;
    for _ in 0..trials {
        let theta = rng.random_range(-0.9..0.9);
        let scene = DoaScene::new(vec![theta], vec![C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))]).unwrap();
        let y = simulate_scene(&scene, m).unwrap();
        let est = estimate_doa(&y, &model, &AaOptions::default()).unwrap();
        let err = est.theta_hat[0] - theta;
        assert!(err.abs() <= 1.0 / n as f64, "theta {theta}: error {err}");
        sq += err * err;
    }
    assert!(sq / trials as f64 <= mse_lower_bound(n), "mse {}", sq / trials as f64);
}

#[test]
fn on_grid_source_is_found_exactly() {
    let model = build_grid_model(20, 40).unwrap();
    let l = 17;
    let scene = DoaScene::new(vec![model.grid.points[l]], vec![C64::new(0.6, -0.8)]).unwrap();
    let y = simulate_scene(&scene, 20).unwrap();
    let est = estimate_doa(&y, &model, &AaOptions::default()).unwrap();
    assert_eq!(est.support, vec![l]);
    assert_abs_diff_eq!(est.theta_hat[0], model.grid.points[l], epsilon = 1e-4);
}

#[test]
fn estimate_is_phase_equivariant() {
    let model = build_grid_model(16, 40).unwrap().with_sources(2, SQRT_2).unwrap();
    let scene = DoaScene::new(vec![0.11, -0.43], vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
    let y = simulate_scene(&scene, 16).unwrap();
    let rot = C64::from_polar(1.0, 1.234);
    let a = estimate_doa(&y, &model, &AaOptions::default()).unwrap();
    let b = estimate_doa(&(&y * rot), &model, &AaOptions::default()).unwrap();
    assert_eq!(a.support, b.support);
    for (p, q) in a.theta_hat.iter().zip(&b.theta_hat) {
        assert_abs_diff_eq!(p, q, epsilon = 1e-5);
    }
    assert!((a.recovery.x_hat.clone() * rot - &b.recovery.x_hat).norm() < 1e-4);
}

#[test]
fn ground_truth_is_consistent() {
    let model = build_grid_model(30, 90).unwrap().with_sources(2, SQRT_2).unwrap();
    let mut rng = seeded(5);
    for _ in 0..50 {
        let scene = DoaScene::random(&DoaScene::two_source_intervals(90), &mut rng).unwrap();
        let gt = scene_ground_truth(&scene, &model).unwrap();
        assert!(gt.e.norm() <= model.eps_model);
        let y = simulate_scene(&scene, 30).unwrap();
        assert!((&y - model.ens.phi(&gt.beta_o) * &gt.x_o - &gt.e).norm() < 1e-12);
        for (&t, s) in scene.theta.iter().zip(&scene.s) {
            let l = model.grid.nearest(t);
            assert_eq!(gt.x_o[l], *s);
            assert_abs_diff_eq!(model.grid.points[l] + gt.beta_o[l] / model.kappa, t, epsilon = 1e-12);
        }
    }
}

#[test]
fn standard_estimate_uses_the_first_order_slack() {
    let scene = DoaScene::new(vec![0.05], vec![C64::new(1.0, 0.0)]).unwrap();
    let y = simulate_scene(&scene, 20).unwrap();
    let est = standard_cs_estimate(&y, 20, 60, 1, 1.0, &SolverOptions::default()).unwrap();
    assert_abs_diff_eq!(est.epsilon, kappa(20) / 60.0, epsilon = 1e-15);
    assert_eq!(est.x_hat.len(), 60);
    let peak = (0..60)
        .max_by(|&i, &j| est.x_hat[i].norm().total_cmp(&est.x_hat[j].norm()))
        .unwrap();
    assert!((est.grid.points[peak] - 0.05).abs() <= 2.0 / 60.0);
}

#[test]
fn nearest_grid_error_matches_lower_bound() {
    let n = 90;
    let g = DoaGrid::new(n).unwrap();
    let mut rng = seeded(1);
    let samples = 1_000_000;
    let mut sq = 0.0;
    for _ in 0..samples {
        let t: f64 = rng.random_range(-1.0..1.0);
        sq += (t - g.points[g.nearest(t)]).powi(2);
    }
    let mse = sq / samples as f64;
    assert!((mse / mse_lower_bound(n) - 1.0).abs() < 0.01, "{mse}");
    assert_abs_diff_eq!(mse_lower_bound(360) / mse_lower_bound(90), 1.0 / 16.0, epsilon = 1e-15);
}

#[test]
fn scene_validation() {
    let one = vec![C64::new(1.0, 0.0)];
    assert!(DoaScene::new(vec![-1.0], one.clone()).is_err());
    assert!(DoaScene::new(vec![1.0], one.clone()).is_ok());
    assert!(DoaScene::new(vec![0.1, 0.2], one).is_err());
    let mut rng = seeded(0);
    assert!(DoaScene::random(&[(0.3, 0.3)], &mut rng).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_remainder_within_bound(m in 2usize..40, half in 1usize..100, u in 0.0f64..1.0, cell in 0.0f64..1.0) {
        let n = 2 * half;
        let g = DoaGrid::new(n).unwrap();
        let l = ((cell * n as f64) as usize).min(n - 1);
        let theta = g.points[l] + (2.0 * u - 1.0) / n as f64;
        prop_assert!(taylor_remainder(m, theta, g.points[l]) <= per_source_remainder_bound(m, n) * (1.0 + 1e-9));
    }

    #[test]
    fn simulation_is_linear(seed in any::<u64>(), m in 1usize..20) {
        let mut rng = seeded(seed);
        let t: Vec<f64> = (0..3).map(|i| -0.9 + 0.6 * i as f64 + rng.random_range(0.0..0.5)).collect();
        let s: Vec<C64> = (0..3).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let y = simulate_scene(&DoaScene::new(t.clone(), s.clone()).unwrap(), m).unwrap();
        let mut want = DVector::zeros(m);
        for l in 0..m {
            for j in 0..3 {
                let phase = PI * (l as f64 - (m as f64 - 1.0) / 2.0) * t[j];
                want[l] += s[j] * C64::from_polar(1.0 / (m as f64).sqrt(), phase);
            }
        }
        prop_assert!((y - want).norm() < 1e-12);
    }
}
