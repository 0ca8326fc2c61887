use approx::assert_abs_diff_eq;
use nalgebra::DVector;
use pcs_core::model::{
    gen_gaussian_ensemble, gen_noise, gen_perturbation, gen_signal, measure, GroundTruth, SensingEnsemble, SignalKind,
};
use pcs_core::recovery::{
    effectiveness_check, recover_aa_p_bpdn, recover_nominal_bpdn, recover_oracle_bpdn, recover_pp_bpdn,
    recover_relax_check, recover_tps_bpdn, stationarity_gap, AaOptions, RecoveryResult, Strategy,
};
use pcs_core::solvers::{solve_socl1, SocL1Problem, SolveStatus, SolverOptions};
use proptest::prelude::*;

struct Instance {
    ens: SensingEnsemble,
    gt: GroundTruth,
    y: DVector<f64>,
}

fn instance(m: usize, n: usize, k: usize, r: f64, eps: f64, kind: SignalKind, seed: u64) -> Instance {
    let ens = gen_gaussian_ensemble(m, n, r, seed).unwrap();
    let x = gen_signal(n, k, kind, seed + 1).unwrap();
    let beta = gen_perturbation(n, r, seed + 2).unwrap();
    let e = gen_noise(m, eps, seed + 3).unwrap();
    let gt = GroundTruth::new(x, beta, e, eps, k, true, r).unwrap();
    let y = measure(&ens, &gt).unwrap().y;
    Instance { ens, gt, y }
}

fn run(s: Strategy, inst: &Instance, eps: f64, aopts: &AaOptions) -> RecoveryResult {
    let o = &aopts.inner;
    match s {
        Strategy::Oracle => recover_oracle_bpdn(&inst.ens, &inst.gt, &inst.y, eps, o),
        Strategy::Nominal => recover_nominal_bpdn(&inst.ens, &inst.y, eps, 0.0, o),
        Strategy::Tps => recover_tps_bpdn(&inst.ens, &inst.y, eps, o),
        Strategy::Aa => recover_aa_p_bpdn(&inst.ens, &inst.y, eps, aopts),
        Strategy::Pp => recover_pp_bpdn(&inst.ens, &inst.y, eps, o),
        Strategy::Relax => recover_relax_check(&inst.ens, &inst.y, eps, aopts),
    }
    .unwrap()
}

#[test]
fn unperturbed_noiseless_recovery_is_exact() {
    let inst = instance(40, 80, 3, 0.0, 0.0, SignalKind::PositiveSpikes, 11);
    for s in Strategy::ALL {
        let res = run(s, &inst, 0.0, &AaOptions::default());
        assert!(
            (&res.x_hat - &inst.gt.x_o).amax() < 1e-6,
            "{s}: {}",
            (&res.x_hat - &inst.gt.x_o).amax()
        );
        assert_eq!(res.beta_hat, DVector::zeros(80), "{s}");
    }
}

#[test]
fn aa_without_perturbation_is_bpdn() {
    let inst = instance(30, 60, 4, 0.0, 0.2, SignalKind::UnitSpikes, 5);
    let aa = run(Strategy::Aa, &inst, 0.2, &AaOptions::default());
    let bp = solve_socl1(
        &SocL1Problem::new(inst.ens.a().clone(), inst.y.clone(), 0.2).unwrap(),
        &SolverOptions::default(),
    )
    .unwrap();
    assert_eq!(aa.iterations, 1);
    assert_abs_diff_eq!(aa.x_hat, bp.x, epsilon = 1e-12);
}

#[test]
fn aa_trace_is_monotone_and_iterates_feasible() {
    for seed in 0..4u64 {
        let inst = instance(30, 60, 4, 0.2, 0.1, SignalKind::UnitSpikes, 20 + seed);
        let res = run(Strategy::Aa, &inst, 0.1, &AaOptions::default());
        assert!(
            res.l1_trace.windows(2).all(|w| w[1] <= w[0]),
            "seed {seed}: {:?}",
            res.l1_trace
        );
        assert_abs_diff_eq!(*res.l1_trace.last().unwrap(), res.l1(), epsilon = 1e-12);
        let resid = (&inst.y - inst.ens.phi(&res.beta_hat) * &res.x_hat).norm();
        assert!(resid <= 0.1 * (1.0 + 1e-6) + 1e-9, "seed {seed}: residual {resid}");
        let eff = effectiveness_check(&res, &inst.ens, &inst.y, 0.1, &inst.gt.x_o).unwrap();
        assert!(eff.effective, "seed {seed}: {eff:?}");
    }
}

#[test]
fn truncated_alternation_is_not_converged() {
    let inst = instance(30, 60, 4, 0.3, 0.1, SignalKind::UnitSpikes, 8);
    let aopts = AaOptions {
        max_outer_iter: 1,
        ..AaOptions::default()
    };
    let res = run(Strategy::Aa, &inst, 0.1, &aopts);
    assert!(!res.converged);
    assert_eq!(res.beta_hat, DVector::zeros(60));
    let full = run(Strategy::Aa, &inst, 0.1, &AaOptions::default());
    assert!(full.converged);
    assert!(full.l1() < res.l1());
}

#[test]
fn stationary_on_return() {
    let aopts = AaOptions::default();
    for seed in 0..3u64 {
        let inst = instance(30, 60, 3, 0.2, 0.05, SignalKind::UnitSpikes, 40 + seed);
        let res = run(Strategy::Aa, &inst, 0.05, &aopts);
        assert!(res.converged);
        let gap = stationarity_gap(&res, &inst.ens, &inst.y, 0.05, &aopts).unwrap();
        assert!(gap <= 10.0 * aopts.rel_change_tol, "seed {seed}: gap {gap}");
    }
}

#[test]
fn positive_program_beats_alternation() {
    for seed in 0..6u64 {
        let inst = instance(6, 10, 2, 0.3, 0.02, SignalKind::PositiveSpikes, 60 + seed);
        let pp = run(Strategy::Pp, &inst, 0.02, &AaOptions::default());
        assert_eq!(pp.status, SolveStatus::Optimal, "seed {seed}");
        assert!(pp.x_hat.iter().all(|v| *v >= 0.0));
        let feas = (&inst.y - inst.ens.phi(&pp.beta_hat) * &pp.x_hat).norm();
        assert!(feas <= 0.02 + 1e-6, "seed {seed}: residual {feas}");
        let aa = run(Strategy::Aa, &inst, 0.02, &AaOptions::default());
        if aa.x_hat.iter().all(|v| *v >= 0.0) {
            assert!(
                pp.l1() <= aa.l1() + 1e-6,
                "seed {seed}: pp {} > aa {}",
                pp.l1(),
                aa.l1()
            );
        }
        assert!(pp.l1() <= inst.gt.x_o.sum() + 1e-7);
    }
}

#[test]
fn relaxation_agrees_with_alternation() {
    for seed in 0..3u64 {
        let inst = instance(30, 60, 3, 0.1, 0.05, SignalKind::UnitSpikes, 80 + seed);
        let rel = run(Strategy::Relax, &inst, 0.05, &AaOptions::default());
        let aa = run(Strategy::Aa, &inst, 0.05, &AaOptions::default());
        assert!(rel.complementarity_defect.is_some());
        if !rel.fallback {
            assert!(
                rel.l1() <= aa.l1() + 1e-6,
                "seed {seed}: relax {} aa {}",
                rel.l1(),
                aa.l1()
            );
            let eff = effectiveness_check(&rel, &inst.ens, &inst.y, 0.05, &inst.gt.x_o).unwrap();
            assert!(eff.effective, "seed {seed}: {eff:?}");
        }
    }
}

#[test]
fn nominal_error_persists_without_noise() {
    let mut nominal = 0.0;
    let mut pp = 0.0;
    for seed in 0..3u64 {
        let inst = instance(40, 80, 3, 0.3, 0.0, SignalKind::PositiveSpikes, 90 + seed);
        nominal += (run(Strategy::Nominal, &inst, 0.0, &AaOptions::default()).x_hat - &inst.gt.x_o).norm();
        pp += (run(Strategy::Pp, &inst, 0.0, &AaOptions::default()).x_hat - &inst.gt.x_o).norm();
    }
    assert!(nominal > 0.05, "nominal error {nominal}");
    assert!(pp < 1e-4, "pp error {pp}");
}

#[test]
fn alternation_stalls_without_noise() {
    // an exact fit at β = 0 leaves the perturbation step nothing to improve
    let inst = instance(30, 60, 3, 0.3, 0.0, SignalKind::UnitSpikes, 7);
    let aa = run(Strategy::Aa, &inst, 0.0, &AaOptions::default());
    let nominal = run(Strategy::Nominal, &inst, 0.0, &AaOptions::default());
    assert!(aa.converged);
    assert_abs_diff_eq!(aa.l1(), nominal.l1(), epsilon = 1e-9);
}

#[test]
fn positive_noiseless_recovery_is_mostly_exact() {
    let mut exact = 0;
    for seed in 0..10u64 {
        let inst = instance(12, 16, 2, 0.1, 0.0, SignalKind::PositiveSpikes, 300 + 7 * seed);
        let pp = run(Strategy::Pp, &inst, 0.0, &AaOptions::default());
        if (&pp.x_hat - &inst.gt.x_o).amax() < 1e-5 {
            exact += 1;
            for j in 0..16 {
                if inst.gt.x_o[j] != 0.0 {
                    assert!((pp.beta_hat[j] - inst.gt.beta_o[j]).abs() < 1e-4, "seed {seed} j {j}");
                }
            }
        }
    }
    assert!(exact >= 8, "{exact}/10 exact");
}

#[test]
fn rejects_bad_input() {
    let inst = instance(10, 20, 2, 0.1, 0.0, SignalKind::UnitSpikes, 1);
    let short = DVector::zeros(9);
    assert!(recover_aa_p_bpdn(&inst.ens, &short, 0.0, &AaOptions::default()).is_err());
    assert!(recover_pp_bpdn(&inst.ens, &inst.y, -1.0, &SolverOptions::default()).is_err());
    assert!(recover_nominal_bpdn(&inst.ens, &inst.y, 0.0, f64::NAN, &SolverOptions::default()).is_err());
    let bad = AaOptions {
        rel_change_tol: 0.0,
        ..AaOptions::default()
    };
    assert!(recover_aa_p_bpdn(&inst.ens, &inst.y, 0.0, &bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn perturbation_estimate_in_box(seed in any::<u64>(), r in 0.0f64..0.5, eps in 0.0f64..0.3, idx in 0usize..6) {
        let inst = instance(8, 14, 2, r, eps, SignalKind::PositiveSpikes, seed % 1_000_000);
        let res = run(Strategy::ALL[idx], &inst, eps, &AaOptions::default());
        prop_assert!(res.beta_hat.iter().all(|b| b.abs() <= r));
        prop_assert_eq!(res.x_hat.len(), 14);
    }
}
