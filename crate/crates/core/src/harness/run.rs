use std::time::Instant;

use nalgebra::DVector;

use super::config::{DoaExperimentConfig, ExperimentConfig, PointConfig, SweepParam};
use crate::analysis::error_metrics;
use crate::doa::{build_grid_model, estimate_doa, scene_ground_truth, simulate_scene, DoaScene};
use crate::model::{
    gen_gaussian_ensemble_with, gen_noise_with, gen_perturbation_with, gen_signal_with, measure, GroundTruth,
    SensingEnsemble, SignalKind,
};
use crate::recovery::{
    effectiveness_check, recover_aa_p_bpdn, recover_nominal_bpdn, recover_oracle_bpdn, recover_pp_bpdn,
    recover_relax_check, recover_tps_bpdn, RecoveryResult, Strategy,
};
use crate::rng::stream_rng;
use crate::solvers::SolveStatus;
use crate::{Execution, Result};

/// One strategy on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub signal_err: f64,
    pub beta_err: f64,
    pub iterations: usize,
    pub effective: bool,
    /// `l1_trace` never rose by more than 1e-9.
    pub l1_monotone: bool,
    pub status: Option<SolveStatus>,
    /// Error message when the strategy could not run at all.
    pub error: Option<String>,
    /// Seconds; excluded from determinism comparisons.
    pub wall_time: f64,
}

impl StrategyOutcome {
    pub fn failed(&self) -> bool {
        self.error.is_some() || self.status != Some(SolveStatus::Optimal)
    }

    fn same_result(&self, other: &Self) -> bool {
        Self {
            wall_time: 0.0,
            ..self.clone()
        } == Self {
            wall_time: 0.0,
            ..other.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub master_seed: u64,
    pub sweep_value: f64,
    pub outcomes: Vec<StrategyOutcome>,
}

impl TrialRecord {
    /// Equality ignoring timings.
    pub fn same_result(&self, other: &Self) -> bool {
        self.index == other.index
            && self.master_seed == other.master_seed
            && self.sweep_value.to_bits() == other.sweep_value.to_bits()
            && self.outcomes.len() == other.outcomes.len()
            && self.outcomes.iter().zip(&other.outcomes).all(|(a, b)| a.same_result(b))
    }

    pub fn outcome(&self, s: Strategy) -> Option<&StrategyOutcome> {
        self.outcomes.iter().find(|o| o.strategy == s)
    }
}

/// Data shared by every strategy of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    pub ens: SensingEnsemble,
    pub gt: GroundTruth,
    pub y: DVector<f64>,
}

/// Draws `(A, B, x°, β°, e)` from stream `index` of the master seed, in that
/// order. The stream does not depend on the sweep value, so every sweep point
/// sees the same random numbers.
pub fn trial_data(p: &PointConfig, signal: SignalKind, master_seed: u64, index: usize) -> Result<TrialData> {
    let mut rng = stream_rng(master_seed, index as u64);
    let ens = gen_gaussian_ensemble_with(p.m, p.n, p.r, &mut rng)?;
    let x = gen_signal_with(p.n, p.k, signal, &mut rng)?;
    let beta = gen_perturbation_with(p.n, p.r, &mut rng)?;
    let e = gen_noise_with(p.m, p.epsilon, &mut rng)?;
    let sparse = !matches!(signal, SignalKind::Compressible(_));
    let gt = GroundTruth::new(x, beta, e, p.epsilon, p.k, sparse, p.r)?;
    let y = measure(&ens, &gt)?.y;
    Ok(TrialData { ens, gt, y })
}

fn run_strategy(strategy: Strategy, data: &TrialData, cfg: &ExperimentConfig, eps: f64) -> Result<RecoveryResult> {
    let (ens, gt, y) = (&data.ens, &data.gt, &data.y);
    let inner = &cfg.aa.inner;
    match strategy {
        Strategy::Oracle => recover_oracle_bpdn(ens, gt, y, eps, inner),
        Strategy::Nominal => {
            let bx = gt.x_o.component_mul(&gt.beta_o);
            let eps_mult = (ens.b() * bx).norm();
            recover_nominal_bpdn(ens, y, eps, eps_mult, inner)
        }
        Strategy::Tps => recover_tps_bpdn(ens, y, eps, inner),
        Strategy::Aa => recover_aa_p_bpdn(ens, y, eps, &cfg.aa),
        Strategy::Pp => recover_pp_bpdn(ens, y, eps, inner),
        Strategy::Relax => recover_relax_check(ens, y, eps, &cfg.aa),
    }
}

fn outcome(strategy: Strategy, data: &TrialData, cfg: &ExperimentConfig, p: &PointConfig) -> StrategyOutcome {
    let start = Instant::now();
    let res = run_strategy(strategy, data, cfg, p.epsilon);
    let wall_time = start.elapsed().as_secs_f64();
    let evaluated = res.and_then(|res| {
        let k = p.k.max(1);
        let metrics = error_metrics(&data.gt, &res, k)?;
        let eff = effectiveness_check(&res, &data.ens, &data.y, p.epsilon, &data.gt.x_o)?;
        Ok((res, metrics, eff))
    });
    match evaluated {
        Ok((res, metrics, eff)) => StrategyOutcome {
            strategy,
            signal_err: metrics.signal_err,
            beta_err: metrics.beta_err,
            iterations: res.iterations,
            effective: eff.effective,
            l1_monotone: res.l1_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9),
            status: Some(res.status),
            error: None,
            wall_time,
        },
        Err(e) => StrategyOutcome {
            strategy,
            signal_err: f64::NAN,
            beta_err: f64::NAN,
            iterations: 0,
            effective: false,
            l1_monotone: false,
            status: None,
            error: Some(e.to_string()),
            wall_time,
        },
    }
}

/// Trial `index` at the first sweep value.
pub fn run_trial(cfg: &ExperimentConfig, index: usize) -> Result<TrialRecord> {
    cfg.validate()?;
    run_trial_at(cfg, cfg.sweep.values[0], index)
}

/// Trial `index` at an arbitrary value of the swept parameter.
pub fn run_trial_at(cfg: &ExperimentConfig, value: f64, index: usize) -> Result<TrialRecord> {
    let p = cfg.point(value)?;
    let data = trial_data(&p, cfg.signal, cfg.master_seed, index)?;
    let outcomes = cfg.strategies.iter().map(|&s| outcome(s, &data, cfg, &p)).collect();
    Ok(TrialRecord {
        index,
        master_seed: cfg.master_seed,
        sweep_value: value,
        outcomes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyStats {
    pub strategy: Strategy,
    pub mean_signal_err: f64,
    pub mean_beta_err: f64,
    pub trials: usize,
    pub effective_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub stats: Vec<StrategyStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub param: SweepParam,
    pub strategies: Vec<Strategy>,
    pub points: Vec<SweepPoint>,
    /// Per-trial records in (sweep value, trial) order; empty after import.
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Mean signal error per sweep value for one strategy.
    pub fn series(&self, s: Strategy) -> Vec<f64> {
        self.points
            .iter()
            .filter_map(|p| p.stats.iter().find(|st| st.strategy == s).map(|st| st.mean_signal_err))
            .collect()
    }

    pub fn failure_rate(&self) -> f64 {
        let total: usize = self.records.iter().map(|r| r.outcomes.len()).sum();
        if total == 0 {
            return 0.0;
        }
        let failed: usize = self
            .records
            .iter()
            .map(|r| r.outcomes.iter().filter(|o| o.failed()).count())
            .sum();
        failed as f64 / total as f64
    }
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_with(cfg, Execution::default())
}

pub fn run_sweep_with(cfg: &ExperimentConfig, exec: Execution) -> Result<SweepResult> {
    cfg.validate()?;
    let values = &cfg.sweep.values;
    let r = cfg.trials;
    let records = exec
        .map_indexed(values.len() * r, |job| run_trial_at(cfg, values[job / r], job % r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let points = values
        .iter()
        .enumerate()
        .map(|(vi, &value)| {
            let chunk = &records[vi * r..(vi + 1) * r];
            let stats = cfg
                .strategies
                .iter()
                .map(|&s| {
                    let mut sig = 0.0;
                    let mut beta = 0.0;
                    let mut eff = 0usize;
                    for rec in chunk {
                        let o = rec.outcome(s).expect("every trial runs every strategy");
                        sig += o.signal_err;
                        beta += o.beta_err;
                        eff += usize::from(o.effective);
                    }
                    StrategyStats {
                        strategy: s,
                        mean_signal_err: sig / r as f64,
                        mean_beta_err: beta / r as f64,
                        trials: r,
                        effective_rate: eff as f64 / r as f64,
                    }
                })
                .collect();
            SweepPoint { value, stats }
        })
        .collect();

    Ok(SweepResult {
        name: cfg.name.clone(),
        param: cfg.sweep.param,
        strategies: cfg.strategies.clone(),
        points,
        records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaTrialRecord {
    pub index: usize,
    pub theta: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// `θ̂ − θ` after sorting both ascending.
    pub errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub effective: bool,
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
}

impl DoaTrialRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some() || self.status != Some(SolveStatus::Optimal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaResult {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub records: Vec<DoaTrialRecord>,
}

impl DoaResult {
    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().flat_map(|r| r.errors.iter().copied()).collect()
    }

    pub fn failure_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.failed()).count() as f64 / self.records.len() as f64
    }
}

pub fn doa_scene(cfg: &DoaExperimentConfig, index: usize) -> Result<DoaScene> {
    let mut rng = stream_rng(cfg.master_seed, index as u64);
    DoaScene::random(&cfg.intervals(), &mut rng)
}

pub fn run_doa_experiment(cfg: &DoaExperimentConfig, exec: Execution) -> Result<DoaResult> {
    cfg.validate()?;
    let base = build_grid_model(cfg.m, cfg.n)?;
    let records = exec.map_indexed(cfg.trials, |i| {
        let scene = match doa_scene(cfg, i) {
            Ok(s) => s,
            Err(e) => return Err(e),
        };
        let mut theta = scene.theta.clone();
        theta.sort_by(f64::total_cmp);
        let attempt = (|| {
            let model = base.clone().with_sources(scene.k(), scene.s_norm())?;
            let y = simulate_scene(&scene, cfg.m)?;
            let est = estimate_doa(&y, &model, &cfg.aa)?;
            let gt = scene_ground_truth(&scene, &model)?;
            let eff = effectiveness_check(&est.recovery, &model.ens, &y, model.eps_model, &gt.x_o)?;
            Ok::<_, crate::Error>((est, eff.effective))
        })();
        Ok(match attempt {
            Ok((est, effective)) => DoaTrialRecord {
                index: i,
                errors: est.theta_hat.iter().zip(&theta).map(|(h, t)| h - t).collect(),
                theta,
                theta_hat: est.theta_hat,
                iterations: est.recovery.iterations,
                converged: est.recovery.converged,
                effective,
                status: Some(est.recovery.status),
                error: None,
            },
            Err(e) => DoaTrialRecord {
                index: i,
                theta,
                theta_hat: Vec::new(),
                errors: Vec::new(),
                iterations: 0,
                converged: false,
                effective: false,
                status: None,
                error: Some(e.to_string()),
            },
        })
    });
    Ok(DoaResult {
        name: cfg.name.clone(),
        m: cfg.m,
        n: cfg.n,
        records: records.into_iter().collect::<Result<Vec<_>>>()?,
    })
}
