use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use pcs_core::analysis::{
    baseline_bound_constants, compressible_bound_constants, compute_drip_with, compute_ric_with, error_metrics,
    sparse_bound_constants, RicMode, RicOptions,
};
use pcs_core::doa::{build_grid_model, simulate_scene, standard_cs_estimate};
use pcs_core::harness::{
    doa_scene, export_doa, export_results, preset, run_doa_experiment, run_sweep_with, trial_data, DoaExperimentConfig,
    Experiment, ExportFormat, PointConfig,
};
use pcs_core::io::{read_matrix, write_matrix};
use pcs_core::model::{GroundTruth, SensingEnsemble, SignalKind};
use pcs_core::recovery::{
    recover_aa_p_bpdn, recover_nominal_bpdn, recover_oracle_bpdn, recover_pp_bpdn, recover_relax_check,
    recover_tps_bpdn, AaOptions, RecoveryResult, Strategy,
};
use pcs_core::report::KvReport;
use pcs_core::{DMatrix, DVector, Execution, Scalar, C64};

use crate::{BoundKind, BoundsArgs, Cli, Command, DripArgs, ExperimentArgs, GenArgs, RicArgs, SolveArgs};

/// Exit status for a run whose solver failure rate exceeded the threshold.
const EXIT_FAILURE_RATE: u8 = 2;

pub fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Gen(a) => gen(&cli, a),
        Command::Solve(a) => solve(&cli, a),
        Command::Ric(a) => ric(&cli, a),
        Command::Drip(a) => drip(&cli, a),
        Command::Bounds(a) => bounds(&cli, a),
        Command::Doa(a) => doa(&cli, a),
        Command::Sweep(a) => sweep(&cli, a),
        Command::Plot(a) => crate::plot::run(&cli, a),
    }
}

fn emit(cli: &Cli, report: &KvReport) -> Result<()> {
    match &cli.out {
        Some(path) => report.write(path).map_err(Into::into),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn vector<T: Scalar>(v: &DVector<T>) -> DMatrix<T> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn read_vector<T: Scalar>(path: &Path) -> Result<DVector<T>> {
    let m: DMatrix<T> = read_matrix(path)?;
    if m.ncols() != 1 {
        bail!("{}: expected a single column, found {}", path.display(), m.ncols());
    }
    Ok(m.column(0).into_owned())
}

fn parse_signal(s: &str) -> Result<SignalKind> {
    match s {
        "unit-spikes" => Ok(SignalKind::UnitSpikes),
        "positive-spikes" => Ok(SignalKind::PositiveSpikes),
        other => bail!("unknown signal {other:?}; expected unit-spikes or positive-spikes"),
    }
}

const INSTANCE_FILE: &str = "instance.txt";

fn gen(cli: &Cli, a: &GenArgs) -> Result<ExitCode> {
    let signal = parse_signal(&a.signal)?;
    let seed = cli.seed.unwrap_or(0);
    let p = PointConfig {
        n: a.n,
        m: a.m,
        k: a.k,
        r: a.r,
        epsilon: a.epsilon,
    };
    let data = trial_data(&p, signal, seed, 0)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("instance"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_matrix(dir.join("A.csv"), data.ens.a())?;
    write_matrix(dir.join("B.csv"), data.ens.b())?;
    write_matrix(dir.join("x.csv"), &vector(&data.gt.x_o))?;
    write_matrix(dir.join("beta.csv"), &vector(&data.gt.beta_o))?;
    write_matrix(dir.join("e.csv"), &vector(&data.gt.e))?;
    write_matrix(dir.join("y.csv"), &vector(&data.y))?;
    let mut kv = KvReport::new();
    kv.push("m", a.m)
        .push("n", a.n)
        .push("k", a.k)
        .push("r", a.r)
        .push("epsilon", a.epsilon)
        .push("signal", &a.signal)
        .push("seed", seed);
    kv.write(dir.join(INSTANCE_FILE))?;
    println!("wrote instance to {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn instance_value(dir: &Path, key: &str) -> Result<Option<f64>> {
    let path = dir.join(INSTANCE_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let kv = KvReport::parse(&text)?;
    kv.get(key)
        .map(|v| {
            v.parse::<f64>()
                .with_context(|| format!("{}: bad {key}", path.display()))
        })
        .transpose()
}

fn solve(cli: &Cli, a: &SolveArgs) -> Result<ExitCode> {
    let strategy: Strategy = a.strategy.parse()?;
    let dir = &a.dir;
    let r = match a.r {
        Some(r) => r,
        None => instance_value(dir, "r")?.ok_or_else(|| anyhow!("--r is required without {INSTANCE_FILE}"))?,
    };
    let eps = match a.epsilon {
        Some(e) => e,
        None => {
            instance_value(dir, "epsilon")?.ok_or_else(|| anyhow!("--epsilon is required without {INSTANCE_FILE}"))?
        }
    };
    let ens = SensingEnsemble::new(read_matrix(dir.join("A.csv"))?, read_matrix(dir.join("B.csv"))?, r)?;
    let y: DVector<f64> = read_vector(&dir.join("y.csv"))?;
    let truth = if dir.join("x.csv").exists() && dir.join("beta.csv").exists() {
        let x: DVector<f64> = read_vector(&dir.join("x.csv"))?;
        let beta: DVector<f64> = read_vector(&dir.join("beta.csv"))?;
        let e = if dir.join("e.csv").exists() {
            read_vector(&dir.join("e.csv"))?
        } else {
            DVector::zeros(y.len())
        };
        let k = x.iter().filter(|v| **v != 0.0).count();
        Some(GroundTruth::new(x, beta, e, eps, k, true, r)?)
    } else {
        None
    };
    let aa = AaOptions::default();
    let need_truth = || {
        truth
            .as_ref()
            .ok_or_else(|| anyhow!("strategy {strategy} needs x.csv and beta.csv"))
    };
    let res: RecoveryResult = match strategy {
        Strategy::Oracle => recover_oracle_bpdn(&ens, need_truth()?, &y, eps, &aa.inner)?,
        Strategy::Nominal => {
            let gt = need_truth()?;
            let eps_mult = (ens.b() * gt.x_o.component_mul(&gt.beta_o)).norm();
            recover_nominal_bpdn(&ens, &y, eps, eps_mult, &aa.inner)?
        }
        Strategy::Tps => recover_tps_bpdn(&ens, &y, eps, &aa.inner)?,
        Strategy::Aa => recover_aa_p_bpdn(&ens, &y, eps, &aa)?,
        Strategy::Pp => recover_pp_bpdn(&ens, &y, eps, &aa.inner)?,
        Strategy::Relax => recover_relax_check(&ens, &y, eps, &aa)?,
    };
    let out_dir = cli.out.clone().unwrap_or_else(|| dir.clone());
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_matrix(out_dir.join("x_hat.csv"), &vector(&res.x_hat))?;
    write_matrix(out_dir.join("beta_hat.csv"), &vector(&res.beta_hat))?;

    let mut kv = KvReport::new();
    kv.push("strategy", strategy)
        .push("status", res.status)
        .push("iterations", res.iterations)
        .push("converged", res.converged)
        .push("l1", res.l1());
    if let Some(gt) = &truth {
        let m = error_metrics(gt, &res, gt.k.max(1))?;
        kv.push("signal_err", m.signal_err)
            .push("beta_err", m.beta_err)
            .push("support_match", m.support_match);
    }
    print!("{kv}");
    Ok(ExitCode::SUCCESS)
}

fn ric_options(samples: Option<usize>, budget: Option<u128>, seed: Option<u64>) -> RicOptions {
    let mode = match samples {
        Some(trials) => RicMode::Sampled {
            trials,
            seed: seed.unwrap_or(0),
        },
        None => RicMode::Exact,
    };
    let mut opts = RicOptions::with_mode(mode);
    if let Some(b) = budget {
        opts.budget = b;
    }
    opts
}

fn ric(cli: &Cli, a: &RicArgs) -> Result<ExitCode> {
    let opts = ric_options(a.samples, a.budget, cli.seed);
    let report = match read_matrix::<f64>(&a.matrix) {
        Ok(m) => compute_ric_with(&m, a.k, &opts)?,
        Err(_) => compute_ric_with(&read_matrix::<C64>(&a.matrix)?, a.k, &opts)?,
    };
    emit(cli, &KvReport::from(&report))?;
    Ok(ExitCode::SUCCESS)
}

fn drip(cli: &Cli, a: &DripArgs) -> Result<ExitCode> {
    let opts = ric_options(a.samples, a.budget, cli.seed);
    let report = match (read_matrix::<f64>(&a.a), read_matrix::<f64>(&a.b)) {
        (Ok(am), Ok(bm)) => compute_drip_with(&SensingEnsemble::new(am, bm, 0.0)?, a.k, &opts)?,
        _ => {
            let ens = SensingEnsemble::new(read_matrix::<C64>(&a.a)?, read_matrix::<C64>(&a.b)?, 0.0)?;
            compute_drip_with(&ens, a.k, &opts)?
        }
    };
    emit(cli, &KvReport::from(&report))?;
    Ok(ExitCode::SUCCESS)
}

fn bounds(cli: &Cli, a: &BoundsArgs) -> Result<ExitCode> {
    let report = match a.kind {
        BoundKind::Sparse => sparse_bound_constants(a.delta, a.r, a.psi_norm),
        BoundKind::Compressible => compressible_bound_constants(a.delta, a.r, a.psi_norm, a.k),
        BoundKind::Baseline => baseline_bound_constants(a.delta, a.eps_ratio),
    };
    emit(cli, &KvReport::from(&report))?;
    Ok(ExitCode::SUCCESS)
}

/// Config file, else preset, else `default_preset`; then the `--seed` override.
fn load_experiment(cli: &Cli, a: &ExperimentArgs, default_preset: &str) -> Result<Experiment> {
    let mut exp = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<Experiment>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => preset(a.preset.as_deref().unwrap_or(default_preset))?,
    };
    if let Some(seed) = cli.seed {
        exp.set_seed(seed);
    }
    exp.validate()?;
    Ok(exp)
}

fn execution(a: &ExperimentArgs) -> Execution {
    if a.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn failure_exit(rate: f64, limit: f64) -> ExitCode {
    if rate > limit {
        eprintln!("solver failure rate {rate:.3} exceeds the limit {limit:.3}");
        ExitCode::from(EXIT_FAILURE_RATE)
    } else {
        ExitCode::SUCCESS
    }
}

fn sweep(cli: &Cli, a: &ExperimentArgs) -> Result<ExitCode> {
    let Experiment::Sweep(cfg) = load_experiment(cli, a, "fig2-desk")? else {
        bail!("the sweep subcommand needs experiment = \"sweep\"; use `doa` for DOA runs");
    };
    let result = run_sweep_with(&cfg, execution(a))?;
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.name)));
    export_results(&result, &out, ExportFormat::Csv)?;
    if a.summary {
        export_results(&result, out.with_extension("txt"), ExportFormat::KeyValue)?;
    }
    for p in &result.points {
        let cells: Vec<String> = p
            .stats
            .iter()
            .map(|s| format!("{}={:.4}", s.strategy, s.mean_signal_err))
            .collect();
        println!("{} = {}: {}", result.param.name(), p.value, cells.join(" "));
    }
    println!("wrote {}", out.display());
    Ok(failure_exit(result.failure_rate(), cfg.max_failure_rate))
}

fn doa(cli: &Cli, a: &ExperimentArgs) -> Result<ExitCode> {
    let Experiment::Doa(cfg) = load_experiment(cli, a, "fig6-desk")? else {
        bail!("the doa subcommand needs experiment = \"doa\"");
    };
    let result = run_doa_experiment(&cfg, execution(a))?;
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.name)));
    export_doa(&result, &out)?;
    if cfg.n_standard > 0 {
        let spectrum = out.with_extension("spectrum.csv");
        write_spectrum(&cfg, &spectrum)?;
        println!("wrote {}", spectrum.display());
    }
    let errors = result.errors();
    let bound = 1.0 / cfg.n as f64;
    let inside = errors.iter().filter(|e| e.abs() <= bound).count();
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / errors.len().max(1) as f64;
    println!(
        "{} trials, {inside}/{} errors within 1/n, mse {mse:.3e}",
        result.records.len(),
        errors.len()
    );
    println!("wrote {}", out.display());
    Ok(failure_exit(result.failure_rate(), cfg.max_failure_rate))
}

/// Recovered magnitudes of trial 0 on the perturbed grid and on the finer
/// unperturbed comparison grid. Columns: `method, theta, magnitude`.
fn write_spectrum(cfg: &DoaExperimentConfig, path: &Path) -> Result<()> {
    let scene = doa_scene(cfg, 0)?;
    let y = simulate_scene(&scene, cfg.m)?;
    let model = build_grid_model(cfg.m, cfg.n)?.with_sources(scene.k(), scene.s_norm())?;
    let est = pcs_core::doa::estimate_doa(&y, &model, &cfg.aa)?;
    let std = standard_cs_estimate(&y, cfg.m, cfg.n_standard, scene.k(), scene.s_norm(), &cfg.aa.inner)?;
    let mut text = String::from("method,theta,magnitude\n");
    for (th, s) in scene.theta.iter().zip(&scene.s) {
        text.push_str(&format!("truth,{th:.16e},{:.16e}\n", s.norm()));
    }
    for j in 0..cfg.n {
        let x = est.recovery.x_hat[j].norm();
        if x > 0.0 {
            let th = model.grid.points[j] + est.recovery.beta_hat[j] / model.kappa;
            text.push_str(&format!("perturbed,{th:.16e},{x:.16e}\n"));
        }
    }
    for (j, th) in std.grid.points.iter().enumerate() {
        let x = std.x_hat[j].norm();
        if x > 0.0 {
            text.push_str(&format!("standard,{th:.16e},{x:.16e}\n"));
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
