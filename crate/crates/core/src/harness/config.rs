use serde::{Deserialize, Serialize};

use crate::model::{CompressibleSpec, SignalKind};
use crate::recovery::{AaOptions, Strategy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    M,
    R,
    Epsilon,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::M => "m",
            SweepParam::R => "r",
            SweepParam::Epsilon => "epsilon",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(SweepParam::M),
            "r" => Ok(SweepParam::R),
            "epsilon" => Ok(SweepParam::Epsilon),
            other => Err(Error::invalid(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// One Monte Carlo experiment over a single swept parameter.
///
/// TOML example:
///
/// ```toml
/// experiment = "sweep"
/// name = "noise"
/// n = 200
/// m = 80
/// k = 10
/// r = 0.1
/// epsilon = 0.5
/// trials = 50
/// master_seed = 1
/// strategies = ["oracle", "nominal", "tps", "aa"]
/// signal = { kind = "unit-spikes" }
///
/// [sweep]
/// param = "epsilon"
/// values = [0.1, 0.5, 1.0]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub r: f64,
    pub epsilon: f64,
    pub sweep: Sweep,
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_signal")]
    pub signal: SignalKind,
    #[serde(default)]
    pub aa: AaOptions,
    /// Largest tolerated fraction of failed strategy runs.
    #[serde(default = "default_failure_rate")]
    pub max_failure_rate: f64,
}

fn default_signal() -> SignalKind {
    SignalKind::UnitSpikes
}

fn default_failure_rate() -> f64 {
    0.05
}

/// Problem dimensions at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub r: f64,
    pub epsilon: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(format!("config {:?}: {msg}", self.name)));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.sweep.values.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        if self.n == 0 || self.k > self.n {
            return bad(format!("need n >= 1 and k <= n (n={}, k={})", self.n, self.k));
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return bad("max_failure_rate must lie in [0, 1]".into());
        }
        let mut seen = self.strategies.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.strategies.len() {
            return bad("strategies must be distinct".into());
        }
        if let SignalKind::Compressible(spec) = self.signal {
            CompressibleSpec::new(spec.n, spec.q, spec.c_q)?;
            if spec.n != self.n {
                return bad("compressible spec length differs from n".into());
            }
        }
        for &v in &self.sweep.values {
            let p = self.point(v)?;
            if p.m == 0 || !(p.r >= 0.0) || !(p.epsilon >= 0.0) || !p.r.is_finite() || !p.epsilon.is_finite() {
                return bad(format!("invalid sweep point {} = {v}", self.sweep.param.name()));
            }
        }
        self.aa.validate()
    }

    pub fn point(&self, value: f64) -> Result<PointConfig> {
        let mut p = PointConfig {
            n: self.n,
            m: self.m,
            k: self.k,
            r: self.r,
            epsilon: self.epsilon,
        };
        match self.sweep.param {
            SweepParam::M => {
                if !(value >= 1.0) || value.fract() != 0.0 {
                    return Err(Error::invalid(format!(
                        "m sweep value {value} is not a positive integer"
                    )));
                }
                p.m = value as usize;
            }
            SweepParam::R => p.r = value,
            SweepParam::Epsilon => p.epsilon = value,
        }
        Ok(p)
    }
}

/// Off-grid DOA Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoaExperimentConfig {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// One `[lo, hi]` interval per source; defaults to `[2/n, 4/n]`, `[12/n, 14/n]`.
    #[serde(default)]
    pub intervals: Option<Vec<(f64, f64)>>,
    /// Grid size of the unperturbed comparison; 0 disables it.
    #[serde(default)]
    pub n_standard: usize,
    #[serde(default)]
    pub aa: AaOptions,
    #[serde(default = "default_failure_rate")]
    pub max_failure_rate: f64,
}

impl DoaExperimentConfig {
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        match &self.intervals {
            Some(v) => v.clone(),
            None => crate::doa::DoaScene::two_source_intervals(self.n).to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(format!("config {:?}: {msg}", self.name)));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.m < 2 {
            return bad("the array needs at least 2 sensors");
        }
        if self.n < 2 || !self.n.is_multiple_of(2) {
            return bad("grid size must be even and >= 2");
        }
        if self.n_standard != 0 && !self.n_standard.is_multiple_of(2) {
            return bad("comparison grid size must be even");
        }
        let iv = self.intervals();
        if iv.is_empty() || iv.len() > self.n {
            return bad("need between 1 and n source intervals");
        }
        if iv.iter().any(|&(lo, hi)| !(lo < hi && lo > -1.0 && hi <= 1.0)) {
            return bad("intervals must be non-empty and inside (-1, 1]");
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return bad("max_failure_rate must lie in [0, 1]");
        }
        self.aa.validate()
    }
}

/// Either experiment family; the TOML key `experiment` selects it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum Experiment {
    Sweep(ExperimentConfig),
    Doa(DoaExperimentConfig),
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        match self {
            Experiment::Sweep(c) => c.validate(),
            Experiment::Doa(c) => c.validate(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Experiment::Sweep(c) => &c.name,
            Experiment::Doa(c) => &c.name,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Experiment::Sweep(c) => c.master_seed = seed,
            Experiment::Doa(c) => c.master_seed = seed,
        }
    }
}

fn range(lo: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + step * i as f64)
        .map(|v| (v * 1e9).round() / 1e9)
        .collect()
}

fn sweep_cfg(name: &str, sweep: Sweep, trials: usize, strategies: Vec<Strategy>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        n: 200,
        m: 80,
        k: 10,
        r: 0.1,
        epsilon: 0.5,
        sweep,
        trials,
        master_seed: 0,
        strategies,
        signal: SignalKind::UnitSpikes,
        aa: AaOptions::default(),
        max_failure_rate: default_failure_rate(),
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "fig2",
    "fig2-desk",
    "fig3",
    "fig3-desk",
    "fig4",
    "fig4-desk",
    "fig5",
    "fig5-desk",
    "compressible",
    "fig6",
    "fig6-desk",
    "fig7",
    "fig7-desk",
];

/// Built-in experiment definitions. `-desk` variants use 10 trials and
/// shorter sweeps.
pub fn preset(name: &str) -> Result<Experiment> {
    let four = vec![Strategy::Oracle, Strategy::Nominal, Strategy::Tps, Strategy::Aa];
    let eps = |values| Sweep {
        param: SweepParam::Epsilon,
        values,
    };
    let r = |values| Sweep {
        param: SweepParam::R,
        values,
    };
    let m = |values| Sweep {
        param: SweepParam::M,
        values,
    };
    let cfg = match name {
        "fig2" => sweep_cfg(name, eps(range(0.05, 0.05, 40)), 50, four),
        "fig2-desk" => sweep_cfg(name, eps(vec![0.1, 0.5, 1.0, 1.5, 2.0]), 10, four),
        "fig3" => sweep_cfg(name, r(range(0.05, 0.05, 20)), 50, four),
        "fig3-desk" => sweep_cfg(name, r(vec![0.1, 0.5, 1.0]), 10, four),
        "fig4" | "fig4-desk" => {
            let (values, trials) = if name == "fig4" {
                (range(30.0, 5.0, 15), 50)
            } else {
                (vec![40.0, 55.0, 65.0, 80.0, 95.0], 10)
            };
            let mut c = sweep_cfg(name, m(values), trials, four);
            c.epsilon = 0.2;
            c
        }
        "fig5" | "fig5-desk" => {
            let mut c = sweep_cfg(
                name,
                eps(vec![0.0]),
                if name == "fig5" { 20 } else { 10 },
                vec![Strategy::Pp],
            );
            c.m = 50;
            c.epsilon = 0.0;
            c.signal = SignalKind::PositiveSpikes;
            c.aa.inner.max_iter = 300_000;
            c
        }
        "compressible" => {
            let mut c = sweep_cfg(name, eps(vec![0.2]), 1, four);
            c.m = 70;
            c.epsilon = 0.2;
            c.signal = SignalKind::Compressible(CompressibleSpec::new(200, 1.5, 2.8843)?);
            c
        }
        "fig6" | "fig6-desk" | "fig7" | "fig7-desk" => {
            let (trials, n_standard) = match name {
                "fig6" => (1000, 0),
                "fig6-desk" => (100, 0),
                _ => (1, 360),
            };
            return Ok(Experiment::Doa(DoaExperimentConfig {
                name: name.to_string(),
                m: 30,
                n: 90,
                trials,
                master_seed: 0,
                intervals: None,
                n_standard,
                aa: AaOptions::default(),
                max_failure_rate: default_failure_rate(),
            }));
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Experiment::Sweep(cfg))
}
