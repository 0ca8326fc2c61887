//! Seeded Monte Carlo experiments.
//!
//! Trial `i` of a run draws all of its data from `stream_rng(master_seed, i)`,
//! so results are a pure function of the configuration. Trials run through
//! [`Execution`](crate::Execution) and are aggregated in trial order.

mod config;
mod export;
mod run;

pub use config::{
    preset, DoaExperimentConfig, Experiment, ExperimentConfig, PointConfig, Sweep, SweepParam, PRESET_NAMES,
};
pub use export::{export_doa, export_results, import_doa_errors, import_results, ExportFormat};
pub use run::{
    doa_scene, run_doa_experiment, run_sweep, run_sweep_with, run_trial, run_trial_at, trial_data, DoaResult,
    DoaTrialRecord, StrategyOutcome, StrategyStats, SweepPoint, SweepResult, TrialData, TrialRecord,
};
