//! Result files.
//!
//! Sweep CSV columns: `sweep_param, value, strategy, mean_signal_err,
//! mean_beta_err, trials, effective_rate`, one row per (value, strategy) in
//! sweep then strategy order. Floats carry 17 significant digits.
//!
//! DOA CSV columns: `trial, source, theta, theta_hat, error`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SweepParam;
use super::run::{DoaResult, StrategyStats, SweepPoint, SweepResult};
use crate::recovery::Strategy;
use crate::report::KvReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    KeyValue,
}

#[derive(Serialize, Deserialize)]
struct Row {
    sweep_param: String,
    value: String,
    strategy: String,
    mean_signal_err: String,
    mean_beta_err: String,
    trials: usize,
    effective_rate: String,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_num(path: &Path, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(path, format!("not a number: {s:?}")))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

pub fn export_results(result: &SweepResult, path: impl AsRef<Path>, format: ExportFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        ExportFormat::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
            if result.strategies.is_empty() || result.points.is_empty() {
                w.write_record([
                    "sweep_param",
                    "value",
                    "strategy",
                    "mean_signal_err",
                    "mean_beta_err",
                    "trials",
                    "effective_rate",
                ])
                .map_err(|e| csv_err(path, e))?;
            }
            for p in &result.points {
                for s in &p.stats {
                    w.serialize(Row {
                        sweep_param: result.param.name().to_string(),
                        value: num(p.value),
                        strategy: s.strategy.name().to_string(),
                        mean_signal_err: num(s.mean_signal_err),
                        mean_beta_err: num(s.mean_beta_err),
                        trials: s.trials,
                        effective_rate: num(s.effective_rate),
                    })
                    .map_err(|e| csv_err(path, e))?;
                }
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
        ExportFormat::KeyValue => {
            let mut kv = KvReport::new();
            kv.push("name", &result.name)
                .push("sweep_param", result.param.name())
                .push("points", result.points.len());
            for (i, p) in result.points.iter().enumerate() {
                kv.push(format!("point.{i}.value"), p.value);
                for s in &p.stats {
                    let key = |f: &str| format!("point.{i}.{}.{f}", s.strategy);
                    kv.push(key("mean_signal_err"), s.mean_signal_err)
                        .push(key("mean_beta_err"), s.mean_beta_err)
                        .push(key("trials"), s.trials)
                        .push(key("effective_rate"), s.effective_rate);
                }
            }
            kv.write(path)
        }
    }
}

/// Reads a sweep CSV back; per-trial records are not stored and come back empty.
pub fn import_results(path: impl AsRef<Path>) -> Result<SweepResult> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut param: Option<SweepParam> = None;
    let mut strategies: Vec<Strategy> = Vec::new();
    let mut points: Vec<SweepPoint> = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let p = SweepParam::parse(&row.sweep_param).map_err(|e| Error::format(path, e.to_string()))?;
        if param.is_some_and(|q| q != p) {
            return Err(Error::format(path, "mixed sweep parameters"));
        }
        param = Some(p);
        let strategy: Strategy = row
            .strategy
            .parse()
            .map_err(|e: Error| Error::format(path, e.to_string()))?;
        if !strategies.contains(&strategy) {
            strategies.push(strategy);
        }
        let value = parse_num(path, &row.value)?;
        let stats = StrategyStats {
            strategy,
            mean_signal_err: parse_num(path, &row.mean_signal_err)?,
            mean_beta_err: parse_num(path, &row.mean_beta_err)?,
            trials: row.trials,
            effective_rate: parse_num(path, &row.effective_rate)?,
        };
        match points.last_mut() {
            Some(last) if last.value.to_bits() == value.to_bits() => last.stats.push(stats),
            _ => points.push(SweepPoint {
                value,
                stats: vec![stats],
            }),
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SweepResult {
        name,
        param: param.unwrap_or(SweepParam::Epsilon),
        strategies,
        points,
        records: Vec::new(),
    })
}

#[derive(Serialize, Deserialize)]
struct DoaRow {
    trial: usize,
    source: usize,
    theta: String,
    theta_hat: String,
    error: String,
}

pub fn export_doa(result: &DoaResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    if result.records.iter().all(|r| r.errors.is_empty()) {
        w.write_record(["trial", "source", "theta", "theta_hat", "error"])
            .map_err(|e| csv_err(path, e))?;
    }
    for rec in &result.records {
        for (j, err) in rec.errors.iter().enumerate() {
            w.serialize(DoaRow {
                trial: rec.index,
                source: j,
                theta: num(rec.theta[j]),
                theta_hat: num(rec.theta_hat[j]),
                error: num(*err),
            })
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// The `error` column of a DOA CSV.
pub fn import_doa_errors(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    rdr.deserialize::<DoaRow>()
        .map(|row| {
            let row = row.map_err(|e| csv_err(path, e))?;
            parse_num(path, &row.error)
        })
        .collect()
}
