//! SVG rendering of result files.
//!
//! The file kind is taken from the CSV header: a sweep result gives one line
//! per strategy, a DOA error file gives a histogram, and a spectrum file gives
//! stems per method.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use pcs_core::harness::{import_doa_errors, import_results, SweepResult};
use plotters::prelude::*;

use crate::{Cli, PlotArgs};

const SIZE: (u32, u32) = (800, 560);

pub fn run(cli: &Cli, a: &PlotArgs) -> Result<ExitCode> {
    let out = cli.out.clone().unwrap_or_else(|| a.input.with_extension("svg"));
    let header = fs::read_to_string(&a.input)
        .with_context(|| format!("reading {}", a.input.display()))?
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    let title = a.title.clone().unwrap_or_else(|| {
        a.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    if header.starts_with("sweep_param") {
        sweep_plot(&import_results(&a.input)?, &title, &out)?;
    } else if header.starts_with("trial") {
        histogram(&import_doa_errors(&a.input)?, a.n, &title, &out)?;
    } else if header.starts_with("method") {
        spectrum_plot(&read_spectrum(&a.input)?, &title, &out)?;
    } else {
        bail!("{}: unrecognised result header {header:?}", a.input.display());
    }
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn draw_err<E: std::error::Error + Send + Sync + 'static>(e: DrawingAreaErrorKind<E>) -> anyhow::Error {
    anyhow!("drawing failed: {e}")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).abs().max(1e-12);
    (lo - 0.05 * span, hi + 0.05 * span)
}

/// Mean signal error against the swept parameter, one labelled line per strategy.
pub fn sweep_plot(result: &SweepResult, title: &str, out: &Path) -> Result<()> {
    if result.points.is_empty() || result.strategies.is_empty() {
        bail!("nothing to plot: the sweep result is empty");
    }
    let xs = result.values();
    let (x0, x1) = padded(
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let ymax = result
        .strategies
        .iter()
        .flat_map(|&s| result.series(s))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let root = SVGBackend::new(out, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, 0.0..ymax.max(1e-12) * 1.08)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc(result.param.name())
        .y_desc("mean signal error")
        .draw()
        .map_err(draw_err)?;
    for (i, &s) in result.strategies.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let pts: Vec<(f64, f64)> = xs.iter().copied().zip(result.series(s)).collect();
        chart
            .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
            .map_err(draw_err)?
            .label(s.name())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        chart
            .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
            .map_err(draw_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperLeft)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}

/// Histogram of DOA errors. With `n`, the axis spans `[−1/n, 1/n]` widened to
/// cover every error, and the cell edges `±1/n` are marked.
pub fn histogram(errors: &[f64], n: Option<usize>, title: &str, out: &Path) -> Result<()> {
    if errors.is_empty() {
        bail!("nothing to plot: no DOA errors");
    }
    let emax = errors.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let half = match n {
        Some(n) if n > 0 => emax.max(1.0 / n as f64),
        _ => emax,
    }
    .max(1e-12);
    let bins = 40usize;
    let width = 2.0 * half / bins as f64;
    let mut counts = vec![0usize; bins];
    for e in errors {
        let b = (((e + half) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let top = *counts.iter().max().unwrap_or(&1) as f64;
    let root = SVGBackend::new(out, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(-half * 1.05..half * 1.05, 0.0..top * 1.1)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("estimation error")
        .y_desc("count")
        .draw()
        .map_err(draw_err)?;
    chart
        .draw_series(counts.iter().enumerate().map(|(i, &c)| {
            let lo = -half + i as f64 * width;
            Rectangle::new([(lo, 0.0), (lo + width, c as f64)], BLUE.mix(0.6).filled())
        }))
        .map_err(draw_err)?;
    if let Some(n) = n.filter(|&n| n > 0) {
        let edge = 1.0 / n as f64;
        for x in [-edge, edge] {
            chart
                .draw_series(LineSeries::new(vec![(x, 0.0), (x, top * 1.1)], RED.stroke_width(1)))
                .map_err(draw_err)?;
        }
    }
    root.present().map_err(draw_err)?;
    Ok(())
}

pub struct SpectrumRow {
    pub method: String,
    pub theta: f64,
    pub magnitude: f64,
}

fn read_spectrum(path: &PathBuf) -> Result<Vec<SpectrumRow>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                bail!("{}: expected 3 fields in {l:?}", path.display());
            }
            Ok(SpectrumRow {
                method: f[0].to_string(),
                theta: f[1].trim().parse().context("bad theta")?,
                magnitude: f[2].trim().parse().context("bad magnitude")?,
            })
        })
        .collect()
}

/// Recovered magnitudes as stems, one colour per method.
pub fn spectrum_plot(rows: &[SpectrumRow], title: &str, out: &Path) -> Result<()> {
    if rows.is_empty() {
        bail!("nothing to plot: empty spectrum");
    }
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let top = rows.iter().map(|r| r.magnitude).fold(0.0, f64::max).max(1e-12);
    let root = SVGBackend::new(out, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(-1.0..1.0, 0.0..top * 1.1)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("theta")
        .y_desc("magnitude")
        .draw()
        .map_err(draw_err)?;
    for (i, m) in methods.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let stems: Vec<_> = rows
            .iter()
            .filter(|r| r.method == *m)
            .map(|r| PathElement::new(vec![(r.theta, 0.0), (r.theta, r.magnitude)], color.stroke_width(2)))
            .collect();
        chart
            .draw_series(stems)
            .map_err(draw_err)?
            .label(*m)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}
