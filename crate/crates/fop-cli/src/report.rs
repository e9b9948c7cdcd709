//! CSV outputs: sampler traces, training traces and precision-recall
//! curves.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fop_core::chain::SweepStats;
use fop_core::eval::{PosteriorMap, PrCurve};

use crate::driver::TraceRow;

/// `sweep,band_axis,accept_rate,energy` with one row per axis pass.
pub fn write_sweep_trace(path: &Path, trace: &[SweepStats]) -> Result<()> {
    let mut out = String::from("sweep,band_axis,accept_rate,energy\n");
    for s in trace {
        writeln!(
            out,
            "{},h,{},{}",
            s.sweep,
            s.horizontal.rate(),
            s.energy_after_horizontal
        )?;
        writeln!(out, "{},v,{},{}", s.sweep, s.vertical.rate(), s.energy_after_vertical)?;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// `step,obj_estimate,grad_norm,accept_rate,wall_ms`.
pub fn write_train_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut out = String::from("step,obj_estimate,grad_norm,accept_rate,wall_ms\n");
    for row in trace {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.stats.step, row.stats.objective, row.stats.grad_norm, row.stats.accept_rate, row.wall_ms
        )?;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// `threshold,precision,recall` rows with a trailing `AP,<value>` line.
pub fn write_pr_csv(path: &Path, curve: &PrCurve) -> Result<()> {
    let mut out = String::from("threshold,precision,recall\n");
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.threshold, p.precision, p.recall)?;
    }
    writeln!(out, "AP,{}", curve.average_precision)?;
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Reads back the `AP,<value>` line of a PR CSV.
pub fn read_pr_csv_ap(path: &Path) -> Result<f64> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    for line in text.lines().rev() {
        if let Some(v) = line.strip_prefix("AP,") {
            return v.trim().parse().context("AP value");
        }
    }
    bail!("{}: no AP line found", path.display());
}

/// Row-major grid of probabilities, one CSV row per image row.
pub fn write_posterior_csv(path: &Path, map: &PosteriorMap) -> Result<()> {
    let mut out = String::new();
    for i in 0..map.rows() {
        for j in 0..map.cols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", map.get(i, j))?;
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
