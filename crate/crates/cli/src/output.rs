//! Output files.
//!
//! Per run: `trajectory.csv` (`t,norm,P1,P2[,...]`), `report.json`,
//! `manifest.toml` and, when snapshot times are set, `snapshots.csv`
//! (`t,channel,site,re,im`, channels numbered from 1). A sweep directory
//! holds `manifest.toml`, `sweep.csv` and one numbered directory per value.
//! Floats are written with 17 significant digits; data files carry no
//! timestamps, so identical configs give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use excsim_core::experiments::ScenarioReport;
use serde::Serialize;

use crate::config::{render, RunConfig};
use crate::error::CliError;
use crate::run::RunSummary;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SWEEP_FILE: &str = "sweep.csv";

/// Lossless decimal form of `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn trajectory_csv(report: &ScenarioReport) -> String {
    let t = &report.trajectory;
    let n = t.n_channels().max(report.final_populations.len());
    let mut out = String::from("t,norm");
    for c in 1..=n {
        let _ = write!(out, ",P{c}");
    }
    out.push('\n');
    for ((time, norm), pops) in t.times.iter().zip(&t.norms).zip(&t.populations) {
        out.push_str(&fmt_f64(*time));
        out.push(',');
        out.push_str(&fmt_f64(*norm));
        for p in pops {
            out.push(',');
            out.push_str(&fmt_f64(*p));
        }
        out.push('\n');
    }
    out
}

pub fn snapshots_csv(report: &ScenarioReport) -> String {
    let mut out = String::from("t,channel,site,re,im\n");
    for s in &report.trajectory.snapshots {
        let t = fmt_f64(s.time());
        for ((c, j), z) in s.amplitudes().indexed_iter() {
            let _ = writeln!(out, "{t},{},{j},{},{}", c + 1, fmt_f64(z.re), fmt_f64(z.im));
        }
    }
    out
}

#[derive(Serialize)]
struct Event<'a> {
    label: &'a str,
    time: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    scenario: &'a str,
    direction: String,
    final_time: f64,
    final_populations: &'a [f64],
    final_norm: f64,
    norm_drift: f64,
    oracle_deviation: Option<f64>,
    metrics: &'a BTreeMap<String, f64>,
    events: Vec<Event<'a>>,
}

pub fn report_json(config: &RunConfig, report: &ScenarioReport) -> String {
    let r = Report {
        scenario: config.scenario.as_str(),
        direction: report.direction.to_string(),
        final_time: report.final_state.time(),
        final_populations: &report.final_populations,
        final_norm: report.final_norm(),
        norm_drift: report.trajectory.norm_drift(),
        oracle_deviation: report.metric("oracle_deviation"),
        metrics: &report.metrics,
        events: report
            .trajectory
            .events
            .iter()
            .map(|e| Event {
                label: &e.label,
                time: e.time,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&r).expect("report serializes");
    s.push('\n');
    s
}

/// The resolved config, re-runnable with `--config`.
pub fn manifest(config: &RunConfig) -> String {
    format!(
        "# excsim {} resolved configuration\n{}",
        env!("CARGO_PKG_VERSION"),
        render(config)
    )
}

pub fn write_manifest(dir: &Path, config: &RunConfig) -> Result<(), CliError> {
    write(&dir.join(MANIFEST_FILE), &manifest(config))
}

pub fn write_run(dir: &Path, config: &RunConfig, report: &ScenarioReport) -> Result<(), CliError> {
    create_dir(dir)?;
    write(&dir.join(TRAJECTORY_FILE), &trajectory_csv(report))?;
    if !report.trajectory.snapshots.is_empty() {
        write(&dir.join(SNAPSHOT_FILE), &snapshots_csv(report))?;
    }
    write(&dir.join(REPORT_FILE), &report_json(config, report))?;
    write_manifest(dir, config)
}

/// `column,P1,P2[,...]`, one row per sweep value in input order.
pub fn write_sweep_csv(path: &Path, column: &str, values: &[f64], runs: &[RunSummary]) -> Result<(), CliError> {
    let n = runs.iter().map(|r| r.final_populations.len()).max().unwrap_or(0);
    let mut out = String::from(column);
    for c in 1..=n {
        let _ = write!(out, ",P{c}");
    }
    out.push('\n');
    for (v, r) in values.iter().zip(runs) {
        out.push_str(&fmt_f64(*v));
        for p in &r.final_populations {
            out.push(',');
            out.push_str(&fmt_f64(*p));
        }
        out.push('\n');
    }
    write(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn floats_carry_17_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5e-3), "-2.5000000000000001e-3");
        assert_eq!(fmt_f64(-0.75), "-7.5000000000000000e-1");
    }

    proptest! {
        #[test]
        fn formatted_floats_parse_back_exactly(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
