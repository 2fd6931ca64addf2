//! Serialization of trajectories, summaries, reports and fit results.
//!
//! Floats are written in Rust's shortest round-trip form (`{:?}`), so the
//! text is byte-stable and re-reads to the identical `f64`.

use std::fmt::Write as _;

use genai_abm::analysis::ShapeReport;
use genai_abm::validation::ConvergenceReport;
use genai_abm::{EnsembleSummary, FitResult, Row, Trajectory, Variable};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const TRAJECTORY_HEADER: &str = "t,education_mean,skill_mean,adoption,regulation,supply,demand,employment";

const STAT_NAMES: [&str; 5] = ["mean", "std", "min", "max", "median"];

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    text
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (traj.rows.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for row in &traj.rows {
        out.push_str(&num(row.t));
        for var in Variable::ALL {
            out.push(',');
            out.push_str(&num(row.get(var)));
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_json(traj: &Trajectory) -> String {
    let rows: Vec<Value> = traj
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            obj.insert("t".into(), json!(row.t));
            for var in Variable::ALL {
                obj.insert(var.name().into(), json!(row.get(var)));
            }
            Value::Object(obj)
        })
        .collect();
    to_json(&json!({
        "params_fingerprint": format!("{:016x}", traj.params_fingerprint),
        "run_index": traj.run_index,
        "rows": rows,
    }))
}

/// Parses a trajectory CSV with the exact [`TRAJECTORY_HEADER`].
pub fn read_trajectory_csv(text: &str) -> Result<Trajectory, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == TRAJECTORY_HEADER => {}
        Some((_, header)) => {
            return Err(CliError::Config(format!(
                "target header must be `{TRAJECTORY_HEADER}`, got `{header}`"
            )))
        }
        None => return Err(CliError::Config("target file is empty".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("target line {}: {e}", i + 1)))?;
        if fields.len() != 8 {
            return Err(CliError::Config(format!(
                "target line {}: expected 8 fields, got {}",
                i + 1,
                fields.len()
            )));
        }
        let mut row = Row {
            t: fields[0],
            education_mean: 0.0,
            skill_mean: 0.0,
            adoption: 0.0,
            regulation: 0.0,
            supply: 0.0,
            demand: 0.0,
            employment: 0.0,
        };
        for (var, &v) in Variable::ALL.iter().zip(&fields[1..]) {
            row.set(*var, v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Config("target file has no data rows".into()));
    }
    Ok(Trajectory {
        params_fingerprint: 0,
        run_index: 0,
        rows,
    })
}

pub fn summary_csv(summary: &EnsembleSummary) -> String {
    let mut out = String::from("t");
    for var in Variable::ALL {
        for stat in STAT_NAMES {
            let _ = write!(out, ",{}_{stat}", var.name());
        }
    }
    out.push('\n');
    for (k, &t) in summary.t.iter().enumerate() {
        out.push_str(&num(t));
        for var in Variable::ALL {
            let s = summary.get(var);
            for x in [s.mean[k], s.std[k], s.min[k], s.max[k], s.median[k]] {
                out.push(',');
                out.push_str(&num(x));
            }
        }
        out.push('\n');
    }
    out
}

pub fn summary_json(summary: &EnsembleSummary) -> String {
    let rows: Vec<Value> = summary
        .t
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut obj = Map::new();
            obj.insert("t".into(), json!(t));
            for var in Variable::ALL {
                let s = summary.get(var);
                for (stat, x) in STAT_NAMES
                    .iter()
                    .zip([s.mean[k], s.std[k], s.min[k], s.max[k], s.median[k]])
                {
                    obj.insert(format!("{}_{stat}", var.name()), json!(x));
                }
            }
            Value::Object(obj)
        })
        .collect();
    to_json(&json!({ "n_runs": summary.n_runs, "rows": rows }))
}

pub fn shape_report_csv(report: &ShapeReport) -> String {
    let mut out = String::from("check,passed,diagnostic,value\n");
    for check in &report.checks {
        for d in &check.diagnostics {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                check.kind.name(),
                check.passed,
                d.name,
                opt(d.value)
            );
        }
    }
    out
}

pub fn shape_report_json(report: &ShapeReport) -> String {
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            let diagnostics: Map<String, Value> = c
                .diagnostics
                .iter()
                .map(|d| (d.name.to_string(), json!(d.value)))
                .collect();
            json!({ "check": c.kind.name(), "passed": c.passed, "diagnostics": diagnostics })
        })
        .collect();
    to_json(&json!({ "all_passed": report.all_passed(), "checks": checks }))
}

pub fn fit_result_csv(fit: &FitResult) -> String {
    let mut out = String::from("key,value\n");
    for (param, value) in &fit.best {
        let _ = writeln!(out, "{},{}", param.name(), num(*value));
    }
    let _ = writeln!(out, "loss,{}", num(fit.loss));
    let _ = writeln!(out, "evaluations,{}", fit.evaluations);
    out
}

pub fn fit_result_json(fit: &FitResult) -> String {
    let best: Map<String, Value> = fit.best.iter().map(|(p, v)| (p.name().to_string(), json!(v))).collect();
    to_json(&json!({
        "best": best,
        "loss": fit.loss,
        "evaluations": fit.evaluations,
        "params": fit.params,
    }))
}

pub fn convergence_csv(reports: &[ConvergenceReport]) -> String {
    let mut out = String::from("oracle,dt,max_error,error_bound,ratio_to_previous,passed\n");
    for r in reports {
        for (i, (&dt, &err)) in r.dts.iter().zip(&r.max_errors).enumerate() {
            let ratio = if i == 0 { None } else { r.ratios.get(i - 1).copied() };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.name,
                num(dt),
                num(err),
                num(0.5 * r.rate * dt),
                opt(ratio),
                r.passed
            );
        }
    }
    out
}

pub fn convergence_json(reports: &[ConvergenceReport]) -> String {
    to_json(&json!({
        "passed": reports.iter().all(|r| r.passed),
        "oracles": reports,
    }))
}
