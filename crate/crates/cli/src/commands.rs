use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use genai_abm::calibration::{grid_fit, FitSpec, FreeDim, FreeParam, OBSERVABLE};
use genai_abm::validation::{convergence_suite, DEFAULT_DTS};
use genai_abm::{run_ensemble, run_simulation, shape_check, summarize, Variable};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output;

/// Options only the `calibrate` subcommand uses.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateOptions {
    pub target: PathBuf,
    pub free: Vec<FreeDim>,
    pub observed: Vec<Variable>,
    pub refine_iters: usize,
}

impl CalibrateOptions {
    pub const DEFAULT_GRID_POINTS: usize = 20;
    pub const DEFAULT_REFINE_ITERS: usize = 30;
}

/// Parses `name=lo:hi` or `name=lo:hi:points`.
pub fn parse_free_dim(text: &str, default_points: usize) -> Result<FreeDim, CliError> {
    let bad = || CliError::Config(format!("--fit expects name=lo:hi[:points], got `{text}`"));
    let (name, range) = text.split_once('=').ok_or_else(bad)?;
    let param = FreeParam::from_name(name.trim())
        .ok_or_else(|| CliError::Config(format!("`{name}` is not a fittable parameter")))?;
    let parts: Vec<&str> = range.split(':').collect();
    let float = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let (lo, hi, grid_points) = match parts.as_slice() {
        [lo, hi] => (float(lo)?, float(hi)?, default_points),
        [lo, hi, n] => (float(lo)?, float(hi)?, n.trim().parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    Ok(FreeDim {
        param,
        lo,
        hi,
        grid_points,
    })
}

pub fn parse_observed(text: &str) -> Result<Vec<Variable>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|name| {
            Variable::from_name(name.trim())
                .filter(|v| OBSERVABLE.contains(v))
                .ok_or_else(|| CliError::Config(format!("`{name}` cannot be observed")))
        })
        .collect()
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn out_path(cfg: &RunConfig, stem: &str) -> PathBuf {
    cfg.out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{stem}.{}", cfg.format.extension())))
}

/// Runs one world (run index 0) and writes its trajectory.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let start = Instant::now();
    let traj = with_threads(cfg.threads, || run_simulation(&cfg.params, 0))??;
    let path = out_path(cfg, "trajectory");
    let text = match cfg.format {
        Format::Csv => output::trajectory_csv(&traj),
        Format::Json => output::trajectory_json(&traj),
    };
    write(&path, &text)?;
    eprintln!(
        "simulate: {} agents x {} steps in {:.2} s -> {}",
        cfg.params.n_agents,
        cfg.params.n_steps,
        start.elapsed().as_secs_f64(),
        path.display()
    );
    Ok(vec![path])
}

/// Runs `n_runs` worlds and writes, into the output directory, one
/// trajectory per run plus `summary` and `shape_report` files.
pub fn cmd_ensemble(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let start = Instant::now();
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("ensemble_out"));
    let (runs, summary) = with_threads(cfg.threads, || {
        let runs = run_ensemble(&cfg.params, cfg.n_runs)?;
        let summary = summarize(&runs)?;
        Ok::<_, genai_abm::Error>((runs, summary))
    })??;
    let report = shape_check(&summary, &cfg.params);

    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let ext = cfg.format.extension();
    let width = (cfg.n_runs - 1).to_string().len().max(4);
    let mut written = Vec::with_capacity(runs.len() + 2);
    for traj in &runs {
        let path = dir.join(format!("run_{:0width$}.{ext}", traj.run_index));
        let text = match cfg.format {
            Format::Csv => output::trajectory_csv(traj),
            Format::Json => output::trajectory_json(traj),
        };
        write(&path, &text)?;
        written.push(path);
    }
    let (summary_text, report_text) = match cfg.format {
        Format::Csv => (output::summary_csv(&summary), output::shape_report_csv(&report)),
        Format::Json => (output::summary_json(&summary), output::shape_report_json(&report)),
    };
    for (stem, text) in [("summary", summary_text), ("shape_report", report_text)] {
        let path = dir.join(format!("{stem}.{ext}"));
        write(&path, &text)?;
        written.push(path);
    }
    eprintln!(
        "ensemble: {} runs x {} agents x {} steps in {:.2} s; shape checks {}",
        cfg.n_runs,
        cfg.params.n_agents,
        cfg.params.n_steps,
        start.elapsed().as_secs_f64(),
        if report.all_passed() {
            "all passed"
        } else {
            "NOT all passed"
        }
    );
    Ok(written)
}

/// Fits the requested parameters to a target trajectory CSV.
pub fn cmd_calibrate(cfg: &RunConfig, opts: &CalibrateOptions) -> Result<Vec<PathBuf>, CliError> {
    let start = Instant::now();
    let text = fs::read_to_string(&opts.target).map_err(|e| CliError::io(&opts.target, e))?;
    let target = output::read_trajectory_csv(&text)?;
    let spec = FitSpec {
        target,
        observed: opts.observed.clone(),
        free: opts.free.clone(),
        refine_iters: opts.refine_iters,
        fixed: cfg.params.clone(),
    };
    let fit = with_threads(cfg.threads, || grid_fit(&spec))??;
    let path = out_path(cfg, "fit");
    let text = match cfg.format {
        Format::Csv => output::fit_result_csv(&fit),
        Format::Json => output::fit_result_json(&fit),
    };
    write(&path, &text)?;
    eprintln!(
        "calibrate: {} evaluations in {:.2} s, loss {:e} -> {}",
        fit.evaluations,
        start.elapsed().as_secs_f64(),
        fit.loss,
        path.display()
    );
    Ok(vec![path])
}

/// Euler-versus-exact convergence at dt = 1, 0.5, 0.25. Prints the report,
/// writes it when an output path is given, and fails when any oracle fails.
pub fn cmd_validate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let reports = convergence_suite(&cfg.params, &DEFAULT_DTS)?;
    for r in &reports {
        let errs: Vec<String> = r.max_errors.iter().map(|e| format!("{e:.3e}")).collect();
        let ratios: Vec<String> = r.ratios.iter().map(|x| format!("{x:.4}")).collect();
        println!(
            "{:<10} rate {} dt {:?} max error [{}] ratios [{}] {}",
            r.name,
            r.rate,
            r.dts,
            errs.join(", "),
            ratios.join(", "),
            if r.passed { "ok" } else { "FAIL" }
        );
    }
    let mut written = Vec::new();
    if let Some(path) = &cfg.out {
        let text = match cfg.format {
            Format::Csv => output::convergence_csv(&reports),
            Format::Json => output::convergence_json(&reports),
        };
        write(path, &text)?;
        written.push(path.clone());
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(written)
    } else {
        Err(CliError::Validation(format!(
            "convergence failed for {}",
            failed.join(", ")
        )))
    }
}
