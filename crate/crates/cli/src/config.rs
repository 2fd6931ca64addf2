//! Run configuration: a flat JSON object of model keys, overridden by
//! command-line flags.

use std::path::PathBuf;

use genai_abm::ModelParams;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Keys accepted in a config file, in documentation order.
pub const KEYS: [&str; 19] = [
    "alpha_base",
    "alpha_sd",
    "beta_base",
    "beta_sd",
    "gamma_base",
    "gamma_sd",
    "delta",
    "dt",
    "n_agents",
    "n_steps",
    "n_runs",
    "max_supply_labor",
    "employment_floor",
    "demand_scale",
    "e0",
    "a0",
    "r0",
    "seed",
    "n_bins",
];

pub const DEFAULT_RUNS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub agents: Option<usize>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub n_runs: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

fn float(key: &str, value: &Value) -> Result<f64, CliError> {
    value
        .as_f64()
        .filter(|_| value.is_number())
        .ok_or_else(|| CliError::Config(format!("`{key}` must be a number, got {value}")))
}

fn count(key: &str, value: &Value) -> Result<u64, CliError> {
    value
        .as_u64()
        .ok_or_else(|| CliError::Config(format!("`{key}` must be a non-negative integer, got {value}")))
}

fn usize_of(key: &str, value: &Value) -> Result<usize, CliError> {
    usize::try_from(count(key, value)?).map_err(|_| CliError::Config(format!("`{key}` is too large")))
}

/// Resolves a config from file contents (`None` when no file was given)
/// and flag overrides, applies defaults, and validates the result.
pub fn parse_config(contents: Option<&str>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let map = match contents {
        None => Map::new(),
        Some(text) => match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(map)) => map,
            Ok(other) => {
                return Err(CliError::Config(format!(
                    "config must be a JSON object, got {}",
                    kind_of(&other)
                )))
            }
            Err(e) => return Err(CliError::Config(format!("malformed JSON: {e}"))),
        },
    };

    let mut p = ModelParams::default();
    let mut n_runs = DEFAULT_RUNS;
    for (key, value) in &map {
        match key.as_str() {
            "alpha_base" => p.alpha_base = float(key, value)?,
            "alpha_sd" => p.alpha_sd = float(key, value)?,
            "beta_base" => p.beta_base = float(key, value)?,
            "beta_sd" => p.beta_sd = float(key, value)?,
            "gamma_base" => p.gamma_base = float(key, value)?,
            "gamma_sd" => p.gamma_sd = float(key, value)?,
            "delta" => p.delta = float(key, value)?,
            "dt" => p.dt = float(key, value)?,
            "max_supply_labor" => p.max_supply_labor = float(key, value)?,
            "employment_floor" => p.employment_floor = float(key, value)?,
            "demand_scale" => p.demand_scale = float(key, value)?,
            "e0" => p.e0 = float(key, value)?,
            "a0" => p.a0 = float(key, value)?,
            "r0" => p.r0 = float(key, value)?,
            "n_agents" => p.n_agents = usize_of(key, value)?,
            "n_steps" => p.n_steps = usize_of(key, value)?,
            "n_bins" => p.n_bins = usize_of(key, value)?,
            "n_runs" => n_runs = usize_of(key, value)?,
            "seed" => p.seed = count(key, value)?,
            other => return Err(CliError::Config(format!("unknown key `{other}`"))),
        }
    }

    if let Some(seed) = overrides.seed {
        p.seed = seed;
    }
    if let Some(agents) = overrides.agents {
        p.n_agents = agents;
    }
    if let Some(steps) = overrides.steps {
        p.n_steps = steps;
    }
    if let Some(runs) = overrides.runs {
        n_runs = runs;
    }

    p.validate()?;
    if n_runs == 0 {
        return Err(CliError::Config("invalid parameter `n_runs`: must be >= 1".into()));
    }
    if overrides.threads == Some(0) {
        return Err(CliError::Config("invalid parameter `threads`: must be >= 1".into()));
    }

    Ok(RunConfig {
        params: p,
        n_runs,
        out: overrides.out.clone(),
        format: overrides.format.unwrap_or_default(),
        threads: overrides.threads,
    })
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}
