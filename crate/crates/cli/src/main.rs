use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use genai_abm_cli::commands::{parse_free_dim, parse_observed};
use genai_abm_cli::error::EXIT_CONFIG;
use genai_abm_cli::{
    cmd_calibrate, cmd_ensemble, cmd_simulate, cmd_validate, parse_config, CalibrateOptions, CliError, Format,
    Overrides, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "genai-abm",
    version,
    about = "Agent-based simulator of generative-AI adoption"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat JSON config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (simulate, calibrate, validate) or directory (ensemble)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    agents: Option<usize>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Worker threads (default: one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one world and write its trajectory
    Simulate,
    /// Run an ensemble and write trajectories, a summary and a shape report
    Ensemble,
    /// Fit parameters to a target trajectory CSV
    Calibrate(CalibrateArgs),
    /// Check Euler convergence against the closed-form solutions
    Validate,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Target trajectory CSV
    #[arg(long)]
    target: PathBuf,
    /// Free parameter as name=lo:hi[:points]; repeatable
    #[arg(long = "fit", required = true)]
    fit: Vec<String>,
    /// Comma-separated observed series
    #[arg(long, default_value = "education_mean,adoption,regulation,employment")]
    observe: String,
    #[arg(long, default_value_t = CalibrateOptions::DEFAULT_GRID_POINTS)]
    grid_points: usize,
    #[arg(long, default_value_t = CalibrateOptions::DEFAULT_REFINE_ITERS)]
    refine_iters: usize,
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let text = match &common.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?),
        None => None,
    };
    let overrides = Overrides {
        seed: common.seed,
        runs: common.runs,
        agents: common.agents,
        steps: common.steps,
        out: common.out.clone(),
        format: common.format,
        threads: common.threads,
    };
    parse_config(text.as_deref(), &overrides)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg)?,
        Command::Ensemble => cmd_ensemble(&cfg)?,
        Command::Validate => cmd_validate(&cfg)?,
        Command::Calibrate(args) => {
            let opts = CalibrateOptions {
                target: args.target,
                free: args
                    .fit
                    .iter()
                    .map(|f| parse_free_dim(f, args.grid_points))
                    .collect::<Result<_, _>>()?,
                observed: parse_observed(&args.observe)?,
                refine_iters: args.refine_iters,
            };
            cmd_calibrate(&cfg, &opts)?
        }
    };
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // usage errors are configuration errors
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("genai-abm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
