//! Command-line front end for the `genai-abm` simulator: configuration
//! parsing, run orchestration and file output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_calibrate, cmd_ensemble, cmd_simulate, cmd_validate, CalibrateOptions};
pub use config::{parse_config, Format, Overrides, RunConfig};
pub use error::CliError;
