//! Agent-based simulator of generative-AI adoption.
//!
//! A population of individuals accumulates education, which maps to skill
//! through a normalized sigmoid. Mean skill drives the aggregate business
//! adoption level; regulation tracks adoption; employment is set each step
//! by the min-rule over labor supply, labor demand and a supply ceiling,
//! held up by a policy floor.
//!
//! - [`model`]: pure kernels and closed-form solutions
//! - [`population`]: the agent pool and skill-distribution estimates
//! - [`engine`]: coupled runs and seeded ensembles
//! - [`analysis`]: ensemble statistics and shape checks
//! - [`calibration`]: least-squares fitting to observed trajectories
//! - [`validation`]: Euler-versus-exact convergence checks

pub mod analysis;
pub mod calibration;
pub mod engine;
pub mod error;
pub mod model;
pub mod population;
pub mod reduce;
pub mod validation;

pub use analysis::{shape_check, summarize, EnsembleSummary, ShapeReport};
pub use calibration::{grid_fit, trajectory_loss, FitResult, FitSpec, FreeDim, FreeParam};
pub use engine::{run_ensemble, run_simulation, Row, Trajectory, Variable};
pub use error::{Error, Result};
pub use model::{MacroState, ModelParams};
pub use population::{AgentPool, SkillDistribution};
