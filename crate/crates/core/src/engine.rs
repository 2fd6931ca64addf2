//! Couples the population to adoption, regulation and the labor market, and
//! runs seeded ensembles of independent worlds.
//!
//! Each step updates, in this order: agents, mean skill, adoption (using the
//! new mean skill), regulation (tracking the new adoption), demand, and
//! employment. Reordering these changes every output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{adoption_step, demand_factor, employment_level, regulation_step, MacroState, ModelParams};
use crate::population::{init_population, sample_truncated, AgentPool, PoolSums};

/// Odd multiplier (the 64-bit golden ratio) used by [`run_seed`].
pub const SEED_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;

/// Per-run seed: `seed XOR (SEED_MULTIPLIER * (run_index + 1))`, wrapping.
///
/// The run's `ChaCha8Rng` is seeded with `seed_from_u64(run_seed(..))`; it
/// first draws the run's gamma, then each agent's alpha and beta in
/// ascending agent order.
pub fn run_seed(seed: u64, run_index: usize) -> u64 {
    seed ^ SEED_MULTIPLIER.wrapping_mul(run_index as u64 + 1)
}

/// The recorded observables, in output column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    EducationMean,
    SkillMean,
    Adoption,
    Regulation,
    Supply,
    Demand,
    Employment,
}

impl Variable {
    pub const ALL: [Variable; 7] = [
        Variable::EducationMean,
        Variable::SkillMean,
        Variable::Adoption,
        Variable::Regulation,
        Variable::Supply,
        Variable::Demand,
        Variable::Employment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::EducationMean => "education_mean",
            Variable::SkillMean => "skill_mean",
            Variable::Adoption => "adoption",
            Variable::Regulation => "regulation",
            Variable::Supply => "supply",
            Variable::Demand => "demand",
            Variable::Employment => "employment",
        }
    }

    pub fn from_name(name: &str) -> Option<Variable> {
        Variable::ALL.into_iter().find(|v| v.name() == name)
    }
}

/// One recorded timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub education_mean: f64,
    pub skill_mean: f64,
    pub adoption: f64,
    pub regulation: f64,
    pub supply: f64,
    pub demand: f64,
    pub employment: f64,
}

impl Row {
    pub fn get(&self, var: Variable) -> f64 {
        match var {
            Variable::EducationMean => self.education_mean,
            Variable::SkillMean => self.skill_mean,
            Variable::Adoption => self.adoption,
            Variable::Regulation => self.regulation,
            Variable::Supply => self.supply,
            Variable::Demand => self.demand,
            Variable::Employment => self.employment,
        }
    }

    pub fn set(&mut self, var: Variable, value: f64) {
        let slot = match var {
            Variable::EducationMean => &mut self.education_mean,
            Variable::SkillMean => &mut self.skill_mean,
            Variable::Adoption => &mut self.adoption,
            Variable::Regulation => &mut self.regulation,
            Variable::Supply => &mut self.supply,
            Variable::Demand => &mut self.demand,
            Variable::Employment => &mut self.employment,
        };
        *slot = value;
    }

    pub fn macro_state(&self) -> MacroState {
        MacroState {
            t: self.t,
            adoption: self.adoption,
            regulation: self.regulation,
            supply: self.supply,
            demand: self.demand,
            employment: self.employment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params_fingerprint: u64,
    pub run_index: usize,
    pub rows: Vec<Row>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, var: Variable) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(var)).collect()
    }
}

/// A single world in progress. Most callers want [`run_simulation`].
#[derive(Debug, Clone)]
pub struct Simulation {
    params: ModelParams,
    gamma: f64,
    pool: AgentPool,
    step: usize,
    row: Row,
}

impl Simulation {
    pub fn new(params: &ModelParams, run_index: usize) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed(params.seed, run_index));
        let gamma = sample_truncated(&mut rng, params.gamma_base, params.gamma_sd)?;
        let pool = init_population(params, &mut rng)?;
        let mut sim = Simulation {
            params: params.clone(),
            gamma,
            pool,
            step: 0,
            row: Row {
                t: 0.0,
                education_mean: 0.0,
                skill_mean: 0.0,
                adoption: params.a0,
                regulation: params.r0,
                supply: 0.0,
                demand: 0.0,
                employment: 0.0,
            },
        };
        let sums = sim.pool.sums();
        sim.settle_market(sums)?;
        Ok(sim)
    }

    /// Business learning rate drawn for this run.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pool(&self) -> &AgentPool {
        &self.pool
    }

    pub fn row(&self) -> Row {
        self.row
    }

    pub fn step(&mut self) -> Result<Row> {
        let p = &self.params;
        let sums = self.pool.step(p.dt)?;
        let n = self.pool.len() as f64;
        let s_bar = sums.skill / n;
        self.row.adoption = adoption_step(self.row.adoption, s_bar, self.gamma, p.dt)?;
        self.row.regulation = regulation_step(self.row.regulation, self.row.adoption, p.delta, p.dt)?;
        self.step += 1;
        self.row.t = self.step as f64 * p.dt;
        self.settle_market(sums)?;
        Ok(self.row)
    }

    fn settle_market(&mut self, sums: PoolSums) -> Result<()> {
        let p = &self.params;
        let n = self.pool.len() as f64;
        let row = &mut self.row;
        row.education_mean = sums.education / n;
        row.skill_mean = sums.skill / n;
        row.supply = row.skill_mean;
        row.demand = demand_factor(row.adoption, self.gamma, p.demand_scale)?;
        row.employment = employment_level(row.supply, row.demand, p.max_supply_labor, p.employment_floor)?;
        Ok(())
    }
}

/// Runs one world for `params.n_steps` steps, recording the initial row
/// plus one row per step.
pub fn run_simulation(params: &ModelParams, run_index: usize) -> Result<Trajectory> {
    let mut sim = Simulation::new(params, run_index)?;
    let mut rows = Vec::with_capacity(params.n_steps + 1);
    rows.push(sim.row());
    for _ in 0..params.n_steps {
        rows.push(sim.step()?);
    }
    Ok(Trajectory {
        params_fingerprint: params.fingerprint(),
        run_index,
        rows,
    })
}

/// Runs worlds `0..n_runs` in parallel on the current rayon pool. The result
/// is ordered by run index and does not depend on the number of threads.
pub fn run_ensemble(params: &ModelParams, n_runs: usize) -> Result<Vec<Trajectory>> {
    if n_runs == 0 {
        return Err(Error::invalid("n_runs", "must be >= 1"));
    }
    params.validate()?;
    (0..n_runs).into_par_iter().map(|i| run_simulation(params, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelParams {
        ModelParams {
            n_agents: 200,
            n_steps: 50,
            ..Default::default()
        }
    }

    #[test]
    fn seed_split_is_frozen() {
        assert_eq!(run_seed(0, 0), SEED_MULTIPLIER);
        assert_eq!(run_seed(42, 1), 42 ^ SEED_MULTIPLIER.wrapping_mul(2));
        assert_ne!(run_seed(42, 0), run_seed(42, 1));
    }

    #[test]
    fn zero_steps_gives_initial_row() {
        let params = ModelParams { n_steps: 0, ..small() };
        let traj = run_simulation(&params, 0).unwrap();
        assert_eq!(traj.rows.len(), 1);
        let row = traj.rows[0];
        assert_eq!(row.t, 0.0);
        assert!((row.education_mean - params.e0).abs() <= 1e-15);
        assert_eq!(row.adoption, params.a0);
        assert_eq!(row.regulation, params.r0);
        assert_eq!(row.supply, row.skill_mean);
    }

    #[test]
    fn repeated_runs_identical() {
        let params = small();
        assert_eq!(run_simulation(&params, 3).unwrap(), run_simulation(&params, 3).unwrap());
        assert_ne!(run_simulation(&params, 3).unwrap(), run_simulation(&params, 4).unwrap());
    }

    #[test]
    fn time_grid() {
        let params = ModelParams { dt: 0.5, ..small() };
        let traj = run_simulation(&params, 0).unwrap();
        assert_eq!(traj.rows.len(), params.n_steps + 1);
        for (k, row) in traj.rows.iter().enumerate() {
            assert_eq!(row.t, k as f64 * 0.5);
        }
    }

    #[test]
    fn invalid_params_rejected_before_running() {
        let params = ModelParams { dt: 0.0, ..small() };
        assert!(run_simulation(&params, 0).is_err());
        assert!(run_ensemble(&small(), 0).is_err());
    }

    #[test]
    fn singleton_ensemble_matches_single_run() {
        let params = small();
        let ens = run_ensemble(&params, 1).unwrap();
        assert_eq!(ens, vec![run_simulation(&params, 0).unwrap()]);
    }

    #[test]
    fn gamma_jitter_varies_runs() {
        let params = ModelParams {
            alpha_sd: 0.0,
            beta_sd: 0.0,
            ..small()
        };
        let ens = run_ensemble(&params, 10).unwrap();
        let first = ens[0].column(Variable::Adoption);
        assert!(ens[1..].iter().any(|t| t.column(Variable::Adoption) != first));
    }

    #[test]
    fn variable_names_round_trip() {
        for v in Variable::ALL {
            assert_eq!(Variable::from_name(v.name()), Some(v));
        }
        assert_eq!(Variable::from_name("t"), None);
    }
}
