//! Least-squares parameter fitting against an observed trajectory.
//!
//! The search is an exhaustive Cartesian grid followed by rounds of
//! per-parameter golden-section refinement inside the winning grid cell.
//! The forward model runs with every noise width set to zero, so the loss is
//! a deterministic function of the candidate parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_simulation, Trajectory, Variable};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Upper bound on grid evaluations per fit.
pub const MAX_GRID_EVALUATIONS: u64 = 10_000_000;

/// `1 / phi`, the golden-section shrink factor.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Series that may be observed in a target trajectory.
pub const OBSERVABLE: [Variable; 4] = [
    Variable::EducationMean,
    Variable::Adoption,
    Variable::Regulation,
    Variable::Employment,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    AlphaBase,
    BetaBase,
    GammaBase,
    Delta,
    DemandScale,
    EmploymentFloor,
}

impl FreeParam {
    pub const ALL: [FreeParam; 6] = [
        FreeParam::AlphaBase,
        FreeParam::BetaBase,
        FreeParam::GammaBase,
        FreeParam::Delta,
        FreeParam::DemandScale,
        FreeParam::EmploymentFloor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FreeParam::AlphaBase => "alpha_base",
            FreeParam::BetaBase => "beta_base",
            FreeParam::GammaBase => "gamma_base",
            FreeParam::Delta => "delta",
            FreeParam::DemandScale => "demand_scale",
            FreeParam::EmploymentFloor => "employment_floor",
        }
    }

    pub fn from_name(name: &str) -> Option<FreeParam> {
        FreeParam::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn get(self, params: &ModelParams) -> f64 {
        match self {
            FreeParam::AlphaBase => params.alpha_base,
            FreeParam::BetaBase => params.beta_base,
            FreeParam::GammaBase => params.gamma_base,
            FreeParam::Delta => params.delta,
            FreeParam::DemandScale => params.demand_scale,
            FreeParam::EmploymentFloor => params.employment_floor,
        }
    }

    pub fn set(self, params: &mut ModelParams, value: f64) {
        let slot = match self {
            FreeParam::AlphaBase => &mut params.alpha_base,
            FreeParam::BetaBase => &mut params.beta_base,
            FreeParam::GammaBase => &mut params.gamma_base,
            FreeParam::Delta => &mut params.delta,
            FreeParam::DemandScale => &mut params.demand_scale,
            FreeParam::EmploymentFloor => &mut params.employment_floor,
        };
        *slot = value;
    }
}

/// One searched dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeDim {
    pub param: FreeParam,
    pub lo: f64,
    pub hi: f64,
    pub grid_points: usize,
}

impl FreeDim {
    /// `grid_points` evenly spaced values, `lo` and `hi` included exactly.
    pub fn grid(&self) -> Vec<f64> {
        let last = self.grid_points - 1;
        (0..self.grid_points)
            .map(|i| {
                if i == last {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / last as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub target: Trajectory,
    pub observed: Vec<Variable>,
    pub free: Vec<FreeDim>,
    pub refine_iters: usize,
    /// Values for every parameter not searched, plus the forward-model
    /// settings (`n_agents`, `n_steps`, `dt`, `seed`).
    pub fixed: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// Best value of each free parameter, in `FitSpec::free` order.
    pub best: Vec<(FreeParam, f64)>,
    /// The full forward-model parameter set at the optimum.
    pub params: ModelParams,
    /// Sum of squared errors over observed series and timesteps.
    pub loss: f64,
    pub evaluations: u64,
}

impl FitSpec {
    /// The noise-free base parameter set every candidate is derived from.
    pub fn forward_base(&self) -> ModelParams {
        ModelParams {
            alpha_sd: 0.0,
            beta_sd: 0.0,
            gamma_sd: 0.0,
            ..self.fixed.clone()
        }
    }

    pub fn candidate(&self, values: &[f64]) -> ModelParams {
        let mut p = self.forward_base();
        for (dim, &v) in self.free.iter().zip(values) {
            dim.param.set(&mut p, v);
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.observed.is_empty() {
            return Err(Error::invalid("observed", "at least one observed series is required"));
        }
        if let Some(v) = self.observed.iter().find(|v| !OBSERVABLE.contains(v)) {
            return Err(Error::invalid(
                "observed",
                format!("`{}` cannot be a calibration target", v.name()),
            ));
        }
        for (i, dim) in self.free.iter().enumerate() {
            if self.free[..i].iter().any(|d| d.param == dim.param) {
                return Err(Error::invalid(
                    "free_params",
                    format!("`{}` listed twice", dim.param.name()),
                ));
            }
            if !(dim.lo.is_finite() && dim.hi.is_finite() && dim.lo >= 0.0 && dim.hi > dim.lo) {
                return Err(Error::invalid(
                    "bounds",
                    format!(
                        "`{}` needs 0 <= lo < hi, got [{}, {}]",
                        dim.param.name(),
                        dim.lo,
                        dim.hi
                    ),
                ));
            }
            if dim.grid_points < 2 {
                return Err(Error::invalid(
                    "grid_points",
                    format!("`{}` needs at least 2 grid points", dim.param.name()),
                ));
            }
        }
        self.forward_base().validate()?;
        // the valid parameter region is convex, so checking every corner of
        // the search box covers the whole box
        let k = self.free.len();
        for mask in 0..(1u32 << k) {
            let corner: Vec<f64> = self
                .free
                .iter()
                .enumerate()
                .map(|(j, d)| if mask & (1 << j) == 0 { d.lo } else { d.hi })
                .collect();
            self.candidate(&corner)
                .validate()
                .map_err(|e| Error::Config(format!("search box contains invalid parameters: {e}")))?;
        }
        check_grid(&self.target, &self.forward_base())
    }
}

fn check_grid(target: &Trajectory, params: &ModelParams) -> Result<()> {
    let expected = params.n_steps + 1;
    if target.rows.len() != expected {
        return Err(Error::Shape(format!(
            "target has {} rows, forward model produces {expected}",
            target.rows.len()
        )));
    }
    for (k, row) in target.rows.iter().enumerate() {
        let t = k as f64 * params.dt;
        if (row.t - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::Shape(format!("target row {k} has t = {}, expected {t}", row.t)));
        }
    }
    Ok(())
}

/// Sum of squared errors between the candidate's noise-free forward run and
/// the target, over every observed series and timestep.
pub fn trajectory_loss(candidate: &ModelParams, spec: &FitSpec) -> Result<f64> {
    if spec.observed.is_empty() {
        return Err(Error::invalid("observed", "at least one observed series is required"));
    }
    let params = ModelParams {
        alpha_sd: 0.0,
        beta_sd: 0.0,
        gamma_sd: 0.0,
        ..candidate.clone()
    };
    check_grid(&spec.target, &params)?;
    let model = run_simulation(&params, 0)?;
    let mut loss = 0.0;
    for &var in &spec.observed {
        for (m, obs) in model.rows.iter().zip(&spec.target.rows) {
            let d = m.get(var) - obs.get(var);
            loss += d * d;
        }
    }
    Ok(loss)
}

struct Search<'a> {
    spec: &'a FitSpec,
    evaluations: u64,
}

impl Search<'_> {
    fn eval(&mut self, values: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let loss = trajectory_loss(&self.spec.candidate(values), self.spec)?;
        Ok(if loss.is_nan() { f64::INFINITY } else { loss })
    }
}

/// Grid search plus golden-section refinement.
///
/// Grid ties resolve to the lexicographically smallest parameter vector
/// (first free parameter most significant). Refinement only accepts strict
/// improvements, so it never returns a worse point than the grid winner.
pub fn grid_fit(spec: &FitSpec) -> Result<FitResult> {
    spec.validate()?;

    let grids: Vec<Vec<f64>> = spec.free.iter().map(FreeDim::grid).collect();
    let total = grids.iter().try_fold(1u64, |acc, g| acc.checked_mul(g.len() as u64));
    let total = match total {
        Some(n) if n <= MAX_GRID_EVALUATIONS => n,
        _ => {
            return Err(Error::Config(format!(
                "grid exceeds {MAX_GRID_EVALUATIONS} evaluations"
            )))
        }
    };

    let decode = |mut flat: u64| -> Vec<usize> {
        let mut idx = vec![0; grids.len()];
        for (j, g) in grids.iter().enumerate().rev() {
            idx[j] = (flat % g.len() as u64) as usize;
            flat /= g.len() as u64;
        }
        idx
    };
    let point = |idx: &[usize]| -> Vec<f64> { idx.iter().zip(&grids).map(|(&i, g)| g[i]).collect() };

    // flat index order is lexicographic order of the parameter vector
    let losses: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            trajectory_loss(&spec.candidate(&point(&decode(flat))), spec).map(|l| {
                if l.is_nan() {
                    f64::INFINITY
                } else {
                    l
                }
            })
        })
        .collect::<Result<_>>()?;

    let mut best_flat = 0;
    for (flat, &l) in losses.iter().enumerate() {
        if l < losses[best_flat] {
            best_flat = flat;
        }
    }
    let best_idx = decode(best_flat as u64);
    let mut best = point(&best_idx);
    let mut best_loss = losses[best_flat];

    let mut search = Search {
        spec,
        evaluations: total,
    };

    // refinement bracket: the grid cell on either side of the winner
    let mut brackets: Vec<(f64, f64)> = best_idx
        .iter()
        .zip(&grids)
        .map(|(&i, g)| (g[i.saturating_sub(1)], g[(i + 1).min(g.len() - 1)]))
        .collect();

    for _ in 0..spec.refine_iters {
        for j in 0..spec.free.len() {
            let (a, b) = brackets[j];
            let c = b - INV_PHI * (b - a);
            let d = a + INV_PHI * (b - a);
            let mut probe = best.clone();
            probe[j] = c;
            let fc = search.eval(&probe)?;
            if fc < best_loss {
                best_loss = fc;
                best = probe.clone();
            }
            probe[j] = d;
            let fd = search.eval(&probe)?;
            if fd < best_loss {
                best_loss = fd;
                best = probe;
            }
            brackets[j] = if fc < fd { (a, d) } else { (c, b) };
        }
    }

    Ok(FitResult {
        best: spec.free.iter().map(|d| d.param).zip(best.iter().copied()).collect(),
        params: spec.candidate(&best),
        loss: best_loss,
        evaluations: search.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed() -> ModelParams {
        ModelParams {
            n_agents: 20,
            n_steps: 60,
            ..Default::default()
        }
    }

    fn spec_for(truth: &ModelParams, free: Vec<FreeDim>, refine_iters: usize) -> FitSpec {
        let spec = FitSpec {
            target: Trajectory {
                params_fingerprint: 0,
                run_index: 0,
                rows: vec![],
            },
            observed: OBSERVABLE.to_vec(),
            free,
            refine_iters,
            fixed: fixed(),
        };
        let target = run_simulation(&spec_truth(truth), 0).unwrap();
        FitSpec { target, ..spec }
    }

    fn spec_truth(p: &ModelParams) -> ModelParams {
        ModelParams {
            alpha_sd: 0.0,
            beta_sd: 0.0,
            gamma_sd: 0.0,
            ..p.clone()
        }
    }

    fn alpha_dim(lo: f64, hi: f64, grid_points: usize) -> FreeDim {
        FreeDim {
            param: FreeParam::AlphaBase,
            lo,
            hi,
            grid_points,
        }
    }

    #[test]
    fn grid_includes_endpoints() {
        let g = alpha_dim(0.0, 0.2, 5).grid();
        assert_eq!(g, vec![0.0, 0.05, 0.1, 0.15000000000000002, 0.2]);
    }

    #[test]
    fn self_consistent_target_has_zero_loss() {
        let spec = spec_for(&fixed(), vec![alpha_dim(0.01, 0.2, 4)], 0);
        assert!(trajectory_loss(&fixed(), &spec).unwrap() <= 1e-18);
    }

    #[test]
    fn shifted_target_loss() {
        let mut spec = spec_for(&fixed(), vec![alpha_dim(0.01, 0.2, 4)], 0);
        spec.observed = vec![Variable::Adoption];
        for row in &mut spec.target.rows {
            row.adoption += 0.1;
        }
        let loss = trajectory_loss(&fixed(), &spec).unwrap();
        let expected = 0.01 * 61.0;
        assert!((loss - expected).abs() <= 1e-12, "{loss}");
    }

    #[test]
    fn empty_observed_set_rejected() {
        let mut spec = spec_for(&fixed(), vec![alpha_dim(0.01, 0.2, 4)], 0);
        spec.observed.clear();
        assert!(matches!(
            trajectory_loss(&fixed(), &spec),
            Err(Error::InvalidParameter { name: "observed", .. })
        ));
        assert!(grid_fit(&spec).is_err());
    }

    #[test]
    fn grid_mismatch_is_shape_error() {
        let mut spec = spec_for(&fixed(), vec![alpha_dim(0.01, 0.2, 4)], 0);
        spec.target.rows.pop();
        assert!(matches!(trajectory_loss(&fixed(), &spec), Err(Error::Shape(_))));
    }

    #[test]
    fn exact_grid_hit() {
        let truth = ModelParams {
            alpha_base: 0.05,
            ..fixed()
        };
        let spec = spec_for(&truth, vec![alpha_dim(0.0, 0.2, 5)], 0);
        let fit = grid_fit(&spec).unwrap();
        assert_eq!(fit.best, vec![(FreeParam::AlphaBase, 0.05)]);
        assert_eq!(fit.loss, 0.0);
        assert_eq!(fit.evaluations, 5);
    }

    #[test]
    fn ties_go_to_smallest_vector() {
        // employment is pinned to the ceiling, so the floor has no effect
        let truth = ModelParams {
            max_supply_labor: 0.0,
            employment_floor: 0.0,
            ..fixed()
        };
        let mut spec = spec_for(&truth, vec![], 0);
        spec.fixed = truth.clone();
        spec.observed = vec![Variable::Employment];
        spec.free = vec![FreeDim {
            param: FreeParam::DemandScale,
            lo: 1.0,
            hi: 3.0,
            grid_points: 3,
        }];
        let fit = grid_fit(&spec).unwrap();
        assert_eq!(fit.best, vec![(FreeParam::DemandScale, 1.0)]);
    }

    #[test]
    fn oversized_grid_rejected() {
        let dims = [FreeParam::AlphaBase, FreeParam::BetaBase, FreeParam::Delta]
            .into_iter()
            .map(|param| FreeDim {
                param,
                lo: 0.0,
                hi: 0.1,
                grid_points: 1000,
            })
            .collect();
        let spec = spec_for(&fixed(), dims, 0);
        assert!(matches!(grid_fit(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_search_box_rejected() {
        let spec = spec_for(&fixed(), vec![alpha_dim(0.01, 2.0, 4)], 0);
        assert!(matches!(grid_fit(&spec), Err(Error::Config(_))));
        let spec = spec_for(&fixed(), vec![alpha_dim(0.2, 0.1, 4)], 0);
        assert!(grid_fit(&spec).is_err());
    }

    #[test]
    fn refinement_never_worsens_grid_winner() {
        let truth = ModelParams {
            alpha_base: 0.047,
            ..fixed()
        };
        let coarse = spec_for(&truth, vec![alpha_dim(0.01, 0.2, 6)], 0);
        let refined = FitSpec {
            refine_iters: 10,
            ..coarse.clone()
        };
        let a = grid_fit(&coarse).unwrap();
        let b = grid_fit(&refined).unwrap();
        assert!(b.loss <= a.loss);
        assert_eq!(b.evaluations, 6 + 2 * 10);
        assert_eq!(grid_fit(&refined).unwrap(), b);
    }
}
