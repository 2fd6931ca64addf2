//! Ensemble statistics and qualitative trajectory-shape checks.

use serde::Serialize;

use crate::engine::{Trajectory, Variable};
use crate::error::{Error, Result};
use crate::model::{skill_of, ModelParams};
use crate::reduce::pairwise_sum;

/// Fraction of the asymptote that counts as saturated.
pub const SATURATION_FRACTION: f64 = 0.95;
/// Largest per-step employment change still considered stable.
pub const STABLE_STEP: f64 = 1e-4;
/// Fraction of the run, at the end, over which employment must be stable.
pub const STABLE_WINDOW: f64 = 0.10;
/// Distance from the configured floor still counted as "at the floor".
pub const FLOOR_TOL: f64 = 1e-9;
/// Slack allowed when comparing regulation against adoption.
pub const LAG_TOL: f64 = 1e-12;

/// Per-timestep statistics of one variable across runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    /// Population standard deviation (divisor `n`).
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub median: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n_runs: usize,
    pub t: Vec<f64>,
    /// Indexed in [`Variable::ALL`] order.
    pub series: Vec<SeriesStats>,
}

impl EnsembleSummary {
    pub fn get(&self, var: Variable) -> &SeriesStats {
        &self.series[var as usize]
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Exact per-timestep statistics over runs.
///
/// Values at each timestep are sorted before reduction, so the result is
/// independent of the order of `trajectories`.
pub fn summarize(trajectories: &[Trajectory]) -> Result<EnsembleSummary> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::invalid("trajectories", "need at least one trajectory"))?;
    let t = first.times();
    for traj in &trajectories[1..] {
        if traj.rows.len() != t.len() || traj.rows.iter().zip(&t).any(|(r, &t)| r.t != t) {
            return Err(Error::Shape(format!(
                "run {} does not share the time grid of run {}",
                traj.run_index, first.run_index
            )));
        }
    }

    let n = trajectories.len();
    let mut series = Vec::with_capacity(Variable::ALL.len());
    let mut values = vec![0.0; n];
    for var in Variable::ALL {
        let mut stats = SeriesStats {
            mean: Vec::with_capacity(t.len()),
            std: Vec::with_capacity(t.len()),
            min: Vec::with_capacity(t.len()),
            max: Vec::with_capacity(t.len()),
            median: Vec::with_capacity(t.len()),
        };
        for k in 0..t.len() {
            for (slot, traj) in values.iter_mut().zip(trajectories) {
                *slot = traj.rows[k].get(var);
            }
            values.sort_by(f64::total_cmp);
            let (lo, hi) = (values[0], values[n - 1]);
            // the exact mean lies in [lo, hi]; clamp away rounding
            let mean = (pairwise_sum(&values) / n as f64).clamp(lo, hi);
            let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
            let std = (pairwise_sum(&sq) / n as f64).sqrt();
            let median = if n % 2 == 1 {
                values[n / 2]
            } else {
                0.5 * (values[n / 2 - 1] + values[n / 2])
            };
            stats.mean.push(mean);
            stats.std.push(std);
            stats.min.push(lo);
            stats.max.push(hi);
            stats.median.push(median);
        }
        series.push(stats);
    }
    Ok(EnsembleSummary { n_runs: n, t, series })
}

/// First time at which `values` reaches `threshold` (inclusive).
pub fn saturation_time(t: &[f64], values: &[f64], threshold: f64) -> Result<Option<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("series", "empty series"));
    }
    if t.len() != values.len() {
        return Err(Error::Shape(format!("{} times for {} values", t.len(), values.len())));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(
            "threshold",
            format!("must lie in (0, 1), got {threshold}"),
        ));
    }
    Ok(values.iter().position(|&v| v >= threshold).map(|k| t[k]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Education and skills reach 95% of their asymptotes before the end.
    Saturation,
    /// Adoption never decreases.
    AdoptionMonotone,
    /// Regulation rises and stays at or below adoption.
    RegulationTracking,
    /// Employment falls from its peak and settles on the floor.
    EmploymentFloor,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Saturation => "saturation",
            CheckKind::AdoptionMonotone => "adoption_monotone",
            CheckKind::RegulationTracking => "regulation_tracking",
            CheckKind::EmploymentFloor => "employment_floor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: &'static str,
    /// `None` when the quantity does not exist (e.g. never saturated).
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeCheck {
    pub kind: CheckKind,
    pub passed: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl ShapeCheck {
    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|d| d.name == name).and_then(|d| d.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub checks: Vec<ShapeCheck>,
}

impl ShapeReport {
    pub fn get(&self, kind: CheckKind) -> &ShapeCheck {
        self.checks
            .iter()
            .find(|c| c.kind == kind)
            .expect("every check kind is reported")
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn diag(name: &'static str, value: Option<f64>) -> Diagnostic {
    Diagnostic { name, value }
}

/// Expected skill of a fully educated agent: `E[tanh(beta / 2)]` with beta
/// drawn from the truncated normal used by the population.
pub fn skill_asymptote(params: &ModelParams) -> f64 {
    let (mu, sd) = (params.beta_base, params.beta_sd);
    if sd == 0.0 {
        return skill_of(1.0, mu).unwrap_or(0.0);
    }
    // composite Simpson over the truncation interval [0, mu + 4 sd]
    const INTERVALS: usize = 4000;
    let upper = mu + 4.0 * sd;
    let h = upper / INTERVALS as f64;
    let (mut mass, mut moment) = (0.0, 0.0);
    for i in 0..=INTERVALS {
        let b = i as f64 * h;
        let w = match i {
            0 | INTERVALS => 1.0,
            i if i % 2 == 1 => 4.0,
            _ => 2.0,
        };
        let z = (b - mu) / sd;
        let pdf = (-0.5 * z * z).exp();
        mass += w * pdf;
        moment += w * pdf * (0.5 * b).tanh();
    }
    moment / mass
}

fn max_decrease(series: &[f64]) -> f64 {
    series.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

fn saturation_level(t: &[f64], values: &[f64], level: f64) -> Option<f64> {
    if level <= 0.0 {
        return t.first().copied();
    }
    values.iter().position(|&v| v >= level).map(|k| t[k])
}

/// Evaluates the four qualitative shape claims on the ensemble means.
pub fn shape_check(summary: &EnsembleSummary, params: &ModelParams) -> ShapeReport {
    let t = &summary.t;
    let t_end = t.last().copied().unwrap_or(0.0);
    let mean = |var| summary.get(var).mean.as_slice();

    // (1) education and skills saturate
    let edu_level = SATURATION_FRACTION;
    let skill_level = SATURATION_FRACTION * skill_asymptote(params);
    let edu_time = saturation_level(t, mean(Variable::EducationMean), edu_level);
    let skill_time = saturation_level(t, mean(Variable::SkillMean), skill_level);
    let before_end = |time: Option<f64>| time.is_some_and(|s| s < t_end);
    let saturation = ShapeCheck {
        kind: CheckKind::Saturation,
        passed: before_end(edu_time) && before_end(skill_time),
        diagnostics: vec![
            diag("education_saturation_time", edu_time),
            diag("skill_saturation_time", skill_time),
            diag("skill_saturation_level", Some(skill_level)),
        ],
    };

    // (2) adoption monotone
    let adoption = mean(Variable::Adoption);
    let adoption_drop = max_decrease(adoption);
    let adoption_check = ShapeCheck {
        kind: CheckKind::AdoptionMonotone,
        passed: !adoption.is_empty() && adoption_drop == 0.0,
        diagnostics: vec![
            diag("max_decrease", Some(adoption_drop)),
            diag("net_change", adoption.last().zip(adoption.first()).map(|(b, a)| b - a)),
        ],
    };

    // (3) regulation increasing and lagging adoption
    let regulation = mean(Variable::Regulation);
    let reg_drop = max_decrease(regulation);
    let reg_net = regulation.last().zip(regulation.first()).map(|(b, a)| b - a);
    let lag_violation = regulation
        .iter()
        .zip(adoption)
        .map(|(r, a)| r - a)
        .fold(f64::NEG_INFINITY, f64::max);
    let regulation_check = ShapeCheck {
        kind: CheckKind::RegulationTracking,
        passed: reg_drop == 0.0 && reg_net.is_some_and(|d| d > 0.0) && lag_violation <= LAG_TOL,
        diagnostics: vec![
            diag("max_decrease", Some(reg_drop)),
            diag("net_change", reg_net),
            diag("max_lag_violation", lag_violation.is_finite().then_some(lag_violation)),
        ],
    };

    // (4) employment declines, then stabilizes at the floor
    let employment = mean(Variable::Employment);
    let n_steps = employment.len().saturating_sub(1);
    let window = (STABLE_WINDOW * n_steps as f64).ceil() as usize;
    let window_start = n_steps - window.min(n_steps);
    let final_step_change = employment[window_start..]
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let (peak_index, peak) =
        employment.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, v)| if v > best.1 { (i, v) } else { best },
        );
    let final_level = employment.last().copied().unwrap_or(f64::NAN);
    let declined = n_steps > 0 && peak_index < window_start && peak - final_level > STABLE_STEP;
    let stabilized = final_step_change <= STABLE_STEP;
    let at_floor = (final_level - params.employment_floor).abs() <= FLOOR_TOL;
    let employment_check = ShapeCheck {
        kind: CheckKind::EmploymentFloor,
        passed: declined && stabilized && at_floor,
        diagnostics: vec![
            diag("initial", employment.first().copied()),
            diag("peak", peak.is_finite().then_some(peak)),
            diag("peak_time", t.get(peak_index).copied()),
            diag("final", Some(final_level)),
            diag("floor", Some(params.employment_floor)),
            diag("max_final_step_change", Some(final_step_change)),
        ],
    };

    ShapeReport {
        checks: vec![saturation, adoption_check, regulation_check, employment_check],
    }
}
