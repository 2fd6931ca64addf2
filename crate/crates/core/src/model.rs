//! Numerical kernels for the individual, business, labor-market and
//! government equations, plus the closed-form solutions used to check them.
//!
//! Every kernel is a pure function of its arguments. Inputs are checked and
//! rejected with [`Error::InvalidParameter`] rather than silently clamped;
//! only the *result* of a state update is clamped, and then only into the
//! range the exact update is already known to occupy.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Every rate, noise width and market constant that governs one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha_base: f64,
    pub alpha_sd: f64,
    pub beta_base: f64,
    pub beta_sd: f64,
    pub gamma_base: f64,
    pub gamma_sd: f64,
    pub delta: f64,
    pub dt: f64,
    pub n_agents: usize,
    pub n_steps: usize,
    pub max_supply_labor: f64,
    pub employment_floor: f64,
    pub demand_scale: f64,
    pub e0: f64,
    pub a0: f64,
    pub r0: f64,
    pub seed: u64,
    pub n_bins: usize,
}

impl Default for ModelParams {
    /// Desk-scale defaults (1000 agents, 200 steps).
    fn default() -> Self {
        ModelParams {
            alpha_base: 0.05,
            alpha_sd: 0.01,
            beta_base: 5.0,
            beta_sd: 1.0,
            gamma_base: 0.05,
            gamma_sd: 0.01,
            delta: 0.02,
            dt: 1.0,
            n_agents: 1000,
            n_steps: 200,
            max_supply_labor: 1.0,
            employment_floor: 0.1,
            demand_scale: 20.0,
            e0: 0.01,
            a0: 0.0,
            r0: 0.0,
            seed: 42,
            n_bins: 50,
        }
    }
}

impl ModelParams {
    /// 100k agents, 1000 steps. Pair with 100 ensemble runs.
    pub fn full_scale() -> Self {
        ModelParams {
            n_agents: 100_000,
            n_steps: 1000,
            ..ModelParams::default()
        }
    }

    /// Largest per-step rate any sampled quantity can take.
    pub fn max_rate(&self) -> f64 {
        (self.alpha_base + 4.0 * self.alpha_sd)
            .max(self.gamma_base + 4.0 * self.gamma_sd)
            .max(self.delta)
    }

    /// Checks every invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("alpha_base", self.alpha_base),
            ("alpha_sd", self.alpha_sd),
            ("beta_base", self.beta_base),
            ("beta_sd", self.beta_sd),
            ("gamma_base", self.gamma_base),
            ("gamma_sd", self.gamma_sd),
            ("delta", self.delta),
            ("demand_scale", self.demand_scale),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if self.n_agents < 1 {
            return Err(Error::invalid("n_agents", "must be >= 1"));
        }
        if self.n_bins < 1 {
            return Err(Error::invalid("n_bins", "must be >= 1"));
        }
        for (name, value) in [("e0", self.e0), ("a0", self.a0), ("r0", self.r0)] {
            check_unit(name, value)?;
        }
        check_unit("max_supply_labor", self.max_supply_labor)?;
        if !(self.employment_floor >= 0.0 && self.employment_floor <= self.max_supply_labor) {
            return Err(Error::invalid(
                "employment_floor",
                format!(
                    "must lie in [0, max_supply_labor = {}], got {}",
                    self.max_supply_labor, self.employment_floor
                ),
            ));
        }
        let bound = self.dt * self.max_rate();
        if bound > 1.0 {
            return Err(Error::invalid(
                "dt",
                format!(
                    "stability bound violated: dt * max(alpha_base + 4 alpha_sd, gamma_base + 4 gamma_sd, delta) = {bound} > 1"
                ),
            ));
        }
        Ok(())
    }

    /// Stable 64-bit digest of every field, used to tag trajectories.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = Sha256::new();
        for v in [
            self.alpha_base,
            self.alpha_sd,
            self.beta_base,
            self.beta_sd,
            self.gamma_base,
            self.gamma_sd,
            self.delta,
            self.dt,
        ] {
            hasher.update(v.to_le_bytes());
        }
        hasher.update((self.n_agents as u64).to_le_bytes());
        hasher.update((self.n_steps as u64).to_le_bytes());
        for v in [
            self.max_supply_labor,
            self.employment_floor,
            self.demand_scale,
            self.e0,
            self.a0,
            self.r0,
        ] {
            hasher.update(v.to_le_bytes());
        }
        hasher.update(self.seed.to_le_bytes());
        hasher.update((self.n_bins as u64).to_le_bytes());
        let digest = hasher.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        u64::from_be_bytes(head)
    }
}

/// Aggregate state of the economy at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    pub t: f64,
    pub adoption: f64,
    pub regulation: f64,
    pub supply: f64,
    pub demand: f64,
    pub employment: f64,
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in [0, 1], got {value}")))
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}

fn check_step(rate_name: &'static str, rate: f64, dt: f64) -> Result<()> {
    check_rate(rate_name, rate)?;
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::invalid("dt", format!("must be finite and >= 0, got {dt}")));
    }
    if rate * dt > 1.0 {
        return Err(Error::invalid(
            rate_name,
            format!("{rate_name} * dt = {} exceeds 1", rate * dt),
        ));
    }
    Ok(())
}

/// Unchecked education update; callers guarantee the kernel preconditions.
#[inline(always)]
pub(crate) fn education_update(e: f64, alpha: f64, dt: f64) -> f64 {
    (e + dt * alpha * (1.0 - e)).clamp(e, 1.0)
}

/// Unchecked skill map; callers guarantee the kernel preconditions.
#[inline(always)]
pub(crate) fn skill_map(e: f64, beta: f64) -> f64 {
    2.0 / (1.0 + (-beta * e).exp()) - 1.0
}

/// One forward-Euler step of `dE/dt = alpha (1 - E)`.
pub fn education_step(e: f64, alpha: f64, dt: f64) -> Result<f64> {
    check_unit("e", e)?;
    check_step("alpha", alpha, dt)?;
    Ok(education_update(e, alpha, dt))
}

/// Closed-form education level at time `t` from `e0` at rate `alpha`.
pub fn education_exact(t: f64, e0: f64, alpha: f64) -> Result<f64> {
    check_unit("e0", e0)?;
    check_rate("alpha", alpha)?;
    check_rate("t", t)?;
    Ok(1.0 - (1.0 - e0) * (-alpha * t).exp())
}

/// Normalized sigmoid skill: `2 / (1 + exp(-beta e)) - 1`, which equals
/// `tanh(beta e / 2)`. Zero education maps to zero skill; the result stays
/// below 1 and flattens out as education grows.
pub fn skill_of(e: f64, beta: f64) -> Result<f64> {
    check_unit("e", e)?;
    check_rate("beta", beta)?;
    Ok(skill_map(e, beta))
}

/// One forward-Euler step of `dA/dt = gamma (1 - A) S`, with `S` the
/// population mean skill.
pub fn adoption_step(a: f64, s_bar: f64, gamma: f64, dt: f64) -> Result<f64> {
    check_unit("a", a)?;
    check_unit("s_bar", s_bar)?;
    check_step("gamma", gamma, dt)?;
    Ok((a + dt * gamma * (1.0 - a) * s_bar).clamp(a, 1.0))
}

/// Labor demand `demand_scale * gamma * (1 - A)`, never negative.
pub fn demand_factor(a: f64, gamma: f64, demand_scale: f64) -> Result<f64> {
    check_unit("a", a)?;
    check_rate("gamma", gamma)?;
    check_rate("demand_scale", demand_scale)?;
    Ok((demand_scale * gamma * (1.0 - a)).max(0.0))
}

/// The min-rule: employment is the least of supply, demand and the supply
/// ceiling, held up by the policy floor.
pub fn employment_level(supply: f64, demand: f64, max_supply: f64, floor: f64) -> Result<f64> {
    check_rate("supply", supply)?;
    check_rate("demand", demand)?;
    check_unit("max_supply", max_supply)?;
    if !(floor >= 0.0 && floor <= max_supply) {
        return Err(Error::invalid(
            "floor",
            format!("must lie in [0, max_supply = {max_supply}], got {floor}"),
        ));
    }
    Ok(supply.min(demand).min(max_supply).max(floor))
}

/// One forward-Euler step of `dR/dt = delta (A - R)`.
///
/// With `delta * dt <= 1` the exact update is a convex combination of `r`
/// and `a`, so the result is pinned to the interval between them.
pub fn regulation_step(r: f64, a: f64, delta: f64, dt: f64) -> Result<f64> {
    check_unit("r", r)?;
    check_unit("a", a)?;
    check_step("delta", delta, dt)?;
    Ok((r + dt * delta * (a - r)).clamp(r.min(a), r.max(a)))
}

/// Closed-form regulation level for a frozen adoption level `a_const`.
pub fn regulation_exact(t: f64, r0: f64, a_const: f64, delta: f64) -> Result<f64> {
    check_unit("r0", r0)?;
    check_unit("a_const", a_const)?;
    check_rate("delta", delta)?;
    check_rate("t", t)?;
    Ok(a_const + (r0 - a_const) * (-delta * t).exp())
}
