//! First-order convergence of the stepped kernels against their
//! closed-form solutions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{education_exact, education_step, regulation_exact, regulation_step, ModelParams};

/// Accepted range for the error ratio between successive halvings of dt.
pub const RATIO_RANGE: (f64, f64) = (1.8, 2.2);

/// Timesteps used by [`convergence_suite`].
pub const DEFAULT_DTS: [f64; 3] = [1.0, 0.5, 0.25];

/// Horizon, in units of `1 / rate`, over which errors are measured.
pub const HORIZON_RATE_UNITS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub name: &'static str,
    pub rate: f64,
    pub horizon: f64,
    pub dts: Vec<f64>,
    pub max_errors: Vec<f64>,
    /// `max_errors[i] / max_errors[i + 1]`.
    pub ratios: Vec<f64>,
    pub passed: bool,
}

fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::invalid(
            "horizon",
            format!("must be finite and >= 0, got {horizon}"),
        ));
    }
    Ok((horizon / dt).round() as usize)
}

/// Largest |Euler - exact| for education over `[0, horizon]`.
pub fn education_max_error(alpha: f64, e0: f64, dt: f64, horizon: f64) -> Result<f64> {
    let n = steps_for(horizon, dt)?;
    let mut e = e0;
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        e = education_step(e, alpha, dt)?;
        worst = worst.max((e - education_exact(k as f64 * dt, e0, alpha)?).abs());
    }
    Ok(worst)
}

/// Largest |Euler - exact| for regulation tracking a frozen adoption level.
pub fn regulation_max_error(delta: f64, r0: f64, a_const: f64, dt: f64, horizon: f64) -> Result<f64> {
    let n = steps_for(horizon, dt)?;
    let mut r = r0;
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        r = regulation_step(r, a_const, delta, dt)?;
        worst = worst.max((r - regulation_exact(k as f64 * dt, r0, a_const, delta)?).abs());
    }
    Ok(worst)
}

fn report(
    name: &'static str,
    rate: f64,
    horizon: f64,
    dts: &[f64],
    error_at: impl Fn(f64) -> Result<f64>,
) -> Result<ConvergenceReport> {
    let max_errors = dts.iter().map(|&dt| error_at(dt)).collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = max_errors.windows(2).map(|w| w[0] / w[1]).collect();
    let within_bound = dts.iter().zip(&max_errors).all(|(dt, err)| *err <= 0.5 * rate * dt);
    let ratios_ok = ratios.iter().all(|r| (RATIO_RANGE.0..=RATIO_RANGE.1).contains(r));
    Ok(ConvergenceReport {
        name,
        rate,
        horizon,
        dts: dts.to_vec(),
        max_errors,
        ratios,
        passed: within_bound && ratios_ok,
    })
}

pub fn education_convergence(alpha: f64, e0: f64, dts: &[f64], horizon: f64) -> Result<ConvergenceReport> {
    report("education", alpha, horizon, dts, |dt| {
        education_max_error(alpha, e0, dt, horizon)
    })
}

pub fn regulation_convergence(
    delta: f64,
    r0: f64,
    a_const: f64,
    dts: &[f64],
    horizon: f64,
) -> Result<ConvergenceReport> {
    report("regulation", delta, horizon, dts, |dt| {
        regulation_max_error(delta, r0, a_const, dt, horizon)
    })
}

/// Education at `alpha_base` from `e0`, and regulation at `delta` from `r0`
/// toward a frozen adoption of 1 (or 0 when `r0 >= 0.5`), each measured
/// over five time constants. Rates must be positive.
pub fn convergence_suite(params: &ModelParams, dts: &[f64]) -> Result<Vec<ConvergenceReport>> {
    if dts.len() < 2 {
        return Err(Error::invalid("dts", "need at least two timesteps"));
    }
    for (name, rate) in [("alpha_base", params.alpha_base), ("delta", params.delta)] {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::invalid(name, "convergence checks need a positive rate"));
        }
    }
    let a_const = if params.r0 < 0.5 { 1.0 } else { 0.0 };
    Ok(vec![
        education_convergence(
            params.alpha_base,
            params.e0,
            dts,
            HORIZON_RATE_UNITS / params.alpha_base,
        )?,
        regulation_convergence(params.delta, params.r0, a_const, dts, HORIZON_RATE_UNITS / params.delta)?,
    ])
}
