//! The individual agents: per-agent education, derived skill and sampled
//! rates, stored as parallel arrays.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{education_update, skill_map, ModelParams};
use crate::reduce::{block_sum, combine, pairwise_mean, BLOCK};

/// Pools at or below this size are stepped on the calling thread.
const PARALLEL_MIN_AGENTS: usize = 8 * BLOCK;

/// Draws from `Normal(mean, sd)` truncated to `[0, mean + 4 sd]` by
/// rejection. A zero width returns `mean` without touching the generator.
pub fn sample_truncated<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> Result<f64> {
    if sd == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(mean, sd).map_err(|e| Error::invalid("sd", format!("bad normal({mean}, {sd}): {e}")))?;
    let upper = mean + 4.0 * sd;
    loop {
        let x = normal.sample(rng);
        if (0.0..=upper).contains(&x) {
            return Ok(x);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPool {
    education: Vec<f64>,
    skill: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    max_alpha: f64,
}

/// Sums of education and skill over the pool after a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolSums {
    pub education: f64,
    pub skill: f64,
}

/// Equal-width histogram estimate of the skill density on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillDistribution {
    pub bin_edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl SkillDistribution {
    pub fn bin_widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.bin_edges.windows(2).map(|w| w[1] - w[0])
    }

    /// `sum density_i * width_i`; one up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.density.iter().zip(self.bin_widths()).map(|(d, w)| d * w).sum()
    }

    /// Midpoint-rule estimate of the mean skill `integral S f(S) dS`.
    pub fn midpoint_mean(&self) -> f64 {
        self.bin_edges
            .windows(2)
            .zip(&self.density)
            .map(|(w, d)| 0.5 * (w[0] + w[1]) * d * (w[1] - w[0]))
            .sum()
    }
}

impl AgentPool {
    /// Builds a pool from explicit per-agent state; skills are derived.
    pub fn from_parts(education: Vec<f64>, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let n = education.len();
        if n == 0 {
            return Err(Error::invalid("n_agents", "pool must hold at least one agent"));
        }
        if alpha.len() != n || beta.len() != n {
            return Err(Error::Shape(format!(
                "education/alpha/beta lengths differ: {n}/{}/{}",
                alpha.len(),
                beta.len()
            )));
        }
        if let Some(e) = education.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::invalid("education", format!("must lie in [0, 1], got {e}")));
        }
        for (name, rates) in [("alpha", &alpha), ("beta", &beta)] {
            if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {r}")));
            }
        }
        let skill = education.iter().zip(&beta).map(|(&e, &b)| skill_map(e, b)).collect();
        let max_alpha = alpha.iter().copied().fold(0.0, f64::max);
        Ok(AgentPool {
            education,
            skill,
            alpha,
            beta,
            max_alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.education.len()
    }

    pub fn is_empty(&self) -> bool {
        self.education.is_empty()
    }

    pub fn education(&self) -> &[f64] {
        &self.education
    }

    pub fn skill(&self) -> &[f64] {
        &self.skill
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Advances every agent by one Euler step of size `dt` and returns the
    /// pairwise sums of the new education and skill arrays.
    pub fn step(&mut self, dt: f64) -> Result<PoolSums> {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::invalid("dt", format!("must be finite and >= 0, got {dt}")));
        }
        if self.max_alpha * dt > 1.0 {
            return Err(Error::invalid(
                "alpha",
                format!("alpha * dt = {} exceeds 1", self.max_alpha * dt),
            ));
        }

        let partials: Vec<(f64, f64)> = if self.len() <= PARALLEL_MIN_AGENTS {
            self.education
                .chunks_mut(BLOCK)
                .zip(self.skill.chunks_mut(BLOCK))
                .zip(self.alpha.chunks(BLOCK).zip(self.beta.chunks(BLOCK)))
                .map(|((e, s), (a, b))| step_block(e, s, a, b, dt))
                .collect()
        } else {
            self.education
                .par_chunks_mut(BLOCK)
                .zip(self.skill.par_chunks_mut(BLOCK))
                .zip(self.alpha.par_chunks(BLOCK).zip(self.beta.par_chunks(BLOCK)))
                .map(|((e, s), (a, b))| step_block(e, s, a, b, dt))
                .collect()
        };

        let (edu, skill): (Vec<f64>, Vec<f64>) = partials.into_iter().unzip();
        Ok(PoolSums {
            education: combine(&edu),
            skill: combine(&skill),
        })
    }

    pub fn sums(&self) -> PoolSums {
        let edu: Vec<f64> = self.education.chunks(BLOCK).map(block_sum).collect();
        let skill: Vec<f64> = self.skill.chunks(BLOCK).map(block_sum).collect();
        PoolSums {
            education: combine(&edu),
            skill: combine(&skill),
        }
    }
}

/// Fused update and left-to-right block sums for one block of agents.
#[inline]
fn step_block(edu: &mut [f64], skill: &mut [f64], alpha: &[f64], beta: &[f64], dt: f64) -> (f64, f64) {
    for (e, &a) in edu.iter_mut().zip(alpha) {
        *e = education_update(*e, a, dt);
    }
    for ((s, &e), &b) in skill.iter_mut().zip(edu.iter()).zip(beta) {
        *s = skill_map(e, b);
    }
    let edu_sum = block_sum(edu);
    let skill_sum = block_sum(skill);
    (edu_sum, skill_sum)
}

/// Samples a fresh pool: per-agent `alpha` then `beta` from truncated
/// normals, in ascending agent order, every agent starting at `e0`.
pub fn init_population<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<AgentPool> {
    if params.n_agents == 0 {
        return Err(Error::invalid("n_agents", "must be >= 1"));
    }
    params.validate()?;
    let n = params.n_agents;
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for _ in 0..n {
        alpha.push(sample_truncated(rng, params.alpha_base, params.alpha_sd)?);
        beta.push(sample_truncated(rng, params.beta_base, params.beta_sd)?);
    }
    AgentPool::from_parts(vec![params.e0; n], alpha, beta)
}

/// Advances `pool` one step; the functional form of [`AgentPool::step`].
pub fn step_agents(mut pool: AgentPool, dt: f64) -> Result<AgentPool> {
    pool.step(dt)?;
    Ok(pool)
}

/// Mean skill of the pool by fixed-order pairwise summation.
pub fn mean_skill(pool: &AgentPool) -> Result<f64> {
    pairwise_mean(pool.skill()).ok_or_else(|| Error::invalid("pool", "empty pool"))
}

/// Mean education of the pool by fixed-order pairwise summation.
pub fn mean_education(pool: &AgentPool) -> Result<f64> {
    pairwise_mean(pool.education()).ok_or_else(|| Error::invalid("pool", "empty pool"))
}

/// Equal-width histogram of skills on `[0, 1]`, normalized to unit mass.
/// A skill of exactly 1.0 lands in the last bin.
pub fn skill_pdf(pool: &AgentPool, n_bins: usize) -> Result<SkillDistribution> {
    skill_pdf_of(pool.skill(), n_bins)
}

pub(crate) fn skill_pdf_of(skills: &[f64], n_bins: usize) -> Result<SkillDistribution> {
    if n_bins == 0 {
        return Err(Error::invalid("n_bins", "must be >= 1"));
    }
    if skills.is_empty() {
        return Err(Error::invalid("pool", "empty pool"));
    }
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect();
    let mut counts = vec![0u64; n_bins];
    for &s in skills {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::invalid("skill", format!("must lie in [0, 1], got {s}")));
        }
        let idx = ((s * n_bins as f64) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    let total = skills.len() as f64;
    let density = counts
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(&c, w)| c as f64 / (total * (w[1] - w[0])))
        .collect();
    Ok(SkillDistribution { bin_edges, density })
}
