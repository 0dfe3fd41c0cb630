use rand::RngCore;
use rayon::prelude::*;

use crate::policy::{
    sample_ode, MlpPolicy, NoiseSeed, PolicyError, Precision, QuantizedPolicy, SamplerSpec, VectorField,
};
use crate::rl::RolloutRecord;

use super::reward::{reward, RewardSpec};
use super::{PipelineConfig, PipelineError};

/// Rollouts of one context. Seeds whose solve diverged are kept aside and
/// never enter selection.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    pub context: usize,
    pub records: Vec<RolloutRecord>,
    pub diverged: Vec<NoiseSeed>,
}

impl CandidatePool {
    pub fn rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reward).collect()
    }
}

/// `n` seeds per context, drawn context by context.
pub fn draw_seeds(rng: &mut impl RngCore, contexts: &[usize], n: usize) -> Vec<Vec<NoiseSeed>> {
    contexts
        .iter()
        .map(|_| (0..n).map(|_| NoiseSeed::draw(rng)).collect())
        .collect()
}

/// Sample every seed through `field` and score it.
pub fn rollout_group<F: VectorField + ?Sized>(
    field: &F,
    context: usize,
    seeds: &[NoiseSeed],
    steps: usize,
    spec: &RewardSpec,
) -> Result<CandidatePool, PipelineError> {
    let sampler = SamplerSpec::new(steps, field.precision())?;
    let outcomes: Vec<Result<Option<RolloutRecord>, PipelineError>> = seeds
        .par_iter()
        .map(|&seed| match sample_ode(field, seed, context, &sampler) {
            Ok(traj) => {
                let x0 = traj.x0();
                let r = reward(x0, context, spec)?;
                if !r.is_finite() {
                    return Ok(None);
                }
                Ok(Some(RolloutRecord::new(
                    context,
                    seed,
                    x0,
                    r,
                    sampler.precision,
                    steps,
                )?))
            }
            Err(PolicyError::Divergence { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        })
        .collect();
    let mut pool = CandidatePool {
        context,
        records: Vec::with_capacity(seeds.len()),
        diverged: Vec::new(),
    };
    for (seed, outcome) in seeds.iter().zip(outcomes) {
        match outcome? {
            Some(r) => pool.records.push(r),
            None => pool.diverged.push(*seed),
        }
    }
    Ok(pool)
}

/// Draw `cfg.n` fresh seeds per context and roll them out through the
/// quantized mirror at `cfg.t_explore` steps.
pub fn stage1_explore(
    quantized: &QuantizedPolicy,
    cfg: &PipelineConfig,
    contexts: &[usize],
    rng: &mut impl RngCore,
    spec: &RewardSpec,
) -> Result<Vec<CandidatePool>, PipelineError> {
    if quantized.format() != cfg.format {
        return Err(PipelineError::Config(format!(
            "quantized policy is {} but the config asks for {}",
            quantized.format(),
            cfg.format
        )));
    }
    let seeds = draw_seeds(rng, contexts, cfg.n);
    contexts
        .iter()
        .zip(&seeds)
        .map(|(&c, s)| rollout_group(quantized, c, s, cfg.t_explore, spec))
        .collect()
}

/// Re-expand the selected seeds and sample them in full precision at
/// `cfg.t_full` steps.
pub fn stage2_regenerate(
    policy: &MlpPolicy,
    context: usize,
    seeds: &[NoiseSeed],
    cfg: &PipelineConfig,
    spec: &RewardSpec,
) -> Result<CandidatePool, PipelineError> {
    let pool = rollout_group(policy, context, seeds, cfg.t_full, spec)?;
    debug_assert!(pool.records.iter().all(|r| r.precision == Precision::Full));
    Ok(pool)
}
