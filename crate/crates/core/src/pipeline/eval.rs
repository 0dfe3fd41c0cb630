use rayon::prelude::*;

use crate::policy::{sample_ode, MlpPolicy, NoiseSeed, Precision, SamplerSpec};

use super::reward::{reward, RewardSpec};
use super::PipelineError;

/// Root key of the evaluation seed set; independent of any run seed.
pub const EVAL_ROOT: u64 = 0x5eed_e7a1_0000_0001;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSpec {
    pub seeds: Vec<NoiseSeed>,
    pub steps: usize,
}

impl EvalSpec {
    /// The fixed set of `count` seeds shared by every run.
    pub fn fixed(count: usize, steps: usize) -> Self {
        EvalSpec {
            seeds: (0..count as u64).map(|j| NoiseSeed(EVAL_ROOT).derive(j)).collect(),
            steps,
        }
    }
}

/// Mean full-precision reward over every (context, seed) pair.
pub fn evaluate(policy: &MlpPolicy, spec: &RewardSpec, eval: &EvalSpec) -> Result<f64, PipelineError> {
    let sampler = SamplerSpec::new(eval.steps, Precision::Full)?;
    if eval.seeds.is_empty() {
        return Err(PipelineError::Config("evaluation needs at least one seed".into()));
    }
    let contexts = spec.num_contexts();
    let rewards: Vec<f64> = (0..contexts * eval.seeds.len())
        .into_par_iter()
        .map(|i| {
            let (c, s) = (i / eval.seeds.len(), eval.seeds[i % eval.seeds.len()]);
            let x0 = sample_ode(policy, s, c, &sampler)?.x0();
            reward(x0, c, spec)
        })
        .collect::<Result<_, _>>()?;
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    if !mean.is_finite() {
        return Err(PipelineError::Divergence(format!("evaluation reward is {mean}")));
    }
    Ok(mean)
}
