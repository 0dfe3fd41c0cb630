//! Critic-free group-relative policy optimization pieces: per-group
//! advantages, contrastive subset selection, the clipped surrogate as a scalar
//! function, and the advantage-weighted flow-matching update used for training.

mod advantage;
mod objective;
mod optimizer;
mod selection;
mod update;

use crate::policy::{NoiseSeed, PolicyError, Precision};

pub use advantage::{group_advantages, AdvantageSet, DEGENERATE_SIGMA};
pub use objective::grpo_clipped_objective;
pub use optimizer::{Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use selection::{select_contrastive, select_contrastive_indices};
pub use update::{awfm_update, StepMetrics, TrainGroup, TrainerConfig, TrainerState};

/// One generated sample with the reward it was scored at.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutRecord {
    pub context: usize,
    pub seed: NoiseSeed,
    pub x0: [f64; 2],
    pub reward: f64,
    pub precision: Precision,
    pub steps: usize,
}

impl RolloutRecord {
    pub fn new(
        context: usize,
        seed: NoiseSeed,
        x0: [f64; 2],
        reward: f64,
        precision: Precision,
        steps: usize,
    ) -> Result<Self, RlError> {
        if !reward.is_finite() {
            return Err(RlError::NonFinite(reward));
        }
        if steps == 0 {
            return Err(RlError::Config("rollout steps must be at least 1".into()));
        }
        Ok(RolloutRecord {
            context,
            seed,
            x0,
            reward,
            precision,
            steps,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
