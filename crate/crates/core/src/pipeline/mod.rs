//! Training loop: quantized exploration over a large seed pool, contrastive
//! selection, full-precision regeneration of the chosen seeds, and the policy
//! update. Two baselines share the same loop: every rollout in full
//! precision, and training directly on the quantized samples.

mod config;
mod eval;
mod reward;
mod run;
mod stages;
mod state;

use crate::fp4::CodecError;
use crate::policy::PolicyError;
use crate::rl::RlError;

pub use config::{Mode, PipelineConfig};
pub use eval::{evaluate, EvalSpec, EVAL_ROOT};
pub use reward::{reward, ContextTarget, RewardKind, RewardSpec};
pub use run::{run_training, RunOptions, RunSummary, METRICS_HEADER};
pub use stages::{draw_seeds, rollout_group, stage1_explore, stage2_regenerate, CandidatePool};
pub use state::{GroupTrace, IterationMetrics, PipelineState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("context {context} is not registered (reward has {registered})")]
    UnknownContext { context: usize, registered: usize },
    #[error("numeric divergence: {0}")]
    Divergence(String),
    #[error(transparent)]
    Policy(PolicyError),
    #[error(transparent)]
    Rl(RlError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("i/o: {0}")]
    Io(String),
}

impl PipelineError {
    pub fn is_divergence(&self) -> bool {
        matches!(self, PipelineError::Divergence(_))
    }
}

impl From<PolicyError> for PipelineError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Divergence { .. } | PolicyError::NonFiniteParameters => {
                PipelineError::Divergence(e.to_string())
            }
            PolicyError::InvalidSpec(s) => PipelineError::Config(s),
            other => PipelineError::Policy(other),
        }
    }
}

impl From<RlError> for PipelineError {
    fn from(e: RlError) -> Self {
        match e {
            RlError::NonFinite(_) => PipelineError::Divergence(e.to_string()),
            RlError::Config(s) => PipelineError::Config(s),
            RlError::Policy(p) => p.into(),
            other => PipelineError::Rl(other),
        }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}
