//! Toy conditional flow-matching policy over 2-D points.
//!
//! The vector field is an MLP; sampling integrates it with Euler steps from
//! t = 1 (noise) to t = 0 (sample) along the linear interpolant
//! `x_t = (1 - t) x0 + t z`. The same network can be run from an FP4
//! quantized mirror.

pub mod checkpoint;
mod mlp;
mod noise;
mod quantized;
mod sampler;

use std::fmt;
use std::str::FromStr;

use crate::fp4::{CodecError, Fp4Format};

pub use mlp::{fm_loss_and_grad, time_embedding, Activation, MlpPolicy, PolicyShape, SAMPLE_DIM, TIME_EMBED_DIM};
pub use noise::{mix64, NoiseSeed};
pub use quantized::{quantize_policy, QuantizedPolicy};
pub use sampler::{sample_ode, SamplerSpec, Trajectory};

/// Numeric precision a rollout was generated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Full,
    Nvfp4,
    Mxfp4,
}

impl Precision {
    pub fn format(self) -> Option<Fp4Format> {
        match self {
            Precision::Full => None,
            Precision::Nvfp4 => Some(Fp4Format::Nvfp4),
            Precision::Mxfp4 => Some(Fp4Format::Mxfp4),
        }
    }

    pub fn is_quantized(self) -> bool {
        self != Precision::Full
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Full => "full",
            Precision::Nvfp4 => "nvfp4",
            Precision::Mxfp4 => "mxfp4",
        }
    }
}

impl From<Fp4Format> for Precision {
    fn from(f: Fp4Format) -> Self {
        match f {
            Fp4Format::Nvfp4 => Precision::Nvfp4,
            Fp4Format::Mxfp4 => Precision::Mxfp4,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Precision::Full),
            "nvfp4" => Ok(Precision::Nvfp4),
            "mxfp4" => Ok(Precision::Mxfp4),
            other => Err(PolicyError::InvalidSpec(format!("unknown precision `{other}`"))),
        }
    }
}

/// Anything that can be integrated by the sampler.
pub trait VectorField: Sync {
    fn velocity(&self, x: [f64; 2], t: f64, context: usize) -> Result<[f64; 2], PolicyError>;
    fn precision(&self) -> Precision;
}

/// One-off velocity evaluation at the requested precision. Quantizes the
/// policy on every call; build a [`QuantizedPolicy`] for repeated use.
pub fn velocity(
    policy: &MlpPolicy,
    x: [f64; 2],
    t: f64,
    context: usize,
    precision: Precision,
) -> Result<[f64; 2], PolicyError> {
    match precision.format() {
        None => policy.velocity(x, t, context),
        Some(format) => quantize_policy(policy, format, true)?.velocity(x, t, context),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("context {context} is not registered (policy has {registered})")]
    UnknownContext { context: usize, registered: usize },
    #[error("sampler state became non-finite at step {step}")]
    Divergence { step: usize },
    #[error("field precision {field} does not match sampler precision {spec}")]
    PrecisionMismatch { field: Precision, spec: Precision },
    #[error("t_batch must not be empty")]
    EmptyTimeBatch,
    #[error("training time {0} is outside (0, 1)")]
    TimeOutOfRange(f64),
    #[error("policy parameters are not finite")]
    NonFiniteParameters,
    #[error("invalid policy spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("checkpoint line {line}: {reason}")]
    Checkpoint { line: usize, reason: String },
    #[error("i/o: {0}")]
    Io(String),
}
