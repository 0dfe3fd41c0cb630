use std::fmt;
use std::str::FromStr;

use super::RlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    AdamW,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::AdamW => "adamw",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = RlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adamw" => Ok(OptimizerKind::AdamW),
            other => Err(RlError::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Optimizer state carried across updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, num_params: usize) -> Self {
        let n = if kind == OptimizerKind::AdamW { num_params } else { 0 };
        Optimizer {
            kind,
            m: vec![0.0; n],
            v: vec![0.0; n],
            steps: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Parameter delta for `grad`, advancing the moment estimates. Weight
    /// decay is decoupled and only applies to AdamW.
    pub fn delta(&mut self, params: &[f64], grad: &[f64], lr: f64, weight_decay: f64) -> Vec<f64> {
        self.steps += 1;
        match self.kind {
            OptimizerKind::Sgd => grad.iter().map(|g| -lr * g).collect(),
            OptimizerKind::AdamW => {
                let t = self.steps as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                let mut out = Vec::with_capacity(grad.len());
                for i in 0..grad.len() {
                    let g = grad[i];
                    self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
                    self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
                    let step = (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + ADAM_EPS);
                    out.push(-lr * (step + weight_decay * params[i]));
                }
                out
            }
        }
    }
}
