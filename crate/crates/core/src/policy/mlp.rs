use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{NoiseSeed, PolicyError, Precision, VectorField};
use crate::fp4::dot;

/// Point dimension of the toy task.
pub const SAMPLE_DIM: usize = 2;
/// Sinusoidal time features: sin/cos of `pi t` and `2 pi t`.
pub const TIME_EMBED_DIM: usize = 4;

pub fn time_embedding(t: f64) -> [f64; TIME_EMBED_DIM] {
    [
        (PI * t).sin(),
        (PI * t).cos(),
        (2.0 * PI * t).sin(),
        (2.0 * PI * t).cos(),
    ]
}

/// `0.5 * (1 + tanh(u))` for the GELU argument `u`, written as a logistic
/// so it costs one `exp`.
fn gelu_gate(x: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * GELU_C * (x + GELU_A * x * x * x)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// tanh-approximated GELU.
    Gelu,
    Silu,
    Tanh,
    /// No nonlinearity; turns the MLP into an affine map.
    Identity,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => x * gelu_gate(x),
            Activation::Silu => x / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => {
                let gate = gelu_gate(x);
                let th = 2.0 * gate - 1.0;
                gate + 0.5 * x * (1.0 - th * th) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
            }
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 + x * (1.0 - s))
            }
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Gelu => "gelu",
            Activation::Silu => "silu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gelu" => Ok(Activation::Gelu),
            "silu" => Ok(Activation::Silu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(PolicyError::InvalidSpec(format!("unknown activation `{other}`"))),
        }
    }
}

/// Architecture of a policy network.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyShape {
    pub hidden: Vec<usize>,
    pub num_contexts: usize,
    pub context_dim: usize,
    pub activation: Activation,
}

impl Default for PolicyShape {
    fn default() -> Self {
        PolicyShape {
            hidden: vec![64, 64],
            num_contexts: 8,
            context_dim: 4,
            activation: Activation::Gelu,
        }
    }
}

impl PolicyShape {
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![SAMPLE_DIM + TIME_EMBED_DIM + self.context_dim];
        dims.extend(&self.hidden);
        dims.push(SAMPLE_DIM);
        dims
    }
}

/// Conditional vector field `v(x, t, c)` as an MLP over
/// `[x, time_embedding(t), context_table[c]]`.
///
/// All parameters live in one flat vector: for each layer the row-major
/// `[out, in]` weight followed by the bias, then the context table.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPolicy {
    dims: Vec<usize>,
    activation: Activation,
    num_contexts: usize,
    context_dim: usize,
    params: Vec<f64>,
}

/// Per-call activations kept for backpropagation.
struct ForwardCache {
    /// Inputs to each layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each hidden layer.
    pre: Vec<Vec<f64>>,
    output: [f64; 2],
}

impl MlpPolicy {
    /// He-initialized hidden layers, zero final layer (so `v == 0` at init)
    /// and a standard-normal context table.
    pub fn new(shape: &PolicyShape, rng: &mut impl Rng) -> Result<Self, PolicyError> {
        let mut policy = Self::zeros(shape)?;
        let n_layers = policy.num_layers();
        for l in 0..n_layers - 1 {
            let fan_in = policy.dims[l];
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            let (w, _) = policy.layer_range(l);
            for p in &mut policy.params[w] {
                *p = normal.sample(rng);
            }
        }
        let start = policy.context_offset();
        for p in &mut policy.params[start..] {
            *p = rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        Ok(policy)
    }

    pub fn zeros(shape: &PolicyShape) -> Result<Self, PolicyError> {
        if shape.num_contexts == 0 {
            return Err(PolicyError::InvalidSpec("need at least one context".into()));
        }
        if shape.hidden.contains(&0) {
            return Err(PolicyError::InvalidSpec("hidden widths must be positive".into()));
        }
        let dims = shape.layer_dims();
        Self::from_parts(
            dims.clone(),
            shape.activation,
            shape.num_contexts,
            shape.context_dim,
            vec![0.0; param_count(&dims, shape.num_contexts, shape.context_dim)],
        )
    }

    pub fn from_parts(
        dims: Vec<usize>,
        activation: Activation,
        num_contexts: usize,
        context_dim: usize,
        params: Vec<f64>,
    ) -> Result<Self, PolicyError> {
        if dims.len() < 2 || dims[0] != SAMPLE_DIM + TIME_EMBED_DIM + context_dim || *dims.last().unwrap() != SAMPLE_DIM
        {
            return Err(PolicyError::InvalidSpec(format!(
                "layer dims {dims:?} do not chain from {} inputs to {SAMPLE_DIM} outputs",
                SAMPLE_DIM + TIME_EMBED_DIM + context_dim
            )));
        }
        let expected = param_count(&dims, num_contexts, context_dim);
        if params.len() != expected {
            return Err(PolicyError::InvalidSpec(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(PolicyError::NonFiniteParameters);
        }
        Ok(MlpPolicy {
            dims,
            activation,
            num_contexts,
            context_dim,
            params,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn num_contexts(&self) -> usize {
        self.num_contexts
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Flat index ranges `(weight, bias)` of layer `l`.
    pub fn layer_range(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let mut off = 0;
        for k in 0..l {
            off += self.dims[k + 1] * (self.dims[k] + 1);
        }
        let w = self.dims[l + 1] * self.dims[l];
        (off..off + w, off + w..off + w + self.dims[l + 1])
    }

    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (w, b) = self.layer_range(l);
        (&self.params[w], &self.params[b])
    }

    pub fn context_offset(&self) -> usize {
        self.params.len() - self.num_contexts * self.context_dim
    }

    pub fn context_embedding(&self, context: usize) -> Result<&[f64], PolicyError> {
        if context >= self.num_contexts {
            return Err(PolicyError::UnknownContext {
                context,
                registered: self.num_contexts,
            });
        }
        let start = self.context_offset() + context * self.context_dim;
        Ok(&self.params[start..start + self.context_dim])
    }

    pub(crate) fn input_vector(&self, x: [f64; 2], t: f64, context: usize) -> Result<Vec<f64>, PolicyError> {
        let mut input = Vec::with_capacity(self.dims[0]);
        input.extend_from_slice(&x);
        input.extend_from_slice(&time_embedding(t));
        input.extend_from_slice(self.context_embedding(context)?);
        Ok(input)
    }

    fn forward_cached(&self, x: [f64; 2], t: f64, context: usize) -> Result<ForwardCache, PolicyError> {
        let n = self.num_layers();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n - 1);
        let mut a = self.input_vector(x, t, context)?;
        for l in 0..n {
            let (w, b) = self.layer(l);
            let fan_in = self.dims[l];
            let z: Vec<f64> = w
                .chunks_exact(fan_in)
                .zip(b)
                .map(|(row, bias)| bias + dot(row, &a))
                .collect();
            inputs.push(a);
            if l + 1 < n {
                a = z.iter().map(|&v| self.activation.apply(v)).collect();
                pre.push(z);
            } else {
                return Ok(ForwardCache {
                    inputs,
                    pre,
                    output: [z[0], z[1]],
                });
            }
        }
        unreachable!("network has at least one layer")
    }

    /// Backpropagate `d_out = dL/dv` through a cached forward pass,
    /// accumulating into `grad` (same layout as `params`).
    fn backward(&self, cache: &ForwardCache, context: usize, d_out: [f64; 2], grad: &mut [f64]) {
        let n = self.num_layers();
        let mut delta = d_out.to_vec();
        for l in (0..n).rev() {
            let fan_in = self.dims[l];
            let (wr, br) = self.layer_range(l);
            let input = &cache.inputs[l];
            for (o, &d) in delta.iter().enumerate() {
                grad[br.start + o] += d;
                let row = &mut grad[wr.start + o * fan_in..wr.start + (o + 1) * fan_in];
                for (g, &inp) in row.iter_mut().zip(input) {
                    *g += d * inp;
                }
            }
            // gradient w.r.t. this layer's input
            let w = &self.params[wr];
            let mut d_in = vec![0.0; fan_in];
            for (o, &d) in delta.iter().enumerate() {
                for (di, &wv) in d_in.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                    *di += d * wv;
                }
            }
            if l > 0 {
                let pre = &cache.pre[l - 1];
                for (di, &z) in d_in.iter_mut().zip(pre) {
                    *di *= self.activation.derivative(z);
                }
                delta = d_in;
            } else {
                let start = self.context_offset() + context * self.context_dim;
                let emb = &d_in[SAMPLE_DIM + TIME_EMBED_DIM..];
                for (g, &d) in grad[start..start + self.context_dim].iter_mut().zip(emb) {
                    *g += d;
                }
            }
        }
    }

    /// Flow-matching loss for one target, added into `grad` scaled by `weight`.
    ///
    /// With `x_t = (1 - t) x0 + t z` and `u = z - x0`, the loss is the mean over
    /// `t_batch` of `|v(x_t, t) - u|^2`. Returns the unweighted loss.
    pub fn accumulate_fm_grad(
        &self,
        x0: [f64; 2],
        z: [f64; 2],
        context: usize,
        t_batch: &[f64],
        weight: f64,
        grad: &mut [f64],
    ) -> Result<f64, PolicyError> {
        validate_t_batch(t_batch)?;
        let u = [z[0] - x0[0], z[1] - x0[1]];
        let scale = 1.0 / t_batch.len() as f64;
        let mut loss = 0.0;
        for &t in t_batch {
            let xt = [(1.0 - t) * x0[0] + t * z[0], (1.0 - t) * x0[1] + t * z[1]];
            let cache = self.forward_cached(xt, t, context)?;
            let d = [cache.output[0] - u[0], cache.output[1] - u[1]];
            loss += scale * (d[0] * d[0] + d[1] * d[1]);
            if weight != 0.0 {
                let k = 2.0 * scale * weight;
                self.backward(&cache, context, [k * d[0], k * d[1]], grad);
            }
        }
        Ok(loss)
    }

    /// Gradient of `sum_i dL/dv_i * v_i` at one input; exposed for Jacobian
    /// checks.
    pub fn vjp(&self, x: [f64; 2], t: f64, context: usize, cotangent: [f64; 2]) -> Result<Vec<f64>, PolicyError> {
        let cache = self.forward_cached(x, t, context)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward(&cache, context, cotangent, &mut grad);
        Ok(grad)
    }
}

fn param_count(dims: &[usize], num_contexts: usize, context_dim: usize) -> usize {
    dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum::<usize>() + num_contexts * context_dim
}

pub(crate) fn validate_t_batch(t_batch: &[f64]) -> Result<(), PolicyError> {
    if t_batch.is_empty() {
        return Err(PolicyError::EmptyTimeBatch);
    }
    if let Some(&t) = t_batch.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(PolicyError::TimeOutOfRange(t));
    }
    Ok(())
}

impl VectorField for MlpPolicy {
    fn velocity(&self, x: [f64; 2], t: f64, context: usize) -> Result<[f64; 2], PolicyError> {
        Ok(self.forward_cached(x, t, context)?.output)
    }

    fn precision(&self) -> Precision {
        Precision::Full
    }
}

/// Flow-matching loss and its exact gradient for one target sample, with the
/// interpolation noise expanded from `seed`.
pub fn fm_loss_and_grad(
    policy: &MlpPolicy,
    x0: [f64; 2],
    seed: NoiseSeed,
    context: usize,
    t_batch: &[f64],
) -> Result<(f64, Vec<f64>), PolicyError> {
    let mut grad = vec![0.0; policy.params.len()];
    let loss = policy.accumulate_fm_grad(x0, seed.noise(), context, t_batch, 1.0, &mut grad)?;
    Ok((loss, grad))
}
