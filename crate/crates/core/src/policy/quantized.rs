use crate::fp4::{Fp4Format, QuantMatrix};

use super::mlp::{Activation, MlpPolicy};
use super::{PolicyError, Precision, VectorField};

/// FP4 inference mirror of an [`MlpPolicy`]: every weight matrix is a
/// quantized tensor, biases and the context table stay full precision.
#[derive(Debug, Clone)]
pub struct QuantizedPolicy {
    format: Fp4Format,
    quantize_activations: bool,
    activation: Activation,
    weights: Vec<QuantMatrix>,
    biases: Vec<Vec<f64>>,
    source: MlpPolicy,
}

pub fn quantize_policy(
    policy: &MlpPolicy,
    format: Fp4Format,
    quantize_activations: bool,
) -> Result<QuantizedPolicy, PolicyError> {
    let mut weights = Vec::with_capacity(policy.num_layers());
    let mut biases = Vec::with_capacity(policy.num_layers());
    for l in 0..policy.num_layers() {
        let (w, b) = policy.layer(l);
        weights.push(QuantMatrix::new(w, policy.dims()[l + 1], policy.dims()[l], format)?);
        biases.push(b.to_vec());
    }
    Ok(QuantizedPolicy {
        format,
        quantize_activations,
        activation: policy.activation(),
        weights,
        biases,
        source: policy.clone(),
    })
}

impl QuantizedPolicy {
    pub fn format(&self) -> Fp4Format {
        self.format
    }

    pub fn quantize_activations(&self) -> bool {
        self.quantize_activations
    }

    pub fn weights(&self) -> &[QuantMatrix] {
        &self.weights
    }

    /// A full-precision policy whose weights are the dequantized FP4 values.
    pub fn dequantized_policy(&self) -> MlpPolicy {
        let mut p = self.source.clone();
        for (l, m) in self.weights.iter().enumerate() {
            let (w, _) = p.layer_range(l);
            p.params_mut()[w].copy_from_slice(m.dequantized());
        }
        p
    }

    /// Refresh from updated full-precision weights.
    pub fn requantize(&mut self, policy: &MlpPolicy) -> Result<(), PolicyError> {
        *self = quantize_policy(policy, self.format, self.quantize_activations)?;
        Ok(())
    }
}

impl VectorField for QuantizedPolicy {
    fn velocity(&self, x: [f64; 2], t: f64, context: usize) -> Result<[f64; 2], PolicyError> {
        let mut a = self.source.input_vector(x, t, context)?;
        let last = self.weights.len() - 1;
        for (l, (m, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = m.matvec(&a, self.quantize_activations)?;
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += bi;
            }
            if l == last {
                return Ok([z[0], z[1]]);
            }
            a = z.into_iter().map(|v| self.activation.apply(v)).collect();
        }
        unreachable!("network has at least one layer")
    }

    fn precision(&self) -> Precision {
        Precision::from(self.format)
    }
}
