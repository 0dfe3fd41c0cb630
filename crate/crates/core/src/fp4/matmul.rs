use super::block::{fake_quantize, quantize_tensor, Fp4Format, QuantTensor};
use super::CodecError;

/// `y = W x` with W stored as a row-major `[rows, cols]` QuantTensor.
///
/// Weights are dequantized; when `quantize_activations` is set, `x` is first
/// passed through quantize/dequantize in the same format. Accumulation is f64.
pub fn quantized_matmul(wq: &QuantTensor, x: &[f64], quantize_activations: bool) -> Result<Vec<f64>, CodecError> {
    let (rows, cols) = matrix_dims(wq)?;
    if cols != x.len() {
        return Err(CodecError::Dimension {
            expected: cols,
            got: x.len(),
        });
    }
    let w = wq.dequantize();
    matvec_into_new(&w, rows, cols, x, quantize_activations.then_some(wq.format))
}

fn matrix_dims(wq: &QuantTensor) -> Result<(usize, usize), CodecError> {
    match wq.shape.as_slice() {
        [r, c] => Ok((*r, *c)),
        _ => Err(CodecError::NotMatrix(wq.shape.clone())),
    }
}

fn matvec_into_new(
    w: &[f64],
    rows: usize,
    cols: usize,
    x: &[f64],
    activation_format: Option<Fp4Format>,
) -> Result<Vec<f64>, CodecError> {
    let xq;
    let x = match activation_format {
        Some(format) => {
            xq = fake_quantize(x, format)?;
            &xq[..]
        }
        None => x,
    };
    Ok(w.chunks_exact(cols).take(rows).map(|row| dot(row, x)).collect())
}

/// Dot product over the common prefix, with four interleaved accumulators
/// so the loop vectorizes.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// A quantized weight matrix with its dequantized values cached, so repeated
/// inference does not re-decode the codes. Semantics match [`quantized_matmul`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantMatrix {
    pub tensor: QuantTensor,
    rows: usize,
    cols: usize,
    dequantized: Vec<f64>,
}

impl QuantMatrix {
    pub fn new(weights: &[f64], rows: usize, cols: usize, format: Fp4Format) -> Result<Self, CodecError> {
        let tensor = quantize_tensor(weights, &[rows, cols], format)?;
        Self::from_tensor(tensor)
    }

    pub fn from_tensor(tensor: QuantTensor) -> Result<Self, CodecError> {
        let (rows, cols) = matrix_dims(&tensor)?;
        let dequantized = tensor.dequantize();
        Ok(QuantMatrix {
            tensor,
            rows,
            cols,
            dequantized,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dequantized(&self) -> &[f64] {
        &self.dequantized
    }

    pub fn matvec(&self, x: &[f64], quantize_activations: bool) -> Result<Vec<f64>, CodecError> {
        if x.len() != self.cols {
            return Err(CodecError::Dimension {
                expected: self.cols,
                got: x.len(),
            });
        }
        matvec_into_new(
            &self.dequantized,
            self.rows,
            self.cols,
            x,
            quantize_activations.then_some(self.tensor.format),
        )
    }
}
