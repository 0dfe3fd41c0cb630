//! Software emulation of FP4 (E2M1) values and block micro-scaling.
//!
//! Two block layouts are supported: NVFP4 (16 elements, E4M3 scale) and
//! MXFP4 (32 elements, E8M0 power-of-two scale). A block stores
//! `x~ = S * round_e2m1(x / S)` for every element; rounding is to nearest
//! with ties to the even mantissa bit.

mod block;
mod code;
pub mod conformance;
mod matmul;
pub mod minifloat;

pub use block::{
    dequantize_block, element_error_bound, fake_quantize, quantize_block, quantize_tensor, Fp4Format, QuantBlock,
    QuantTensor, NVFP4_MIN_SCALE,
};
pub use code::{decode_e2m1, e2m1_half_gap, encode_e2m1, Fp4Code, E2M1_MAGNITUDES};
pub(crate) use matmul::dot;
pub use matmul::{quantized_matmul, QuantMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodecError {
    #[error("non-finite value {0} cannot be quantized")]
    NonFinite(f64),
    #[error("block needs {expected} elements, got {got}")]
    BlockLength { expected: usize, got: usize },
    #[error("shape holds {expected} elements but data has {got}")]
    Shape { expected: usize, got: usize },
    #[error("matmul expects a vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("tensor of shape {0:?} is not a matrix")]
    NotMatrix(Vec<usize>),
    #[error("unknown FP4 format `{0}` (expected nvfp4 or mxfp4)")]
    UnknownFormat(String),
    #[error("conformance line {line}: {reason}")]
    Conformance { line: usize, reason: String },
}
