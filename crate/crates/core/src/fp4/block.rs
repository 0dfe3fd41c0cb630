use std::fmt;
use std::str::FromStr;

use super::code::{decode_e2m1, e2m1_half_gap, e2m1_index, encode_e2m1, Fp4Code, E2M1_MAGNITUDES};
use super::minifloat::{binary_exponent, E4M3};
use super::CodecError;

/// Smallest normal E4M3 value. NVFP4 scales are kept at or above it.
pub const NVFP4_MIN_SCALE: f64 = 0.015625;
/// E8M0 exponent range.
pub const E8M0_MIN_EXP: i32 = -127;
pub const E8M0_MAX_EXP: i32 = 127;

/// Block micro-scaling layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fp4Format {
    /// 16 elements under an E4M3 scale.
    Nvfp4,
    /// 32 elements under a power-of-two (E8M0) scale.
    Mxfp4,
}

impl Fp4Format {
    pub const fn block_size(self) -> usize {
        match self {
            Fp4Format::Nvfp4 => 16,
            Fp4Format::Mxfp4 => 32,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Fp4Format::Nvfp4 => "nvfp4",
            Fp4Format::Mxfp4 => "mxfp4",
        }
    }

    /// Scale for a block with the given absolute maximum (> 0, finite).
    ///
    /// NVFP4: nearest E4M3 value to `amax / 6`, clamped to
    /// `[NVFP4_MIN_SCALE, 448]`. MXFP4: `2^ceil(log2(amax / 7))`, clamped
    /// to the E8M0 exponent range, so `amax / scale` lands in `(3.5, 7]`.
    pub fn scale_for(self, amax: f64) -> f64 {
        debug_assert!(amax > 0.0 && amax.is_finite());
        match self {
            Fp4Format::Nvfp4 => E4M3.round_magnitude(amax / 6.0).max(NVFP4_MIN_SCALE),
            Fp4Format::Mxfp4 => {
                let target = amax / 7.0;
                let floor = binary_exponent(target);
                let exp = if target == 2f64.powi(floor) { floor } else { floor + 1 };
                2f64.powi(exp.clamp(E8M0_MIN_EXP, E8M0_MAX_EXP))
            }
        }
    }

    /// True when `scale` is a value this format can store.
    pub fn is_valid_scale(self, scale: f64) -> bool {
        if !(scale > 0.0 && scale.is_finite()) {
            return false;
        }
        match self {
            Fp4Format::Nvfp4 => E4M3.is_representable(scale),
            Fp4Format::Mxfp4 => {
                let e = binary_exponent(scale);
                scale == 2f64.powi(e) && (E8M0_MIN_EXP..=E8M0_MAX_EXP).contains(&e)
            }
        }
    }
}

impl fmt::Display for Fp4Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fp4Format {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nvfp4" => Ok(Fp4Format::Nvfp4),
            "mxfp4" => Ok(Fp4Format::Mxfp4),
            _ => Err(CodecError::UnknownFormat(s.to_string())),
        }
    }
}

/// One shared scale plus `block_size` FP4 codes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantBlock {
    pub format: Fp4Format,
    pub scale: f64,
    pub codes: Vec<Fp4Code>,
}

impl QuantBlock {
    pub fn zero(format: Fp4Format) -> Self {
        QuantBlock {
            format,
            scale: 1.0,
            codes: vec![Fp4Code::ZERO; format.block_size()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.codes.iter().all(|&c| c == Fp4Code::ZERO)
    }
}

pub fn quantize_block(values: &[f64], format: Fp4Format) -> Result<QuantBlock, CodecError> {
    let expected = format.block_size();
    if values.len() != expected {
        return Err(CodecError::BlockLength {
            expected,
            got: values.len(),
        });
    }
    let mut amax = 0.0f64;
    for &v in values {
        if !v.is_finite() {
            return Err(CodecError::NonFinite(v));
        }
        amax = amax.max(v.abs());
    }
    if amax == 0.0 {
        return Ok(QuantBlock::zero(format));
    }
    let scale = format.scale_for(amax);
    let codes = values
        .iter()
        .map(|&v| encode_e2m1(v / scale))
        .collect::<Result<Vec<_>, _>>()?;
    let block = QuantBlock { format, scale, codes };
    // A block whose every element rounded to zero takes the canonical form.
    if block.is_zero() {
        return Ok(QuantBlock::zero(format));
    }
    Ok(block)
}

pub fn dequantize_block(block: &QuantBlock) -> Vec<f64> {
    block.codes.iter().map(|&c| block.scale * decode_e2m1(c)).collect()
}

/// Upper bound on `|v - Q(v)|` for an element quantized under `scale`.
/// Covers the mild saturation band above `6 * scale` that both scale rules
/// allow (at most `7 * scale`).
pub fn element_error_bound(v: f64, scale: f64) -> f64 {
    let y = (v / scale).abs();
    scale * e2m1_half_gap(y.min(6.0)).unwrap_or(1.0)
}

/// A tensor stored as FP4 blocks over its row-major flattening.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantTensor {
    pub shape: Vec<usize>,
    pub format: Fp4Format,
    pub blocks: Vec<QuantBlock>,
    /// Number of zero-padded elements at the end of the last block.
    pub pad_count: usize,
}

impl QuantTensor {
    pub fn num_elements(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn dequantize(&self) -> Vec<f64> {
        let n = self.num_elements();
        let mut out = Vec::with_capacity(n + self.pad_count);
        for block in &self.blocks {
            out.extend(dequantize_block(block));
        }
        out.truncate(n);
        out
    }

    pub fn max_scale(&self) -> f64 {
        self.blocks.iter().map(|b| b.scale).fold(0.0, f64::max)
    }

    /// Scale that governs flat element `index`.
    pub fn scale_of(&self, index: usize) -> f64 {
        self.blocks[index / self.format.block_size()].scale
    }
}

pub fn quantize_tensor(data: &[f64], shape: &[usize], format: Fp4Format) -> Result<QuantTensor, CodecError> {
    let n: usize = shape.iter().product();
    if n != data.len() {
        return Err(CodecError::Shape {
            expected: n,
            got: data.len(),
        });
    }
    let bs = format.block_size();
    let num_blocks = n.div_ceil(bs);
    let pad_count = num_blocks * bs - n;
    let mut blocks = Vec::with_capacity(num_blocks);
    let mut buf = vec![0.0; bs];
    for chunk in data.chunks(bs) {
        if chunk.len() == bs {
            blocks.push(quantize_block(chunk, format)?);
        } else {
            buf[..chunk.len()].copy_from_slice(chunk);
            buf[chunk.len()..].fill(0.0);
            blocks.push(quantize_block(&buf, format)?);
        }
    }
    Ok(QuantTensor {
        shape: shape.to_vec(),
        format,
        blocks,
        pad_count,
    })
}

/// Quantize then dequantize in one pass (the activation path of a quantized GEMM).
///
/// Equal to `quantize_tensor(values).dequantize()` without building blocks.
pub fn fake_quantize(values: &[f64], format: Fp4Format) -> Result<Vec<f64>, CodecError> {
    let mut out = Vec::with_capacity(values.len());
    for chunk in values.chunks(format.block_size()) {
        let mut amax = 0.0f64;
        for &v in chunk {
            if !v.is_finite() {
                return Err(CodecError::NonFinite(v));
            }
            amax = amax.max(v.abs());
        }
        if amax == 0.0 {
            out.extend(std::iter::repeat_n(0.0, chunk.len()));
            continue;
        }
        let scale = format.scale_for(amax);
        out.extend(chunk.iter().map(|&v| {
            let m = E2M1_MAGNITUDES[e2m1_index((v / scale).abs()) as usize];
            if m == 0.0 {
                0.0
            } else {
                scale * m.copysign(v)
            }
        }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn padded(head: &[f64], len: usize) -> Vec<f64> {
        let mut v = head.to_vec();
        v.resize(len, 0.0);
        v
    }

    #[test]
    fn zero_block_is_canonical() {
        let b = quantize_block(&[0.0; 16], Fp4Format::Nvfp4).unwrap();
        assert_eq!(b.scale, 1.0);
        assert!(b.is_zero());
        assert_eq!(dequantize_block(&b), vec![0.0; 16]);
        let b = quantize_block(&[-0.0; 32], Fp4Format::Mxfp4).unwrap();
        assert_eq!(b, QuantBlock::zero(Fp4Format::Mxfp4));
    }

    #[test]
    fn on_grid_block_is_exact() {
        let v = padded(&[6.0, 3.0, 1.5, 0.5], 16);
        let b = quantize_block(&v, Fp4Format::Nvfp4).unwrap();
        assert_eq!(b.scale, 1.0);
        assert_eq!(dequantize_block(&b), v);
    }

    #[test]
    fn scale_two_block() {
        let v = padded(&[12.0], 16);
        let b = quantize_block(&v, Fp4Format::Nvfp4).unwrap();
        assert_eq!(b.scale, 2.0);
        assert_eq!(b.codes[0], Fp4Code::from_bits(0x7));
        assert_eq!(dequantize_block(&b)[0], 12.0);
    }

    #[test]
    fn dequantize_table_times_scale() {
        let mut b = QuantBlock::zero(Fp4Format::Nvfp4);
        b.scale = 2.0;
        b.codes[0] = Fp4Code::from_bits(0x7);
        b.codes[1] = Fp4Code::from_bits(0x1);
        let d = dequantize_block(&b);
        assert_eq!(&d[..2], &[12.0, 1.0]);
    }

    #[test]
    fn block_length_and_finiteness_checked() {
        assert!(matches!(
            quantize_block(&[1.0; 15], Fp4Format::Nvfp4),
            Err(CodecError::BlockLength { expected: 16, got: 15 })
        ));
        let mut v = vec![1.0; 32];
        v[3] = f64::NAN;
        assert!(matches!(
            quantize_block(&v, Fp4Format::Mxfp4),
            Err(CodecError::NonFinite(_))
        ));
    }

    #[test]
    fn mxfp4_scale_is_power_of_two_in_band() {
        for &amax in &[1e-3, 0.1, 0.7, 3.5, 3.6, 6.0, 7.0, 7.1, 1234.5] {
            let s = Fp4Format::Mxfp4.scale_for(amax);
            assert!(Fp4Format::Mxfp4.is_valid_scale(s));
            let r = amax / s;
            assert!(r > 3.5 && r <= 7.0, "amax {amax} scale {s} ratio {r}");
        }
    }

    #[test]
    fn nvfp4_scale_is_e4m3() {
        for &amax in &[1e-6, 0.05, 0.5, 2.5, 6.0, 100.0, 1e6] {
            let s = Fp4Format::Nvfp4.scale_for(amax);
            assert!(Fp4Format::Nvfp4.is_valid_scale(s), "{s}");
            assert!(s >= NVFP4_MIN_SCALE && s <= 448.0);
        }
    }

    #[test]
    fn tensor_padding() {
        let t = quantize_tensor(&[1.0; 16], &[16], Fp4Format::Nvfp4).unwrap();
        assert_eq!((t.blocks.len(), t.pad_count), (1, 0));
        let t = quantize_tensor(&[1.0; 17], &[17], Fp4Format::Nvfp4).unwrap();
        assert_eq!((t.blocks.len(), t.pad_count), (2, 15));
        assert_eq!(t.dequantize().len(), 17);
        assert!(dequantize_block(&t.blocks[1])[1..].iter().all(|&v| v == 0.0));
        let t = quantize_tensor(&[1.0; 32], &[4, 8], Fp4Format::Mxfp4).unwrap();
        assert_eq!((t.blocks.len(), t.pad_count), (1, 0));
    }

    #[test]
    fn tensor_shape_checked() {
        assert!(matches!(
            quantize_tensor(&[1.0; 5], &[2, 3], Fp4Format::Nvfp4),
            Err(CodecError::Shape { expected: 6, got: 5 })
        ));
    }

    #[test]
    fn tiny_blocks_stay_idempotent() {
        for format in [Fp4Format::Nvfp4, Fp4Format::Mxfp4] {
            for &a in &[1e-9, 3e-3, 0.02, 0.03, 0.09] {
                let v = padded(&[a, -a / 3.0, a / 7.0], format.block_size());
                let q = quantize_tensor(&v, &[v.len()], format).unwrap();
                let d = q.dequantize();
                let q2 = quantize_tensor(&d, &[d.len()], format).unwrap();
                assert_eq!(q, q2, "{format} amax {a}");
            }
        }
    }

    #[test]
    fn fake_quantize_matches_tensor_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for format in [Fp4Format::Nvfp4, Fp4Format::Mxfp4] {
            for len in [1, 10, 16, 33, 64, 100] {
                let mag = 10f64.powi(rng.random_range(-4..4));
                let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(-mag..mag)).collect();
                v[0] = 0.0;
                let slow = quantize_tensor(&v, &[len], format).unwrap().dequantize();
                let fast = fake_quantize(&v, format).unwrap();
                assert_eq!(slow.len(), fast.len());
                for (a, b) in slow.iter().zip(&fast) {
                    assert_eq!(a.to_bits(), b.to_bits(), "{format} len {len}");
                }
            }
        }
        assert!(fake_quantize(&[1.0, f64::NAN], Fp4Format::Nvfp4).is_err());
    }
}
