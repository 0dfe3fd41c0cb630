//! Golden conformance vectors: one `format,scale,code_hex,expected_value`
//! line per (scale, code) pair.

use std::fmt::Write as _;

use super::block::Fp4Format;
use super::code::{decode_e2m1, Fp4Code};
use super::CodecError;

pub const HEADER: &str = "format,scale,code_hex,expected_value";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformanceVector {
    pub format: Fp4Format,
    pub scale: f64,
    pub code: Fp4Code,
    pub expected: f64,
}

impl ConformanceVector {
    pub fn new(format: Fp4Format, scale: f64, code: Fp4Code) -> Self {
        ConformanceVector {
            format,
            scale,
            code,
            expected: scale * decode_e2m1(code),
        }
    }

    /// True when decoding `code` under `scale` reproduces `expected` exactly.
    pub fn holds(&self) -> bool {
        self.format.is_valid_scale(self.scale) && self.scale * decode_e2m1(self.code) == self.expected
    }
}

/// Scales whose products with every E2M1 magnitude print as exact decimals
/// under Rust's shortest round-trip formatting.
fn reference_scales(format: Fp4Format) -> Vec<f64> {
    match format {
        Fp4Format::Nvfp4 => vec![0.015625, 0.1015625, 0.40625, 1.0, 1.125, 2.0, 13.0, 448.0],
        Fp4Format::Mxfp4 => (-10..=10).step_by(4).map(|e| 2f64.powi(e)).collect(),
    }
}

pub fn reference_vectors() -> Vec<ConformanceVector> {
    let mut out = Vec::new();
    for format in [Fp4Format::Nvfp4, Fp4Format::Mxfp4] {
        for scale in reference_scales(format) {
            for code in Fp4Code::all() {
                out.push(ConformanceVector::new(format, scale, code));
            }
        }
    }
    out
}

pub fn render(vectors: &[ConformanceVector]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for v in vectors {
        let _ = writeln!(s, "{},{},{:x},{}", v.format, v.scale, v.code.bits(), v.expected);
    }
    s
}

pub fn parse(text: &str) -> Result<Vec<ConformanceVector>, CodecError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line == HEADER {
            continue;
        }
        let bad = |why: &str| CodecError::Conformance {
            line: lineno + 1,
            reason: why.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        let [format, scale, code, expected] = fields.as_slice() else {
            return Err(bad("expected 4 comma-separated fields"));
        };
        let format: Fp4Format = format.parse().map_err(|_| bad("unknown format"))?;
        let scale: f64 = scale.parse().map_err(|_| bad("bad scale"))?;
        let code = u8::from_str_radix(code, 16)
            .ok()
            .filter(|&c| c < 16)
            .ok_or_else(|| bad("code must be one hex nibble"))?;
        let expected: f64 = expected.parse().map_err(|_| bad("bad expected value"))?;
        out.push(ConformanceVector {
            format,
            scale,
            code: Fp4Code::from_bits(code),
            expected,
        });
    }
    Ok(out)
}
