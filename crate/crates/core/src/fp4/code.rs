use std::fmt;

use super::CodecError;

/// Magnitudes of the eight non-negative E2M1 codes, indexed by `exp << 1 | man`.
pub const E2M1_MAGNITUDES: [f64; 8] = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];

/// A 4-bit FP4 E2M1 code: `s e e m`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fp4Code(u8);

impl Fp4Code {
    pub const ZERO: Fp4Code = Fp4Code(0);

    /// Keeps the low nibble.
    pub const fn from_bits(bits: u8) -> Self {
        Fp4Code(bits & 0x0f)
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn sign(self) -> u8 {
        self.0 >> 3
    }

    pub const fn exponent(self) -> u8 {
        (self.0 >> 1) & 0b11
    }

    pub const fn mantissa(self) -> u8 {
        self.0 & 1
    }

    /// Every code, 0x0 through 0xF.
    pub fn all() -> impl Iterator<Item = Fp4Code> {
        (0u8..16).map(Fp4Code)
    }
}

impl fmt::Debug for Fp4Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fp4Code({:#x} = {})", self.0, decode_e2m1(*self))
    }
}

/// Index into [`E2M1_MAGNITUDES`] of the nearest grid value to a finite
/// magnitude `a >= 0`. The comparisons encode the midpoints; `<=` marks a
/// tie that goes down to the even mantissa.
pub(crate) fn e2m1_index(a: f64) -> u8 {
    if a <= 0.25 {
        0
    } else if a < 0.75 {
        1
    } else if a <= 1.25 {
        2
    } else if a < 1.75 {
        3
    } else if a <= 2.5 {
        4
    } else if a < 3.5 {
        5
    } else if a <= 5.0 {
        6
    } else {
        7
    }
}

/// Nearest E2M1 code to `x`; midpoints go to the even mantissa, |x| > 6
/// saturates, and negative zero (or anything rounding to zero) encodes as +0.
pub fn encode_e2m1(x: f64) -> Result<Fp4Code, CodecError> {
    if !x.is_finite() {
        return Err(CodecError::NonFinite(x));
    }
    let index = e2m1_index(x.abs());
    if index == 0 {
        return Ok(Fp4Code::ZERO);
    }
    let sign = if x < 0.0 { 0b1000 } else { 0 };
    Ok(Fp4Code(sign | index))
}

pub fn decode_e2m1(code: Fp4Code) -> f64 {
    let magnitude = E2M1_MAGNITUDES[(code.0 & 0b0111) as usize];
    if code.sign() == 1 {
        -magnitude
    } else {
        magnitude
    }
}

/// Half the width of the E2M1 grid gap bracketing `|y|` (y already divided
/// by the block scale). Beyond 6 the saturation error is unbounded and
/// `None` is returned.
pub fn e2m1_half_gap(y: f64) -> Option<f64> {
    let a = y.abs();
    if a > 6.0 {
        None
    } else if a < 2.0 {
        Some(0.25)
    } else if a < 4.0 {
        Some(0.5)
    } else {
        Some(1.0)
    }
}
