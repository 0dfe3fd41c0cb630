//! Generic round-to-nearest-even projection onto small IEEE-like float grids.
//!
//! Both the FP4 element format (E2M1) and the NVFP4 block-scale format (E4M3)
//! are instances of the same layout: sign, `exp_bits` exponent bits with a
//! fixed bias, `man_bits` mantissa bits, subnormals, and no infinities.

/// Layout of a sign-magnitude minifloat without infinities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinifloatLayout {
    pub man_bits: u32,
    /// Smallest normal exponent (`1 - bias`).
    pub min_exp: i32,
    /// Largest finite magnitude; inputs beyond it saturate.
    pub max_value: f64,
}

/// E2M1: values ±{0, 0.5, 1, 1.5, 2, 3, 4, 6}.
pub const E2M1: MinifloatLayout = MinifloatLayout {
    man_bits: 1,
    min_exp: 0,
    max_value: 6.0,
};

/// OCP E4M3 ("FN" variant): bias 7, no infinities, max 448.
pub const E4M3: MinifloatLayout = MinifloatLayout {
    man_bits: 3,
    min_exp: -6,
    max_value: 448.0,
};

/// Unbiased binary exponent of a positive finite `x` (floor(log2 x)), exact.
pub(crate) fn binary_exponent(x: f64) -> i32 {
    debug_assert!(x > 0.0 && x.is_finite());
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i32;
    if raw == 0 {
        // f64 subnormal: scale into the normal range first.
        binary_exponent(x * 2f64.powi(64)) - 64
    } else {
        raw - 1023
    }
}

impl MinifloatLayout {
    /// Round a non-negative finite magnitude to the nearest grid value,
    /// ties to even significand, saturating at `max_value`.
    pub fn round_magnitude(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0 && x.is_finite());
        if x == 0.0 {
            return 0.0;
        }
        if x >= self.max_value {
            return self.max_value;
        }
        let exp = binary_exponent(x).max(self.min_exp);
        let quantum = 2f64.powi(exp - self.man_bits as i32);
        let rounded = (x / quantum).round_ties_even() * quantum;
        rounded.min(self.max_value)
    }

    /// True when `x` lies exactly on the grid.
    pub fn is_representable(&self, x: f64) -> bool {
        x.is_finite() && x.abs() <= self.max_value && self.round_magnitude(x.abs()) == x.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e2m1_grid_ties_to_even() {
        let cases = [
            (0.25, 0.0),
            (0.75, 1.0),
            (1.25, 1.0),
            (1.75, 2.0),
            (2.5, 2.0),
            (3.5, 4.0),
            (5.0, 4.0),
            (5.01, 6.0),
            (100.0, 6.0),
        ];
        for (x, want) in cases {
            assert_eq!(E2M1.round_magnitude(x), want, "x = {x}");
        }
    }

    #[test]
    fn e4m3_known_values() {
        assert_eq!(E4M3.round_magnitude(448.0), 448.0);
        assert_eq!(E4M3.round_magnitude(1000.0), 448.0);
        // 1.0625 is the midpoint of 1.0 and 1.125.
        assert_eq!(E4M3.round_magnitude(1.0625), 1.0);
        assert_eq!(E4M3.round_magnitude(1.1875), 1.25);
        // smallest subnormal 2^-9, midpoint below it rounds to zero
        assert_eq!(E4M3.round_magnitude(2f64.powi(-9)), 2f64.powi(-9));
        assert_eq!(E4M3.round_magnitude(2f64.powi(-10)), 0.0);
        assert_eq!(E4M3.round_magnitude(0.4166666), 0.40625);
    }

    #[test]
    fn e4m3_has_expected_cardinality() {
        // 126 positive finite values (exponent 0..15 x mantissa 0..7, minus
        // zero and the NaN pattern) plus zero.
        let mut values = Vec::new();
        for e in 0..16 {
            for m in 0..8 {
                if e == 15 && m == 7 {
                    continue;
                }
                let v = if e == 0 {
                    m as f64 * 2f64.powi(-9)
                } else {
                    (1.0 + m as f64 / 8.0) * 2f64.powi(e - 7)
                };
                values.push(v);
            }
        }
        assert_eq!(values.len(), 127);
        for v in values {
            assert!(E4M3.is_representable(v), "{v}");
        }
        assert!(!E4M3.is_representable(1.0 + 1.0 / 16.0));
    }

    #[test]
    fn binary_exponent_matches_log2() {
        for &x in &[1.0, 1.5, 2.0, 0.3, 6.0, 1e-300, 4.9e-324] {
            assert_eq!(binary_exponent(x), x.log2().floor() as i32, "{x}");
        }
    }
}
