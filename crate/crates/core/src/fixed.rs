//! Signed fixed-point `(1, n)` numbers: one sign bit and `n` fractional bits.
//!
//! A format with `n` fractional bits represents `m * 2^-n` for every integer
//! mantissa `m` in `[-2^n, 2^n - 1]`, i.e. the interval `[-1, 1 - 2^-n]`.
//! Words on the hardware side are the two's-complement encoding of `m` in
//! `n + 1` bits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported number of fractional bits. Keeps words inside 32 bits.
pub const MAX_FRAC_BITS: u32 = 31;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("fractional bits must be in 1..={MAX_FRAC_BITS}, got {0}")]
    FracBits(u32),
}

/// A signed `(1, n)` fixed-point format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct FixedPointFormat {
    frac_bits: u32,
}

impl TryFrom<u32> for FixedPointFormat {
    type Error = FormatError;

    fn try_from(n: u32) -> Result<Self, Self::Error> {
        Self::new(n)
    }
}

impl From<FixedPointFormat> for u32 {
    fn from(f: FixedPointFormat) -> u32 {
        f.frac_bits
    }
}

impl FixedPointFormat {
    pub fn new(frac_bits: u32) -> Result<Self, FormatError> {
        if (1..=MAX_FRAC_BITS).contains(&frac_bits) {
            Ok(Self { frac_bits })
        } else {
            Err(FormatError::FracBits(frac_bits))
        }
    }

    /// Format for a total word width `w` (sign bit included).
    pub fn from_width(width: u32) -> Result<Self, FormatError> {
        Self::new(width.saturating_sub(1))
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    /// Total word width, `n + 1`.
    pub fn width(self) -> u32 {
        self.frac_bits + 1
    }

    fn scale(self) -> f64 {
        (1u64 << self.frac_bits) as f64
    }

    /// Distance between adjacent representable values, `2^-n`.
    pub fn step(self) -> f64 {
        1.0 / self.scale()
    }

    pub fn min_mantissa(self) -> i64 {
        -(1i64 << self.frac_bits)
    }

    pub fn max_mantissa(self) -> i64 {
        (1i64 << self.frac_bits) - 1
    }

    /// Number of distinct representable values, `2^(n+1)`.
    pub fn capacity(self) -> u64 {
        1u64 << (self.frac_bits + 1)
    }

    pub fn min_value(self) -> f64 {
        -1.0
    }

    pub fn max_value(self) -> f64 {
        self.max_mantissa() as f64 * self.step()
    }

    /// Nearest mantissa to `x`, ties to even, saturating at the range bounds.
    /// NaN maps to zero.
    pub fn quantize_mantissa(self, x: f64) -> i64 {
        if x.is_nan() {
            return 0;
        }
        // Scaling by a power of two is exact; only the rounding step loses information.
        let scaled = (x * self.scale()).round_ties_even();
        if scaled <= self.min_mantissa() as f64 {
            self.min_mantissa()
        } else if scaled >= self.max_mantissa() as f64 {
            self.max_mantissa()
        } else {
            scaled as i64
        }
    }

    pub fn value_of(self, mantissa: i64) -> f64 {
        mantissa as f64 * self.step()
    }

    /// Mantissa of `x` if `x` is exactly representable in this format.
    pub fn mantissa_of(self, x: f64) -> Option<i64> {
        if !x.is_finite() {
            return None;
        }
        let scaled = x * self.scale();
        if scaled.fract() != 0.0 {
            return None;
        }
        let m = scaled as i64;
        self.contains_mantissa(m).then_some(m)
    }

    pub fn contains_mantissa(self, m: i64) -> bool {
        (self.min_mantissa()..=self.max_mantissa()).contains(&m)
    }

    /// Two's-complement word of `mantissa`, masked to `width()` bits.
    pub fn to_word(self, mantissa: i64) -> u64 {
        (mantissa as u64) & self.word_mask()
    }

    /// Sign-extends a `width()`-bit word back to its mantissa.
    pub fn from_word(self, word: u64) -> i64 {
        let shift = 64 - self.width();
        (((word & self.word_mask()) << shift) as i64) >> shift
    }

    fn word_mask(self) -> u64 {
        (1u64 << self.width()) - 1
    }
}

impl std::fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(1,{})", self.frac_bits)
    }
}
