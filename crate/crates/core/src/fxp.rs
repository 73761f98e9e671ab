// SPDX-License-Identifier: Apache-2.0

//! Fixed-point formats and the float/integer conversion arithmetic.
//!
//! A format maps a real quantity onto integer counts through a single
//! conversion constant: `integer = round(x * cc)` and `real = integer / cc`.
//! Signed formats derive the constant from the symmetric maximum of the
//! declared range, unsigned formats from the declared maximum. Rounding is
//! half away from zero followed by saturation to the representable range,
//! so the exact range boundary (which lands on a half count) stays in range.

use serde::Serialize;

use crate::error::{Error, Result};

/// Widest supported signal. Keeps every product of DSP-sized operands
/// exact in an `i64` carrier.
pub const MAX_BIT_WIDTH: u32 = 48;

/// Relative tolerance used when comparing two conversion constants.
pub const CONSTANT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Signedness {
    Signed,
    Unsigned,
}

impl Signedness {
    pub fn is_signed(self) -> bool {
        matches!(self, Signedness::Signed)
    }

    /// Signedness implied by an integer interval.
    pub fn of_range(min: i64) -> Self {
        if min < 0 {
            Signedness::Signed
        } else {
            Signedness::Unsigned
        }
    }
}

/// Closed integer interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct IntRange {
    pub min: i64,
    pub max: i64,
}

impl IntRange {
    pub fn new(min: i64, max: i64) -> Self {
        debug_assert!(min <= max, "empty interval [{min}, {max}]");
        IntRange { min, max }
    }

    pub fn point(v: i64) -> Self {
        IntRange { min: v, max: v }
    }

    /// Full representable range of a `bit_width`-bit word.
    pub fn representable(bit_width: u32, signedness: Signedness) -> Self {
        match signedness {
            Signedness::Signed => {
                let half = 1i64 << (bit_width - 1);
                IntRange::new(-half, half - 1)
            }
            Signedness::Unsigned => IntRange::new(0, (1i64 << bit_width) - 1),
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.min <= v && v <= self.max
    }

    pub fn contains_range(&self, other: &IntRange) -> bool {
        self.min <= other.min && other.max <= self.max
    }

    pub fn signedness(&self) -> Signedness {
        Signedness::of_range(self.min)
    }

    /// Smallest width holding the interval in its natural signedness.
    pub fn min_width(&self) -> u32 {
        min_width_for_integer_range(self.min, self.max, self.signedness())
    }

    pub fn span(&self) -> u64 {
        (self.max as i128 - self.min as i128 + 1) as u64
    }

    pub fn union(&self, other: &IntRange) -> IntRange {
        IntRange::new(self.min.min(other.min), self.max.max(other.max))
    }

    pub fn add(&self, other: &IntRange) -> WideRange {
        WideRange::new(
            self.min as i128 + other.min as i128,
            self.max as i128 + other.max as i128,
        )
    }

    pub fn sub(&self, other: &IntRange) -> WideRange {
        WideRange::new(
            self.min as i128 - other.max as i128,
            self.max as i128 - other.min as i128,
        )
    }

    pub fn mul(&self, other: &IntRange) -> WideRange {
        let corners = [
            self.min as i128 * other.min as i128,
            self.min as i128 * other.max as i128,
            self.max as i128 * other.min as i128,
            self.max as i128 * other.max as i128,
        ];
        WideRange::new(
            *corners.iter().min().unwrap(),
            *corners.iter().max().unwrap(),
        )
    }

    /// Interval of `x * x` for `x` in `self`; tighter than `mul(self, self)`
    /// because both factors are the same value.
    pub fn square(&self) -> WideRange {
        let lo = self.min as i128;
        let hi = self.max as i128;
        let top = (lo * lo).max(hi * hi);
        let bottom = if lo <= 0 && hi >= 0 {
            0
        } else {
            (lo * lo).min(hi * hi)
        };
        WideRange::new(bottom, top)
    }

    pub fn shl(&self, k: u32) -> WideRange {
        WideRange::new((self.min as i128) << k, (self.max as i128) << k)
    }

    /// Arithmetic (flooring) right shift of both bounds.
    pub fn shr(&self, k: u32) -> IntRange {
        let k = k.min(63);
        IntRange::new(self.min >> k, self.max >> k)
    }
}

/// Interval computed in a wider carrier, before the width check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WideRange {
    pub min: i128,
    pub max: i128,
}

impl WideRange {
    pub fn new(min: i128, max: i128) -> Self {
        WideRange { min, max }
    }

    pub fn min_width(&self) -> u32 {
        let signedness = if self.min < 0 {
            Signedness::Signed
        } else {
            Signedness::Unsigned
        };
        wide_min_width(self.min, self.max, signedness)
    }

    /// Narrow to an `IntRange`, failing when the result is wider than
    /// [`MAX_BIT_WIDTH`].
    pub fn narrow(&self, op: &'static str) -> Result<IntRange> {
        let width = self.min_width();
        if width > MAX_BIT_WIDTH {
            return Err(Error::WidthOverflow {
                op,
                width,
                max: MAX_BIT_WIDTH,
            });
        }
        Ok(IntRange::new(self.min as i64, self.max as i64))
    }
}

/// Smallest bit width whose representable range contains `[min, max]`.
pub fn min_width_for_integer_range(min: i64, max: i64, signedness: Signedness) -> u32 {
    wide_min_width(min as i128, max as i128, signedness)
}

fn wide_min_width(min: i128, max: i128, signedness: Signedness) -> u32 {
    assert!(min <= max, "empty interval");
    match signedness {
        Signedness::Signed => {
            // n bits hold [-2^(n-1), 2^(n-1) - 1]
            let need = |v: i128| -> u32 {
                let mag = if v < 0 { !v } else { v };
                128 - mag.leading_zeros() + 1
            };
            need(min).max(need(max))
        }
        Signedness::Unsigned => {
            assert!(min >= 0, "unsigned range with negative minimum");
            (128 - max.leading_zeros()).max(1)
        }
    }
}

/// Bit width, signedness, conversion constant and declared float range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointFormat {
    pub bit_width: u32,
    pub signedness: Signedness,
    pub conversion_constant: f64,
    pub float_min: f64,
    pub float_max: f64,
}

impl FixedPointFormat {
    /// Signed format over `[float_min, float_max]`; the constant is
    /// `(2^(n-1) - 0.5) / max(float_max, |float_min|)`.
    pub fn signed(bit_width: u32, float_min: f64, float_max: f64) -> Result<Self> {
        check_width(bit_width, 2)?;
        if !(float_min.is_finite() && float_max.is_finite()) || float_min >= float_max {
            return Err(Error::InvalidRange {
                min: float_min,
                max: float_max,
            });
        }
        let symmetric_max = float_max.max(float_min.abs());
        if symmetric_max <= 0.0 {
            return Err(Error::InvalidRange {
                min: float_min,
                max: float_max,
            });
        }
        let cc = ((1u64 << (bit_width - 1)) as f64 - 0.5) / symmetric_max;
        Ok(FixedPointFormat {
            bit_width,
            signedness: Signedness::Signed,
            conversion_constant: cc,
            float_min,
            float_max,
        })
    }

    /// Unsigned format over `[0, float_max]`; the constant is
    /// `(2^n - 0.5) / float_max`.
    pub fn unsigned(bit_width: u32, float_max: f64) -> Result<Self> {
        check_width(bit_width, 1)?;
        if !float_max.is_finite() || float_max <= 0.0 {
            return Err(Error::InvalidRange {
                min: 0.0,
                max: float_max,
            });
        }
        let cc = ((1u64 << bit_width) as f64 - 0.5) / float_max;
        Ok(FixedPointFormat {
            bit_width,
            signedness: Signedness::Unsigned,
            conversion_constant: cc,
            float_min: 0.0,
            float_max,
        })
    }

    /// Format of an intermediate result: the declared float range is the
    /// real image of the representable integer range.
    pub fn derived(bit_width: u32, signedness: Signedness, conversion_constant: f64) -> Self {
        debug_assert!((1..=MAX_BIT_WIDTH).contains(&bit_width));
        debug_assert!(conversion_constant > 0.0);
        let r = IntRange::representable(bit_width, signedness);
        FixedPointFormat {
            bit_width,
            signedness,
            conversion_constant,
            float_min: r.min as f64 / conversion_constant,
            float_max: r.max as f64 / conversion_constant,
        }
    }

    /// Boolean flag: one unsigned bit with a unit constant.
    pub fn boolean() -> Self {
        FixedPointFormat::derived(1, Signedness::Unsigned, 1.0)
    }

    pub fn int_range(&self) -> IntRange {
        IntRange::representable(self.bit_width, self.signedness)
    }

    /// Quantize without the declared-range check; saturates to the
    /// representable range.
    pub fn quantize(&self, x: f64) -> i64 {
        let r = self.int_range();
        let scaled = (x * self.conversion_constant).round();
        if scaled.is_nan() {
            return 0;
        }
        if scaled <= r.min as f64 {
            r.min
        } else if scaled >= r.max as f64 {
            r.max
        } else {
            scaled as i64
        }
    }

    /// Convert an in-range float to its integer representation.
    pub fn to_integer(&self, x: f64) -> Result<i64> {
        if !(self.float_min <= x && x <= self.float_max) {
            return Err(Error::OutOfRange {
                value: x,
                min: self.float_min,
                max: self.float_max,
            });
        }
        Ok(self.quantize(x))
    }

    pub fn to_real(&self, i: i64) -> f64 {
        i as f64 / self.conversion_constant
    }

    /// Clamp a float into the declared range.
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.float_min, self.float_max)
    }

    pub fn same_constant(&self, other: &FixedPointFormat) -> bool {
        constants_equal(self.conversion_constant, other.conversion_constant)
    }
}

pub fn constants_equal(a: f64, b: f64) -> bool {
    ((a - b) / a.abs().max(b.abs())).abs() <= CONSTANT_RTOL
}

fn check_width(bit_width: u32, min: u32) -> Result<()> {
    if bit_width < min || bit_width > MAX_BIT_WIDTH {
        return Err(Error::BitWidth {
            width: bit_width,
            min,
            max: MAX_BIT_WIDTH,
        });
    }
    Ok(())
}

/// One signal's value on both evaluation tracks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SignalValue {
    pub float_value: f64,
    pub integer_value: i64,
    pub real_value: f64,
}

impl SignalValue {
    pub fn new(float_value: f64, integer_value: i64, conversion_constant: f64) -> Self {
        SignalValue {
            float_value,
            integer_value,
            real_value: integer_value as f64 / conversion_constant,
        }
    }
}
