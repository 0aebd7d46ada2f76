//! Scalar types used for rates and thresholds.
//!
//! Edit distances are integers; everything derived from them (WER, PGC length
//! ratios, AU/AW error rates) is a ratio of counts. Those ratios are computed
//! in a caller-chosen scalar so threshold comparisons can run either in
//! floating point or exactly over rationals.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};

/// Exact rational scalar.
pub type Rational = Ratio<i64>;

/// A numeric type usable for rates and thresholds: `f32`, `f64` or [`Rational`].
pub trait Scalar: Num + PartialOrd + Copy + Debug + Send + Sync + ToPrimitive + 'static {
    /// `numerator / denominator` as this scalar. `denominator` must be non-zero.
    fn from_counts(numerator: u64, denominator: u64) -> Self;

    /// Converts from `f64`, returning `None` for non-finite input.
    fn from_f64_lossy(value: f64) -> Option<Self>;

    /// `ceil(self * n)` clamped at zero.
    fn ceil_mul(self, n: usize) -> usize;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_negative(self) -> bool {
        self < Self::zero()
    }
}

macro_rules! impl_float_scalar {
    ($f:ty) => {
        impl Scalar for $f {
            fn from_counts(numerator: u64, denominator: u64) -> Self {
                debug_assert!(denominator != 0);
                (numerator as f64 / denominator as f64) as $f
            }

            fn from_f64_lossy(value: f64) -> Option<Self> {
                value.is_finite().then_some(value as $f)
            }

            fn ceil_mul(self, n: usize) -> usize {
                let v = (self as f64 * n as f64).ceil();
                if v.is_nan() || v <= 0.0 {
                    0
                } else {
                    v as usize
                }
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Rational {
    fn from_counts(numerator: u64, denominator: u64) -> Self {
        Ratio::new(numerator as i64, denominator as i64)
    }

    fn from_f64_lossy(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        // Decimal literals such as 0.15 should come back as 3/20, not as the
        // binary expansion of the nearest double.
        Ratio::approximate_float(value)
    }

    fn ceil_mul(self, n: usize) -> usize {
        let v = (self * Ratio::from_integer(n as i64)).ceil().to_integer();
        v.max(0) as usize
    }
}
