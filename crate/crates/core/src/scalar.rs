//! Scalar abstractions.
//!
//! Two tiers are used across the crate. [`Field`] is enough for the
//! closed-form moment and ratio formulas, which are rational functions of
//! counts and therefore also evaluate exactly over [`num_rational::Ratio`].
//! [`Real`] adds the floating-point operations needed by factorizations,
//! square roots and tolerance checks.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// A number system closed under the four arithmetic operations.
pub trait Field: Num + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// Embeds a count.
    fn from_count(n: usize) -> Self;

    /// Embeds a signed integer.
    fn from_int(n: i64) -> Self {
        if n < 0 {
            Self::zero() - Self::from_count(n.unsigned_abs() as usize)
        } else {
            Self::from_count(n as usize)
        }
    }
}

macro_rules! float_field {
    ($t:ty) => {
        impl Field for $t {
            fn from_count(n: usize) -> Self {
                n as $t
            }
        }
    };
}
float_field!(f32);
float_field!(f64);

macro_rules! ratio_field {
    ($t:ty) => {
        impl Field for Ratio<$t> {
            fn from_count(n: usize) -> Self {
                Ratio::from_integer(<$t>::try_from(n).expect("count exceeds integer range"))
            }
        }
    };
}
ratio_field!(i64);
ratio_field!(i128);

/// Floating-point scalar used by the numerical kernels.
pub trait Real: Field + Float + FromPrimitive + ToPrimitive + Sum + Display + Copy {
    /// Relative tolerance for pivots, definiteness and confounding checks.
    fn tolerance() -> Self;

    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f64 {
    fn tolerance() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn tolerance() -> Self {
        1e-5
    }
}

/// Sums a slice by recursive halving so the result depends only on the
/// order of the inputs, never on how the work was scheduled.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
