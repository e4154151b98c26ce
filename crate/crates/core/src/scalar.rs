//! Floating-point abstraction used by the scoring, search and simulation code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the numerical modules are generic over. Implemented for
/// [`f32`] and [`f64`].
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Relative pivot tolerance below which a Gram matrix is treated as singular.
    fn pivot_tol() -> Self;

    fn half() -> Self;

    /// Lossy conversion from `f64`; every finite `f64` maps to some value.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to any Scalar")
    }

    fn of_usize(x: usize) -> Self {
        Self::of(x as f64)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn pivot_tol() -> Self {
        1e-10
    }

    fn half() -> Self {
        0.5
    }
}

impl Scalar for f32 {
    fn pivot_tol() -> Self {
        1e-5
    }

    fn half() -> Self {
        0.5
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    T::of(statrs::function::gamma::ln_gamma(x.to_f64_lossy()))
}
