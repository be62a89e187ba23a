//! Floating point abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// A real scalar the encoders, optimizer and probe can be instantiated with.
///
/// Parameters normally live in `f32`; gradient checking instantiates the same
/// code with `f64`. Reductions always accumulate in `f64` through [`widen`]
/// and come back through [`narrow`].
///
/// [`widen`]: Scalar::widen
/// [`narrow`]: Scalar::narrow
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    const NAME: &'static str;

    fn widen(self) -> f64;
    fn narrow(x: f64) -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::narrow(x)
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn widen(self) -> f64 {
        self as f64
    }

    #[inline]
    fn narrow(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn widen(self) -> f64 {
        self
    }

    #[inline]
    fn narrow(x: f64) -> Self {
        x
    }
}

/// Dot product with an `f64` accumulator.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.widen() * y.widen()).sum()
}

/// Euclidean norm with an `f64` accumulator.
#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> f64 {
    dot(a, a).sqrt()
}
