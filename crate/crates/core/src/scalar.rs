//! Floating-point abstraction used by every numeric module in this crate.
//!
//! All expectations, match qualities, and optimizer state are plain floating
//! point; nothing here needs exact arithmetic. Code is written against the
//! [`Scalar`] alias so the whole stack works at `f32` or `f64`; the crate root
//! exports `f64` aliases for the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Trait alias for the scalar type carried by instances, metrics, and
/// optimizer state.
///
/// Blanket-implemented for anything float-like that can round-trip through
/// `f64` and serde, which in practice means `f32` and `f64`.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Default
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal or intermediate into the working scalar type.
///
/// Panics only if the target type cannot represent finite `f64`s at all,
/// which no implementor of [`Scalar`] exhibits.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 must convert into the scalar type")
}

/// Lossy view of a scalar as `f64`, used for RNG thresholds and report output.
#[inline]
pub fn as_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().expect("scalar must convert to f64")
}
