//! Scalar abstraction for the numerical core.
//!
//! Everything numeric in this crate is generic over [`Scalar`] so the same
//! algorithms run in `f32` or `f64`. Concrete aliases for the common types
//! live at the crate root.

use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the solver stack.
///
/// `nalgebra::RealField` supplies the elementary functions and ordering,
/// `FromPrimitive`/`ToPrimitive` the conversions from and to literals,
/// counters and output formats.
pub trait Scalar: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}

impl<T> Scalar for T where T: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}

/// Convert an `f64` literal into the working scalar type.
///
/// Panics only if the target type cannot represent ordinary finite
/// literals, which does not happen for `f32`/`f64`.
#[inline]
pub fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("finite literal must convert")
}

/// Convert a count (order index, grid size) into the working scalar type.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count must convert")
}
