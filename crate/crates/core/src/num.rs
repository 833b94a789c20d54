//! Scalar abstraction for the numerical core.
//!
//! Everything downstream is generic over [`Real`] so the same code runs in
//! `f32` and `f64`. The special functions are evaluated through their `f64`
//! implementations; that is full precision for `f64` and strictly more
//! accurate than a native single-precision evaluation for `f32`.

use num_traits::{Float, FloatConst, FromPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar usable by the simulation and distribution code.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting an `f64` constant into `Self`.
    fn of(x: f64) -> Self;

    /// Widen to `f64` (exact for `f64`, the usual rounding for `f32`).
    fn as_f64(self) -> f64;

    /// One standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Error function.
    fn erf(self) -> Self;

    /// Complementary error function.
    fn erfc(self) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample::<$t, _>(StandardNormal)
            }

            #[inline]
            fn erf(self) -> Self {
                libm::erf(self as f64) as $t
            }

            #[inline]
            fn erfc(self) -> Self {
                libm::erfc(self as f64) as $t
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
