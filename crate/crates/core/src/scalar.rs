//! Scalar abstraction so the solver stack runs in `f32` or `f64`.

use nalgebra::RealField;
use num_traits::FromPrimitive;
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar the library is generic over.
///
/// Implemented for `f32` and `f64`; `of` converts literals and config
/// values, rounding to the target precision.
pub trait Scalar: RealField + Copy + FromPrimitive {
    fn of(value: f64) -> Self;
    fn to_f64(self) -> f64;
    fn is_finite(self) -> bool;
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn of(value: f64) -> Self {
                value as $t
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }

            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample(StandardNormal)
            }

            #[inline]
            fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
                if lo == hi {
                    return lo;
                }
                rng.random_range(lo..hi)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
