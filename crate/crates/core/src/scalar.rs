//! Scalar abstraction for the closed-form safety math.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn half() -> Self {
        Self::lit(0.5)
    }

    fn two() -> Self {
        Self::lit(2.0)
    }

    /// `[x]⁺`
    fn positive_part(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
