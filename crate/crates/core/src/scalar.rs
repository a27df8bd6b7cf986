//! Scalar abstraction for the operator algebra.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::Serialize;
use serde::de::DeserializeOwned;

/// Real scalar field underlying every complex operator (`f32` or `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Serialize + DeserializeOwned + Default
{
    /// Lossy conversion from `f64`, used for tolerances and literals.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
