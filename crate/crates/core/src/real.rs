//! Floating-point scalar abstraction for the numeric lane (evaluation,
//! sampled zero-testing, integration). The symbolic tree itself stays
//! exact-rational; only these consumers are generic over the float width.

use std::fmt::{Debug, Display};

/// Float scalar usable by the numeric layer: `f32` or `f64`.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + num_traits::ToPrimitive + Debug + Display + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }
}

impl Real for f32 {}
impl Real for f64 {}
