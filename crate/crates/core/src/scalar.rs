use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, NumCast};

/// Floating-point scalar the numeric layer is generic over.
pub trait Scalar: Float + FloatConst + Debug + Display + Default + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
