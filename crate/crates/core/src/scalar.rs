use num_traits::{FromPrimitive, NumCast};

/// Floating-point scalar for the geometry core: f32 or f64.
pub trait Real: nalgebra::RealField + FromPrimitive + NumCast + Copy {
    /// Shorthand for converting an `f64` constant into `Self`.
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("finite constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}
