//! Scalar abstraction the rest of the crate is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar: `f32` or `f64`.
///
/// Everything numeric in this crate (complex samples, matrices, network
/// weights) is parameterized on this trait so the same code can run in
/// single or double precision. File formats always store `f64`; the
/// conversions below are the single funnel between the two worlds.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this type, rounding if needed.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 must convert")
    }

    /// Widens to `f64` (exact for both supported types).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real widens to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
