//! Floating-point scalar abstraction shared by the numerics, encoder and
//! reasoner.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar the reasoner can run on.
///
/// The associated tolerances are expressed as `f64` and converted on use, so
/// one set of thresholds covers both precisions.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Relative cutoff for singular values: anything below
    /// `RANK_RTOL * sigma_max` is treated as zero.
    const RANK_RTOL: f64;
    /// Strict-positivity threshold for the Heaviside activation.
    const POSITIVE_EPS: f64;
    /// Coefficients with magnitude at or below this are reported as ReLU kinks.
    const KINK_EPS: f64;

    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to any Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const RANK_RTOL: f64 = 1e-10;
    const POSITIVE_EPS: f64 = 1e-9;
    const KINK_EPS: f64 = 1e-6;
}

impl Scalar for f32 {
    const RANK_RTOL: f64 = 1e-5;
    const POSITIVE_EPS: f64 = 1e-4;
    const KINK_EPS: f64 = 1e-3;
}
