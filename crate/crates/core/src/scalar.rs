//! Scalar abstraction: every numerical routine in this crate is generic over
//! a floating-point type implementing [`Scalar`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable throughout the crate (`f32` or `f64`).
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn cst(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must be representable")
    }

    /// A tolerance calibrated for `f64` precision, carried to this scalar
    /// type at the same relative position between 1 and machine epsilon in
    /// log space: with `base = eps_f64^t`, returns `eps_Self^t`. For `f64`
    /// this is `base` exactly; for `f32`, e.g., `1e-10` maps to about `5e-5`.
    #[inline]
    fn tol(base: f64) -> Self {
        let eps = Self::epsilon().to_f64().unwrap_or(f64::EPSILON);
        if eps == f64::EPSILON {
            return Self::cst(base);
        }
        let frac = base.ln() / f64::EPSILON.ln();
        Self::cst(eps.powf(frac))
    }

    /// Lossy conversion to `f64` for reporting and diagnostics.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
