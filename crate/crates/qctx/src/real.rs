//! Scalar abstraction shared by the generic numerical core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};

/// Floating-point scalar the algebraic modules are generic over.
///
/// Implemented for `f32` and `f64`. The statistical layers work in `f64`.
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent it.
    fn lit(x: f64) -> Self {
        Self::from(x).expect("literal not representable")
    }

    /// Converts a count.
    fn from_usize(n: usize) -> Self {
        Self::from(n).expect("count not representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon scaled into a default structural tolerance.
    fn default_tol() -> Self {
        Self::epsilon().sqrt().min(Self::lit(1e-10)).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f64 as Real>::lit(0.25), 0.25);
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::from_usize(7), 7.0);
    }

    #[test]
    fn default_tol_matches_precision() {
        assert_eq!(<f64 as Real>::default_tol(), 1e-10);
        let t32 = <f32 as Real>::default_tol();
        assert!(t32 > f32::EPSILON && t32 < 1e-2);
    }
}
