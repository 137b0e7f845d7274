//! Floating point abstraction shared by the LP, MIP and travel-time kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar the numerical kernels can run on.
///
/// Tolerances are tied to the precision of the type: the `f64` values are the
/// documented solver constants, the `f32` values are loosened to what single
/// precision can actually resolve.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Primal feasibility tolerance.
    const FEASIBILITY_TOL: Self;
    /// Reduced-cost (optimality) tolerance.
    const REDUCED_COST_TOL: Self;
    /// Smallest magnitude accepted as a pivot element.
    const PIVOT_TOL: Self;
    /// Distance to the nearest integer under which a value counts as integral.
    const INTEGRALITY_TOL: Self;

    /// Lossy conversion from `f64`; panics only for values the type cannot represent at all.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("value representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const FEASIBILITY_TOL: Self = 1e-7;
    const REDUCED_COST_TOL: Self = 1e-9;
    const PIVOT_TOL: Self = 1e-11;
    const INTEGRALITY_TOL: Self = 1e-6;
}

impl Scalar for f32 {
    const FEASIBILITY_TOL: Self = 1e-4;
    const REDUCED_COST_TOL: Self = 1e-5;
    const PIVOT_TOL: Self = 1e-6;
    const INTEGRALITY_TOL: Self = 1e-4;
}
