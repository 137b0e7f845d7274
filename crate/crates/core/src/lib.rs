//! Vaccinator allocation planning: district data, immunization need, road
//! travel times, a dense simplex and branch-and-bound solver, the two
//! allocation models and scenario sweeps over them.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the planning models use.

pub mod allocation;
pub mod district;
pub mod lp;
pub mod mip;
pub mod need;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod traveltime;

pub use scalar::Scalar;

pub type LinearProgram = lp::LinearProgram<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type MipInstance = mip::MipInstance<f64>;
pub type MipSolution = mip::MipSolution<f64>;
pub type SpeedModel = traveltime::SpeedModel<f64>;
pub type TravelTimeMatrix = traveltime::TravelTimeMatrix<f64>;
