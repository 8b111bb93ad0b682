//! Gaussian extremal inequalities for long Markov chains `U − X − Y − V`:
//! gap functionals, the dual function `F(λ)`, two-encoder rate regions and a
//! covering-ellipsoid Monte Carlo simulator.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

pub mod ellipsoid_codec;
pub mod error;
pub mod extremal;
pub mod gauss_model;
pub mod io;
pub mod linalg;
pub mod rate_region;
pub mod rng;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type PairModel64 = gauss_model::GaussianPairModel<f64>;
pub type PairModel32 = gauss_model::GaussianPairModel<f32>;
pub type AuxChannel64 = gauss_model::GaussianAuxChannel<f64>;
pub type AuxChannel32 = gauss_model::GaussianAuxChannel<f32>;
pub type InfoVector64 = gauss_model::InfoVector<f64>;
pub type InfoVector32 = gauss_model::InfoVector<f32>;
pub type DualValue64 = extremal::DualValue<f64>;
pub type RegionQuery64 = rate_region::RegionQuery<f64>;
pub type RegionVerdict64 = rate_region::RegionVerdict<f64>;
pub type CodecConfig64 = ellipsoid_codec::CodecConfig<f64>;
pub type CodecConfig32 = ellipsoid_codec::CodecConfig<f32>;
pub type SimulationReport64 = ellipsoid_codec::SimulationReport<f64>;
