//! Quantum rejection sampling (QRS) for state preparation and block-encoding.
//!
//! Numerical routines are generic over [`numerics::Real`] (`f32` or `f64`). The aliases below
//! fix the scalar for the common cases.

pub mod blockenc;
pub mod error;
pub mod numerics;
pub mod qrs;
pub mod refdesign;
pub mod resources;
pub mod targets;

pub use error::{Error, Result};

pub type Amplitudes = numerics::AmplitudeVector<f64>;
pub type Target = targets::TargetSpec<f64>;
pub type Reference = refdesign::ReferenceSpec<f64>;
pub type Plan = qrs::SamplingPlan<f64>;
pub type Prepared = qrs::PreparedState<f64>;
pub type Matrix = blockenc::MatrixSpec<f64>;
pub type Model = blockenc::BlockModel<f64>;
pub type Encoding = blockenc::BlockEncodingResult<f64>;

pub type Amplitudes32 = numerics::AmplitudeVector<f32>;
pub type Target32 = targets::TargetSpec<f32>;
pub type Reference32 = refdesign::ReferenceSpec<f32>;
pub type Prepared32 = qrs::PreparedState<f32>;
