//! Monte Carlo simulation of random walks whose drift depends on the distance to their
//! own centre of mass, with estimators for the resulting scaling laws, an analytic phase
//! classifier, and scalar time-inhomogeneous chains of the same type.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the experiment runner uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN.

pub mod analysis;
pub mod classifier;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod lamperti1d;
pub mod models;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod sphere;
pub mod vector;

pub use error::{CoreError, Result};
pub use rng::RngHandle;
pub use scalar::Scalar;

pub type Vector = vector::VectorD<f64>;
pub type Model = models::ModelSpec<f64>;
pub type Moments = models::MomentSummary<f64>;
pub type State = engine::WalkState<f64>;
pub type Series = engine::ObservableSeries<f64>;
pub type Checkpoint = engine::Checkpoint<f64>;
pub type Options = engine::RunOptions<f64>;
pub type ScalarModel = lamperti1d::ScalarModelSpec<f64>;
pub type ScalarSeries = lamperti1d::StochApproxSeries<f64>;

pub type Vector32 = vector::VectorD<f32>;
pub type Model32 = models::ModelSpec<f32>;
pub type Series32 = engine::ObservableSeries<f32>;
