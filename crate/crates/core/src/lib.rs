//! Joint measurability, incompatibility-preservability robustness bounds and
//! entanglement-assisted filter games for finite-dimensional quantum channels.
//!
//! The operator algebra in [`linalg`] and [`quantum`] is generic over the
//! real scalar ([`Real`], implemented for `f32` and `f64`). Everything that
//! goes through the SDP solver works in `f64`; the aliases below fix that
//! choice for the common types.

pub mod config;
pub mod game;
pub mod jm;
pub mod error;
pub mod linalg;
pub mod ops;
pub mod preservability;
pub mod quantum;
pub mod scalar;
pub mod sdp;
pub mod tol;

pub use config::Config;
pub use error::{Error, Result};
pub use linalg::Subsystem;
pub use scalar::Real;
pub use tol::Tolerances;

pub type ComplexMatrix = linalg::ComplexMatrix<f64>;
pub type QState = quantum::QState<f64>;
pub type Effect = quantum::Effect<f64>;
pub type Channel = quantum::Channel<f64>;
pub type Filter = quantum::Filter<f64>;
pub type MeasurementAssemblage = quantum::MeasurementAssemblage<f64>;

pub type ComplexMatrixF32 = linalg::ComplexMatrix<f32>;
pub type ChannelF32 = quantum::Channel<f32>;
