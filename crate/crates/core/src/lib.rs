//! Numerical core for joint channel acquisition and reflection customization
//! in MIMO links assisted by several reconfigurable intelligent surfaces.
//!
//! The modules follow the signal chain: [`geometry`] and [`channel`] build the
//! propagation model, [`training`] synthesizes and separates pilot signals,
//! [`nomp`] extracts path parameters, [`positioning`] picks the LoS paths,
//! [`customization`] designs the reflections, [`downlink`] estimates the
//! customized channel at the UE and [`metrics`] scores the outcome.

pub mod channel;
pub mod customization;
pub mod downlink;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod nomp;
pub mod positioning;
pub mod training;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate (column-major).
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
