//! Semi-classical model of non-degenerate four-wave mixing in a hot-vapor
//! double-lambda system.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`]: validated physical inputs and beam kinematics (rates in units
//!   of the excited-state decay rate `gamma`).
//! - [`susceptibility`]: closed-form probe/conjugate susceptibilities to all
//!   orders in the pump, plus the pump refractive index.
//! - [`propagation`]: coupled-mode coefficients and the twin-beam solution,
//!   closed form and RK4 cross-check.
//! - [`oracle`]: brute-force density-matrix steady state used to verify the
//!   closed forms.
//! - [`doppler`]: thermal velocity averaging of the susceptibilities.
//! - [`sweep`], [`dataset`], [`fit`]: gain maps, measured-gain ingestion and
//!   damped least-squares parameter extraction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod dataset;
pub mod doppler;
pub mod error;
pub mod fit;
pub mod oracle;
pub mod params;
pub mod propagation;
pub mod quadrature;
pub mod susceptibility;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64;
