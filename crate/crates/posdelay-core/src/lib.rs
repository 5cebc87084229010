//! Positivity, stability, and induced-gain analysis for linear positive
//! time-delay systems, with machine-checkable certificates.
//!
//! Six model classes are supported: delay-free LTI, discrete delays,
//! difference equations, coupled differential-difference systems,
//! distributed delays with exponential-polynomial kernels, and neutral
//! systems. For internally positive systems every stability test here is
//! exact (necessary and sufficient), and the L1/L2/Linf input-output gains
//! reduce to norms of a single static matrix. Each analyzer evaluates the
//! different equivalent characterizations independently (spectral radii,
//! feasibility LPs, Riccati/LMI witnesses) so that results cross-validate,
//! and emits certificates that re-verify by substitution alone.
//!
//! The crate is `no_std`-compatible (`alloc` is required; disable default
//! features and enable `libm`).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("building without `std` requires the `libm` feature");

pub(crate) mod math;

pub mod analysis;
pub mod lp;
pub mod matrix;
pub mod model;
pub mod sim;
pub mod spectral;
pub mod witness;

#[cfg(feature = "oracle")]
pub mod oracle;

pub use matrix::{DiagScaling, Matrix};
pub use spectral::Lp;
