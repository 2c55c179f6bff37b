//! Viscosity finite volume (VFV) method for the barotropic Euler system on the
//! unit torus, together with the statistics pipeline used to study convergence
//! of ensemble averages across mesh resolutions: regular summation methods,
//! weighted averages and first variances, Wasserstein distances of empirical
//! measures, and experimental-order-of-convergence tables.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature switches the float math from `libm` to the platform libm.
//!
//! Everything here is pure computation over piecewise-constant cell data.
//! File formats, configuration and run orchestration live in the companion
//! `vfv` binary crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod math;

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod measure;
pub mod ops;
pub mod scheme;
pub mod summation;
mod transport;

pub use error::CoreError;
pub use grid::{Face, Mesh, ScalarField, VectorField};
pub use scheme::{SchemeParams, State, StepReport, TimeMode, Trajectory};
