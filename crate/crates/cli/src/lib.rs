//! Command-line driver for the viscosity finite volume solver: run
//! scheduling across mesh resolutions, analysis tables, field dumps and the
//! built-in invariant suite. The numerics live in `vfv-core`.

pub mod analyze;
pub mod config;
pub mod error;
pub mod fields_io;
pub mod manifest;
pub mod runs;
pub mod selftest;
