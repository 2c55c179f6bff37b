//! Error type shared by the solver and statistics modules.

use alloc::string::String;
use core::fmt;

/// Errors produced by construction, solver and statistics routines.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A pointwise sample evaluated to NaN or infinity during projection.
    NonFiniteSample { cell: usize, coords: [usize; 3] },
    /// A cell density is zero or negative where positivity is required.
    NonPositiveDensity { cell: usize, value: f64 },
    /// A field value vector has the wrong length for its mesh.
    FieldLength { expected: usize, got: usize },
    /// Two fields live on meshes of different spatial dimension.
    DimensionMismatch { a: usize, b: usize },
    /// Two fields were expected on the same mesh.
    MeshMismatch { expected_k: usize, got_k: usize },
    /// Invalid mesh or scheme parameter.
    InvalidParameter(String),
    /// The nonlinear solve did not reach the requested residual.
    PicardDiverged { residual: f64, iterations: usize },
    /// The inner linear solve stalled.
    LinearSolveDiverged { residual: f64, sweeps: usize },
    /// A weight function evaluated to a negative value.
    NegativeWeight { t: f64, value: f64 },
    /// Summation row length does not match the item count.
    RowLengthMismatch { row: usize, items: usize },
    /// Atom weights of an empirical measure do not sum to one.
    UnnormalizedMeasure { total: f64 },
    /// Atoms of the two measures live in different dimensions.
    AtomDimensionMismatch { a: usize, b: usize },
    /// Combined atom count exceeds the optimal-transport solver cap.
    AtomCapExceeded { atoms: usize, cap: usize },
    /// The transportation solve exceeded its pivot budget.
    TransportStalled { pivots: usize },
    /// A spatial subdomain selected no cells.
    EmptyRegion,
    /// A run required by an analysis is missing.
    MissingRun(String),
    /// Density history was not recorded during the run.
    NoDensityHistory,
    /// Errors must be positive to compute a convergence order.
    ZeroError,
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::NonFiniteSample { cell, coords } => write!(
                f,
                "non-finite sample in cell {} at indices ({}, {}, {})",
                cell, coords[0], coords[1], coords[2]
            ),
            CoreError::NonPositiveDensity { cell, value } => {
                write!(f, "non-positive density {value} in cell {cell}")
            }
            CoreError::FieldLength { expected, got } => {
                write!(f, "field has {got} values, mesh needs {expected}")
            }
            CoreError::DimensionMismatch { a, b } => {
                write!(f, "spatial dimensions differ: {a} vs {b}")
            }
            CoreError::MeshMismatch { expected_k, got_k } => {
                write!(f, "fields on different meshes: k={expected_k} vs k={got_k}")
            }
            CoreError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            CoreError::PicardDiverged {
                residual,
                iterations,
            } => write!(
                f,
                "Picard iteration did not converge: residual {residual:.3e} after {iterations} iterations"
            ),
            CoreError::LinearSolveDiverged { residual, sweeps } => write!(
                f,
                "linear solve stalled at residual {residual:.3e} after {sweeps} sweeps"
            ),
            CoreError::NegativeWeight { t, value } => {
                write!(f, "weight function is negative at t={t}: {value}")
            }
            CoreError::RowLengthMismatch { row, items } => {
                write!(f, "summation row length {row} does not match {items} items")
            }
            CoreError::UnnormalizedMeasure { total } => {
                write!(f, "measure weights sum to {total}, expected 1")
            }
            CoreError::AtomDimensionMismatch { a, b } => {
                write!(f, "atom dimensions differ: {a} vs {b}")
            }
            CoreError::AtomCapExceeded { atoms, cap } => write!(
                f,
                "{atoms} atoms exceed the transport cap {cap}; subsample the measures first"
            ),
            CoreError::TransportStalled { pivots } => {
                write!(f, "transportation simplex exceeded {pivots} pivots")
            }
            CoreError::EmptyRegion => write!(f, "subdomain contains no cell centers"),
            CoreError::MissingRun(what) => write!(f, "missing run: {what}"),
            CoreError::NoDensityHistory => {
                write!(f, "trajectory was run without density history or matching threshold")
            }
            CoreError::ZeroError => write!(f, "convergence order undefined for zero error"),
        }
    }
}

impl core::error::Error for CoreError {}
