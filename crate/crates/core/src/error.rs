//! Error types shared across the crate.
//!
//! Every fallible operation returns [`CoreError`] through the crate-wide
//! [`Result`] alias. Numerical-tolerance failures carry the offending
//! magnitude so callers can report how far outside tolerance a quantity
//! landed, not merely that it did.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;

/// Errors produced by state construction, channel application, integration,
/// and optimization.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// A mode index addressed a mode the space does not have.
    #[error("mode index {mode} out of range for a {n_modes}-mode space")]
    ModeOutOfRange {
        /// Requested mode index.
        mode: usize,
        /// Number of modes in the space.
        n_modes: usize,
    },

    /// A two-mode operation was asked to couple modes of different dimension.
    #[error("mode dimensions must match: {0} vs {1}")]
    UnequalModeDims(usize, usize),

    /// The truncated Fock space is too small for the requested object
    /// (displacement amplitude, state amplitude, or quadrature range).
    #[error("Fock truncation inadequate: {0}")]
    TruncationInadequate(String),

    /// A parameter violated its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A matrix that must be Hermitian was not, beyond tolerance.
    #[error("matrix not Hermitian: max |A - A\u{2020}| = {0:.3e}")]
    NonHermitian(f64),

    /// A density matrix trace strayed from one beyond tolerance.
    #[error("density-matrix trace deviates from one by {0:.3e}")]
    TraceDeviation(f64),

    /// An eigenvalue of a density matrix was negative beyond the clamping
    /// tolerance, indicating the state is not physically valid.
    #[error("density-matrix eigenvalue {0:.3e} is negative beyond tolerance")]
    NegativeEigenvalue(f64),

    /// Gauss–Hermite node doubling failed to stabilize the phase-averaged
    /// state within the node budget.
    #[error(
        "phase-average quadrature did not converge: \
         change {residual:.3e} after {nodes} nodes"
    )]
    QuadratureNonConvergence {
        /// Node count of the last (largest) rule tried.
        nodes: usize,
        /// Max elementwise change between the last two rules.
        residual: f64,
    },

    /// Quadrature-grid doubling failed to stabilize a projected entropy.
    #[error("entropy grid refinement did not converge: last change {0:.3e} bits")]
    GridNonConvergence(f64),

    /// A derivative-free optimizer stopped without meeting its tolerance.
    #[error("optimizer stagnated: objective spread {0:.3e} after {1} iterations")]
    OptimizerStagnation(f64, usize),

    /// An operation restricted to pure states received a mixed state.
    #[error("input state is not pure: purity = {0}")]
    NonPureInput(f64),

    /// The measured mode has weight outside the displaced-qubit subspace
    /// beyond tolerance, so the two-element measurement is incomplete.
    #[error(
        "measurement support leaks outside the displaced-qubit subspace \
         (complement probability {0:.3e}); grow the truncation"
    )]
    SubspaceLeakage(f64),

    /// A discord evaluation produced a negative value beyond the clamping
    /// tolerance, indicating a numerical-integrity problem upstream.
    #[error("discord evaluated to {0:.3e}, negative beyond tolerance")]
    NegativeDiscord(f64),
}
