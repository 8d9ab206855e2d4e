use thiserror::Error;

/// Errors produced by the simulation kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// Chain length outside the supported range.
    #[error("chain of {n_sites} sites outside supported range 1..={cap}")]
    Size { n_sites: usize, cap: usize },

    /// An operation requiring dense 2^N x 2^N storage was asked for a chain
    /// that is too long.
    #[error("dense operations support at most {max} sites, got {n_sites}")]
    DenseSize { n_sites: usize, max: usize },

    /// Vector or matrix dimensions do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A harmonic mask was applied to a ket that is already up on one of the
    /// transition sites.
    #[error("harmonic mask {mask:#b} overlaps up bits of basis state {bits:#b}")]
    IncompatibleMask { bits: u32, mask: u32 },

    /// State vector norm deviates too far from unity.
    #[error("state is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    /// Density matrix violates Hermiticity, unit trace or positivity.
    #[error("density matrix violates {what}: deviation {deviation:.3e}")]
    InvalidDensity {
        what: &'static str,
        deviation: f64,
    },

    /// Input to the eigensolver is not symmetric.
    #[error("matrix is not symmetric: max asymmetry {deviation:.3e}")]
    NotSymmetric { deviation: f64 },

    /// A model parameter is NaN or infinite.
    #[error("parameter `{name}` is not finite")]
    NonFinite { name: &'static str },

    /// Invalid scalar argument (negative step, bad window, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Krylov propagation could not reach the requested accuracy.
    #[error("Krylov step failed to converge after {bisections} bisections (residual {residual:.3e})")]
    NonConvergence { bisections: usize, residual: f64 },

    /// Not enough data to evaluate a statistic.
    #[error("insufficient data for {what}: have {got}, need {need}")]
    InsufficientData {
        what: &'static str,
        got: usize,
        need: usize,
    },

    /// The dense eigensolver failed.
    #[error("eigendecomposition failed: {0}")]
    Eigensolver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
