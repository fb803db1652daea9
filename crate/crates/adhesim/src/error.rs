//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by geometry construction, operator evaluation, time
/// stepping, analysis oracles and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A geometry or model parameter violates its stated constraint.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// The grid spacing is too coarse to resolve the requested boundary.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// The normal-extension band does not fit inside the domain.
    #[error("band-overlap error: band width {band} >= inradius {inradius}")]
    BandOverlap { band: f64, inradius: f64 },

    /// An operation was requested on a geometry it is not defined for.
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    /// Field and geometry shapes disagree.
    #[error("dimension error: expected {expected} cells, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A velocity or state field contains NaN/Inf; the step is aborted.
    #[error("propagation error: {0}")]
    Propagation(String),

    /// The explicit step blew past the stability ceiling.
    #[error("instability at step {step} (t = {t}): {detail}")]
    Instability { step: usize, t: f64, detail: String },

    /// A functional was evaluated outside its domain (e.g. log of v <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// Picard iteration failed to contract within the iteration budget.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    /// Configuration file problems; every violation is listed, not just the
    /// first one.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    /// A snapshot file failed its magic/length integrity checks.
    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
