//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by construction and numeric routines.
///
/// Diagnostic payloads are stored as `f64` regardless of the working scalar
/// type so the error type stays object-safe and serializable in reports.
#[derive(Debug, Clone, Error)]
pub enum GeomError {
    /// `phi` or one of its derivatives left the floating range.
    #[error("phi evaluation overflowed or was non-finite at u = {u}")]
    PhiOverflow { u: f64 },

    /// Validation grid produced a non-finite value; validation aborts.
    #[error("non-finite phi value at grid point u = {u}")]
    NonFiniteEval { u: f64 },

    /// Kaniadakis deformation parameter outside (-1, 1) \ {0}.
    #[error("kappa = {kappa} outside (-1, 1); use kind = exponential for kappa = 0")]
    InvalidKappa { kappa: f64 },

    #[error("invalid sample space: {0}")]
    InvalidSpace(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    /// Two objects that must live on the same space do not.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Expectation denominator `∫ u0 φ'(f) dμ` degenerate.
    #[error("degenerate expectation weight: denominator = {denom}")]
    DegenerateWeight { denom: f64 },

    /// Direction collapsed to (numerically) zero after projection.
    #[error("degenerate direction: raw vector is parallel to u0")]
    DegenerateDirection,

    /// Supplied direction set is not linearly independent.
    #[error("direction set is rank deficient ({rank} < {expected})")]
    RankDeficientDirections { rank: usize, expected: usize },

    /// Normalizer bracket expansion exceeded its cap.
    #[error("normalizer solve failed: bracket expansion exceeded {cap}")]
    UnboundedNormalizer { cap: f64 },

    /// Normalizer root located but the residual never met tolerance.
    #[error("normalizer solve stalled: residual = {residual}")]
    NormalizerResidual { residual: f64 },

    /// Metric failed the positive-definiteness certificate.
    #[error("metric is not positive definite; eigenvalues = {eigenvalues:?}")]
    NotPositiveDefinite { eigenvalues: Vec<f64> },

    /// The two analytic metric forms disagree beyond tolerance.
    #[error("metric forms disagree: max |g1 - g2| = {max_err}")]
    MetricFormMismatch { max_err: f64 },

    /// Divergence weight `φ'(φ⁻¹(p))` vanished or blew up.
    #[error("singular divergence weight at sample index {index}")]
    SingularWeight { index: usize },

    /// Geodesic or transport integration failed partway along the path.
    #[error("path integration failed after t = {last_t}: {source}")]
    TruncatedPath {
        last_t: f64,
        #[source]
        source: Box<GeomError>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = GeomError> = std::result::Result<T, E>;
