use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("quasi-norm `{family}` is incompatible with dilation exponents {nu:?}: {reason}")]
    IncompatibleNorm { family: String, nu: Vec<f64>, reason: &'static str },

    #[error("dilation scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("radial derivative is undefined at the origin")]
    AtOrigin,

    #[error("field `{field}` is not evaluable at {point:?}")]
    OutsideDomain { field: String, point: Vec<f64> },

    /// A hard hypothesis guard (e.g. `Q >= 3`) was violated.
    #[error("hypothesis violated: {requirement} (Q = {q})")]
    HypothesisViolation { requirement: &'static str, q: f64 },

    #[error("invalid field parameters: {0}")]
    InvalidField(String),

    #[error("field `{0}` has no compact support annulus")]
    NoSupport(String),

    #[error("invalid quadrature settings: {0}")]
    InvalidSettings(String),

    #[error("integrand is unbounded on [{a}, {b}] with weight exponent {exponent}")]
    UnboundedIntegrand { a: f64, b: f64, exponent: f64 },

    #[error("integration box half-width {half_width} on axis {axis} does not cover the support extent {required}")]
    BoxTruncatesSupport { axis: usize, half_width: f64, required: f64 },

    #[error("tensor-grid integration limited to n <= 3, got n = {0}")]
    DimensionTooLarge(usize),

    #[error("sphere measure constant inconsistent: {first} vs {second} (relative discrepancy {discrepancy:.3e})")]
    SphereConstantMismatch { first: f64, second: f64, discrepancy: f64 },

    #[error("invalid Rayleigh problem: {0}")]
    InvalidProblem(String),

    #[error("Rayleigh quotient has a zero denominator")]
    ZeroDenominator,

    #[error(
        "eigensolver did not converge after {iterations} iterations (last change {last_change:.3e}, shift {shift})"
    )]
    EigenNonConvergence { iterations: usize, last_change: f64, shift: f64 },

    #[error("inconsistent quadrature: {0}")]
    InconsistentQuadrature(String),
}
