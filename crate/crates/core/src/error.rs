//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the linear-algebra, geometry, solver and pipeline layers.
///
/// Diagnostic magnitudes are stored as `f64` so the error type stays
/// independent of the scalar type in use.
#[derive(Debug, Error)]
pub enum Error {
    #[error("data length {got} does not match a {rows}x{cols} matrix")]
    InvalidData { rows: usize, cols: usize, got: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not skew-symmetric: defect {defect:e} exceeds tolerance {tol:e}")]
    NotSkew { defect: f64, tol: f64 },

    #[error("matrix is not symmetric: defect {defect:e} exceeds tolerance {tol:e}")]
    AsymmetricInput { defect: f64, tol: f64 },

    #[error("columns are not orthonormal: defect {defect:e} exceeds tolerance {tol:e}")]
    NotOrthonormal { defect: f64, tol: f64 },

    #[error("matrix is not tangent at the anchor point: defect {defect:e} exceeds tolerance {tol:e}")]
    NotTangent { defect: f64, tol: f64 },

    #[error("tangent vectors are anchored at different points")]
    AnchorMismatch,

    #[error("rank-deficient matrix in QR retraction: smallest R diagonal {rmin:e}")]
    RankDeficient { rmin: f64 },

    #[error("orthogonal complement: found only {found} of {needed} independent columns")]
    NumericalBreakdown { found: usize, needed: usize },

    #[error("Newton system is numerically singular: pivot ratio {pivot_ratio:e}")]
    SingularHessian { pivot_ratio: f64 },

    #[error("index out of range: {msg}")]
    IndexOutOfRange { msg: String },

    #[error("sample covariance is numerically singular: eigenvalue ratio {ratio:e}")]
    SingularCovariance { ratio: f64 },

    #[error("iteration did not converge: {what}")]
    ConvergenceFailure { what: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
