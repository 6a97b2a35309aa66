//! Joint approximate diagonalization of symmetric matrices on the Stiefel
//! manifold.
//!
//! Given `N` symmetric `n x n` matrices `A_1, ..., A_N`, the library
//! minimizes `f(Y) = -Σ_l ‖diag(Y^T A_l Y)‖_F²` over matrices `Y` with
//! orthonormal columns, using Riemannian Newton's method: at each iterate the
//! Newton equation is flattened through `vec`/`veck`/Kronecker calculus into
//! a dense linear system of size `dim St(p,n) = p(p-1)/2 + p(n-p)`, solved by
//! LU, and the step is pulled back through the QR retraction. A Jacobi-like
//! sweep method supplies warm starts, and a JADE pipeline reduces blind
//! source separation to this joint-diagonalization problem on the orthogonal
//! group.
//!
//! The numerical core is generic over the scalar type ([`Scalar`]: `f32` or
//! `f64`); concrete `f64` aliases for the main entry types live at the crate
//! root. Tolerances quoted in the documentation are calibrated for `f64` and
//! carry over to other scalars at the same relative position between 1 and
//! machine epsilon (see [`Scalar::tol`]).

pub mod error;
pub mod experiments;
pub mod ica;
pub mod io;
pub mod jacobi;
pub mod jdcore;
pub mod matrix;
pub mod matvec;
pub mod newton;
pub mod rng;
pub mod scalar;
pub mod stiefel;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use scalar::Scalar;
pub use stiefel::{Metric, StiefelPoint};

/// Concrete `f64` aliases for the main entry types.
pub type MatrixF64 = DenseMatrix<f64>;
pub type StiefelPointF64 = StiefelPoint<f64>;
pub type SymmetricSetF64 = jdcore::SymmetricSet<f64>;
pub type NewtonConfigF64 = newton::NewtonConfig<f64>;
pub type JDResultF64 = newton::JDResult<f64>;
pub type JacobiConfigF64 = jacobi::JacobiConfig<f64>;
pub type SignalMatrixF64 = ica::SignalMatrix<f64>;

/// Concrete `f32` aliases.
pub type MatrixF32 = DenseMatrix<f32>;
pub type StiefelPointF32 = StiefelPoint<f32>;
pub type SymmetricSetF32 = jdcore::SymmetricSet<f32>;
