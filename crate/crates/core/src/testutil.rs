//! Small helpers shared by unit tests.

use crate::matrix::DenseMatrix;
use crate::rng::PortableRng;
use crate::scalar::Scalar;
use crate::stiefel::StiefelPoint;

pub fn assert_close(a: f64, b: f64, tol: f64) {
    assert!(
        (a - b).abs() <= tol,
        "values differ: {a} vs {b} (tol {tol})"
    );
}

/// Deterministic irregular matrix for tests (no RNG state needed).
pub fn seq_matrix(rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |r, c| {
        let k = (r * 31 + c * 17 + 7) % 23;
        (k as f64) * 0.37 - 3.1
    })
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut PortableRng) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

pub fn random_stiefel(n: usize, p: usize, rng: &mut PortableRng) -> StiefelPoint<f64> {
    StiefelPoint::from_qf(&random_matrix(n, p, rng)).unwrap()
}

pub fn rel_err<T: Scalar>(got: T, want: T) -> f64 {
    let denom = want.abs().max(T::cst(1e-30));
    ((got - want).abs() / denom).as_f64()
}
