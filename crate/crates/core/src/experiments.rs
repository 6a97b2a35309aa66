//! Seedable generators for the benchmark instance families.
//!
//! Draw order is part of the contract so traces are reproducible:
//! - [`random_orthogonal`]: `n²` standard normals, column-major, then the Q
//!   factor with positive-diagonal convention.
//! - [`random_symmetric_set`]: for each matrix, `n²` standard normals
//!   (column-major), symmetrized as `(G + G^T)/2`.
//! - [`perturbed_optimum_instance`]: one orthogonal `P` as above; then for
//!   each of the `count` matrices `n` uniforms in `(0, 1)` sorted descending;
//!   then `n·p` uniforms in `(-scale, scale)` for the start perturbation.

use crate::jdcore::SymmetricSet;
use crate::matrix::DenseMatrix;
use crate::rng::PortableRng;
use crate::scalar::Scalar;
use crate::stiefel::StiefelPoint;

/// Haar-ish random orthogonal matrix: Q factor of a standard Gaussian matrix
/// with the positive-diagonal R convention.
pub fn random_orthogonal<T: Scalar>(n: usize, rng: &mut PortableRng) -> DenseMatrix<T> {
    DenseMatrix::from_fn(n, n, |_, _| rng.normal()).qf()
}

/// Random point on St(p,n): Q factor of an `n x p` standard Gaussian matrix.
pub fn random_stiefel<T: Scalar>(n: usize, p: usize, rng: &mut PortableRng) -> StiefelPoint<T> {
    StiefelPoint::from_qf(&DenseMatrix::from_fn(n, p, |_, _| rng.normal()))
        .expect("Gaussian matrix is full rank almost surely")
}

/// `count` symmetrized standard-Gaussian matrices.
pub fn random_symmetric_set<T: Scalar>(
    n: usize,
    count: usize,
    rng: &mut PortableRng,
) -> SymmetricSet<T> {
    let half = T::cst(0.5);
    let mats = (0..count)
        .map(|_| {
            let g = DenseMatrix::from_fn(n, n, |_, _| rng.normal::<T>());
            DenseMatrix::from_fn(n, n, |r, c| (g.get(r, c) + g.get(c, r)) * half)
        })
        .collect();
    SymmetricSet::new(mats).expect("symmetrized matrices are symmetric")
}

/// A commuting family `A_l = P Λ_l P^T` (exactly jointly diagonalizable),
/// with uniform `(-1, 1)` diagonals.
pub fn commuting_set<T: Scalar>(
    n: usize,
    count: usize,
    rng: &mut PortableRng,
) -> (SymmetricSet<T>, DenseMatrix<T>) {
    let p = random_orthogonal::<T>(n, rng);
    let mats = (0..count)
        .map(|_| {
            let d: Vec<T> = (0..n).map(|_| rng.uniform_in(-T::one(), T::one())).collect();
            let a = p.scale_cols(&d).matmul_nt(&p);
            let mut a = a;
            a.symmetrize_in_place();
            a
        })
        .collect();
    (SymmetricSet::new(mats).expect("constructed symmetric"), p)
}

/// Instance with a known optimum: `A_l = P Λ_l P^T` with positive descending
/// diagonals, `Y_opt = P I_{n,p}`, started from `qf(Y_opt + Y_rand)` where
/// `Y_rand` has entries uniform in `(-perturbation_scale, perturbation_scale)`.
#[derive(Debug, Clone)]
pub struct PerturbedOptimum<T> {
    pub set: SymmetricSet<T>,
    pub y_opt: StiefelPoint<T>,
    pub y_start: StiefelPoint<T>,
    pub f_opt: T,
}

pub fn perturbed_optimum_instance<T: Scalar>(
    n: usize,
    p: usize,
    count: usize,
    perturbation_scale: T,
    rng: &mut PortableRng,
) -> PerturbedOptimum<T> {
    let pmat = random_orthogonal::<T>(n, rng);
    let mats: Vec<DenseMatrix<T>> = (0..count)
        .map(|_| {
            let mut d: Vec<T> = (0..n).map(|_| rng.uniform::<T>()).collect();
            d.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
            let mut a = pmat.scale_cols(&d).matmul_nt(&pmat);
            a.symmetrize_in_place();
            a
        })
        .collect();
    let set = SymmetricSet::new(mats).expect("constructed symmetric");
    let y_opt = StiefelPoint::new(DenseMatrix::from_fn(n, p, |r, c| pmat.get(r, c)))
        .expect("orthogonal columns");
    let mut w = y_opt.matrix().clone();
    let pert = DenseMatrix::from_fn(n, p, |_, _| {
        rng.uniform_in(-perturbation_scale, perturbation_scale)
    });
    w.axpy(T::one(), &pert);
    let y_start = StiefelPoint::from_qf(&w).expect("small perturbation keeps full rank");
    let f_opt = crate::jdcore::objective(&set, &y_opt).expect("conforming dims");
    PerturbedOptimum {
        set,
        y_opt,
        y_start,
        f_opt,
    }
}
