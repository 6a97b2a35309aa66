//! Matrix-calculus toolkit: column-stacking operators `vec` and `veck`, the
//! Kronecker product, and the structural matrices that flatten matrix
//! equations — the commutation matrix `T_n` (vec(W) -> vec(W^T)), the
//! diagonal selector `Δ_n` (vec(W) -> vec(diag(W))), and the skew
//! duplication matrix `D_n` (veck(S) -> vec(S)).
//!
//! Structural matrices are index maps applied without materializing any
//! `n² x n²` storage; dense materializations exist for cross-checks.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Column-major stacking of a matrix into a vector.
pub fn vec<T: Scalar>(w: &DenseMatrix<T>) -> Vec<T> {
    w.data().to_vec()
}

/// Inverse of [`vec`].
pub fn unvec<T: Scalar>(v: &[T], rows: usize, cols: usize) -> DenseMatrix<T> {
    DenseMatrix::new(rows, cols, v.to_vec()).expect("unvec length mismatch")
}

/// Number of strictly-lower-triangular entries of an `n x n` matrix.
#[inline]
pub fn veck_len(n: usize) -> usize {
    n * (n - 1) / 2
}

/// `(row, col)` of the `k`-th strictly-lower-triangular entry, stacked
/// column by column. Inverse of [`veck_index`].
pub fn veck_pair(n: usize, k: usize) -> (usize, usize) {
    debug_assert!(k < veck_len(n));
    let mut col = 0;
    let mut off = k;
    while off >= n - 1 - col {
        off -= n - 1 - col;
        col += 1;
    }
    (col + 1 + off, col)
}

/// Position of entry `(row, col)` with `row > col` in the veck ordering.
pub fn veck_index(n: usize, row: usize, col: usize) -> usize {
    debug_assert!(row > col && row < n);
    // Offset of column `col`'s block: (n-1) + (n-2) + ... + (n-col).
    col * (n - 1) - col * (col.saturating_sub(1)) / 2 + (row - col - 1)
}

/// All veck positions as `(row, col)` pairs, in order.
pub fn veck_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(veck_len(n));
    for col in 0..n {
        for row in (col + 1)..n {
            out.push((row, col));
        }
    }
    out
}

/// Stacks the strictly-lower-triangular part of a skew-symmetric matrix
/// column by column. The input must be skew-symmetric within a relative
/// tolerance of `1e-12` (absolute floor `1e-300`).
pub fn veck<T: Scalar>(s: &DenseMatrix<T>) -> Result<Vec<T>> {
    if !s.is_square() {
        return Err(Error::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let n = s.rows();
    let mut defect_sq = T::zero();
    for c in 0..n {
        for r in 0..=c {
            let d = s.get(r, c) + s.get(c, r);
            defect_sq += d * d;
            if r != c {
                defect_sq += d * d;
            }
        }
    }
    let defect = defect_sq.sqrt();
    let tol = (T::tol(1e-12) * s.fro_norm()).max(T::cst(1e-300));
    if defect > tol {
        return Err(Error::NotSkew {
            defect: defect.as_f64(),
            tol: tol.as_f64(),
        });
    }
    let mut out = Vec::with_capacity(veck_len(n));
    for col in 0..n {
        for row in (col + 1)..n {
            out.push(s.get(row, col));
        }
    }
    Ok(out)
}

/// Expands veck coordinates back into a skew-symmetric matrix.
pub fn unveck<T: Scalar>(v: &[T], n: usize) -> DenseMatrix<T> {
    assert_eq!(v.len(), veck_len(n), "unveck length mismatch");
    let mut s = DenseMatrix::zeros(n, n);
    let mut k = 0;
    for col in 0..n {
        for row in (col + 1)..n {
            s.set(row, col, v[k]);
            s.set(col, row, -v[k]);
            k += 1;
        }
    }
    s
}

/// Kronecker product `u ⊗ v`.
pub fn kron<T: Scalar>(u: &DenseMatrix<T>, v: &DenseMatrix<T>) -> DenseMatrix<T> {
    let (m, n) = u.shape();
    let (p, q) = v.shape();
    let mut out = DenseMatrix::zeros(m * p, n * q);
    for ju in 0..n {
        for jv in 0..q {
            let col = ju * q + jv;
            for iu in 0..m {
                let uij = u.get(iu, ju);
                if uij == T::zero() {
                    continue;
                }
                for iv in 0..p {
                    out.set(iu * p + iv, col, uij * v.get(iv, jv));
                }
            }
        }
    }
    out
}

/// Which structural operator a [`StructuralMatrix`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralKind {
    /// `T_n`: the `n² x n²` permutation with `T_n vec(W) = vec(W^T)`.
    Commutation,
    /// `Δ_n`: the `n² x n²` diagonal selector with `Δ_n vec(W) = vec(diag(W))`.
    DiagSelector,
    /// `D_n`: the `n² x n(n-1)/2` matrix with `D_n veck(S) = vec(S)` for skew `S`.
    SkewDuplication,
}

/// A structural matrix applied as an index map, with an optional dense
/// materialization for cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuralMatrix {
    kind: StructuralKind,
    n: usize,
}

/// The commutation matrix `T_n`.
pub fn commutation(n: usize) -> StructuralMatrix {
    assert!(n >= 1);
    StructuralMatrix {
        kind: StructuralKind::Commutation,
        n,
    }
}

/// The diagonal selector `Δ_n`.
pub fn diag_selector(n: usize) -> StructuralMatrix {
    assert!(n >= 1);
    StructuralMatrix {
        kind: StructuralKind::DiagSelector,
        n,
    }
}

/// The skew duplication matrix `D_n` (empty for `n = 1`).
pub fn skew_duplication(n: usize) -> StructuralMatrix {
    assert!(n >= 1);
    StructuralMatrix {
        kind: StructuralKind::SkewDuplication,
        n,
    }
}

impl StructuralMatrix {
    pub fn kind(&self) -> StructuralKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> (usize, usize) {
        let n2 = self.n * self.n;
        match self.kind {
            StructuralKind::Commutation | StructuralKind::DiagSelector => (n2, n2),
            StructuralKind::SkewDuplication => (n2, veck_len(self.n)),
        }
    }

    /// Applies the operator to a vector.
    pub fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let (rows, cols) = self.shape();
        assert_eq!(x.len(), cols, "structural apply dimension mismatch");
        let n = self.n;
        match self.kind {
            StructuralKind::Commutation => {
                let mut out = vec![T::zero(); rows];
                for r in 0..n {
                    for c in 0..n {
                        out[c * n + r] = x[r * n + c];
                    }
                }
                out
            }
            StructuralKind::DiagSelector => {
                let mut out = vec![T::zero(); rows];
                for i in 0..n {
                    out[i * n + i] = x[i * n + i];
                }
                out
            }
            StructuralKind::SkewDuplication => {
                let mut out = vec![T::zero(); rows];
                for (k, (row, col)) in veck_pairs(n).into_iter().enumerate() {
                    out[col * n + row] = x[k];
                    out[row * n + col] = -x[k];
                }
                out
            }
        }
    }

    /// Applies the transpose of the operator to a vector.
    pub fn apply_transpose<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let (rows, cols) = self.shape();
        assert_eq!(x.len(), rows, "structural apply_transpose dimension mismatch");
        let n = self.n;
        match self.kind {
            // T_n and Δ_n are symmetric.
            StructuralKind::Commutation | StructuralKind::DiagSelector => self.apply(x),
            StructuralKind::SkewDuplication => {
                let mut out = vec![T::zero(); cols];
                for (k, (row, col)) in veck_pairs(n).into_iter().enumerate() {
                    out[k] = x[col * n + row] - x[row * n + col];
                }
                out
            }
        }
    }

    /// Dense materialization, intended for cross-checks at small sizes.
    pub fn to_dense<T: Scalar>(&self) -> DenseMatrix<T> {
        let (rows, cols) = self.shape();
        let mut out = DenseMatrix::zeros(rows, cols);
        let mut e = vec![T::zero(); cols];
        for c in 0..cols {
            e[c] = T::one();
            let col = self.apply(&e);
            for (r, &v) in col.iter().enumerate() {
                out.set(r, c, v);
            }
            e[c] = T::zero();
        }
        out
    }
}

/// Symmetric, skew-symmetric, diagonal and off-diagonal parts of a square
/// matrix. `sym + skew = w` and `diag + off = w`.
#[derive(Debug, Clone)]
pub struct Parts<T> {
    pub sym: DenseMatrix<T>,
    pub skew: DenseMatrix<T>,
    pub diag: DenseMatrix<T>,
    pub off: DenseMatrix<T>,
}

/// Splits a square matrix into its four structural parts.
pub fn parts<T: Scalar>(w: &DenseMatrix<T>) -> Result<Parts<T>> {
    if !w.is_square() {
        return Err(Error::NotSquare {
            rows: w.rows(),
            cols: w.cols(),
        });
    }
    let n = w.rows();
    let half = T::cst(0.5);
    let mut sym = DenseMatrix::zeros(n, n);
    let mut skew = DenseMatrix::zeros(n, n);
    let mut diag = DenseMatrix::zeros(n, n);
    let mut off = w.clone();
    for c in 0..n {
        for r in 0..n {
            let a = w.get(r, c);
            let b = w.get(c, r);
            sym.set(r, c, (a + b) * half);
            skew.set(r, c, (a - b) * half);
        }
        diag.set(c, c, w.get(c, c));
        off.set(c, c, T::zero());
    }
    Ok(Parts { sym, skew, diag, off })
}

/// Symmetric part `(w + w^T)/2`.
pub fn sym_part<T: Scalar>(w: &DenseMatrix<T>) -> DenseMatrix<T> {
    assert!(w.is_square());
    let half = T::cst(0.5);
    DenseMatrix::from_fn(w.rows(), w.cols(), |r, c| (w.get(r, c) + w.get(c, r)) * half)
}

/// Skew-symmetric part `(w - w^T)/2`.
pub fn skew_part<T: Scalar>(w: &DenseMatrix<T>) -> DenseMatrix<T> {
    assert!(w.is_square());
    let half = T::cst(0.5);
    DenseMatrix::from_fn(w.rows(), w.cols(), |r, c| (w.get(r, c) - w.get(c, r)) * half)
}

/// Diagonal part as a full matrix.
pub fn diag_part<T: Scalar>(w: &DenseMatrix<T>) -> DenseMatrix<T> {
    assert!(w.is_square());
    let n = w.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        out.set(i, i, w.get(i, i));
    }
    out
}

/// Off-diagonal part (diagonal zeroed).
pub fn off_part<T: Scalar>(w: &DenseMatrix<T>) -> DenseMatrix<T> {
    assert!(w.is_square());
    let mut out = w.clone();
    for i in 0..w.rows() {
        out.set(i, i, T::zero());
    }
    out
}

/// Squared Frobenius norm of the off-diagonal part.
pub fn off_norm_sq<T: Scalar>(w: &DenseMatrix<T>) -> T {
    assert!(w.is_square());
    let mut s = T::zero();
    for c in 0..w.cols() {
        for r in 0..w.rows() {
            if r != c {
                let v = w.get(r, c);
                s += v * v;
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_close, seq_matrix};

    type M = DenseMatrix<f64>;

    #[test]
    fn vec_stacks_columns() {
        // W = [[1,3],[2,4]] -> (1,2,3,4)
        let w = M::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]]);
        assert_eq!(vec(&w), [1.0, 2.0, 3.0, 4.0]);
        let id = M::identity(2);
        assert_eq!(vec(&id), [1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn unvec_round_trips() {
        let w = seq_matrix(3, 2);
        let back = unvec(&vec(&w), 3, 2);
        assert_eq!(back, w);
    }

    #[test]
    fn veck_of_2x2_skew() {
        // S = [[0,-5],[5,0]] -> (5)
        let s = M::from_rows(&[&[0.0, -5.0], &[5.0, 0.0]]);
        assert_eq!(veck(&s).unwrap(), [5.0]);
        assert_eq!(veck(&M::zeros(3, 3)).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn veck_rejects_non_skew() {
        let s = M::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(matches!(veck(&s), Err(Error::NotSkew { .. })));
    }

    #[test]
    fn veck_matches_half_dt_vec() {
        // veck(S) = (1/2) D_n^T vec(S) on a random-ish skew 4x4.
        let raw = seq_matrix(4, 4);
        let s = skew_part(&raw);
        let lhs = veck(&s).unwrap();
        let rhs = skew_duplication(4).apply_transpose(&vec(&s));
        for (a, b) in lhs.iter().zip(rhs.iter().map(|v| 0.5 * v)) {
            assert_close(*a, b, 1e-15);
        }
    }

    #[test]
    fn veck_index_pair_inverse() {
        for n in 2..=8 {
            for k in 0..veck_len(n) {
                let (r, c) = veck_pair(n, k);
                assert!(r > c && r < n);
                assert_eq!(veck_index(n, r, c), k);
            }
            assert_eq!(veck_pairs(n).len(), veck_len(n));
        }
    }

    #[test]
    fn kron_block_structure() {
        let swap = M::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let k = kron(&M::identity(2), &swap);
        let expect = M::from_rows(&[
            &[0.0, 1.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        assert_eq!(k, expect);
    }

    #[test]
    fn kron_vec_identity() {
        // vec(U V W) = (W^T ⊗ U) vec(V)
        let u = seq_matrix(3, 3);
        let v = seq_matrix(3, 3).scale(0.7);
        let w = seq_matrix(3, 3).transpose();
        let lhs = vec(&u.matmul(&v).matmul(&w));
        let rhs = kron(&w.transpose(), &u).mul_vec(&vec(&v));
        let scale = u.fro_norm() * v.fro_norm() * w.fro_norm();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn kron_transpose_identity() {
        let u = seq_matrix(2, 3);
        let v = seq_matrix(4, 2);
        let lhs = kron(&u, &v).transpose();
        let rhs = kron(&u.transpose(), &v.transpose());
        assert!(lhs.sub(&rhs).fro_norm() < 1e-14);
    }

    #[test]
    fn commutation_dense_form_n2() {
        let t2: M = commutation(2).to_dense();
        let expect = M::from_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(t2, expect);
    }

    #[test]
    fn commutation_transposes_vec() {
        for n in 1..=6 {
            let w = seq_matrix(n, n);
            let lhs = commutation(n).apply(&vec(&w));
            assert_eq!(lhs, vec(&w.transpose()));
            // T_n is an involution.
            let twice = commutation(n).apply(&lhs);
            assert_eq!(twice, vec(&w));
        }
    }

    #[test]
    fn diag_selector_dense_form_n2() {
        let d2: M = diag_selector(2).to_dense();
        assert_eq!(vec(&d2), {
            let mut e = vec![0.0; 16];
            e[0] = 1.0;
            e[15] = 1.0;
            e
        });
    }

    #[test]
    fn diag_selector_selects_diagonal_and_is_idempotent() {
        for n in 1..=6 {
            let w = seq_matrix(n, n);
            let sel = diag_selector(n);
            let lhs = sel.apply(&vec(&w));
            assert_eq!(lhs, vec(&diag_part(&w)));
            assert_eq!(sel.apply(&lhs), lhs);
        }
    }

    #[test]
    fn skew_duplication_n2_column() {
        let d2: M = skew_duplication(2).to_dense();
        // Solving vec(S) = D_2 veck(S) for S = [[0,-s],[s,0]] forces (0,1,-1,0)^T.
        assert_eq!(vec(&d2), [0.0, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn skew_duplication_identities() {
        for p in 2..=8 {
            let d: M = skew_duplication(p).to_dense();
            // D_p^T D_p = 2 I
            let dtd = d.matmul_tn(&d);
            let expect = M::identity(veck_len(p)).scale(2.0);
            assert_eq!(dtd, expect);
            // D_p^T = -D_p^T T_p, entrywise exact (integer matrices).
            let t: M = commutation(p).to_dense();
            let lhs = d.transpose();
            let rhs = d.transpose().matmul(&t).scale(-1.0);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn skew_duplication_expands_veck() {
        for n in 2..=8 {
            let s = skew_part(&seq_matrix(n, n));
            let v = veck(&s).unwrap();
            assert_eq!(skew_duplication(n).apply(&v), vec(&s));
        }
    }

    #[test]
    fn implicit_agrees_with_dense() {
        let n = 5;
        let x: Vec<f64> = (0..n * n).map(|i| (i as f64) * 0.37 - 4.0).collect();
        for op in [commutation(n), diag_selector(n)] {
            let dense: M = op.to_dense();
            let a = op.apply(&x);
            let b = dense.mul_vec(&x);
            for (u, v) in a.iter().zip(&b) {
                assert_close(*u, *v, 1e-14);
            }
        }
        let d = skew_duplication(n);
        let dense: M = d.to_dense();
        let xk: Vec<f64> = (0..veck_len(n)).map(|i| (i as f64) * 0.21 - 1.0).collect();
        let a = d.apply(&xk);
        let b = dense.mul_vec(&xk);
        for (u, v) in a.iter().zip(&b) {
            assert_close(*u, *v, 1e-14);
        }
        let at = d.apply_transpose(&x);
        let bt = dense.transpose().mul_vec(&x);
        for (u, v) in at.iter().zip(&bt) {
            assert_close(*u, *v, 1e-14);
        }
    }

    #[test]
    fn parts_decomposition() {
        // W=[[1,2],[0,3]] -> sym=[[1,1],[1,3]], skew=[[0,1],[-1,0]], diag=diag(1,3)
        let w = M::from_rows(&[&[1.0, 2.0], &[0.0, 3.0]]);
        let p = parts(&w).unwrap();
        assert_eq!(p.sym, M::from_rows(&[&[1.0, 1.0], &[1.0, 3.0]]));
        assert_eq!(p.skew, M::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]));
        assert_eq!(p.diag, M::from_rows(&[&[1.0, 0.0], &[0.0, 3.0]]));
        assert_eq!(p.off, M::from_rows(&[&[0.0, 2.0], &[0.0, 0.0]]));
        assert!(p.sym.add(&p.skew).sub(&w).fro_norm() == 0.0);
        assert!(p.diag.add(&p.off).sub(&w).fro_norm() == 0.0);
    }

    #[test]
    fn parts_of_symmetric_matrix_has_zero_skew() {
        let w = sym_part(&seq_matrix(4, 4));
        let p = parts(&w).unwrap();
        assert_eq!(p.skew.fro_norm(), 0.0);
    }

    #[test]
    fn parts_rejects_rectangular() {
        assert!(matches!(
            parts(&M::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn vec_of_sym_and_skew_via_commutation() {
        // vec(sym(W)) = (I + T_n) vec(W) / 2, vec(skew(W)) = (I - T_n) vec(W) / 2
        let w = seq_matrix(4, 4);
        let t = commutation(4);
        let v = vec(&w);
        let tv = t.apply(&v);
        let p = parts(&w).unwrap();
        for (i, (&a, &b)) in vec(&p.sym).iter().zip(vec(&p.skew).iter()).enumerate() {
            assert_close(a, 0.5 * (v[i] + tv[i]), 1e-14);
            assert_close(b, 0.5 * (v[i] - tv[i]), 1e-14);
        }
    }
}
