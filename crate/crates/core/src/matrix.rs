//! Column-major dense matrices with the factorizations the solvers need:
//! Householder QR (deterministic positive-diagonal convention), LU with
//! partial pivoting, and a cyclic-Jacobi symmetric eigensolver.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense matrix stored column-major: entry `(r, c)` lives at `data[c * rows + r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    /// Builds a matrix from column-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidData {
                rows,
                cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// First `p` columns of the `n`-dimensional identity.
    pub fn eye_rect(n: usize, p: usize) -> Self {
        assert!(p <= n, "eye_rect requires p <= n");
        let mut m = Self::zeros(n, p);
        for i in 0..p {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Test/IO convenience: builds from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "row {i} has inconsistent length");
        }
        Self::from_fn(nrows, ncols, |r, c| rows[r][c])
    }

    pub fn column_vector(data: Vec<T>) -> Self {
        let rows = data.len();
        Self { rows, cols: 1, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[c * self.rows + r] = v;
    }

    /// Column-major entries.
    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[T] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// `self * rhs`. Panics on inner-dimension mismatch.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = rhs.data[j * rhs.rows + k];
                if b == T::zero() {
                    continue;
                }
                let a_col = &self.data[k * self.rows..(k + 1) * self.rows];
                for (o, &a) in out_col.iter_mut().zip(a_col) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self^T * rhs`. Panics on dimension mismatch.
    pub fn matmul_tn(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "matmul_tn dimension mismatch");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for j in 0..rhs.cols {
            let b_col = rhs.col(j);
            for i in 0..self.cols {
                let a_col = self.col(i);
                let mut s = T::zero();
                for (&a, &b) in a_col.iter().zip(b_col) {
                    s += a * b;
                }
                out.data[j * self.cols + i] = s;
            }
        }
        out
    }

    /// `self * rhs^T`. Panics on dimension mismatch.
    pub fn matmul_nt(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.cols, "matmul_nt dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.rows);
        for k in 0..self.cols {
            let a_col = self.col(k);
            for j in 0..rhs.rows {
                let b = rhs.get(j, k);
                if b == T::zero() {
                    continue;
                }
                let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
                for (o, &a) in out_col.iter_mut().zip(a_col) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        let mut out = vec![T::zero(); self.rows];
        for (k, &xk) in x.iter().enumerate() {
            if xk == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(k)) {
                *o += a * xk;
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * alpha).collect(),
        }
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: T, x: &Self) {
        assert_eq!(self.shape(), x.shape(), "axpy shape mismatch");
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
    }

    /// Frobenius inner product `tr(self^T rhs)`.
    pub fn dot(&self, rhs: &Self) -> T {
        assert_eq!(self.shape(), rhs.shape(), "dot shape mismatch");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    pub fn fro_norm_sq(&self) -> T {
        self.data.iter().map(|&a| a * a).sum()
    }

    pub fn fro_norm(&self) -> T {
        self.fro_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &a| acc.max(a.abs()))
    }

    pub fn diag_vec(&self) -> Vec<T> {
        let k = self.rows.min(self.cols);
        (0..k).map(|i| self.get(i, i)).collect()
    }

    pub fn from_diag(d: &[T]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// `self * diag(d)`: scales column `j` by `d[j]`.
    pub fn scale_cols(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.cols, "scale_cols dimension mismatch");
        let mut out = self.clone();
        for (j, &dj) in d.iter().enumerate() {
            for v in out.col_mut(j) {
                *v *= dj;
            }
        }
        out
    }

    /// `diag(d) * self`: scales row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.rows, "scale_rows dimension mismatch");
        let mut out = self.clone();
        for c in 0..self.cols {
            for (v, &di) in out.col_mut(c).iter_mut().zip(d) {
                *v *= di;
            }
        }
        out
    }

    /// Replaces a square matrix by its symmetric part.
    pub fn symmetrize_in_place(&mut self) {
        assert!(self.is_square(), "symmetrize requires a square matrix");
        let half = T::cst(0.5);
        for c in 0..self.cols {
            for r in 0..c {
                let v = (self.get(r, c) + self.get(c, r)) * half;
                self.set(r, c, v);
                self.set(c, r, v);
            }
        }
    }

    /// `‖self^T self − I‖_F`, the orthonormality defect of the columns.
    pub fn orthonormality_defect(&self) -> T {
        let mut g = self.matmul_tn(self);
        for i in 0..g.rows {
            let v = g.get(i, i) - T::one();
            g.set(i, i, v);
        }
        g.fro_norm()
    }

    /// Thin Householder QR with the uniqueness convention that `R` has a
    /// non-negative diagonal. Requires `rows >= cols`; a zero diagonal entry
    /// of `R` signals rank deficiency and is left for the caller to detect.
    pub fn qr_thin(&self) -> (Self, Self) {
        let (n, p) = self.shape();
        assert!(n >= p, "qr_thin requires rows >= cols");
        let mut a = self.clone();
        // Householder vectors, one per column.
        let mut vs: Vec<Vec<T>> = Vec::with_capacity(p);
        for k in 0..p {
            let mut v = a.col(k)[k..].to_vec();
            let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
            if norm == T::zero() {
                vs.push(Vec::new());
                continue;
            }
            let alpha = if v[0] >= T::zero() { -norm } else { norm };
            v[0] -= alpha;
            let vtv = v.iter().map(|&x| x * x).sum::<T>();
            if vtv == T::zero() {
                // Column already of the form alpha*e1; no reflection needed.
                vs.push(Vec::new());
                a.set(k, k, alpha);
                continue;
            }
            // Apply I - 2 v v^T / (v^T v) to the trailing columns.
            let two = T::cst(2.0);
            for j in k..p {
                let col = a.col_mut(j);
                let mut s = T::zero();
                for (i, &vi) in v.iter().enumerate() {
                    s += vi * col[k + i];
                }
                let coeff = two * s / vtv;
                for (i, &vi) in v.iter().enumerate() {
                    col[k + i] -= coeff * vi;
                }
            }
            vs.push(v);
        }
        let mut r = Self::zeros(p, p);
        for c in 0..p {
            for rr in 0..=c {
                r.set(rr, c, a.get(rr, c));
            }
        }
        // Q = H_0 H_1 ... H_{p-1} I_{n,p}, built by applying reflections in
        // reverse order.
        let mut q = Self::eye_rect(n, p);
        let two = T::cst(2.0);
        for k in (0..p).rev() {
            let v = &vs[k];
            if v.is_empty() {
                continue;
            }
            let vtv = v.iter().map(|&x| x * x).sum::<T>();
            for j in 0..p {
                let col = q.col_mut(j);
                let mut s = T::zero();
                for (i, &vi) in v.iter().enumerate() {
                    s += vi * col[k + i];
                }
                let coeff = two * s / vtv;
                for (i, &vi) in v.iter().enumerate() {
                    col[k + i] -= coeff * vi;
                }
            }
        }
        // Sign-fix: Q D, D R with D = diag(sign(r_kk)) so diag(R) >= 0.
        for k in 0..p {
            if r.get(k, k) < T::zero() {
                for j in k..p {
                    let v = r.get(k, j);
                    r.set(k, j, -v);
                }
                for i in 0..n {
                    let v = q.get(i, k);
                    q.set(i, k, -v);
                }
            }
        }
        (q, r)
    }

    /// Q factor of the thin QR decomposition.
    pub fn qf(&self) -> Self {
        self.qr_thin().0
    }

    /// LU factorization with partial pivoting. Always completes; singularity
    /// shows up as a zero (or tiny) pivot ratio.
    pub fn lu(&self) -> Lu<T> {
        assert!(self.is_square(), "lu requires a square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            // Pivot search in column k.
            let mut ip = k;
            let mut best = a.get(k, k).abs();
            for i in (k + 1)..n {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    ip = i;
                }
            }
            piv.push(ip);
            if ip != k {
                for j in 0..n {
                    let x = a.get(k, j);
                    let y = a.get(ip, j);
                    a.set(k, j, y);
                    a.set(ip, j, x);
                }
            }
            let pivot = a.get(k, k);
            if pivot != T::zero() {
                let inv = T::one() / pivot;
                for v in &mut a.col_mut(k)[(k + 1)..] {
                    *v *= inv;
                }
                for j in (k + 1)..n {
                    let akj = a.get(k, j);
                    if akj == T::zero() {
                        continue;
                    }
                    let (lo, hi) = a.data.split_at_mut(j * n);
                    let col_k = &lo[k * n..(k + 1) * n];
                    let col_j = &mut hi[..n];
                    for i in (k + 1)..n {
                        col_j[i] -= col_k[i] * akj;
                    }
                }
            }
        }
        Lu { lu: a, piv }
    }

    /// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
    /// Returns eigenvalues in ascending order with matching eigenvector
    /// columns.
    pub fn sym_eigen(&self) -> Result<SymEigen<T>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        a.symmetrize_in_place();
        let mut v = Self::identity(n);
        let scale = a.fro_norm().max(T::one());
        let tol = T::epsilon() * scale * T::cst(1e2);
        let max_sweeps = 100;
        let mut converged = n <= 1;
        for _ in 0..max_sweeps {
            let mut off = T::zero();
            for c in 0..n {
                for r in 0..c {
                    off += a.get(r, c) * a.get(r, c);
                }
            }
            if (off + off).sqrt() <= tol {
                converged = true;
                break;
            }
            for piv_p in 0..n.saturating_sub(1) {
                for piv_q in (piv_p + 1)..n {
                    let apq = a.get(piv_p, piv_q);
                    if apq.abs() <= T::epsilon() * scale {
                        continue;
                    }
                    let app = a.get(piv_p, piv_p);
                    let aqq = a.get(piv_q, piv_q);
                    let theta = (aqq - app) / (T::cst(2.0) * apq);
                    // Stable tangent of the rotation angle.
                    let t = {
                        let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                        sign / (theta.abs() + (T::one() + theta * theta).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    // A <- J^T A J, applied to rows and columns p, q.
                    for i in 0..n {
                        let aip = a.get(i, piv_p);
                        let aiq = a.get(i, piv_q);
                        a.set(i, piv_p, c * aip - s * aiq);
                        a.set(i, piv_q, s * aip + c * aiq);
                    }
                    for j in 0..n {
                        let apj = a.get(piv_p, j);
                        let aqj = a.get(piv_q, j);
                        a.set(piv_p, j, c * apj - s * aqj);
                        a.set(piv_q, j, s * apj + c * aqj);
                    }
                    for i in 0..n {
                        let vip = v.get(i, piv_p);
                        let viq = v.get(i, piv_q);
                        v.set(i, piv_p, c * vip - s * viq);
                        v.set(i, piv_q, s * vip + c * viq);
                    }
                }
            }
        }
        if !converged {
            // One more check after the final sweep.
            let mut off = T::zero();
            for c in 0..n {
                for r in 0..c {
                    off += a.get(r, c) * a.get(r, c);
                }
            }
            if (off + off).sqrt() > tol {
                return Err(Error::ConvergenceFailure {
                    what: "cyclic Jacobi eigensolver".into(),
                });
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a.get(i, i)
                .partial_cmp(&a.get(j, j))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| a.get(i, i)).collect();
        let vectors = Self::from_fn(n, n, |r, c| v.get(r, order[c]));
        Ok(SymEigen { values, vectors })
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[c * self.rows + r]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[c * self.rows + r]
    }
}

impl<T: Scalar> std::fmt::Display for DenseMatrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:>13.6e}", self.get(r, c).as_f64())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// LU factorization with partial pivoting (`P A = L U`).
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: DenseMatrix<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Ratio of the smallest to the largest pivot magnitude; `1` for an empty
    /// system, `0` when an exact zero pivot occurred.
    pub fn pivot_ratio(&self) -> T {
        let n = self.lu.rows();
        if n == 0 {
            return T::one();
        }
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for k in 0..n {
            let u = self.lu.get(k, k).abs();
            lo = lo.min(u);
            hi = hi.max(u);
        }
        if hi == T::zero() {
            T::zero()
        } else {
            lo / hi
        }
    }

    /// Solves `A x = b`. The caller is expected to have checked
    /// [`Lu::pivot_ratio`] against its singularity threshold.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "solve dimension mismatch");
        let mut x = b.to_vec();
        for k in 0..n {
            let ip = self.piv[k];
            if ip != k {
                x.swap(k, ip);
            }
        }
        // Forward substitution with unit lower triangle.
        for k in 0..n {
            let xk = x[k];
            if xk == T::zero() {
                continue;
            }
            let col = self.lu.col(k);
            for i in (k + 1)..n {
                x[i] -= col[i] * xk;
            }
        }
        // Back substitution.
        for k in (0..n).rev() {
            x[k] /= self.lu.get(k, k);
            let xk = x[k];
            if xk == T::zero() {
                continue;
            }
            let col = self.lu.col(k);
            for i in 0..k {
                x[i] -= col[i] * xk;
            }
        }
        x
    }
}

/// Result of a symmetric eigendecomposition.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    /// Eigenvalues in ascending order.
    pub values: Vec<T>,
    /// Eigenvectors as columns, ordered to match `values`.
    pub vectors: DenseMatrix<T>,
}
