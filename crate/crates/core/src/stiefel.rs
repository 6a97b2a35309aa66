//! Geometry of the Stiefel manifold St(p,n) = { Y in R^{n x p} : Y^T Y = I }:
//! points, tangent vectors in ambient and (B, C) coordinates, the orthogonal
//! projection onto the tangent space, the QR retraction, and an orthogonal
//! complement builder.
//!
//! A tangent vector at `Y` satisfies `xi^T Y + Y^T xi = 0` and can be written
//! `xi = Y B + Y_perp C` with `B` skew `p x p` and `C` of shape `(n-p) x p`,
//! which identifies the tangent space with `R^{p(p-1)/2 + p(n-p)}`.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::matvec::{sym_part, unveck, veck_len, veck_pairs};
use crate::scalar::Scalar;

/// Riemannian metric on St(p,n).
///
/// `Induced` is the trace inner product `tr(xi1^T xi2)` inherited from the
/// ambient space; `Canonical` is `tr(xi1^T (I - Y Y^T / 2) xi2)`, which counts
/// each independent coordinate once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Induced,
    Canonical,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Induced => write!(f, "induced"),
            Metric::Canonical => write!(f, "canonical"),
        }
    }
}

/// A point on St(p,n): an `n x p` matrix with orthonormal columns.
///
/// The constructor enforces `‖Y^T Y - I‖_F <= 1e-10`, re-orthonormalizing via
/// QR when the defect is between `1e-10` and `1e-6` and rejecting above.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint<T> {
    y: DenseMatrix<T>,
}

impl<T: Scalar> StiefelPoint<T> {
    pub fn new(y: DenseMatrix<T>) -> Result<Self> {
        let (n, p) = y.shape();
        if p > n {
            return Err(Error::ShapeMismatch {
                expected: (n, n),
                got: (n, p),
            });
        }
        let strict = T::tol(1e-10);
        let fixable = T::tol(1e-6);
        let defect = y.orthonormality_defect();
        if defect <= strict {
            return Ok(Self { y });
        }
        if defect <= fixable {
            let q = y.qf();
            let defect = q.orthonormality_defect();
            if defect <= strict {
                return Ok(Self { y: q });
            }
            return Err(Error::NotOrthonormal {
                defect: defect.as_f64(),
                tol: strict.as_f64(),
            });
        }
        Err(Error::NotOrthonormal {
            defect: defect.as_f64(),
            tol: fixable.as_f64(),
        })
    }

    /// Orthonormalizes an arbitrary full-rank matrix via its Q factor.
    pub fn from_qf(w: &DenseMatrix<T>) -> Result<Self> {
        let (q, r) = w.qr_thin();
        let rmin = r.diag_vec().into_iter().fold(T::infinity(), T::min);
        if r.cols() > 0 && rmin <= T::tol(1e-12) * w.fro_norm() {
            return Err(Error::RankDeficient {
                rmin: rmin.as_f64(),
            });
        }
        Self::new(q)
    }

    /// First `p` columns of the identity, a canonical point.
    pub fn eye(n: usize, p: usize) -> Self {
        Self {
            y: DenseMatrix::eye_rect(n, p),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.rows()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.y.cols()
    }

    #[inline]
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.y
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.y
    }

    /// `‖Y^T Y - I‖_F` of the stored matrix.
    pub fn orthonormality_defect(&self) -> T {
        self.y.orthonormality_defect()
    }

    /// Manifold dimension `p(p-1)/2 + p(n-p)`.
    pub fn dim(&self) -> usize {
        let (n, p) = self.y.shape();
        veck_len(p) + p * (n - p)
    }
}

/// An orthonormal basis of the orthogonal complement of a Stiefel point's
/// column space; empty when `p = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoComplement<T> {
    yperp: DenseMatrix<T>,
}

impl<T: Scalar> OrthoComplement<T> {
    /// Validates `Y^T Y_perp = 0` and `Y_perp^T Y_perp = I` against an anchor.
    pub fn from_parts(y: &StiefelPoint<T>, yperp: DenseMatrix<T>) -> Result<Self> {
        let (n, p) = y.matrix().shape();
        if yperp.shape() != (n, n - p) {
            return Err(Error::ShapeMismatch {
                expected: (n, n - p),
                got: yperp.shape(),
            });
        }
        let tol = T::tol(1e-10);
        let cross = y.matrix().matmul_tn(&yperp).fro_norm();
        let defect = yperp.orthonormality_defect();
        if cross > tol || defect > tol {
            return Err(Error::NotOrthonormal {
                defect: cross.max(defect).as_f64(),
                tol: tol.as_f64(),
            });
        }
        Ok(Self { yperp })
    }

    #[inline]
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.yperp
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.yperp.cols() == 0
    }
}

/// A tangent vector at a Stiefel point, in ambient `n x p` form.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentAmbient<T> {
    xi: DenseMatrix<T>,
}

impl<T: Scalar> TangentAmbient<T> {
    /// Wraps a matrix after validating the tangency condition
    /// `‖xi^T Y + Y^T xi‖_F <= 1e-10 · max(1, ‖xi‖_F)`.
    pub fn new_checked(y: &StiefelPoint<T>, xi: DenseMatrix<T>) -> Result<Self> {
        if xi.shape() != y.matrix().shape() {
            return Err(Error::ShapeMismatch {
                expected: y.matrix().shape(),
                got: xi.shape(),
            });
        }
        let defect = tangency_defect(y, &xi);
        let tol = T::tol(1e-10) * T::one().max(xi.fro_norm());
        if defect > tol {
            return Err(Error::NotTangent {
                defect: defect.as_f64(),
                tol: tol.as_f64(),
            });
        }
        Ok(Self { xi })
    }

    /// Wraps a matrix that is tangent by construction.
    pub(crate) fn new_unchecked(xi: DenseMatrix<T>) -> Self {
        Self { xi }
    }

    pub fn zero(y: &StiefelPoint<T>) -> Self {
        Self {
            xi: DenseMatrix::zeros(y.n(), y.p()),
        }
    }

    #[inline]
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.xi
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.xi
    }

    pub fn norm(&self) -> T {
        self.xi.fro_norm()
    }
}

/// `‖xi^T Y + Y^T xi‖_F`.
pub fn tangency_defect<T: Scalar>(y: &StiefelPoint<T>, xi: &DenseMatrix<T>) -> T {
    let ytxi = y.matrix().matmul_tn(xi);
    sym_part(&ytxi).fro_norm() * T::cst(2.0)
}

/// Tangent coordinates `(B, C)` with `xi = Y B + Y_perp C`. The skew matrix
/// `B` is stored as its strictly-lower triangle (veck order) and expanded on
/// demand, so `B + B^T = 0` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCoords<T> {
    p: usize,
    nmp: usize,
    b_lower: Vec<T>,
    c: DenseMatrix<T>,
}

impl<T: Scalar> TangentCoords<T> {
    /// Builds coordinates from a (possibly slightly asymmetric) `B` and a `C`;
    /// `B` is antisymmetrized before the lower triangle is extracted.
    pub fn from_matrices(b: &DenseMatrix<T>, c: DenseMatrix<T>) -> Self {
        assert!(b.is_square(), "B must be square");
        let p = b.rows();
        assert_eq!(c.cols(), p, "C must have p columns");
        let half = T::cst(0.5);
        let b_lower = veck_pairs(p)
            .into_iter()
            .map(|(r, q)| (b.get(r, q) - b.get(q, r)) * half)
            .collect();
        Self {
            p,
            nmp: c.rows(),
            b_lower,
            c,
        }
    }

    pub fn zero(p: usize, nmp: usize) -> Self {
        Self {
            p,
            nmp,
            b_lower: vec![T::zero(); veck_len(p)],
            c: DenseMatrix::zeros(nmp, p),
        }
    }

    /// Rebuilds coordinates from a stacked `(veck(B); vec(C))` vector.
    pub fn from_stacked(p: usize, nmp: usize, x: &[T]) -> Self {
        let nb = veck_len(p);
        assert_eq!(x.len(), nb + nmp * p, "stacked coordinate length mismatch");
        let c = DenseMatrix::new(nmp, p, x[nb..].to_vec()).expect("vec(C) length");
        Self {
            p,
            nmp,
            b_lower: x[..nb].to_vec(),
            c,
        }
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn n_minus_p(&self) -> usize {
        self.nmp
    }

    /// Total coordinate count `p(p-1)/2 + p(n-p)`.
    pub fn dim(&self) -> usize {
        self.b_lower.len() + self.c.data().len()
    }

    /// `veck(B)`.
    #[inline]
    pub fn veck_b(&self) -> &[T] {
        &self.b_lower
    }

    /// Expands the stored triangle into the full skew matrix `B`.
    pub fn b_matrix(&self) -> DenseMatrix<T> {
        unveck(&self.b_lower, self.p)
    }

    #[inline]
    pub fn c_matrix(&self) -> &DenseMatrix<T> {
        &self.c
    }

    /// Stacked `(veck(B); vec(C))`.
    pub fn stacked(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(&self.b_lower);
        out.extend_from_slice(self.c.data());
        out
    }

    pub fn norm(&self) -> T {
        // ‖xi‖_F with orthonormal (Y, Y_perp): ‖B‖_F² + ‖C‖_F².
        let b_sq: T = self.b_lower.iter().map(|&v| v + v).map(|v| v * v).sum();
        (b_sq * T::cst(0.5) + self.c.fro_norm_sq()).sqrt()
    }
}

/// A Stiefel point bundled with an orthogonal complement computed at it, so
/// the pair can never be mixed across anchors.
#[derive(Debug, Clone)]
pub struct StiefelFrame<T> {
    point: StiefelPoint<T>,
    perp: OrthoComplement<T>,
}

impl<T: Scalar> StiefelFrame<T> {
    pub fn new(point: StiefelPoint<T>) -> Result<Self> {
        let perp = compute_perp(&point)?;
        Ok(Self { point, perp })
    }

    #[inline]
    pub fn point(&self) -> &StiefelPoint<T> {
        &self.point
    }

    #[inline]
    pub fn perp(&self) -> &OrthoComplement<T> {
        &self.perp
    }

    /// `(B, C)` coordinates of an ambient tangent vector:
    /// `B = Y^T xi` (antisymmetrized), `C = Y_perp^T xi`.
    pub fn coords_from_ambient(&self, xi: &TangentAmbient<T>) -> Result<TangentCoords<T>> {
        if xi.matrix().shape() != self.point.matrix().shape() {
            return Err(Error::ShapeMismatch {
                expected: self.point.matrix().shape(),
                got: xi.matrix().shape(),
            });
        }
        let b = self.point.matrix().matmul_tn(xi.matrix());
        let c = self.perp.matrix().matmul_tn(xi.matrix());
        Ok(TangentCoords::from_matrices(&b, c))
    }

    /// Ambient form `xi = Y B + Y_perp C`.
    pub fn ambient_from_coords(&self, coords: &TangentCoords<T>) -> Result<TangentAmbient<T>> {
        let (n, p) = self.point.matrix().shape();
        if coords.p() != p || coords.n_minus_p() != n - p {
            return Err(Error::ShapeMismatch {
                expected: (n - p, p),
                got: (coords.n_minus_p(), coords.p()),
            });
        }
        let mut xi = self.point.matrix().matmul(&coords.b_matrix());
        if !self.perp.is_empty() {
            xi = xi.add(&self.perp.matrix().matmul(coords.c_matrix()));
        }
        Ok(TangentAmbient::new_unchecked(xi))
    }
}

/// Orthogonal projection of an ambient matrix onto the tangent space at `Y`:
/// `P_Y(W) = W - Y sym(Y^T W)`.
pub fn project<T: Scalar>(y: &StiefelPoint<T>, w: &DenseMatrix<T>) -> Result<TangentAmbient<T>> {
    if w.shape() != y.matrix().shape() {
        return Err(Error::ShapeMismatch {
            expected: y.matrix().shape(),
            got: w.shape(),
        });
    }
    let ytw = y.matrix().matmul_tn(w);
    let mut out = w.clone();
    out.axpy(-T::one(), &y.matrix().matmul(&sym_part(&ytw)));
    Ok(TangentAmbient::new_unchecked(out))
}

/// QR retraction: the Q factor of `Y + xi`, with the positive-diagonal
/// uniqueness convention. Fails with `RankDeficient` when the smallest
/// diagonal entry of `R` falls below `1e-12 · ‖Y + xi‖_F`.
pub fn qr_retract<T: Scalar>(
    y: &StiefelPoint<T>,
    xi: &TangentAmbient<T>,
) -> Result<StiefelPoint<T>> {
    if xi.matrix().shape() != y.matrix().shape() {
        return Err(Error::ShapeMismatch {
            expected: y.matrix().shape(),
            got: xi.matrix().shape(),
        });
    }
    let w = y.matrix().add(xi.matrix());
    let (q, r) = w.qr_thin();
    let rmin = r.diag_vec().into_iter().fold(T::infinity(), T::min);
    if r.cols() > 0 && rmin < T::tol(1e-12) * w.fro_norm() {
        return Err(Error::RankDeficient {
            rmin: rmin.as_f64(),
        });
    }
    StiefelPoint::new(q)
}

/// Builds an orthonormal basis of the orthogonal complement of `Y`'s columns
/// by scanning the columns of `X = I - Y Y^T`, greedily keeping `n - p`
/// linearly independent ones, and taking the Q factor of the kept columns.
///
/// A candidate column is accepted when its residual after projection onto the
/// already-accepted set exceeds `1e-8 · ‖X‖_F` (incremental modified
/// Gram-Schmidt). Returns an empty complement when `p = n`.
pub fn compute_perp<T: Scalar>(y: &StiefelPoint<T>) -> Result<OrthoComplement<T>> {
    let (n, p) = y.matrix().shape();
    let needed = n - p;
    if needed == 0 {
        return Ok(OrthoComplement {
            yperp: DenseMatrix::zeros(n, 0),
        });
    }
    // X = I - Y Y^T
    let mut x = y.matrix().matmul_nt(y.matrix()).scale(-T::one());
    for i in 0..n {
        let v = x.get(i, i) + T::one();
        x.set(i, i, v);
    }
    let accept_tol = T::tol(1e-8) * x.fro_norm();
    let mut accepted_orig: Vec<&[T]> = Vec::with_capacity(needed);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(needed);
    for j in 0..n {
        if accepted_orig.len() == needed {
            break;
        }
        let col = x.col(j);
        let mut r = col.to_vec();
        for q in &basis {
            let s: T = q.iter().zip(&r).map(|(&a, &b)| a * b).sum();
            for (ri, &qi) in r.iter_mut().zip(q) {
                *ri -= s * qi;
            }
        }
        let rnorm = r.iter().map(|&v| v * v).sum::<T>().sqrt();
        if rnorm > accept_tol {
            for ri in r.iter_mut() {
                *ri /= rnorm;
            }
            basis.push(r);
            accepted_orig.push(col);
        }
    }
    if accepted_orig.len() < needed {
        return Err(Error::NumericalBreakdown {
            found: accepted_orig.len(),
            needed,
        });
    }
    let mut z0 = DenseMatrix::zeros(n, needed);
    for (k, col) in accepted_orig.into_iter().enumerate() {
        z0.col_mut(k).copy_from_slice(col);
    }
    let yperp = z0.qf();
    OrthoComplement::from_parts(y, yperp)
}

/// Riemannian inner product of two tangent vectors at `Y`.
pub fn inner<T: Scalar>(
    y: &StiefelPoint<T>,
    xi1: &TangentAmbient<T>,
    xi2: &TangentAmbient<T>,
    metric: Metric,
) -> Result<T> {
    let shape = y.matrix().shape();
    if xi1.matrix().shape() != shape || xi2.matrix().shape() != shape {
        return Err(Error::AnchorMismatch);
    }
    match metric {
        Metric::Induced => Ok(xi1.matrix().dot(xi2.matrix())),
        Metric::Canonical => {
            // tr(xi1^T (I - Y Y^T / 2) xi2)
            let full = xi1.matrix().dot(xi2.matrix());
            let yt1 = y.matrix().matmul_tn(xi1.matrix());
            let yt2 = y.matrix().matmul_tn(xi2.matrix());
            Ok(full - T::cst(0.5) * yt1.dot(&yt2))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matvec::veck;
    use crate::rng::PortableRng;
    use crate::testutil::{random_matrix, random_stiefel};

    type M = DenseMatrix<f64>;

    #[test]
    fn constructor_bands() {
        // Clean point accepted as-is.
        let y = StiefelPoint::new(M::eye_rect(4, 2)).unwrap();
        assert_eq!(y.orthonormality_defect(), 0.0);
        // Mild defect re-orthonormalized.
        let mut m = M::eye_rect(4, 2);
        m.set(0, 0, 1.0 + 3e-8);
        let y = StiefelPoint::new(m).unwrap();
        assert!(y.orthonormality_defect() <= 1e-10);
        // Gross defect rejected.
        let mut m = M::eye_rect(4, 2);
        m.set(0, 1, 0.5);
        assert!(matches!(
            StiefelPoint::new(m),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn project_axis_case() {
        // Y = e1 in R^{2x1}: P_Y((a, b)^T) = (0, b)^T.
        let y = StiefelPoint::eye(2, 1);
        let w = M::column_vector(vec![0.7, -1.3]);
        let t = project(&y, &w).unwrap();
        assert_eq!(t.matrix().get(0, 0), 0.0);
        assert_eq!(t.matrix().get(1, 0), -1.3);
    }

    #[test]
    fn project_fixes_tangent_vectors() {
        let mut rng = PortableRng::seed_from_u64(11);
        let y = random_stiefel(5, 2, &mut rng);
        let w = random_matrix(5, 2, &mut rng);
        let t = project(&y, &w).unwrap();
        let t2 = project(&y, t.matrix()).unwrap();
        assert!(t2.matrix().sub(t.matrix()).fro_norm() <= 1e-14 * t.norm().max(1.0));
        // Residual W - P_Y(W) is orthogonal to every tangent vector.
        let resid = w.sub(t.matrix());
        let z = project(&y, &random_matrix(5, 2, &mut rng)).unwrap();
        assert!(resid.dot(z.matrix()).abs() <= 1e-12 * resid.fro_norm() * z.norm());
        // And the projection output is tangent.
        assert!(tangency_defect(&y, t.matrix()) <= 1e-12);
    }

    #[test]
    fn project_shape_mismatch() {
        let y = StiefelPoint::eye(3, 2);
        assert!(matches!(
            project(&y, &M::zeros(3, 3)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn retract_zero_is_identity() {
        let mut rng = PortableRng::seed_from_u64(5);
        let y = random_stiefel(6, 3, &mut rng);
        let z = qr_retract(&y, &TangentAmbient::zero(&y)).unwrap();
        assert!(z.matrix().sub(y.matrix()).fro_norm() <= 1e-13);
    }

    #[test]
    fn retract_single_column() {
        // Y = e1 in R^{2x1}, xi = (0, 1)^T -> (1/sqrt(2), 1/sqrt(2))^T.
        let y = StiefelPoint::eye(2, 1);
        let xi = TangentAmbient::new_checked(&y, M::column_vector(vec![0.0, 1.0])).unwrap();
        let z = qr_retract(&y, &xi).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((z.matrix().get(0, 0) - s).abs() < 1e-15);
        assert!((z.matrix().get(1, 0) - s).abs() < 1e-15);
    }

    #[test]
    fn retract_first_order_property() {
        // d/dt qf(Y + t xi) at t = 0 equals xi, by central differences.
        let mut rng = PortableRng::seed_from_u64(17);
        let y = random_stiefel(6, 3, &mut rng);
        let xi = project(&y, &random_matrix(6, 3, &mut rng)).unwrap();
        let t = 1e-5;
        let plus = qr_retract(&y, &TangentAmbient::new_unchecked(xi.matrix().scale(t))).unwrap();
        let minus = qr_retract(&y, &TangentAmbient::new_unchecked(xi.matrix().scale(-t))).unwrap();
        let fd = plus.matrix().sub(minus.matrix()).scale(1.0 / (2.0 * t));
        assert!(fd.sub(xi.matrix()).fro_norm() <= 1e-6 * xi.norm().max(1.0));
    }

    #[test]
    fn perp_axis_cases() {
        let y = StiefelPoint::<f64>::eye(2, 1);
        let perp = compute_perp(&y).unwrap();
        assert!((perp.matrix().get(0, 0)).abs() < 1e-14);
        assert!((perp.matrix().get(1, 0)).abs() - 1.0 < 1e-14);
        // Y = I_{4,2} -> complement spans the last two axes.
        let y = StiefelPoint::<f64>::eye(4, 2);
        let perp = compute_perp(&y).unwrap();
        let span_defect = perp.matrix().get(0, 0).abs()
            + perp.matrix().get(1, 0).abs()
            + perp.matrix().get(0, 1).abs()
            + perp.matrix().get(1, 1).abs();
        assert!(span_defect < 1e-12);
        assert!(perp.matrix().orthonormality_defect() < 1e-12);
    }

    #[test]
    fn perp_random_invariants() {
        let mut rng = PortableRng::seed_from_u64(23);
        let y = random_stiefel(6, 3, &mut rng);
        let perp = compute_perp(&y).unwrap();
        assert!(y.matrix().matmul_tn(perp.matrix()).fro_norm() <= 1e-12);
        assert!(perp.matrix().orthonormality_defect() <= 1e-12);
    }

    #[test]
    fn perp_empty_when_square() {
        let mut rng = PortableRng::seed_from_u64(29);
        let y = random_stiefel(4, 4, &mut rng);
        let perp = compute_perp(&y).unwrap();
        assert!(perp.is_empty());
    }

    #[test]
    fn coords_round_trip() {
        let mut rng = PortableRng::seed_from_u64(31);
        let frame = StiefelFrame::new(random_stiefel(6, 3, &mut rng)).unwrap();
        let xi = project(frame.point(), &random_matrix(6, 3, &mut rng)).unwrap();
        let coords = frame.coords_from_ambient(&xi).unwrap();
        assert_eq!(coords.dim(), frame.point().dim());
        let back = frame.ambient_from_coords(&coords).unwrap();
        assert!(back.matrix().sub(xi.matrix()).fro_norm() <= 1e-13 * xi.norm().max(1.0));
        // Coordinate norms reproduce the ambient norm.
        let b = coords.b_matrix();
        let want = (b.fro_norm_sq() + coords.c_matrix().fro_norm_sq()).sqrt();
        assert!((xi.norm() - want).abs() <= 1e-12 * want.max(1.0));
        assert!((coords.norm() - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn coords_pure_b_and_pure_c() {
        let mut rng = PortableRng::seed_from_u64(37);
        let frame = StiefelFrame::new(random_stiefel(5, 2, &mut rng)).unwrap();
        let b0 = M::from_rows(&[&[0.0, -0.8], &[0.8, 0.0]]);
        let xi = TangentAmbient::new_unchecked(frame.point().matrix().matmul(&b0));
        let coords = frame.coords_from_ambient(&xi).unwrap();
        assert!(coords.b_matrix().sub(&b0).fro_norm() <= 1e-13);
        assert!(coords.c_matrix().fro_norm() <= 1e-13);

        let c0 = M::from_fn(3, 2, |r, c| 0.3 * (r as f64) - 0.2 * (c as f64) + 0.1);
        let xi = TangentAmbient::new_unchecked(frame.perp().matrix().matmul(&c0));
        let coords = frame.coords_from_ambient(&xi).unwrap();
        assert!(coords.b_matrix().fro_norm() <= 1e-13);
        assert!(coords.c_matrix().sub(&c0).fro_norm() <= 1e-13);
    }

    #[test]
    fn ambient_from_coords_eye_anchor() {
        let frame = StiefelFrame::new(StiefelPoint::eye(4, 2)).unwrap();
        let zero = frame
            .ambient_from_coords(&TangentCoords::zero(2, 2))
            .unwrap();
        assert_eq!(zero.matrix().fro_norm(), 0.0);
        let b = M::from_rows(&[&[0.0, -1.5], &[1.5, 0.0]]);
        let coords = TangentCoords::from_matrices(&b, M::zeros(2, 2));
        let xi = frame.ambient_from_coords(&coords).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((xi.matrix().get(r, c) - b.get(r, c)).abs() < 1e-15);
            }
        }
        for r in 2..4 {
            for c in 0..2 {
                assert_eq!(xi.matrix().get(r, c), 0.0);
            }
        }
    }

    #[test]
    fn inner_coordinate_formulas() {
        let mut rng = PortableRng::seed_from_u64(41);
        let frame = StiefelFrame::new(random_stiefel(6, 3, &mut rng)).unwrap();
        let y = frame.point();
        let xi1 = project(y, &random_matrix(6, 3, &mut rng)).unwrap();
        let xi2 = project(y, &random_matrix(6, 3, &mut rng)).unwrap();
        let c1 = frame.coords_from_ambient(&xi1).unwrap();
        let c2 = frame.coords_from_ambient(&xi2).unwrap();
        let vb1 = veck(&c1.b_matrix()).unwrap();
        let vb2 = veck(&c2.b_matrix()).unwrap();
        let bdot: f64 = vb1.iter().zip(&vb2).map(|(a, b)| a * b).sum();
        let cdot = c1.c_matrix().dot(c2.c_matrix());

        let ind = inner(y, &xi1, &xi2, Metric::Induced).unwrap();
        assert!((ind - (2.0 * bdot + cdot)).abs() <= 1e-12 * ind.abs().max(1.0));
        let can = inner(y, &xi1, &xi2, Metric::Canonical).unwrap();
        assert!((can - (bdot + cdot)).abs() <= 1e-12 * can.abs().max(1.0));
    }

    #[test]
    fn inner_pure_b_scaling() {
        // xi1 = xi2 = Y B with ‖veck(B)‖² = s: induced 2s, canonical s.
        let mut rng = PortableRng::seed_from_u64(43);
        let y = random_stiefel(5, 3, &mut rng);
        let b = M::from_rows(&[
            &[0.0, -1.0, 2.0],
            &[1.0, 0.0, 0.5],
            &[-2.0, -0.5, 0.0],
        ]);
        let s: f64 = veck(&b).unwrap().iter().map(|v| v * v).sum();
        let xi = TangentAmbient::new_unchecked(y.matrix().matmul(&b));
        let ind = inner(&y, &xi, &xi, Metric::Induced).unwrap();
        let can = inner(&y, &xi, &xi, Metric::Canonical).unwrap();
        assert!((ind - 2.0 * s).abs() < 1e-12 * s);
        assert!((can - s).abs() < 1e-12 * s);
    }

    #[test]
    fn projection_self_adjoint() {
        let mut rng = PortableRng::seed_from_u64(47);
        let y = random_stiefel(6, 3, &mut rng);
        let w1 = random_matrix(6, 3, &mut rng);
        let w2 = random_matrix(6, 3, &mut rng);
        let p1 = project(&y, &w1).unwrap();
        let p2 = project(&y, &w2).unwrap();
        let lhs = p1.matrix().dot(&w2);
        let rhs = w1.dot(p2.matrix());
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }
}
