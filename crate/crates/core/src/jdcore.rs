//! The joint-diagonalization objective
//! `f(Y) = -Σ_l ‖diag(Y^T A_l Y)‖_F²` on St(p,n), its Euclidean and
//! Riemannian gradients, the Hessian action in ambient and `(B, C)`
//! coordinates, and the reduced representation matrix `H_A` that turns
//! Newton's equation into a `dim St(p,n)`-dimensional linear system.
//!
//! `H_A` is produced by two independent routes: a production assembler that
//! evaluates the Kronecker-structured entry formulas through the implicit
//! index maps of [`crate::matvec`], and a literal dense reference assembler
//! kept for cross-checks.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::matvec::{
    commutation, diag_selector, diag_part, kron, skew_duplication, sym_part, skew_part,
    veck_len, veck_pairs,
};
use crate::scalar::Scalar;
use crate::stiefel::{
    project, tangency_defect, Metric, StiefelFrame, StiefelPoint, TangentAmbient, TangentCoords,
};

/// The problem data: `N` symmetric `n x n` matrices.
///
/// Inputs are validated against `‖A - A^T‖_F <= 1e-10 ‖A‖_F` and then
/// explicitly symmetrized.
#[derive(Debug, Clone)]
pub struct SymmetricSet<T> {
    mats: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> SymmetricSet<T> {
    pub fn new(mats: Vec<DenseMatrix<T>>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::InvalidData {
                rows: 0,
                cols: 0,
                got: 0,
            });
        }
        let n = mats[0].rows();
        let mut checked = Vec::with_capacity(mats.len());
        for m in mats {
            if !m.is_square() {
                return Err(Error::NotSquare {
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
            if m.rows() != n {
                return Err(Error::ShapeMismatch {
                    expected: (n, n),
                    got: m.shape(),
                });
            }
            let defect = m.sub(&m.transpose()).fro_norm();
            let tol = T::tol(1e-10) * m.fro_norm();
            if defect > tol {
                return Err(Error::AsymmetricInput {
                    defect: defect.as_f64(),
                    tol: tol.as_f64(),
                });
            }
            let mut m = m;
            m.symmetrize_in_place();
            checked.push(m);
        }
        Ok(Self { mats: checked })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.mats[0].rows()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn mats(&self) -> &[DenseMatrix<T>] {
        &self.mats
    }

    /// `Σ_l ‖A_l‖_F`, the natural problem scale.
    pub fn total_fro_norm(&self) -> T {
        self.mats.iter().map(|m| m.fro_norm()).sum()
    }
}

impl<T: Scalar> std::ops::Index<usize> for SymmetricSet<T> {
    type Output = DenseMatrix<T>;
    fn index(&self, l: usize) -> &DenseMatrix<T> {
        &self.mats[l]
    }
}

/// Compressed problem data at a frame `(Y, Y_perp)`:
/// `Z_l = Y^T A_l Y`, `Z_l^perp = Y^T A_l Y_perp`, `Z_l^perpperp = Y_perp^T A_l Y_perp`.
///
/// `Z_l` and `Z_l^perpperp` are re-symmetrized after computation so roundoff
/// drift never feeds the Hessian blocks. `s_total = Σ_l sym(Z_l diag(Z_l))`
/// is shared by the gradient and all Hessian routes.
#[derive(Debug, Clone)]
pub struct CompressedData<T> {
    n: usize,
    p: usize,
    z: Vec<DenseMatrix<T>>,
    zperp: Vec<DenseMatrix<T>>,
    zperp_t: Vec<DenseMatrix<T>>,
    zperpperp: Vec<DenseMatrix<T>>,
    s_total: DenseMatrix<T>,
}

impl<T: Scalar> CompressedData<T> {
    pub fn compute(set: &SymmetricSet<T>, frame: &StiefelFrame<T>) -> Result<Self> {
        let y = frame.point().matrix();
        let yp = frame.perp().matrix();
        let (n, p) = y.shape();
        if set.n() != n {
            return Err(Error::ShapeMismatch {
                expected: (n, n),
                got: (set.n(), set.n()),
            });
        }
        let mut z = Vec::with_capacity(set.len());
        let mut zperp = Vec::with_capacity(set.len());
        let mut zperp_t = Vec::with_capacity(set.len());
        let mut zperpperp = Vec::with_capacity(set.len());
        let mut s_total = DenseMatrix::zeros(p, p);
        for a in set.mats() {
            let ay = a.matmul(y);
            let mut zl = y.matmul_tn(&ay);
            zl.symmetrize_in_place();
            let zp = ay.matmul_tn(yp); // (A Y)^T Y_perp = Y^T A Y_perp for symmetric A
            let ayp = a.matmul(yp);
            let mut zpp = yp.matmul_tn(&ayp);
            zpp.symmetrize_in_place();
            let dz = zl.diag_vec();
            s_total = s_total.add(&sym_part(&zl.scale_cols(&dz)));
            zperp_t.push(zp.transpose());
            z.push(zl);
            zperp.push(zp);
            zperpperp.push(zpp);
        }
        Ok(Self {
            n,
            p,
            z,
            zperp,
            zperp_t,
            zperpperp,
            s_total,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.z.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn z(&self, l: usize) -> &DenseMatrix<T> {
        &self.z[l]
    }

    #[inline]
    pub fn zperp(&self, l: usize) -> &DenseMatrix<T> {
        &self.zperp[l]
    }

    #[inline]
    pub fn zperpperp(&self, l: usize) -> &DenseMatrix<T> {
        &self.zperpperp[l]
    }

    /// Manifold dimension of the underlying Stiefel point.
    pub fn dim(&self) -> usize {
        veck_len(self.p) + self.p * (self.n - self.p)
    }
}

/// `f(Y) = -Σ_l ‖diag(Y^T A_l Y)‖_F²`; always `<= 0`.
pub fn objective<T: Scalar>(set: &SymmetricSet<T>, y: &StiefelPoint<T>) -> Result<T> {
    objective_ambient(set, y.matrix())
}

/// The same expression evaluated on an arbitrary `n x p` matrix (the smooth
/// extension of `f` to the ambient space).
pub fn objective_ambient<T: Scalar>(set: &SymmetricSet<T>, w: &DenseMatrix<T>) -> Result<T> {
    if w.rows() != set.n() {
        return Err(Error::ShapeMismatch {
            expected: (set.n(), w.cols()),
            got: w.shape(),
        });
    }
    let mut total = T::zero();
    for a in set.mats() {
        let aw = a.matmul(w);
        for j in 0..w.cols() {
            let mut d = T::zero();
            for (&x, &y) in w.col(j).iter().zip(aw.col(j)) {
                d += x * y;
            }
            total += d * d;
        }
    }
    Ok(-total)
}

/// Euclidean gradient of the ambient extension:
/// `grad f̄(W) = -4 Σ_l A_l W diag(W^T A_l W)`.
pub fn euclidean_gradient<T: Scalar>(
    set: &SymmetricSet<T>,
    w: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if w.rows() != set.n() {
        return Err(Error::ShapeMismatch {
            expected: (set.n(), w.cols()),
            got: w.shape(),
        });
    }
    let mut g = DenseMatrix::zeros(w.rows(), w.cols());
    for a in set.mats() {
        let aw = a.matmul(w);
        let d: Vec<T> = (0..w.cols())
            .map(|j| {
                let mut s = T::zero();
                for (&x, &y) in w.col(j).iter().zip(aw.col(j)) {
                    s += x * y;
                }
                s
            })
            .collect();
        g.axpy(-T::cst(4.0), &aw.scale_cols(&d));
    }
    Ok(g)
}

/// Riemannian gradient at `Y` for the chosen metric.
///
/// Induced: `grad f = P_Y(grad f̄) = -4 Σ (A_l Y diag(Z_l) - Y sym(Z_l diag(Z_l)))`.
/// Canonical: `grad f = grad f̄ - Y (grad f̄)^T Y`.
pub fn riemannian_gradient<T: Scalar>(
    set: &SymmetricSet<T>,
    y: &StiefelPoint<T>,
    metric: Metric,
) -> Result<TangentAmbient<T>> {
    let ym = y.matrix();
    if ym.rows() != set.n() {
        return Err(Error::ShapeMismatch {
            expected: (set.n(), ym.cols()),
            got: ym.shape(),
        });
    }
    let g = match metric {
        Metric::Induced => {
            let mut acc = DenseMatrix::zeros(ym.rows(), ym.cols());
            for a in set.mats() {
                let ay = a.matmul(ym);
                let z = ym.matmul_tn(&ay);
                let dz = z.diag_vec();
                acc.axpy(T::one(), &ay.scale_cols(&dz));
                acc.axpy(-T::one(), &ym.matmul(&sym_part(&z.scale_cols(&dz))));
            }
            acc.scale(-T::cst(4.0))
        }
        Metric::Canonical => {
            let gbar = euclidean_gradient(set, ym)?;
            let mut g = gbar.clone();
            g.axpy(-T::one(), &ym.matmul(&gbar.matmul_tn(ym)));
            g
        }
    };
    Ok(TangentAmbient::new_unchecked(g))
}

/// Frame components of the Riemannian gradient, straight from the compressed
/// data:
/// `Y^T grad f = -4 skew(Σ Z_l diag(Z_l))` and
/// `Y_perp^T grad f = -4 Σ (Z_l^perp)^T diag(Z_l)` for the induced metric;
/// the canonical gradient doubles the `B` component.
pub fn gradient_coords<T: Scalar>(
    data: &CompressedData<T>,
    metric: Metric,
) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let p = data.p;
    let nmp = data.n - data.p;
    let mut gb_raw = DenseMatrix::zeros(p, p);
    let mut gc = DenseMatrix::zeros(nmp, p);
    for l in 0..data.len() {
        let dz = data.z[l].diag_vec();
        gb_raw.axpy(T::one(), &data.z[l].scale_cols(&dz));
        gc.axpy(T::one(), &data.zperp_t[l].scale_cols(&dz));
    }
    let scale_b = match metric {
        Metric::Induced => -T::cst(4.0),
        Metric::Canonical => -T::cst(8.0),
    };
    (skew_part(&gb_raw).scale(scale_b), gc.scale(-T::cst(4.0)))
}

/// Hessian action on an ambient tangent vector.
///
/// Induced: `-4 Σ P_Y(A_l ξ diag(Z_l) + 2 A_l Y diag(Y^T A_l ξ) - ξ sym(Z_l diag(Z_l)))`.
/// Canonical: `(I + Y Y^T) P_Y(G_Y(ξ))`.
pub fn hessian_apply<T: Scalar>(
    set: &SymmetricSet<T>,
    y: &StiefelPoint<T>,
    xi: &TangentAmbient<T>,
    metric: Metric,
) -> Result<TangentAmbient<T>> {
    let ym = y.matrix();
    let xim = xi.matrix();
    if xim.shape() != ym.shape() {
        return Err(Error::ShapeMismatch {
            expected: ym.shape(),
            got: xim.shape(),
        });
    }
    let defect = tangency_defect(y, xim);
    let tol = T::tol(1e-10) * T::one().max(xim.fro_norm());
    if defect > tol {
        return Err(Error::NotTangent {
            defect: defect.as_f64(),
            tol: tol.as_f64(),
        });
    }
    match metric {
        Metric::Induced => {
            let mut acc = DenseMatrix::zeros(ym.rows(), ym.cols());
            let mut s_total = DenseMatrix::zeros(ym.cols(), ym.cols());
            for a in set.mats() {
                let ay = a.matmul(ym);
                let z = ym.matmul_tn(&ay);
                let dz = z.diag_vec();
                let axi = a.matmul(xim);
                let dyax = ym.matmul_tn(&axi).diag_vec();
                acc.axpy(T::one(), &axi.scale_cols(&dz));
                acc.axpy(T::cst(2.0), &ay.scale_cols(&dyax));
                s_total = s_total.add(&sym_part(&z.scale_cols(&dz)));
            }
            acc.axpy(-T::one(), &xim.matmul(&s_total));
            let out = project(y, &acc.scale(-T::cst(4.0)))?;
            Ok(out)
        }
        Metric::Canonical => {
            let mut g = DenseMatrix::zeros(ym.rows(), ym.cols());
            let mut s_total = DenseMatrix::zeros(ym.cols(), ym.cols());
            let half = T::cst(0.5);
            for a in set.mats() {
                let ay = a.matmul(ym);
                let z = ym.matmul_tn(&ay);
                let dz = z.diag_vec();
                let axi = a.matmul(xim);
                let dyax = ym.matmul_tn(&axi).diag_vec();
                g.axpy(T::one(), &axi.scale_cols(&dz));
                g.axpy(T::cst(2.0), &ay.scale_cols(&dyax));
                // (Y ξ^T A_l Y + A_l Y diag(Z_l) ξ^T Y) / 2 with the first
                // product carrying diag(Z_l) on the right.
                let xitay = xim.matmul_tn(&ay);
                g.axpy(half, &ym.matmul(&xitay.scale_cols(&dz)));
                g.axpy(half, &ay.scale_cols(&dz).matmul(&xim.matmul_tn(ym)));
                s_total = s_total.add(&sym_part(&z.scale_cols(&dz)));
            }
            // -(I - Y Y^T) ξ Σ sym(Z_l diag(Z_l))
            let mut xi_normal = xim.clone();
            xi_normal.axpy(-T::one(), &ym.matmul(&ym.matmul_tn(xim)));
            g.axpy(-T::one(), &xi_normal.matmul(&s_total));
            let pg = project(y, &g.scale(-T::cst(4.0)))?;
            let mut out = pg.matrix().clone();
            out.axpy(T::one(), &ym.matmul(&ym.matmul_tn(pg.matrix())));
            Ok(TangentAmbient::new_unchecked(out))
        }
    }
}

/// Hessian action in `(B, C)` coordinates, from the compressed data alone.
pub fn hessian_coords<T: Scalar>(
    data: &CompressedData<T>,
    coords: &TangentCoords<T>,
    metric: Metric,
) -> TangentCoords<T> {
    let p = data.p;
    let nmp = data.n - data.p;
    assert_eq!(coords.p(), p, "coordinate dimension mismatch");
    assert_eq!(coords.n_minus_p(), nmp, "coordinate dimension mismatch");
    let b = coords.b_matrix();
    let c = coords.c_matrix();
    let mut bh = DenseMatrix::zeros(p, p);
    let mut ch = DenseMatrix::zeros(nmp, p);
    let half = T::cst(0.5);
    let two = T::cst(2.0);
    for l in 0..data.len() {
        let z = &data.z[l];
        let zp = &data.zperp[l];
        let zpt = &data.zperp_t[l];
        let zpp = &data.zperpperp[l];
        let dz = z.diag_vec();
        let zb = z.matmul(&b);
        let zpc = zp.matmul(c);
        let m1 = zb.add(&zpc); // Z_l B + Z_l^perp C
        let dm1 = m1.diag_vec();
        bh.axpy(T::one(), &m1.scale_cols(&dz));
        bh.axpy(two, &z.scale_cols(&dm1));
        if let Metric::Canonical = metric {
            // (1/2)((-B Z_l + (Z_l^perp C)^T) diag(Z_l) - Z_l diag(Z_l) B)
            let mut extra = zpc.transpose();
            extra.axpy(-T::one(), &b.matmul(z));
            bh.axpy(half, &extra.scale_cols(&dz));
            bh.axpy(-half, &z.scale_cols(&dz).matmul(&b));
        }
        let mut ch_l = zpt.matmul(&b).add(&zpp.matmul(c)).scale_cols(&dz);
        ch_l.axpy(two, &zpt.scale_cols(&dm1));
        if let Metric::Canonical = metric {
            ch_l.axpy(-half, &zpt.scale_cols(&dz).matmul(&b));
        }
        ch.axpy(T::one(), &ch_l);
    }
    ch.axpy(-T::one(), &c.matmul(&data.s_total));
    let (bh_scaled, ch_scaled) = match metric {
        Metric::Induced => {
            bh.axpy(-T::one(), &b.matmul(&data.s_total));
            (bh.scale(-T::cst(4.0)), ch.scale(-T::cst(4.0)))
        }
        // The B sym-term vanishes under Y^T (I - Y Y^T) = 0; the factor 2
        // comes from (I + Y Y^T) acting on the Y-component.
        Metric::Canonical => (bh.scale(-T::cst(8.0)), ch.scale(-T::cst(4.0))),
    };
    // from_matrices extracts the skew part of the B block.
    TangentCoords::from_matrices(&bh_scaled, ch_scaled)
}

/// The reduced Hessian representation matrix, stored blockwise.
///
/// Row/column coordinates are `(veck(B); vec(C))`. Under the induced metric
/// `H21 = 2 H12^T`; under the canonical metric the full matrix is symmetric.
#[derive(Debug, Clone)]
pub struct HessianRep<T> {
    pub h11: DenseMatrix<T>,
    pub h12: DenseMatrix<T>,
    pub h21: DenseMatrix<T>,
    pub h22: DenseMatrix<T>,
    pub metric: Metric,
}

impl<T: Scalar> HessianRep<T> {
    /// Total dimension `p(p-1)/2 + p(n-p)`.
    pub fn dim(&self) -> usize {
        self.h11.rows() + self.h22.rows()
    }

    /// Applies the block matrix to a stacked `(veck(B); vec(C))` vector.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let nb = self.h11.rows();
        let nc = self.h22.rows();
        assert_eq!(x.len(), nb + nc, "apply dimension mismatch");
        let (xb, xc) = x.split_at(nb);
        let mut top = self.h11.mul_vec(xb);
        for (t, v) in top.iter_mut().zip(self.h12.mul_vec(xc)) {
            *t += v;
        }
        let mut bot = self.h21.mul_vec(xb);
        for (b, v) in bot.iter_mut().zip(self.h22.mul_vec(xc)) {
            *b += v;
        }
        top.extend(bot);
        top
    }

    /// Assembles the four blocks into one dense matrix.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let nb = self.h11.rows();
        let nc = self.h22.rows();
        let dim = nb + nc;
        let mut out = DenseMatrix::zeros(dim, dim);
        for c in 0..nb {
            for r in 0..nb {
                out.set(r, c, self.h11.get(r, c));
            }
            for r in 0..nc {
                out.set(nb + r, c, self.h21.get(r, c));
            }
        }
        for c in 0..nc {
            for r in 0..nb {
                out.set(r, nb + c, self.h12.get(r, c));
            }
            for r in 0..nc {
                out.set(nb + r, nb + c, self.h22.get(r, c));
            }
        }
        out
    }
}

/// Production assembler for `H_A`.
///
/// Every entry is evaluated from the Kronecker-structured block formulas via
/// the veck index maps; no `p² x p²` intermediate is formed. The
/// strictly-lower-triangle reduction uses `D_p^T (I - T_p) = 2 D_p^T`.
pub fn hessian_matrix<T: Scalar>(data: &CompressedData<T>, metric: Metric) -> HessianRep<T> {
    let p = data.p;
    let nmp = data.n - data.p;
    let pairs = veck_pairs(p);
    let nb = pairs.len();
    let nc = nmp * p;
    let s = &data.s_total;
    let two = T::cst(2.0);

    let mut h11 = DenseMatrix::zeros(nb, nb);
    for (m, &(c, d)) in pairs.iter().enumerate() {
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let mut acc = T::zero();
            for z in &data.z {
                if b == d {
                    acc += z.get(b, b) * z.get(a, c) + two * z.get(a, b) * z.get(b, c);
                }
                if b == c {
                    acc -= z.get(b, b) * z.get(a, d) + two * z.get(a, b) * z.get(b, d);
                }
                if a == d {
                    acc -= z.get(a, a) * z.get(b, c) + two * z.get(b, a) * z.get(a, c);
                }
                if a == c {
                    acc += z.get(a, a) * z.get(b, d) + two * z.get(b, a) * z.get(a, d);
                }
            }
            let mut entry = -two * acc;
            if a == c {
                entry += two * s.get(b, d);
            }
            if a == d {
                entry -= two * s.get(b, c);
            }
            if b == c {
                entry -= two * s.get(a, d);
            }
            if b == d {
                entry += two * s.get(a, c);
            }
            h11.set(k, m, entry);
        }
    }

    let mut h12 = DenseMatrix::zeros(nb, nc);
    for v in 0..p {
        for u in 0..nmp {
            let m = v * nmp + u;
            for (k, &(a, b)) in pairs.iter().enumerate() {
                let mut acc = T::zero();
                for l in 0..data.len() {
                    let z = &data.z[l];
                    let zp = &data.zperp[l];
                    if b == v {
                        acc += z.get(b, b) * zp.get(a, u) + two * z.get(a, b) * zp.get(b, u);
                    }
                    if a == v {
                        acc -= z.get(a, a) * zp.get(b, u) + two * z.get(b, a) * zp.get(a, u);
                    }
                }
                h12.set(k, m, -two * acc);
            }
        }
    }

    let mut h22 = DenseMatrix::zeros(nc, nc);
    let four = T::cst(4.0);
    for v2 in 0..p {
        for u2 in 0..nmp {
            let m2 = v2 * nmp + u2;
            for v1 in 0..p {
                for u1 in 0..nmp {
                    let m1 = v1 * nmp + u1;
                    let mut entry = T::zero();
                    if v1 == v2 {
                        let mut acc = T::zero();
                        for l in 0..data.len() {
                            let z = &data.z[l];
                            let zp = &data.zperp[l];
                            let zpp = &data.zperpperp[l];
                            acc += z.get(v1, v1) * zpp.get(u1, u2)
                                + two * zp.get(v1, u1) * zp.get(v1, u2);
                        }
                        entry -= four * acc;
                    }
                    if u1 == u2 {
                        entry += four * s.get(v1, v2);
                    }
                    h22.set(m1, m2, entry);
                }
            }
        }
    }

    match metric {
        Metric::Induced => {
            let h21 = h12.transpose().scale(two);
            HessianRep {
                h11,
                h12,
                h21,
                h22,
                metric,
            }
        }
        Metric::Canonical => {
            let h11 = h11.scale(two);
            // Extra term -2 D_p^T (I - T_p) Σ (-1/2)(I_p ⊗ diag(Z_l) Z_l^perp).
            let mut h12 = h12.scale(two);
            for v in 0..p {
                for u in 0..nmp {
                    let m = v * nmp + u;
                    for (k, &(a, b)) in pairs.iter().enumerate() {
                        let mut extra = T::zero();
                        for l in 0..data.len() {
                            let z = &data.z[l];
                            let zp = &data.zperp[l];
                            if b == v {
                                extra += z.get(a, a) * zp.get(a, u);
                            }
                            if a == v {
                                extra -= z.get(b, b) * zp.get(b, u);
                            }
                        }
                        let cur = h12.get(k, m);
                        h12.set(k, m, cur + two * extra);
                    }
                }
            }
            let h21 = h12.transpose();
            HessianRep {
                h11,
                h12,
                h21,
                h22,
                metric,
            }
        }
    }
}

/// Reference assembler: the literal dense Kronecker-product block formulas,
/// including the unsimplified `D_p^T (I - T_p)` factor and the explicit `H21`
/// expressions. Intended for cross-checks; panics above total dimension 400.
pub fn hessian_matrix_reference<T: Scalar>(
    data: &CompressedData<T>,
    metric: Metric,
) -> HessianRep<T> {
    let p = data.p;
    let nmp = data.n - data.p;
    assert!(
        veck_len(p) + p * nmp <= 400,
        "reference assembler is limited to dimension 400"
    );
    let dp: DenseMatrix<T> = skew_duplication(p).to_dense();
    let tp: DenseMatrix<T> = commutation(p).to_dense();
    let delta: DenseMatrix<T> = diag_selector(p).to_dense();
    let ip = DenseMatrix::<T>::identity(p);
    let inmp = DenseMatrix::<T>::identity(nmp);
    // D_p^T (I - T_p), kept literal.
    let mut i_minus_t = DenseMatrix::<T>::identity(p * p);
    i_minus_t.axpy(-T::one(), &tp);
    let dt_it = dp.transpose().matmul(&i_minus_t);

    let half = T::cst(0.5);
    let mut m11 = DenseMatrix::zeros(p * p, p * p);
    let mut m12 = DenseMatrix::zeros(p * p, p * nmp);
    let mut m21 = DenseMatrix::zeros(p * nmp, p * p);
    let mut m22 = DenseMatrix::zeros(p * nmp, p * nmp);
    for l in 0..data.len() {
        let z = &data.z[l];
        let zp = &data.zperp[l];
        let zpt = &data.zperp_t[l];
        let zpp = &data.zperpperp[l];
        let dz = diag_part(z);
        let s_l = sym_part(&z.scale_cols(&z.diag_vec()));
        let kz = kron(&ip, z);
        let kzp = kron(&ip, zp);
        let kzpt = kron(&ip, zpt);

        m11 = m11.add(&kron(&dz, z));
        m11.axpy(T::cst(2.0), &kz.matmul(&delta).matmul(&kz));
        m11.axpy(-T::one(), &kron(&s_l, &ip));

        m12 = m12.add(&kron(&dz, zp));
        m12.axpy(T::cst(2.0), &kz.matmul(&delta).matmul(&kzp));

        m21 = m21.add(&kron(&dz, zpt));
        m21.axpy(T::cst(2.0), &kzpt.matmul(&delta).matmul(&kz));

        m22 = m22.add(&kron(&dz, zpp));
        m22.axpy(T::cst(2.0), &kzpt.matmul(&delta).matmul(&kzp));
        m22.axpy(-T::one(), &kron(&s_l, &inmp));

        if let Metric::Canonical = metric {
            m12.axpy(-half, &kron(&ip, &dz.matmul(zp)));
            m21.axpy(-half, &kron(&ip, &zpt.matmul(&dz)));
        }
    }
    let factor = match metric {
        Metric::Induced => T::one(),
        Metric::Canonical => T::cst(2.0),
    };
    let h11 = dt_it.matmul(&m11).matmul(&dp).scale(-factor);
    let h12 = dt_it.matmul(&m12).scale(-factor);
    let h21 = m21.matmul(&dp).scale(-T::cst(4.0));
    let h22 = m22.scale(-T::cst(4.0));
    HessianRep {
        h11,
        h12,
        h21,
        h22,
        metric,
    }
}
