//! JADE-style independent component analysis: centering, whitening,
//! fourth-order cumulant matrices for the orthonormal basis `M_kl`, reduction
//! to a joint-diagonalization problem over the orthogonal group, separation
//! (Jacobi warm start polished by Newton), and alignment diagnostics against
//! known sources.

use crate::error::{Error, Result};
use crate::jacobi::{jacobi_diagonalize, JacobiConfig};
use crate::jdcore::{objective, riemannian_gradient, SymmetricSet};
use crate::matrix::DenseMatrix;
use crate::newton::{solve_orthogonal, NewtonConfig, SolveTrace, Termination};
use crate::rng::PortableRng;
use crate::scalar::Scalar;
use crate::stiefel::Metric;

/// Multichannel signal: `n` channels by `T` samples.
#[derive(Debug, Clone)]
pub struct SignalMatrix<T> {
    x: DenseMatrix<T>,
}

impl<T: Scalar> SignalMatrix<T> {
    pub fn new(x: DenseMatrix<T>) -> Result<Self> {
        let (n, samples) = x.shape();
        if samples < n {
            return Err(Error::ShapeMismatch {
                expected: (n, n),
                got: (n, samples),
            });
        }
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData {
                rows: n,
                cols: samples,
                got: usize::MAX,
            });
        }
        Ok(Self { x })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.x.rows()
    }

    #[inline]
    pub fn samples(&self) -> usize {
        self.x.cols()
    }

    #[inline]
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.x
    }

    pub fn channel(&self, i: usize) -> Vec<T> {
        (0..self.samples()).map(|t| self.x.get(i, t)).collect()
    }
}

/// Centering plus whitening transform fitted to a signal.
#[derive(Debug, Clone)]
pub struct WhiteningTransform<T> {
    pub mean: Vec<T>,
    pub w: DenseMatrix<T>,
    pub w_inv: DenseMatrix<T>,
}

/// Subtracts the per-channel sample mean and whitens by the inverse square
/// root of the sample covariance (`W = Λ^{-1/2} U^T` from its
/// eigendecomposition), so the output has identity sample covariance.
pub fn center_whiten<T: Scalar>(
    x: &SignalMatrix<T>,
) -> Result<(WhiteningTransform<T>, SignalMatrix<T>)> {
    let n = x.channels();
    let samples = x.samples();
    let t_inv = T::one() / T::cst(samples as f64);
    let mut mean = vec![T::zero(); n];
    for t in 0..samples {
        for (m, &v) in mean.iter_mut().zip(x.matrix().col(t)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m *= t_inv;
    }
    let mut centered = x.matrix().clone();
    for t in 0..samples {
        for (v, &m) in centered.col_mut(t).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let cov = centered.matmul_nt(&centered).scale(t_inv);
    let eig = cov.sym_eigen()?;
    let lam_max = eig.values.last().copied().unwrap_or(T::zero());
    let lam_min = eig.values.first().copied().unwrap_or(T::zero());
    if lam_min <= T::tol(1e-12) * lam_max || lam_max <= T::zero() {
        return Err(Error::SingularCovariance {
            ratio: (lam_min / lam_max).as_f64(),
        });
    }
    let inv_sqrt: Vec<T> = eig.values.iter().map(|&v| T::one() / v.sqrt()).collect();
    let sqrt: Vec<T> = eig.values.iter().map(|&v| v.sqrt()).collect();
    let w = eig.vectors.transpose().scale_rows(&inv_sqrt);
    let w_inv = eig.vectors.scale_cols(&sqrt);
    let z0 = SignalMatrix::new(w.matmul(&centered))?;
    Ok((
        WhiteningTransform { mean, w, w_inv },
        z0,
    ))
}

fn sample_mean_product<T: Scalar>(z: &SignalMatrix<T>, idx: &[usize]) -> T {
    let samples = z.samples();
    let mut acc = T::zero();
    for t in 0..samples {
        let col = z.matrix().col(t);
        let mut prod = T::one();
        for &i in idx {
            prod *= col[i];
        }
        acc += prod;
    }
    acc / T::cst(samples as f64)
}

/// Sample fourth-order cumulant
/// `C_ijkl = E[z_i z_j z_k z_l] - E[z_i z_j] E[z_k z_l] - E[z_i z_k] E[z_j z_l] - E[z_i z_l] E[z_j z_k]`
/// with `E` the sample mean over zero-mean whitened data. Indices are
/// canonicalized before evaluation, so full permutation symmetry holds
/// exactly.
pub fn cumulant<T: Scalar>(z: &SignalMatrix<T>, i: usize, j: usize, k: usize, l: usize) -> Result<T> {
    let n = z.channels();
    if i >= n || j >= n || k >= n || l >= n {
        return Err(Error::IndexOutOfRange {
            msg: format!("cumulant index ({i},{j},{k},{l}) for {n} channels"),
        });
    }
    let mut idx = [i, j, k, l];
    idx.sort_unstable();
    let [a, b, c, d] = idx;
    let m4 = sample_mean_product(z, &idx);
    let pair = |p: usize, q: usize| sample_mean_product(z, &[p, q]);
    Ok(m4 - pair(a, b) * pair(c, d) - pair(a, c) * pair(b, d) - pair(a, d) * pair(b, c))
}

/// Orthonormal symmetric basis matrix `M_kl` (`0 <= k <= l < n`):
/// `E_kk` on the diagonal, `(E_kl + E_lk)/√2` off it.
pub fn basis_matrix<T: Scalar>(k: usize, l: usize, n: usize) -> Result<DenseMatrix<T>> {
    if k > l || l >= n {
        return Err(Error::IndexOutOfRange {
            msg: format!("basis pair ({k},{l}) for order {n}"),
        });
    }
    let mut m = DenseMatrix::zeros(n, n);
    if k == l {
        m.set(k, k, T::one());
    } else {
        let v = T::one() / T::cst(2.0).sqrt();
        m.set(k, l, v);
        m.set(l, k, v);
    }
    Ok(m)
}

/// Cumulant matrix `Q^z(M)` of whitened data via the one-pass shortcut
/// `Q = E[(z^T M z) z z^T] - tr(M) I - M - M^T`.
///
/// The sample accumulation is strictly sequential so runs are reproducible.
pub fn cumulant_matrix<T: Scalar>(
    z: &SignalMatrix<T>,
    m: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let n = z.channels();
    if m.shape() != (n, n) {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            got: m.shape(),
        });
    }
    let samples = z.samples();
    let mut q = DenseMatrix::zeros(n, n);
    for t in 0..samples {
        let col = z.matrix().col(t);
        let mut quad = T::zero();
        for c in 0..n {
            let mut s = T::zero();
            for (&mrc, &zr) in m.col(c).iter().zip(col) {
                s += mrc * zr;
            }
            quad += s * col[c];
        }
        for c in 0..n {
            let qc = quad * col[c];
            let qcol = q.col_mut(c);
            for (r, &v) in col.iter().enumerate() {
                qcol[r] += qc * v;
            }
        }
    }
    let t_inv = T::one() / T::cst(samples as f64);
    let mut out = q.scale(t_inv);
    let tr: T = m.diag_vec().into_iter().sum();
    for i in 0..n {
        let v = out.get(i, i) - tr;
        out.set(i, i, v);
    }
    out.axpy(-T::one(), m);
    out.axpy(-T::one(), &m.transpose());
    Ok(out)
}

/// Literal cumulant matrix `(Q)_ij = Σ_kl C_ijkl m_kl`; the cross-check route
/// for [`cumulant_matrix`]. Cost grows as `n⁴ T`.
pub fn cumulant_matrix_literal<T: Scalar>(
    z: &SignalMatrix<T>,
    m: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let n = z.channels();
    if m.shape() != (n, n) {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            got: m.shape(),
        });
    }
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = T::zero();
            for k in 0..n {
                for l in 0..n {
                    let mkl = m.get(k, l);
                    if mkl == T::zero() {
                        continue;
                    }
                    s += cumulant(z, i, j, k, l)? * mkl;
                }
            }
            out.set(i, j, s);
        }
    }
    Ok(out)
}

/// The `n(n+1)/2` cumulant matrices `Q^z(M_kl)`, `k <= l`, ordered
/// `(0,0), (0,1), (1,1), (0,2), (1,2), (2,2), ...` — a joint-diagonalization
/// problem whose minimizer over `O(n)` minimizes the fourth-order contrast.
#[derive(Debug, Clone)]
pub struct CumulantSet<T> {
    set: SymmetricSet<T>,
    pairs: Vec<(usize, usize)>,
}

impl<T: Scalar> CumulantSet<T> {
    #[inline]
    pub fn set(&self) -> &SymmetricSet<T> {
        &self.set
    }

    #[inline]
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `Σ_l ‖A_l‖_F`: near zero for Gaussian data, where the contrast carries
    /// no information.
    pub fn contrast_norm(&self) -> T {
        self.set.total_fro_norm()
    }
}

/// Builds the joint-diagonalization problem from whitened data.
pub fn build_jd_problem<T: Scalar>(z: &SignalMatrix<T>) -> Result<CumulantSet<T>> {
    let n = z.channels();
    let mut mats = Vec::with_capacity(n * (n + 1) / 2);
    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    for l in 0..n {
        for k in 0..=l {
            let m = basis_matrix::<T>(k, l, n)?;
            let mut q = cumulant_matrix(z, &m)?;
            q.symmetrize_in_place();
            mats.push(q);
            pairs.push((k, l));
        }
    }
    Ok(CumulantSet {
        set: SymmetricSet::new(mats)?,
        pairs,
    })
}

/// Channel-wise alignment of an estimate against known sources: greedy
/// maximum-|correlation| matching, least-squares scales, per-channel
/// correlations. Diagnostic only.
#[derive(Debug, Clone)]
pub struct Alignment<T> {
    /// `permutation[s]` is the estimated channel matched to true source `s`.
    pub permutation: Vec<usize>,
    /// Least-squares scale mapping estimated channel `permutation[s]` onto
    /// source `s` (after centering).
    pub scales: Vec<T>,
    /// `|corr|`-signed correlation between the matched pair.
    pub correlations: Vec<T>,
}

/// Result of the separation pipeline.
#[derive(Debug, Clone)]
pub struct SeparationResult<T> {
    /// Separating matrix applied to centered observations.
    pub b_sep: DenseMatrix<T>,
    /// Recovered signals `Z = B_sep (X - mean)`.
    pub z: SignalMatrix<T>,
    pub mean: Vec<T>,
    /// `Σ_l ‖A_l‖_F` of the cumulant set (contrast scale).
    pub contrast_norm: T,
    pub f_jacobi: T,
    pub f_newton: T,
    pub jacobi_grad_norm: T,
    pub newton_grad_norm: T,
    pub jacobi_orth_defect: T,
    pub newton_orth_defect: T,
    pub jacobi_sweeps: usize,
    /// Set when Newton failed (singular system) or would have degraded the
    /// gradient norm; the Jacobi solution is returned instead.
    pub fell_back: bool,
    pub newton_trace: SolveTrace<T>,
    /// Filled by the caller when ground truth is available.
    pub alignment: Option<Alignment<T>>,
}

/// Warm-start configuration for the separation pipeline: a handful of sweeps
/// (scaling with the channel count) is enough to enter Newton's basin, and
/// stopping there leaves the high-precision work to the Newton stage instead
/// of letting the sweeps grind to machine precision on small problems.
pub fn pipeline_warm_start<T: Scalar>(channels: usize) -> JacobiConfig<T> {
    JacobiConfig {
        max_sweeps: channels.max(3),
        ..JacobiConfig::default()
    }
}

/// Full separation pipeline: center/whiten, build the cumulant set, run the
/// Jacobi-like warm start, polish with Newton on the orthogonal group, and
/// unmix. The returned rotation never has a worse gradient norm than the
/// warm start.
pub fn separate<T: Scalar>(x: &SignalMatrix<T>) -> Result<SeparationResult<T>> {
    separate_with(
        x,
        &pipeline_warm_start(x.channels()),
        &NewtonConfig::default(),
    )
}

pub fn separate_with<T: Scalar>(
    x: &SignalMatrix<T>,
    jacobi_cfg: &JacobiConfig<T>,
    newton_cfg: &NewtonConfig<T>,
) -> Result<SeparationResult<T>> {
    let (wh, z0) = center_whiten(x)?;
    let cumulants = build_jd_problem(&z0)?;
    let set = cumulants.set();
    let jac = jacobi_diagonalize(set, jacobi_cfg)?;
    let f_jacobi = objective(set, &jac.y)?;
    let jacobi_grad_norm = riemannian_gradient(set, &jac.y, Metric::Induced)?.norm();
    let newton = solve_orthogonal(set, &jac.y, newton_cfg)?;
    let newton_grad_norm = riemannian_gradient(set, &newton.y_final, Metric::Induced)?.norm();
    let f_newton = objective(set, &newton.y_final)?;
    let singular = newton.trace.termination == Termination::SingularHessian;
    let degraded = newton_grad_norm > jacobi_grad_norm;
    let fell_back = singular || degraded;
    let y_final = if fell_back { &jac.y } else { &newton.y_final };
    let b_sep = y_final.matrix().matmul_tn(&wh.w);
    let mut centered = x.matrix().clone();
    for t in 0..x.samples() {
        for (v, &m) in centered.col_mut(t).iter_mut().zip(&wh.mean) {
            *v -= m;
        }
    }
    let z = SignalMatrix::new(b_sep.matmul(&centered))?;
    Ok(SeparationResult {
        b_sep,
        z,
        mean: wh.mean,
        contrast_norm: cumulants.contrast_norm(),
        f_jacobi,
        f_newton,
        jacobi_grad_norm,
        newton_grad_norm,
        jacobi_orth_defect: jac.y.orthonormality_defect(),
        newton_orth_defect: newton.y_final.orthonormality_defect(),
        jacobi_sweeps: jac.sweeps,
        fell_back,
        newton_trace: newton.trace,
        alignment: None,
    })
}

fn centered_channel<T: Scalar>(s: &SignalMatrix<T>, i: usize) -> (Vec<T>, T) {
    let v = s.channel(i);
    let mean = v.iter().copied().sum::<T>() / T::cst(v.len() as f64);
    (v.iter().map(|&x| x - mean).collect(), mean)
}

/// Greedy maximum-|correlation| alignment of estimated channels against true
/// sources. Scales minimize `‖s - α z‖²` over the centered signals.
pub fn align<T: Scalar>(z: &SignalMatrix<T>, s_true: &SignalMatrix<T>) -> Result<Alignment<T>> {
    if z.matrix().shape() != s_true.matrix().shape() {
        return Err(Error::ShapeMismatch {
            expected: s_true.matrix().shape(),
            got: z.matrix().shape(),
        });
    }
    let n = z.channels();
    let zc: Vec<(Vec<T>, T)> = (0..n).map(|i| centered_channel(z, i)).collect();
    let sc: Vec<(Vec<T>, T)> = (0..n).map(|i| centered_channel(s_true, i)).collect();
    let dot = |a: &[T], b: &[T]| -> T { a.iter().zip(b).map(|(&x, &y)| x * y).sum() };
    let mut corr = DenseMatrix::<T>::zeros(n, n);
    for (src, s) in sc.iter().enumerate() {
        let ss = dot(&s.0, &s.0).sqrt();
        for (est, zch) in zc.iter().enumerate() {
            let zz = dot(&zch.0, &zch.0).sqrt();
            let c = if ss > T::zero() && zz > T::zero() {
                dot(&s.0, &zch.0) / (ss * zz)
            } else {
                T::zero()
            };
            corr.set(src, est, c);
        }
    }
    let mut permutation = vec![usize::MAX; n];
    let mut correlations = vec![T::zero(); n];
    let mut used_src = vec![false; n];
    let mut used_est = vec![false; n];
    for _ in 0..n {
        let mut best = (T::cst(-1.0), 0, 0);
        for (src, _) in used_src.iter().enumerate().filter(|(_, &u)| !u) {
            for (est, _) in used_est.iter().enumerate().filter(|(_, &u)| !u) {
                let a = corr.get(src, est).abs();
                if a > best.0 {
                    best = (a, src, est);
                }
            }
        }
        let (_, src, est) = best;
        used_src[src] = true;
        used_est[est] = true;
        permutation[src] = est;
        correlations[src] = corr.get(src, est);
    }
    let scales = (0..n)
        .map(|src| {
            let est = permutation[src];
            let zz = dot(&zc[est].0, &zc[est].0);
            if zz > T::zero() {
                dot(&sc[src].0, &zc[est].0) / zz
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(Alignment {
        permutation,
        scales,
        correlations,
    })
}

/// Synthetic non-Gaussian source families for experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// ±1 with equal probability (excess kurtosis −2).
    Rademacher,
    /// Uniform on `(-√3, √3)`, unit variance (excess kurtosis −1.2).
    Uniform,
    /// Laplace with unit variance (excess kurtosis +3).
    Laplace,
    /// Standard normal — carries no fourth-order contrast.
    Gaussian,
}

impl SourceKind {
    /// Cycle used when generating `n` channels: Rademacher, Uniform, Laplace.
    pub fn cycle(i: usize) -> Self {
        match i % 3 {
            0 => SourceKind::Rademacher,
            1 => SourceKind::Uniform,
            _ => SourceKind::Laplace,
        }
    }
}

/// Draws `n` independent unit-variance channels of length `samples`.
pub fn synthetic_sources<T: Scalar>(
    kinds: &[SourceKind],
    samples: usize,
    rng: &mut PortableRng,
) -> Result<SignalMatrix<T>> {
    let n = kinds.len();
    let mut x = DenseMatrix::zeros(n, samples);
    let sqrt3 = T::cst(3.0).sqrt();
    let inv_sqrt2 = T::one() / T::cst(2.0).sqrt();
    for t in 0..samples {
        for (i, kind) in kinds.iter().enumerate() {
            let v = match kind {
                SourceKind::Rademacher => {
                    if rng.next_u64() & 1 == 0 {
                        T::one()
                    } else {
                        -T::one()
                    }
                }
                SourceKind::Uniform => rng.uniform_in(-sqrt3, sqrt3),
                SourceKind::Laplace => {
                    let sign = if rng.next_u64() & 1 == 0 {
                        T::one()
                    } else {
                        -T::one()
                    };
                    let u = T::one() - rng.uniform::<T>();
                    sign * (-u.ln()) * inv_sqrt2
                }
                SourceKind::Gaussian => rng.normal(),
            };
            x.set(i, t, v);
        }
    }
    SignalMatrix::new(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiefel::StiefelPoint;
    use crate::testutil::random_matrix;

    type M = DenseMatrix<f64>;

    fn whitened_sources(n: usize, samples: usize, seed: u64) -> SignalMatrix<f64> {
        let mut rng = PortableRng::seed_from_u64(seed);
        let kinds: Vec<SourceKind> = (0..n).map(SourceKind::cycle).collect();
        let s = synthetic_sources::<f64>(&kinds, samples, &mut rng).unwrap();
        let (_, z0) = center_whiten(&s).unwrap();
        z0
    }

    #[test]
    fn signal_matrix_validates() {
        assert!(SignalMatrix::new(M::zeros(3, 2)).is_err());
        let mut bad = M::zeros(2, 10);
        bad.set(0, 0, f64::NAN);
        assert!(SignalMatrix::new(bad).is_err());
    }

    #[test]
    fn whitening_produces_identity_covariance() {
        let mut rng = PortableRng::seed_from_u64(1);
        // X = diag(2,3) G for unit-covariance-ish G, plus offsets.
        let t = 4000;
        let mut x = M::zeros(2, t);
        for j in 0..t {
            x.set(0, j, 2.0 * rng.normal_f64() + 5.0);
            x.set(1, j, 3.0 * rng.normal_f64() - 1.0);
        }
        let sig = SignalMatrix::new(x).unwrap();
        let (wh, z0) = center_whiten(&sig).unwrap();
        let cov = z0
            .matrix()
            .matmul_nt(z0.matrix())
            .scale(1.0 / t as f64);
        assert!(cov.sub(&M::identity(2)).fro_norm() <= 1e-8);
        assert!((wh.mean[0] - 5.0).abs() < 0.2);
        // W_inv really inverts W.
        assert!(wh.w.matmul(&wh.w_inv).sub(&M::identity(2)).fro_norm() <= 1e-12);
    }

    #[test]
    fn constant_channel_is_singular() {
        let mut x = M::zeros(2, 50);
        for j in 0..50 {
            x.set(0, j, (j as f64).sin());
            x.set(1, j, 7.0);
        }
        let sig = SignalMatrix::new(x).unwrap();
        assert!(matches!(
            center_whiten(&sig),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn rademacher_kurtosis() {
        // Exactly ±1 channels, already zero-mean/unit-variance in population.
        let mut rng = PortableRng::seed_from_u64(2);
        let t = 10_000;
        let x = M::from_fn(2, t, |_, _| if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 });
        let sig = SignalMatrix::new(x).unwrap();
        let c = cumulant(&sig, 0, 0, 0, 0).unwrap();
        assert!((c + 2.0).abs() <= 5.0 / (t as f64).sqrt(), "c1111 = {c}");
    }

    #[test]
    fn gaussian_cumulants_vanish() {
        let mut rng = PortableRng::seed_from_u64(3);
        let t = 20_000;
        let x = M::from_fn(2, t, |_, _| rng.normal_f64());
        let sig = SignalMatrix::new(x).unwrap();
        let tol = 5.0 * (24.0 / t as f64).sqrt();
        for (i, j, k, l) in [(0, 0, 0, 0), (0, 0, 1, 1), (0, 1, 0, 1), (1, 1, 1, 1)] {
            let c = cumulant(&sig, i, j, k, l).unwrap();
            assert!(c.abs() <= tol, "C_{i}{j}{k}{l} = {c}");
        }
    }

    #[test]
    fn cumulant_matches_literal_four_loop() {
        let z = whitened_sources(3, 500, 4);
        // Plain four-loop moment computation, no index canonicalization.
        let idx = [0usize, 1, 2, 1];
        let [i, j, k, l] = idx;
        let t = z.samples();
        let mean4: f64 = (0..t)
            .map(|s| {
                let c = z.matrix().col(s);
                c[i] * c[j] * c[k] * c[l]
            })
            .sum::<f64>()
            / t as f64;
        let pair = |a: usize, b: usize| -> f64 {
            (0..t).map(|s| {
                let c = z.matrix().col(s);
                c[a] * c[b]
            }).sum::<f64>() / t as f64
        };
        let want = mean4 - pair(i, j) * pair(k, l) - pair(i, k) * pair(j, l)
            - pair(i, l) * pair(j, k);
        let got = cumulant(&z, i, j, k, l).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn cumulant_full_symmetry_is_exact() {
        let z = whitened_sources(3, 300, 5);
        let base = cumulant(&z, 0, 1, 2, 2).unwrap();
        for perm in [
            (0, 1, 2, 2),
            (1, 0, 2, 2),
            (2, 2, 0, 1),
            (2, 0, 2, 1),
            (1, 2, 0, 2),
            (2, 1, 2, 0),
        ] {
            let c = cumulant(&z, perm.0, perm.1, perm.2, perm.3).unwrap();
            assert_eq!(c, base, "permutation {perm:?}");
        }
    }

    #[test]
    fn basis_matrices_are_orthonormal() {
        let m11: M = basis_matrix(0, 0, 3).unwrap();
        assert_eq!(m11.get(0, 0), 1.0);
        assert_eq!(m11.fro_norm(), 1.0);
        let m12: M = basis_matrix(0, 1, 3).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert_eq!(m12.get(0, 1), s);
        assert_eq!(m12.get(1, 0), s);
        // Orthonormality under the trace inner product, n <= 5.
        for n in 2..=5 {
            let mut all = Vec::new();
            for l in 0..n {
                for k in 0..=l {
                    all.push(basis_matrix::<f64>(k, l, n).unwrap());
                }
            }
            for (a, ma) in all.iter().enumerate() {
                for (b, mb) in all.iter().enumerate() {
                    let d = ma.dot(mb);
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((d - want).abs() < 1e-14);
                }
            }
        }
        assert!(basis_matrix::<f64>(2, 1, 3).is_err());
        assert!(basis_matrix::<f64>(0, 3, 3).is_err());
    }

    #[test]
    fn cumulant_matrix_shortcut_matches_literal() {
        let z = whitened_sources(3, 800, 6);
        for (k, l) in [(0, 0), (0, 1), (1, 2), (2, 2)] {
            let m = basis_matrix::<f64>(k, l, 3).unwrap();
            let fast = cumulant_matrix(&z, &m).unwrap();
            let slow = cumulant_matrix_literal(&z, &m).unwrap();
            let scale = slow.fro_norm().max(1.0);
            assert!(
                fast.sub(&slow).fro_norm() <= 1e-10 * scale,
                "({k},{l}): {} vs {}",
                fast.fro_norm(),
                slow.fro_norm()
            );
        }
    }

    #[test]
    fn gaussian_cumulant_matrix_is_small() {
        let mut rng = PortableRng::seed_from_u64(7);
        let t = 20_000;
        let n = 3;
        let x = M::from_fn(n, t, |_, _| rng.normal_f64());
        let (_, z0) = center_whiten(&SignalMatrix::new(x).unwrap()).unwrap();
        let m = basis_matrix::<f64>(0, 1, n).unwrap();
        let q = cumulant_matrix(&z0, &m).unwrap();
        assert!(q.fro_norm() <= 10.0 * n as f64 / (t as f64).sqrt());
    }

    #[test]
    fn identity_basis_shortcut_form() {
        // M = I: Q = E[(z^T z) z z^T] - (n + 2) I for whitened data.
        let z = whitened_sources(3, 1000, 8);
        let n = 3;
        let q = cumulant_matrix(&z, &M::identity(n)).unwrap();
        let t = z.samples();
        let mut want = M::zeros(n, n);
        for s in 0..t {
            let col = z.matrix().col(s);
            let zz: f64 = col.iter().map(|v| v * v).sum();
            for c in 0..n {
                for r in 0..n {
                    let v = want.get(r, c) + zz * col[r] * col[c] / t as f64;
                    want.set(r, c, v);
                }
            }
        }
        // Sample covariance is identity by construction of whitening.
        for i in 0..n {
            let v = want.get(i, i) - (n as f64 + 2.0);
            want.set(i, i, v);
        }
        assert!(q.sub(&want).fro_norm() <= 1e-8 * want.fro_norm().max(1.0));
    }

    #[test]
    fn jd_problem_ordering_and_contrast_identity() {
        let z = whitened_sources(3, 2000, 9);
        let cums = build_jd_problem(&z).unwrap();
        assert_eq!(cums.set().len(), 6);
        assert_eq!(
            cums.pairs(),
            &[(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)]
        );
        // For orthogonal Y: Σ ‖off‖² + Σ ‖diag‖² = Σ ‖A_l‖².
        let mut rng = PortableRng::seed_from_u64(10);
        let y = crate::experiments::random_orthogonal::<f64>(3, &mut rng);
        let total: f64 = cums.set().mats().iter().map(|a| a.fro_norm_sq()).sum();
        let mut sum = 0.0;
        for a in cums.set().mats() {
            let zm = y.matmul_tn(&a.matmul(&y));
            sum += crate::matvec::off_norm_sq(&zm);
            for i in 0..3 {
                sum += zm.get(i, i) * zm.get(i, i);
            }
        }
        assert!((sum - total).abs() <= 1e-10 * total);
        // g(Y) - Σ‖A_l‖² = f(Y) restated through the objective.
        let yp = StiefelPoint::new(y).unwrap();
        let f = objective(cums.set(), &yp).unwrap();
        let g: f64 = cums
            .set()
            .mats()
            .iter()
            .map(|a| {
                let zm = yp.matrix().matmul_tn(&a.matmul(yp.matrix()));
                crate::matvec::off_norm_sq(&zm)
            })
            .sum();
        assert!((g - total - f).abs() <= 1e-10 * total);
    }

    #[test]
    fn true_rotation_nearly_diagonalizes_cumulants() {
        // Independent sources mixed orthogonally: the unmixing rotation
        // approximately jointly diagonalizes the cumulant set.
        let mut rng = PortableRng::seed_from_u64(11);
        let kinds = [SourceKind::Rademacher, SourceKind::Uniform, SourceKind::Laplace];
        let t = 10_000;
        let s = synthetic_sources::<f64>(&kinds, t, &mut rng).unwrap();
        let q = crate::experiments::random_orthogonal::<f64>(3, &mut rng);
        let x = SignalMatrix::new(q.matmul(s.matrix())).unwrap();
        let (wh, z0) = center_whiten(&x).unwrap();
        let cums = build_jd_problem(&z0).unwrap();
        // The product W Q maps sources to whitened data; its transpose is the
        // diagonalizing rotation (orthogonal up to sampling noise).
        let rot = StiefelPoint::from_qf(&wh.w.matmul(&q)).unwrap();
        let total: f64 = cums.set().mats().iter().map(|a| a.fro_norm_sq()).sum();
        let mut off = 0.0;
        for a in cums.set().mats() {
            let zm = rot.matrix().matmul_tn(&a.matmul(rot.matrix()));
            off += crate::matvec::off_norm_sq(&zm);
        }
        assert!(off <= 0.01 * total, "off {off} vs total {total}");
    }

    #[test]
    fn separate_recovers_synthetic_sources() {
        let mut rng = PortableRng::seed_from_u64(12);
        let kinds = [SourceKind::Rademacher, SourceKind::Uniform, SourceKind::Laplace];
        let t = 20_000;
        let s = synthetic_sources::<f64>(&kinds, t, &mut rng).unwrap();
        let a = M::from_rows(&[
            &[0.9, 0.4, 0.3],
            &[0.2, 1.1, -0.4],
            &[-0.5, 0.3, 0.8],
        ]);
        let x = SignalMatrix::new(a.matmul(s.matrix())).unwrap();
        let res = separate(&x).unwrap();
        assert!(!res.fell_back);
        assert!(res.newton_grad_norm <= res.jacobi_grad_norm);
        let alignment = align(&res.z, &s).unwrap();
        for (i, c) in alignment.correlations.iter().enumerate() {
            assert!(c.abs() >= 0.99, "channel {i} correlation {c}");
        }
        // Z = B_sep (X - mean) by construction.
        let mut centered = x.matrix().clone();
        for t in 0..x.samples() {
            for (v, &m) in centered.col_mut(t).iter_mut().zip(&res.mean) {
                *v -= m;
            }
        }
        let want = res.b_sep.matmul(&centered);
        assert!(want.sub(res.z.matrix()).fro_norm() == 0.0);
    }

    #[test]
    fn align_trivial_and_reversed() {
        let mut rng = PortableRng::seed_from_u64(13);
        let s = SignalMatrix::new(random_matrix(3, 100, &mut rng)).unwrap();
        let a = align(&s, &s).unwrap();
        assert_eq!(a.permutation, [0, 1, 2]);
        for (c, sc) in a.correlations.iter().zip(&a.scales) {
            assert!((c - 1.0).abs() < 1e-12);
            assert!((sc - 1.0).abs() < 1e-12);
        }
        // Reversed and negated.
        let m = s.matrix();
        let rev = SignalMatrix::new(M::from_fn(3, 100, |r, c| -m.get(2 - r, c))).unwrap();
        let a = align(&rev, &s).unwrap();
        assert_eq!(a.permutation, [2, 1, 0]);
        for (c, sc) in a.correlations.iter().zip(&a.scales) {
            assert!((c.abs() - 1.0).abs() < 1e-12);
            assert!(*c < 0.0);
            assert!((sc + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn align_matches_exhaustive_assignment() {
        // Noisy recovery: greedy matching picks the same channels as brute
        // force over all 3! permutations.
        let mut rng = PortableRng::seed_from_u64(14);
        let kinds = [SourceKind::Rademacher, SourceKind::Uniform, SourceKind::Laplace];
        let s = synthetic_sources::<f64>(&kinds, 2000, &mut rng).unwrap();
        // Estimated = permuted, scaled sources plus noise.
        let mut est = M::zeros(3, 2000);
        let perm = [1usize, 2, 0];
        for ch in 0..3 {
            for t in 0..2000 {
                est.set(
                    perm[ch],
                    t,
                    -1.7 * s.matrix().get(ch, t) + 0.05 * rng.normal_f64(),
                );
            }
        }
        let est = SignalMatrix::new(est).unwrap();
        let got = align(&est, &s).unwrap();
        // Brute force over all permutations on summed |corr|.
        let perms = [
            [0usize, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut best: ([usize; 3], f64) = ([0, 1, 2], f64::NEG_INFINITY);
        for p in perms {
            let mut total = 0.0;
            for src in 0..3 {
                let al = align(
                    &SignalMatrix::new(M::from_fn(1, 2000, |_, t| {
                        est.matrix().get(p[src], t)
                    }))
                    .unwrap(),
                    &SignalMatrix::new(M::from_fn(1, 2000, |_, t| s.matrix().get(src, t)))
                        .unwrap(),
                )
                .unwrap();
                total += al.correlations[0].abs();
            }
            if total > best.1 {
                best = (p, total);
            }
        }
        assert_eq!(got.permutation.as_slice(), best.0.as_slice());
    }
}
