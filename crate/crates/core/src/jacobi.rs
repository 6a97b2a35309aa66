//! Jacobi-like orthogonal joint diagonalization: cyclic sweeps of plane
//! rotations whose angles maximize the summed squared diagonal contribution
//! over all matrices at once. Used as the warm start for Newton's method,
//! which is only locally convergent.

use crate::error::Result;
use crate::jdcore::SymmetricSet;
use crate::matrix::DenseMatrix;
use crate::matvec::off_norm_sq;
use crate::scalar::Scalar;
use crate::stiefel::StiefelPoint;

/// Sweep configuration. `sweep_tol` bounds `|sin θ|`: a sweep in which every
/// pair's rotation stays below it terminates the iteration.
#[derive(Debug, Clone)]
pub struct JacobiConfig<T> {
    pub sweep_tol: T,
    pub max_sweeps: usize,
}

impl<T: Scalar> Default for JacobiConfig<T> {
    fn default() -> Self {
        Self {
            sweep_tol: T::tol(1e-8),
            max_sweeps: 100,
        }
    }
}

/// Outcome of a joint-diagonalization sweep run.
#[derive(Debug, Clone)]
pub struct JacobiResult<T> {
    /// Accumulated orthogonal matrix (`p = n`).
    pub y: StiefelPoint<T>,
    /// `Σ_l ‖off(Y^T A_l Y)‖_F²` before the first sweep and after each sweep.
    pub off_norm_trace: Vec<T>,
    pub sweeps: usize,
}

/// Rotation angle for the plane `(i, j)` that maximizes the summed squared
/// diagonal gain across the set: with `h_l = (a_ii - a_jj, a_ij + a_ji)` and
/// `G = Σ_l h_l h_l^T`, the optimal `(cos 2θ, sin 2θ)` is the principal
/// eigenvector of `G` with non-negative first component, so `θ ∈ (-π/4, π/4]`.
pub fn pair_rotation<T: Scalar>(mats: &[DenseMatrix<T>], i: usize, j: usize) -> T {
    debug_assert!(i < j);
    let mut g11 = T::zero();
    let mut g12 = T::zero();
    let mut g22 = T::zero();
    for a in mats {
        let h1 = a.get(i, i) - a.get(j, j);
        let h2 = a.get(i, j) + a.get(j, i);
        g11 += h1 * h1;
        g12 += h1 * h2;
        g22 += h2 * h2;
    }
    if g11 == T::zero() && g12 == T::zero() && g22 == T::zero() {
        return T::zero();
    }
    let half = T::cst(0.5);
    let diff = g11 - g22;
    let lambda_max = half * (g11 + g22 + (diff * diff + T::cst(4.0) * g12 * g12).sqrt());
    // Principal eigenvector; pick the better-conditioned expression.
    let (mut v1, mut v2) = if (lambda_max - g11).abs() > (lambda_max - g22).abs() {
        (g12, lambda_max - g11)
    } else {
        (lambda_max - g22, g12)
    };
    if v1 == T::zero() && v2 == T::zero() {
        return T::zero();
    }
    if v1 < T::zero() {
        v1 = -v1;
        v2 = -v2;
    }
    half * v2.atan2(v1)
}

/// Applies the rotation `Y <- Y R(i,j,θ)` and `A_l <- R^T A_l R` in place.
fn apply_rotation<T: Scalar>(
    mats: &mut [DenseMatrix<T>],
    y: &mut DenseMatrix<T>,
    i: usize,
    j: usize,
    theta: T,
) {
    let c = theta.cos();
    let s = theta.sin();
    for a in mats.iter_mut() {
        let n = a.rows();
        // Columns i, j.
        for r in 0..n {
            let ari = a.get(r, i);
            let arj = a.get(r, j);
            a.set(r, i, c * ari + s * arj);
            a.set(r, j, -s * ari + c * arj);
        }
        // Rows i, j.
        for col in 0..n {
            let aic = a.get(i, col);
            let ajc = a.get(j, col);
            a.set(i, col, c * aic + s * ajc);
            a.set(j, col, -s * aic + c * ajc);
        }
    }
    for r in 0..y.rows() {
        let yri = y.get(r, i);
        let yrj = y.get(r, j);
        y.set(r, i, c * yri + s * yrj);
        y.set(r, j, -s * yri + c * yrj);
    }
}

fn total_off_norm_sq<T: Scalar>(mats: &[DenseMatrix<T>]) -> T {
    mats.iter().map(off_norm_sq).sum()
}

/// Runs cyclic Jacobi sweeps over all pairs `(i, j)`, `i < j`, until every
/// rotation in a full sweep satisfies `|sin θ| < sweep_tol` or the sweep
/// budget is exhausted. The accumulated `Y` is re-orthonormalized every 30
/// sweeps to bound drift; the total off-norm never increases.
pub fn jacobi_diagonalize<T: Scalar>(
    set: &SymmetricSet<T>,
    cfg: &JacobiConfig<T>,
) -> Result<JacobiResult<T>> {
    // Negated comparison so a NaN tolerance fails validation too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(cfg.sweep_tol > T::zero()) || cfg.max_sweeps == 0 {
        return Err(crate::error::Error::InvalidData {
            rows: cfg.max_sweeps,
            cols: 0,
            got: 0,
        });
    }
    let n = set.n();
    let mut work: Vec<DenseMatrix<T>> = set.mats().to_vec();
    let mut y = DenseMatrix::identity(n);
    let mut off_norm_trace = vec![total_off_norm_sq(&work)];
    #[cfg(debug_assertions)]
    let slack = {
        let total_sq: T = set.mats().iter().map(|a| a.fro_norm_sq()).sum();
        T::tol(1e-12) * total_sq.max(T::one())
    };
    let mut sweeps = 0;
    for sweep in 1..=cfg.max_sweeps {
        let mut max_sin = T::zero();
        for i in 0..n.saturating_sub(1) {
            for j in (i + 1)..n {
                let theta = pair_rotation(&work, i, j);
                max_sin = max_sin.max(theta.sin().abs());
                #[cfg(debug_assertions)]
                let before = total_off_norm_sq(&work);
                apply_rotation(&mut work, &mut y, i, j, theta);
                #[cfg(debug_assertions)]
                {
                    let after = total_off_norm_sq(&work);
                    debug_assert!(
                        after <= before + slack,
                        "off-norm increased: {:?} -> {:?}",
                        before,
                        after
                    );
                }
            }
        }
        sweeps = sweep;
        off_norm_trace.push(total_off_norm_sq(&work));
        if sweep % 30 == 0 {
            y = y.qf();
            // Rebuild the working copies so they stay conjugates of the
            // originals under the cleaned-up Y.
            for (w, a) in work.iter_mut().zip(set.mats()) {
                let ay = a.matmul(&y);
                *w = y.matmul_tn(&ay);
                w.symmetrize_in_place();
            }
        }
        if max_sin < cfg.sweep_tol {
            break;
        }
    }
    Ok(JacobiResult {
        y: StiefelPoint::new(y)?,
        off_norm_trace,
        sweeps,
    })
}

/// Warm start for a `p < n` problem: run the sweeps at `p = n`, then keep the
/// `p` columns with the largest summed squared diagonal contribution
/// `Σ_l (Y^T A_l Y)_ii²`. Returns the start point and the sweep count.
pub fn jacobi_warm_start<T: Scalar>(
    set: &SymmetricSet<T>,
    p: usize,
    cfg: &JacobiConfig<T>,
) -> Result<(StiefelPoint<T>, usize)> {
    let n = set.n();
    assert!(p <= n, "warm start requires p <= n");
    let full = jacobi_diagonalize(set, cfg)?;
    if p == n {
        return Ok((full.y, full.sweeps));
    }
    let ym = full.y.matrix();
    let mut scores: Vec<(T, usize)> = (0..n).map(|i| (T::zero(), i)).collect();
    for a in set.mats() {
        let z = ym.matmul_tn(&a.matmul(ym));
        for (i, score) in scores.iter_mut().enumerate() {
            let d = z.get(i, i);
            score.0 += d * d;
        }
    }
    scores.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut cols = DenseMatrix::zeros(n, p);
    for (k, &(_, idx)) in scores.iter().take(p).enumerate() {
        cols.col_mut(k).copy_from_slice(ym.col(idx));
    }
    Ok((StiefelPoint::new(cols)?, full.sweeps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matvec::sym_part;
    use crate::rng::PortableRng;
    use crate::testutil::random_matrix;

    type M = DenseMatrix<f64>;

    #[test]
    fn diagonal_set_needs_no_rotation() {
        let set = SymmetricSet::new(vec![
            M::from_diag(&[3.0, 1.0, 2.0]),
            M::from_diag(&[-1.0, 0.5, 4.0]),
        ])
        .unwrap();
        assert_eq!(pair_rotation(set.mats(), 0, 1), 0.0);
        let res = jacobi_diagonalize(&set, &JacobiConfig::default()).unwrap();
        assert!(res.y.matrix().sub(&M::identity(3)).fro_norm() == 0.0);
        assert_eq!(res.sweeps, 1);
    }

    #[test]
    fn swap_matrix_needs_quarter_turn() {
        let a = M::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let theta = pair_rotation(&[a.clone()], 0, 1);
        assert!((theta.abs() - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        let set = SymmetricSet::new(vec![a]).unwrap();
        let res = jacobi_diagonalize(&set, &JacobiConfig::default()).unwrap();
        assert!(res.off_norm_trace.last().unwrap() < &1e-20);
    }

    #[test]
    fn angle_beats_grid_search() {
        let mut rng = PortableRng::seed_from_u64(42);
        let mats: Vec<M> = (0..3).map(|_| sym_part(&random_matrix(2, 2, &mut rng))).collect();
        let theta = pair_rotation(&mats, 0, 1);
        let objective = |t: f64| -> f64 {
            // Summed squared diagonal after rotating by t.
            let (c, s) = (t.cos(), t.sin());
            mats.iter()
                .map(|a| {
                    let d1 = c * c * a.get(0, 0)
                        + 2.0 * c * s * a.get(0, 1)
                        + s * s * a.get(1, 1);
                    let d2 = s * s * a.get(0, 0) - 2.0 * c * s * a.get(0, 1)
                        + c * c * a.get(1, 1);
                    d1 * d1 + d2 * d2
                })
                .sum()
        };
        let got = objective(theta);
        let mut best = f64::NEG_INFINITY;
        let grid = 100_000;
        for k in 0..=grid {
            let t = -std::f64::consts::FRAC_PI_4
                + std::f64::consts::FRAC_PI_2 * (k as f64) / (grid as f64);
            best = best.max(objective(t));
        }
        assert!(got >= best - 1e-8, "closed form {got} vs grid {best}");
    }

    #[test]
    fn single_matrix_matches_eigensolver() {
        let mut rng = PortableRng::seed_from_u64(7);
        let a = sym_part(&random_matrix(6, 6, &mut rng));
        let set = SymmetricSet::new(vec![a.clone()]).unwrap();
        let res = jacobi_diagonalize(&set, &JacobiConfig::default()).unwrap();
        let z = res.y.matrix().matmul_tn(&a.matmul(res.y.matrix()));
        assert!(off_norm_sq(&z).sqrt() <= 1e-10 * a.fro_norm());
        // Diagonal matches the eigensolver's spectrum up to ordering.
        let mut got = z.diag_vec();
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let eig = a.sym_eigen().unwrap();
        for (g, w) in got.iter().zip(&eig.values) {
            assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{g} vs {w}");
        }
    }

    #[test]
    fn commuting_family_is_exactly_diagonalized() {
        let mut rng = PortableRng::seed_from_u64(9);
        let p = random_matrix(5, 5, &mut rng).qf();
        let mats: Vec<M> = (0..3)
            .map(|_| {
                let d: Vec<f64> = (0..5).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
                p.matmul(&M::from_diag(&d)).matmul_nt(&p)
            })
            .collect();
        let total: f64 = mats.iter().map(|m| m.fro_norm()).sum();
        let set = SymmetricSet::new(mats).unwrap();
        let res = jacobi_diagonalize(&set, &JacobiConfig::default()).unwrap();
        assert!(res.off_norm_trace.last().unwrap().sqrt() <= 1e-10 * total);
        assert!(res.y.orthonormality_defect() <= 1e-12);
    }

    #[test]
    fn off_norm_trace_is_monotone_and_energy_conserved() {
        let mut rng = PortableRng::seed_from_u64(11);
        let mats: Vec<M> = (0..4).map(|_| sym_part(&random_matrix(7, 7, &mut rng))).collect();
        let set = SymmetricSet::new(mats).unwrap();
        let res = jacobi_diagonalize(&set, &JacobiConfig::default()).unwrap();
        for w in res.off_norm_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        // Orthogonal conjugation conserves Σ ‖A_l‖_F².
        let total_before: f64 = set.mats().iter().map(|a| a.fro_norm_sq()).sum();
        let ym = res.y.matrix();
        let total_after: f64 = set
            .mats()
            .iter()
            .map(|a| ym.matmul_tn(&a.matmul(ym)).fro_norm_sq())
            .sum();
        assert!((total_before - total_after).abs() <= 1e-10 * total_before);
    }

    #[test]
    fn warm_start_selects_dominant_columns() {
        // Block instance where the best p columns are unambiguous.
        let mut rng = PortableRng::seed_from_u64(13);
        let p = random_matrix(5, 5, &mut rng).qf();
        let mats: Vec<M> = (0..2)
            .map(|l| {
                let d: Vec<f64> = (0..5)
                    .map(|i| if i < 2 { 10.0 + i as f64 + l as f64 } else { 0.1 })
                    .collect();
                p.matmul(&M::from_diag(&d)).matmul_nt(&p)
            })
            .collect();
        let set = SymmetricSet::new(mats).unwrap();
        let (y0, sweeps) = jacobi_warm_start(&set, 2, &JacobiConfig::default()).unwrap();
        assert_eq!(y0.p(), 2);
        assert!(sweeps >= 1);
        // The selected columns capture almost all of the diagonal energy.
        let f = crate::jdcore::objective(&set, &y0).unwrap();
        assert!(f < -200.0, "selected columns miss the dominant block: f = {f}");
    }
}
