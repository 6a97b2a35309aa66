//! Self-contained numerical checks: finite-difference oracles for the
//! gradient and Hessian, agreement between the independent Hessian routes
//! (ambient action, coordinate formulas, assembled matrix, literal reference
//! assembler), the block symmetry relations, and the exact structural
//! identities of the flattening operators. Exposed so the CLI can run them as
//! a diagnostic; the test suites reuse them.

use crate::error::Result;
use crate::experiments::{random_stiefel, random_symmetric_set};
use crate::jdcore::{
    hessian_apply, hessian_coords, hessian_matrix, hessian_matrix_reference, objective,
    riemannian_gradient, CompressedData, SymmetricSet,
};
use crate::matrix::DenseMatrix;
use crate::matvec::{commutation, skew_duplication, veck_len};
use crate::rng::PortableRng;
use crate::scalar::Scalar;
use crate::stiefel::{
    inner, project, qr_retract, Metric, StiefelFrame, StiefelPoint, TangentAmbient,
};

/// One named check with its worst observed error and threshold.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub max_err: f64,
    pub tol: f64,
}

impl Check {
    fn from_err(name: impl Into<String>, max_err: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: max_err.is_finite() && max_err <= tol,
            max_err,
            tol,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} (err {:.3e}, tol {:.3e})",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.max_err,
            self.tol
        )
    }
}

fn random_tangent<T: Scalar>(
    y: &StiefelPoint<T>,
    rng: &mut PortableRng,
) -> TangentAmbient<T> {
    let w = DenseMatrix::from_fn(y.n(), y.p(), |_, _| rng.normal());
    let t = project(y, &w).expect("conforming shape");
    let norm = t.norm();
    if norm > T::zero() {
        TangentAmbient::new_unchecked(t.matrix().scale(T::one() / norm))
    } else {
        t
    }
}

/// `<grad f, ξ>_metric` against central differences of `f ∘ qr_retract` along
/// random unit tangent directions.
pub fn gradient_fd_check<T: Scalar>(
    set: &SymmetricSet<T>,
    y: &StiefelPoint<T>,
    metric: Metric,
    dirs: usize,
    rng: &mut PortableRng,
) -> Result<Check> {
    let grad = riemannian_gradient(set, y, metric)?;
    let step = T::cst(1e-6);
    let mut max_err = 0.0f64;
    for _ in 0..dirs {
        let xi = random_tangent(y, rng);
        let fp = objective(
            set,
            &qr_retract(y, &TangentAmbient::new_unchecked(xi.matrix().scale(step)))?,
        )?;
        let fm = objective(
            set,
            &qr_retract(y, &TangentAmbient::new_unchecked(xi.matrix().scale(-step)))?,
        )?;
        let fd = (fp - fm) / (step + step);
        let want = inner(y, &grad, &xi, metric)?;
        let err = ((fd - want).abs() / want.abs().max(T::one())).as_f64();
        max_err = max_err.max(err);
    }
    Ok(Check::from_err(
        format!("gradient-fd[{metric}]"),
        max_err,
        1e-6,
    ))
}

/// Hessian quadratic form against central second differences of
/// `f ∘ qr_retract` (induced metric).
///
/// The QR retraction is first-order, so the second difference along its curve
/// carries an extra `<grad f, P_Y(c''(0))>` with
/// `P_Y(c''(0)) = -Y skew(R''(0))`, `R''(0)` built from `ξ^T ξ`; the check
/// accounts for that acceleration term analytically.
pub fn hessian_fd_check<T: Scalar>(
    set: &SymmetricSet<T>,
    y: &StiefelPoint<T>,
    dirs: usize,
    rng: &mut PortableRng,
) -> Result<Check> {
    let metric = Metric::Induced;
    let grad = riemannian_gradient(set, y, metric)?;
    let f0 = objective(set, y)?;
    let step = T::cst(1e-4);
    let mut max_err = 0.0f64;
    for _ in 0..dirs {
        let xi = random_tangent(y, rng);
        let hxi = hessian_apply(set, y, &xi, metric)?;
        let quad = inner(y, &hxi, &xi, metric)?;
        let m = xi.matrix().matmul_tn(xi.matrix());
        let p = m.rows();
        let skw = DenseMatrix::from_fn(p, p, |r, c| {
            if r < c {
                m.get(r, c)
            } else if r > c {
                -m.get(r, c)
            } else {
                T::zero()
            }
        });
        let accel = -grad.matrix().dot(&y.matrix().matmul(&skw));
        let fp = objective(
            set,
            &qr_retract(y, &TangentAmbient::new_unchecked(xi.matrix().scale(step)))?,
        )?;
        let fm = objective(
            set,
            &qr_retract(y, &TangentAmbient::new_unchecked(xi.matrix().scale(-step)))?,
        )?;
        let fd2 = (fp - f0 - f0 + fm) / (step * step);
        let want = quad + accel;
        let err = ((fd2 - want).abs() / want.abs().max(T::one())).as_f64();
        max_err = max_err.max(err);
    }
    Ok(Check::from_err("hessian-fd[induced]", max_err, 1e-5))
}

/// Mutual agreement of the three Hessian routes: assembled matrix action vs
/// coordinate formulas vs ambient action pulled back into coordinates.
pub fn hessian_routes_check<T: Scalar>(
    set: &SymmetricSet<T>,
    frame: &StiefelFrame<T>,
    metric: Metric,
    dirs: usize,
    rng: &mut PortableRng,
) -> Result<Check> {
    let data = CompressedData::compute(set, frame)?;
    let h = hessian_matrix(&data, metric);
    let mut max_err = 0.0f64;
    for _ in 0..dirs {
        let xi = random_tangent(frame.point(), rng);
        let coords = frame.coords_from_ambient(&xi)?;
        let via_matrix = h.apply(&coords.stacked());
        let via_coords = hessian_coords(&data, &coords, metric).stacked();
        let hxi = hessian_apply(set, frame.point(), &xi, metric)?;
        let via_ambient = frame.coords_from_ambient(&hxi)?.stacked();
        let scale = via_ambient
            .iter()
            .fold(T::one(), |m, v| m.max(v.abs()))
            .as_f64();
        for ((a, b), c) in via_matrix.iter().zip(&via_coords).zip(&via_ambient) {
            let e1 = (*a - *b).abs().as_f64() / scale;
            let e2 = (*b - *c).abs().as_f64() / scale;
            max_err = max_err.max(e1).max(e2);
        }
    }
    Ok(Check::from_err(
        format!("hessian-routes[{metric}]"),
        max_err,
        1e-11,
    ))
}

/// Production assembler against the literal dense reference assembler.
pub fn reference_assembler_check<T: Scalar>(
    set: &SymmetricSet<T>,
    frame: &StiefelFrame<T>,
    metric: Metric,
) -> Result<Check> {
    let data = CompressedData::compute(set, frame)?;
    let fast = hessian_matrix(&data, metric).to_dense();
    let slow = hessian_matrix_reference(&data, metric).to_dense();
    let scale = slow.fro_norm().max(T::one());
    let err = (fast.sub(&slow).fro_norm() / scale).as_f64();
    Ok(Check::from_err(
        format!("reference-assembler[{metric}]"),
        err,
        1e-12,
    ))
}

/// Block symmetry relations: `H11 = H11^T`, `H22 = H22^T`, `H21 = 2 H12^T`,
/// the metric-weighted symmetry `diag(2I, I) H = H^T diag(2I, I)` for the
/// induced metric, and full symmetry for the canonical one.
pub fn block_relations_check<T: Scalar>(
    set: &SymmetricSet<T>,
    frame: &StiefelFrame<T>,
) -> Result<Vec<Check>> {
    let data = CompressedData::compute(set, frame)?;
    let mut out = Vec::new();
    let h = hessian_matrix(&data, Metric::Induced);
    let dense = h.to_dense();
    let scale = dense.fro_norm().max(T::one());
    out.push(Check::from_err(
        "induced-h11-symmetric",
        (h.h11.sub(&h.h11.transpose()).fro_norm() / scale).as_f64(),
        1e-12,
    ));
    out.push(Check::from_err(
        "induced-h22-symmetric",
        (h.h22.sub(&h.h22.transpose()).fro_norm() / scale).as_f64(),
        1e-12,
    ));
    out.push(Check::from_err(
        "induced-h21-eq-2h12t",
        (h.h21.sub(&h.h12.transpose().scale(T::cst(2.0))).fro_norm() / scale).as_f64(),
        1e-12,
    ));
    let nb = h.h11.rows();
    let dim = h.dim();
    let weights: Vec<T> = (0..dim)
        .map(|i| if i < nb { T::cst(2.0) } else { T::one() })
        .collect();
    let lhs = dense.scale_rows(&weights);
    let rhs = dense.transpose().scale_cols(&weights);
    out.push(Check::from_err(
        "induced-weighted-symmetry",
        (lhs.sub(&rhs).fro_norm() / scale).as_f64(),
        1e-12,
    ));
    let hc = hessian_matrix(&data, Metric::Canonical).to_dense();
    let scale_c = hc.fro_norm().max(T::one());
    out.push(Check::from_err(
        "canonical-symmetric",
        (hc.sub(&hc.transpose()).fro_norm() / scale_c).as_f64(),
        1e-12,
    ));
    Ok(out)
}

/// Per-iterate agreement of the orthogonal-group Newton specialization with
/// the general solver at `p = n`.
pub fn specialization_check<T: Scalar>(
    set: &SymmetricSet<T>,
    y0: &StiefelPoint<T>,
    max_iters: usize,
) -> Result<Check> {
    let cfg = crate::newton::NewtonConfig {
        max_iters,
        ..crate::newton::NewtonConfig::default()
    };
    let general = crate::newton::solve(set, y0, &cfg)?;
    let special = crate::newton::solve_orthogonal(set, y0, &cfg)?;
    let mut gap = (general.trace.records.len() as f64 - special.trace.records.len() as f64).abs();
    for (a, b) in general.trace.records.iter().zip(&special.trace.records) {
        gap = gap
            .max(((a.f - b.f).abs() / a.f.abs().max(T::one())).as_f64())
            .max((a.grad_norm - b.grad_norm).abs().as_f64());
    }
    gap = gap.max(
        general
            .y_final
            .matrix()
            .sub(special.y_final.matrix())
            .fro_norm()
            .as_f64(),
    );
    Ok(Check::from_err("orthogonal-specialization", gap, 1e-12))
}

/// Exact structural identities: `D_p^T = -D_p^T T_p` (entrywise on integer
/// matrices), `D_p^T D_p = 2I`, `T_p² = I`, for all `p` up to `p_max`.
pub fn structural_identities_check(p_max: usize) -> Vec<Check> {
    let mut lemma_err = 0.0f64;
    let mut dtd_err = 0.0f64;
    let mut invol_err = 0.0f64;
    for p in 2..=p_max {
        let d: DenseMatrix<f64> = skew_duplication(p).to_dense();
        let t: DenseMatrix<f64> = commutation(p).to_dense();
        let dt = d.transpose();
        lemma_err = lemma_err.max(dt.add(&dt.matmul(&t)).max_abs());
        let dtd = d.matmul_tn(&d);
        let two_i = DenseMatrix::identity(veck_len(p)).scale(2.0);
        dtd_err = dtd_err.max(dtd.sub(&two_i).max_abs());
        invol_err = invol_err.max(t.matmul(&t).sub(&DenseMatrix::identity(p * p)).max_abs());
    }
    vec![
        Check::from_err("lemma-dpt-eq-neg-dpt-tp", lemma_err, 0.0),
        Check::from_err("dpt-dp-eq-2i", dtd_err, 0.0),
        Check::from_err("tp-involution", invol_err, 0.0),
    ]
}

/// Convergence-order estimate from a gradient-norm sequence: the
/// no-intercept log-log fit `ln e_{k+1} = q · ln e_k` over consecutive pairs
/// in the contraction regime — in aggregate, the ratio of successive decay
/// exponents. Pairs with `e_k > 0.5` (pre-asymptotic) or `e_k < 1e-8`
/// (saturating at the stopping tolerance) are excluded; `None` when fewer
/// than two pairs qualify. A quadratically convergent sequence fits `q ≈ 2`.
pub fn convergence_order(grad_norms: &[f64]) -> Option<f64> {
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut count = 0usize;
    for w in grad_norms.windows(2) {
        let (e0, e1) = (w[0], w[1]);
        if (1e-8..=0.5).contains(&e0) && e1 > 0.0 {
            let (x, y) = (e0.ln(), e1.ln());
            sxy += x * y;
            sxx += x * x;
            count += 1;
        }
    }
    if count < 2 || sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// The diagnostic suite the CLI exposes: derivative oracles, route
/// agreement, block relations and the structural identities, on a random
/// instance of the given size.
pub fn run_suite(n: usize, p: usize, count: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = PortableRng::seed_from_u64(seed);
    let set: SymmetricSet<f64> = random_symmetric_set(n, count, &mut rng);
    let y = random_stiefel(n, p, &mut rng);
    let frame = StiefelFrame::new(y.clone())?;
    let mut checks = Vec::new();
    for metric in [Metric::Induced, Metric::Canonical] {
        checks.push(gradient_fd_check(&set, &y, metric, 10, &mut rng)?);
    }
    checks.push(hessian_fd_check(&set, &y, 10, &mut rng)?);
    for metric in [Metric::Induced, Metric::Canonical] {
        checks.push(hessian_routes_check(&set, &frame, metric, 8, &mut rng)?);
        checks.push(reference_assembler_check(&set, &frame, metric)?);
    }
    checks.extend(block_relations_check(&set, &frame)?);
    checks.extend(structural_identities_check(8));
    if p == n {
        checks.push(specialization_check(&set, &y, 4)?);
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_random_instance() {
        let checks = run_suite(6, 3, 2, 12345).unwrap();
        for c in &checks {
            assert!(c.passed, "{c}");
        }
        assert!(checks.len() >= 10);
    }

    #[test]
    fn suite_passes_on_square_and_p1_edges() {
        for (n, p) in [(5, 5), (5, 1)] {
            let checks = run_suite(n, p, 2, 777).unwrap();
            for c in &checks {
                assert!(c.passed, "n={n} p={p}: {c}");
            }
        }
    }

    #[test]
    fn structural_identities_are_exact() {
        for c in structural_identities_check(8) {
            assert!(c.passed && c.max_err == 0.0, "{c}");
        }
    }

    #[test]
    fn convergence_order_on_quadratic_sequence() {
        // Decade pattern of a quadratically convergent Newton run: fit well
        // above 1.7, with the pre-asymptotic head and saturated tail excluded
        // by the windowing.
        let seq = [2.4, 2.0e-2, 1.1e-3, 6.0e-6, 1.4e-10, 2.1e-13];
        let q = convergence_order(&seq).unwrap();
        assert!(q >= 1.7 && q <= 2.3, "order {q}");
        // An exactly quadratic sequence fits q = 2.
        let mut e = 1e-2f64;
        let mut exact = vec![e];
        for _ in 0..3 {
            e = e * e;
            exact.push(e);
        }
        let q = convergence_order(&exact).unwrap();
        assert!((q - 2.0).abs() < 1e-12, "order {q}");
        // A linear sequence fits q ~ 1.
        let lin: Vec<f64> = (0..22).map(|k| 0.05 * 0.5f64.powi(k)).collect();
        let q = convergence_order(&lin).unwrap();
        assert!(q < 1.3, "order {q}");
        assert!(convergence_order(&[1.0, 0.5]).is_none());
    }
}
