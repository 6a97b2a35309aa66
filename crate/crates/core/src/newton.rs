//! Riemannian Newton iteration for the joint-diagonalization objective: at
//! each iterate the reduced system `H_A (veck(B); vec(C)) = -(veck(Y^T g);
//! vec(Y_perp^T g))` is solved by LU with partial pivoting, the step
//! `xi = Y B + Y_perp C` is formed, and the QR retraction produces the next
//! iterate. A specialized path for the orthogonal group (`p = n`) skips the
//! orthogonal complement entirely.

use crate::error::{Error, Result};
use crate::jdcore::{
    gradient_coords, hessian_matrix, objective, riemannian_gradient, CompressedData, SymmetricSet,
};
use crate::matvec::veck;
use crate::scalar::Scalar;
use crate::stiefel::{qr_retract, Metric, StiefelFrame, StiefelPoint, TangentCoords};

/// Solver configuration.
///
/// The stopping rule compares the induced-metric gradient norm against
/// `grad_tol * max(1, Σ_l ‖A_l‖_F)`; the default `grad_tol = 1e-12` matches
/// the magnitudes a converged Newton run attains. `singular_rtol` is the
/// smallest acceptable pivot ratio of the reduced system's LU factorization.
#[derive(Debug, Clone)]
pub struct NewtonConfig<T> {
    pub max_iters: usize,
    pub grad_tol: T,
    pub singular_rtol: T,
    pub metric: Metric,
}

impl<T: Scalar> Default for NewtonConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 50,
            grad_tol: T::tol(1e-12),
            singular_rtol: T::tol(1e-12),
            metric: Metric::Induced,
        }
    }
}

impl<T: Scalar> NewtonConfig<T> {
    fn validate(&self) -> Result<()> {
        // Negated comparisons so NaN tolerances fail validation too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if self.max_iters < 1
            || !(self.grad_tol > T::zero())
            || !(self.singular_rtol > T::zero())
        {
            return Err(Error::InvalidData {
                rows: self.max_iters,
                cols: 0,
                got: 0,
            });
        }
        Ok(())
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Gradient norm reached the (scaled) tolerance.
    Converged,
    /// Iteration budget exhausted.
    MaxIters,
    /// The reduced Newton system was numerically singular. The offending
    /// iterate is the last trace record; no regularization is applied.
    SingularHessian,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::MaxIters => write!(f, "max-iters"),
            Termination::SingularHessian => write!(f, "singular-hessian"),
        }
    }
}

/// One row of a solve trace.
#[derive(Debug, Clone)]
pub struct IterationRecord<T> {
    pub k: usize,
    pub f: T,
    /// Induced-metric (Frobenius) norm of the Riemannian gradient.
    pub grad_norm: T,
    /// Ambient norm of the Newton step computed at this iterate; `None` when
    /// no step was computed (converged, budget reached, or singular system).
    pub step_norm: Option<T>,
    /// `‖Y_k^T Y_k - I‖_F`.
    pub orth_defect: T,
}

/// Per-iteration history of a solve. Contains one record per visited iterate,
/// including iterate 0.
#[derive(Debug, Clone)]
pub struct SolveTrace<T> {
    pub records: Vec<IterationRecord<T>>,
    pub termination: Termination,
    /// Pivot ratio that triggered `SingularHessian`, when it did.
    pub singular_pivot_ratio: Option<T>,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn final_record(&self) -> &IterationRecord<T> {
        self.records.last().expect("trace is never empty")
    }

    /// Number of Newton steps actually taken.
    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }
}

/// Final iterate and trace of a solve.
#[derive(Debug, Clone)]
pub struct JDResult<T> {
    pub y_final: StiefelPoint<T>,
    pub trace: SolveTrace<T>,
}

/// One Newton step from `y`: assembles the reduced system, solves it, and
/// retracts. Returns the new point together with the step coordinates.
pub fn newton_step<T: Scalar>(
    set: &SymmetricSet<T>,
    y: &StiefelPoint<T>,
    cfg: &NewtonConfig<T>,
) -> Result<(StiefelPoint<T>, TangentCoords<T>)> {
    cfg.validate()?;
    let frame = StiefelFrame::new(y.clone())?;
    let step = reduced_newton_direction(set, &frame, cfg)?;
    let xi = frame.ambient_from_coords(&step)?;
    let y_next = qr_retract(y, &xi)?;
    Ok((y_next, step))
}

fn reduced_newton_direction<T: Scalar>(
    set: &SymmetricSet<T>,
    frame: &StiefelFrame<T>,
    cfg: &NewtonConfig<T>,
) -> Result<TangentCoords<T>> {
    let data = CompressedData::compute(set, frame)?;
    let (gb, gc) = gradient_coords(&data, cfg.metric);
    let h = hessian_matrix(&data, cfg.metric);
    let mut rhs = veck(&gb)?;
    rhs.extend_from_slice(gc.data());
    for v in rhs.iter_mut() {
        *v = -*v;
    }
    let lu = h.to_dense().lu();
    let ratio = lu.pivot_ratio();
    if ratio < cfg.singular_rtol {
        return Err(Error::SingularHessian {
            pivot_ratio: ratio.as_f64(),
        });
    }
    let x = lu.solve(&rhs);
    let p = frame.point().p();
    let nmp = frame.point().n() - p;
    Ok(TangentCoords::from_stacked(p, nmp, &x))
}

/// Runs the Newton iteration from `y0` until the gradient tolerance is met,
/// the iteration budget is exhausted, or the reduced system turns singular
/// (recorded in the trace, never silently regularized). A rank-deficient
/// retraction is a hard error.
pub fn solve<T: Scalar>(
    set: &SymmetricSet<T>,
    y0: &StiefelPoint<T>,
    cfg: &NewtonConfig<T>,
) -> Result<JDResult<T>> {
    cfg.validate()?;
    solve_impl(set, y0, cfg, false)
}

/// Newton's method on the orthogonal group (`p = n`). Same contract as
/// [`solve`], but the orthogonal complement and the `C` block are never
/// formed; the reduced system is the single `n(n-1)/2` block.
pub fn solve_orthogonal<T: Scalar>(
    set: &SymmetricSet<T>,
    y0: &StiefelPoint<T>,
    cfg: &NewtonConfig<T>,
) -> Result<JDResult<T>> {
    cfg.validate()?;
    if y0.p() != y0.n() {
        return Err(Error::ShapeMismatch {
            expected: (y0.n(), y0.n()),
            got: (y0.n(), y0.p()),
        });
    }
    solve_impl(set, y0, cfg, true)
}

fn solve_impl<T: Scalar>(
    set: &SymmetricSet<T>,
    y0: &StiefelPoint<T>,
    cfg: &NewtonConfig<T>,
    orthogonal_path: bool,
) -> Result<JDResult<T>> {
    let scale = set.total_fro_norm().max(T::one());
    let tol = cfg.grad_tol * scale;
    let mut y = y0.clone();
    let mut records = Vec::new();
    let mut termination = Termination::MaxIters;
    let mut singular_pivot_ratio = None;
    for k in 0..=cfg.max_iters {
        let f = objective(set, &y)?;
        let grad_norm = riemannian_gradient(set, &y, Metric::Induced)?.norm();
        let orth_defect = y.orthonormality_defect();
        let mut record = IterationRecord {
            k,
            f,
            grad_norm,
            step_norm: None,
            orth_defect,
        };
        if grad_norm <= tol {
            records.push(record);
            termination = Termination::Converged;
            break;
        }
        if k == cfg.max_iters {
            records.push(record);
            termination = Termination::MaxIters;
            break;
        }
        let step = if orthogonal_path {
            orthogonal_newton_direction(set, &y, cfg)
        } else {
            let frame = StiefelFrame::new(y.clone())?;
            reduced_newton_direction(set, &frame, cfg)
        };
        match step {
            Ok(coords) => {
                let xi = if orthogonal_path {
                    // xi = Y B with no complement involved.
                    crate::stiefel::TangentAmbient::new_unchecked(
                        y.matrix().matmul(&coords.b_matrix()),
                    )
                } else {
                    let frame = StiefelFrame::new(y.clone())?;
                    frame.ambient_from_coords(&coords)?
                };
                record.step_norm = Some(xi.norm());
                records.push(record);
                y = qr_retract(&y, &xi)?;
            }
            Err(Error::SingularHessian { pivot_ratio }) => {
                records.push(record);
                termination = Termination::SingularHessian;
                singular_pivot_ratio = Some(T::cst(pivot_ratio));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(JDResult {
        y_final: y,
        trace: SolveTrace {
            records,
            termination,
            singular_pivot_ratio,
        },
    })
}

fn orthogonal_newton_direction<T: Scalar>(
    set: &SymmetricSet<T>,
    y: &StiefelPoint<T>,
    cfg: &NewtonConfig<T>,
) -> Result<TangentCoords<T>> {
    // p = n: the frame has an empty complement; reuse the shared block
    // assembler, which degenerates to the single B block.
    let frame = StiefelFrame::new(y.clone())?;
    debug_assert!(frame.perp().is_empty());
    let data = CompressedData::compute(set, &frame)?;
    let (gb, _) = gradient_coords(&data, cfg.metric);
    let h = hessian_matrix(&data, cfg.metric);
    let mut rhs = veck(&gb)?;
    for v in rhs.iter_mut() {
        *v = -*v;
    }
    let lu = h.h11.lu();
    let ratio = lu.pivot_ratio();
    if ratio < cfg.singular_rtol {
        return Err(Error::SingularHessian {
            pivot_ratio: ratio.as_f64(),
        });
    }
    let x = lu.solve(&rhs);
    Ok(TangentCoords::from_stacked(y.p(), 0, &x))
}
