//! `jd`: jointly diagonalize matrices read from CSV files.

use stiefel_jd::io::{read_csv_matrix, write_csv_matrix};
use stiefel_jd::jacobi::{jacobi_warm_start, JacobiConfig};
use stiefel_jd::jdcore::SymmetricSet;
use stiefel_jd::newton::{solve, solve_orthogonal, NewtonConfig, Termination};
use stiefel_jd::stiefel::StiefelPoint;
use stiefel_jd::verify::convergence_order;

use crate::commands::write_trace;
use crate::trace::{
    rows_from_trace, JacobiSummary, Summary, TraceConfig, TraceFile, SCHEMA_VERSION,
};
use crate::{CliError, JdArgs};

pub fn run(args: JdArgs) -> Result<(), CliError> {
    let mut mats = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let m = read_csv_matrix(path)?;
        if !m.is_square() {
            return Err(CliError::input(format!(
                "{}: matrix is {}x{}, expected square",
                path.display(),
                m.rows(),
                m.cols()
            )));
        }
        mats.push(m);
    }
    let set = SymmetricSet::new(mats)?;
    let n = set.n();
    let p = args.p.unwrap_or(n);
    if p == 0 || p > n {
        return Err(CliError::input(format!("p = {p} out of range 1..={n}")));
    }

    let cfg = NewtonConfig {
        max_iters: args.solver.max_iters,
        grad_tol: args.solver.grad_tol,
        metric: args.solver.metric.into(),
        ..NewtonConfig::default()
    };

    let mut jacobi_summary = None;
    let y0 = if let Some(path) = &args.y0 {
        let m = read_csv_matrix(path)?;
        if m.shape() != (n, p) {
            return Err(CliError::input(format!(
                "{}: initial point is {}x{}, expected {n}x{p}",
                path.display(),
                m.rows(),
                m.cols()
            )));
        }
        StiefelPoint::new(m)?
    } else if args.jacobi || p == n {
        let jcfg = JacobiConfig::default();
        let (y, sweeps) = jacobi_warm_start(&set, p, &jcfg)?;
        let f = stiefel_jd::jdcore::objective(&set, &y)?;
        let g = stiefel_jd::jdcore::riemannian_gradient(
            &set,
            &y,
            stiefel_jd::stiefel::Metric::Induced,
        )?
        .norm();
        jacobi_summary = Some((y.clone(), f, g, sweeps));
        y
    } else {
        StiefelPoint::eye(n, p)
    };

    let result = if p == n {
        solve_orthogonal(&set, &y0, &cfg)?
    } else {
        solve(&set, &y0, &cfg)?
    };

    let last = result.trace.final_record();
    let jacobi = jacobi_summary.map(|(y, f, g, sweeps)| JacobiSummary {
        sweeps,
        f,
        grad_norm: g,
        orth_defect: y.orthonormality_defect(),
        f_minus_newton: f - last.f,
        grad_norm_minus_newton: g - last.grad_norm,
        orth_defect_minus_newton: y.orthonormality_defect() - last.orth_defect,
    });
    let grad_norms: Vec<f64> = result.trace.records.iter().map(|r| r.grad_norm).collect();
    let trace = TraceFile {
        schema_version: SCHEMA_VERSION,
        config: TraceConfig {
            command: "jd".into(),
            family: None,
            n,
            p,
            num_matrices: set.len(),
            seed: None,
            trial: None,
            metric: cfg.metric.to_string(),
            max_iters: cfg.max_iters,
            grad_tol: cfg.grad_tol,
            perturbation_scale: None,
            jacobi_sweep_tol: None,
        },
        iterations: rows_from_trace(&result.trace, None),
        summary: Summary {
            termination: result.trace.termination.to_string(),
            steps: result.trace.steps(),
            final_f: last.f,
            final_grad_norm: last.grad_norm,
            final_orth_defect: last.orth_defect,
            convergence_order: convergence_order(&grad_norms),
            f_opt_gap: None,
            jacobi,
            ica: None,
        },
        wall_time_ms: None,
    };

    std::fs::create_dir_all(&args.output.out)?;
    let solution_path = args.output.out.join("jd_solution.csv");
    write_csv_matrix(&solution_path, result.y_final.matrix())?;
    write_trace(&args.output.out, "jd", args.output.format, &trace)?;

    println!(
        "termination={} steps={} f={} grad_norm={} orth_defect={}",
        trace.summary.termination,
        trace.summary.steps,
        trace.summary.final_f,
        trace.summary.final_grad_norm,
        trace.summary.final_orth_defect
    );

    if result.trace.termination == Termination::SingularHessian {
        return Err(CliError::numerical(format!(
            "Newton system singular at iterate {} (pivot ratio {:.3e}); partial results written",
            result.trace.steps(),
            result
                .trace
                .singular_pivot_ratio
                .unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}
