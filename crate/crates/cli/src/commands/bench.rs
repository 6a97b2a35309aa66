//! `bench`: seeded experiment families with per-trial traces and a summary
//! table on stdout.
//!
//! Per-trial seeds are derived from the base seed by counter splitting, so
//! trials are independent of execution order and the parallel and serial
//! modes produce identical output.

use stiefel_jd::experiments::{
    commuting_set, perturbed_optimum_instance, random_stiefel, random_symmetric_set,
};
use stiefel_jd::jacobi::{jacobi_diagonalize, JacobiConfig};
use stiefel_jd::jdcore::{objective, riemannian_gradient, SymmetricSet};
use stiefel_jd::matvec::off_norm_sq;
use stiefel_jd::newton::{solve, solve_orthogonal, JDResult, NewtonConfig};
use stiefel_jd::rng::{derive_seed, PortableRng};
use stiefel_jd::stiefel::{Metric, StiefelPoint};
use stiefel_jd::verify::convergence_order;

use crate::commands::write_trace;
use crate::trace::{
    rows_from_trace, JacobiSummary, Summary, TraceConfig, TraceFile, SCHEMA_VERSION,
};
use crate::{BenchArgs, CliError, FamilyArg};

struct TrialOutput {
    stdout_line: String,
    trace: TraceFile,
    /// (f_J - f_N, grad_J - grad_N, orth_J - orth_N) for the polish family.
    polish_diffs: Option<(f64, f64, f64)>,
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    let n = args.n;
    let p = args.p.unwrap_or(n);
    if n == 0 || p == 0 || p > n {
        return Err(CliError::input(format!("invalid dimensions n={n}, p={p}")));
    }
    if args.num_matrices == 0 || args.trials == 0 {
        return Err(CliError::input("num_matrices and trials must be >= 1"));
    }
    if matches!(
        args.family,
        FamilyArg::JacobiThenNewton | FamilyArg::Commuting
    ) && p != n
    {
        return Err(CliError::input(format!(
            "family {} runs on the orthogonal group; leave p = n",
            args.family.name()
        )));
    }

    let cfg = NewtonConfig {
        max_iters: args.solver.max_iters,
        grad_tol: args.solver.grad_tol,
        metric: args.solver.metric.into(),
        ..NewtonConfig::default()
    };

    let trials: Vec<u64> = (0..args.trials).collect();
    let outputs: Vec<Result<TrialOutput, CliError>> = if args.serial {
        trials
            .iter()
            .map(|&t| run_trial(&args, &cfg, n, p, t))
            .collect()
    } else {
        let workers = std::thread::available_parallelism()
            .map(|v| v.get())
            .unwrap_or(1)
            .min(trials.len());
        let next = std::sync::atomic::AtomicUsize::new(0);
        let mut slots: Vec<Option<Result<TrialOutput, CliError>>> =
            (0..trials.len()).map(|_| None).collect();
        let slots_mutex = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= trials.len() {
                        break;
                    }
                    let out = run_trial(&args, &cfg, n, p, trials[i]);
                    slots_mutex.lock().expect("trial slot lock")[i] = Some(out);
                });
            }
        });
        slots.into_iter().map(|s| s.expect("trial completed")).collect()
    };

    println!("{}", header_line(args.family));
    let mut polish_f_violations = 0usize;
    let mut polish_g_small = 0usize;
    for (trial, out) in outputs.into_iter().enumerate() {
        let out = out?;
        println!("{}", out.stdout_line);
        if let Some((fd, gd, _)) = out.polish_diffs {
            if fd < 0.0 {
                polish_f_violations += 1;
            }
            if gd <= 1e-6 {
                polish_g_small += 1;
            }
        }
        write_trace(
            &args.output.out,
            &format!("bench_{}_trial{trial}", args.family.name()),
            args.output.format,
            &out.trace,
        )?;
    }
    if matches!(args.family, FamilyArg::JacobiThenNewton) {
        println!(
            "summary trials={} f_improvement_violations={} grad_improvement_below_1e-6={}",
            args.trials, polish_f_violations, polish_g_small
        );
    }
    Ok(())
}

fn header_line(family: FamilyArg) -> &'static str {
    match family {
        FamilyArg::PerturbedOptimum => {
            "trial seed steps termination final_grad_norm final_f_gap convergence_order"
        }
        FamilyArg::JacobiThenNewton => {
            "trial seed sweeps steps termination f_jacobi_minus_newton grad_jacobi_minus_newton orth_jacobi_minus_newton"
        }
        FamilyArg::RandomSymmetric => "trial seed steps termination final_grad_norm final_f",
        FamilyArg::Commuting => "trial seed sweeps steps termination final_off_norm final_grad_norm",
    }
}

fn base_config(args: &BenchArgs, cfg: &NewtonConfig<f64>, n: usize, p: usize, trial: u64) -> TraceConfig {
    TraceConfig {
        command: "bench".into(),
        family: Some(args.family.name().into()),
        n,
        p,
        num_matrices: args.num_matrices,
        seed: Some(args.seed),
        trial: Some(trial),
        metric: cfg.metric.to_string(),
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        perturbation_scale: matches!(args.family, FamilyArg::PerturbedOptimum)
            .then_some(args.perturbation),
        jacobi_sweep_tol: matches!(
            args.family,
            FamilyArg::JacobiThenNewton | FamilyArg::Commuting
        )
        .then_some(match args.family {
            FamilyArg::JacobiThenNewton => args.jacobi_tol,
            _ => JacobiConfig::<f64>::default().sweep_tol,
        }),
    }
}

fn timed<T>(
    enabled: bool,
    f: impl FnOnce() -> Result<T, CliError>,
) -> Result<(T, Option<f64>), CliError> {
    let start = std::time::Instant::now();
    let out = f()?;
    let elapsed = enabled.then(|| start.elapsed().as_secs_f64() * 1e3);
    Ok((out, elapsed))
}

fn run_trial(
    args: &BenchArgs,
    cfg: &NewtonConfig<f64>,
    n: usize,
    p: usize,
    trial: u64,
) -> Result<TrialOutput, CliError> {
    let seed = derive_seed(args.seed, trial);
    match args.family {
        FamilyArg::PerturbedOptimum => {
            let ((inst, result), wall) = timed(args.timing, || {
                let mut rng = PortableRng::seed_from_u64(seed);
                let inst =
                    perturbed_optimum_instance::<f64>(n, p, args.num_matrices, args.perturbation, &mut rng);
                let result = solve(&inst.set, &inst.y_start, cfg)?;
                Ok((inst, result))
            })?;
            let grad_norms: Vec<f64> =
                result.trace.records.iter().map(|r| r.grad_norm).collect();
            let order = convergence_order(&grad_norms);
            let last = result.trace.final_record();
            let f_gap = last.f - inst.f_opt;
            let trace = TraceFile {
                schema_version: SCHEMA_VERSION,
                config: base_config(args, cfg, n, p, trial),
                iterations: rows_from_trace(&result.trace, Some(inst.f_opt)),
                summary: Summary {
                    termination: result.trace.termination.to_string(),
                    steps: result.trace.steps(),
                    final_f: last.f,
                    final_grad_norm: last.grad_norm,
                    final_orth_defect: last.orth_defect,
                    convergence_order: order,
                    f_opt_gap: Some(f_gap),
                    jacobi: None,
                    ica: None,
                },
                wall_time_ms: wall,
            };
            Ok(TrialOutput {
                stdout_line: format!(
                    "{trial} {seed} {} {} {} {} {}",
                    result.trace.steps(),
                    result.trace.termination,
                    last.grad_norm,
                    f_gap,
                    order.map_or("nan".into(), |q| q.to_string()),
                ),
                trace,
                polish_diffs: None,
            })
        }
        FamilyArg::JacobiThenNewton => {
            let ((set, jac, result), wall) = timed(args.timing, || {
                let mut rng = PortableRng::seed_from_u64(seed);
                let set: SymmetricSet<f64> = random_symmetric_set(n, args.num_matrices, &mut rng);
                let jcfg = JacobiConfig {
                    sweep_tol: args.jacobi_tol,
                    max_sweeps: 1000,
                };
                let jac = jacobi_diagonalize(&set, &jcfg)?;
                let result = solve_orthogonal(&set, &jac.y, cfg)?;
                Ok((set, jac, result))
            })?;
            let f_j = objective(&set, &jac.y)?;
            let g_j = riemannian_gradient(&set, &jac.y, Metric::Induced)?.norm();
            let o_j = jac.y.orthonormality_defect();
            let last = result.trace.final_record();
            let diffs = (f_j - last.f, g_j - last.grad_norm, o_j - last.orth_defect);
            let trace = TraceFile {
                schema_version: SCHEMA_VERSION,
                config: base_config(args, cfg, n, p, trial),
                iterations: rows_from_trace(&result.trace, None),
                summary: Summary {
                    termination: result.trace.termination.to_string(),
                    steps: result.trace.steps(),
                    final_f: last.f,
                    final_grad_norm: last.grad_norm,
                    final_orth_defect: last.orth_defect,
                    convergence_order: None,
                    f_opt_gap: None,
                    jacobi: Some(JacobiSummary {
                        sweeps: jac.sweeps,
                        f: f_j,
                        grad_norm: g_j,
                        orth_defect: o_j,
                        f_minus_newton: diffs.0,
                        grad_norm_minus_newton: diffs.1,
                        orth_defect_minus_newton: diffs.2,
                    }),
                    ica: None,
                },
                wall_time_ms: wall,
            };
            Ok(TrialOutput {
                stdout_line: format!(
                    "{trial} {seed} {} {} {} {} {} {}",
                    jac.sweeps,
                    result.trace.steps(),
                    result.trace.termination,
                    diffs.0,
                    diffs.1,
                    diffs.2
                ),
                trace,
                polish_diffs: Some(diffs),
            })
        }
        FamilyArg::RandomSymmetric => {
            let ((result, _set), wall) = timed(args.timing, || {
                let mut rng = PortableRng::seed_from_u64(seed);
                let set: SymmetricSet<f64> = random_symmetric_set(n, args.num_matrices, &mut rng);
                let y0: StiefelPoint<f64> = random_stiefel(n, p, &mut rng);
                let result = run_solver(&set, &y0, cfg, n, p)?;
                Ok((result, set))
            })?;
            let last = result.trace.final_record();
            let trace = TraceFile {
                schema_version: SCHEMA_VERSION,
                config: base_config(args, cfg, n, p, trial),
                iterations: rows_from_trace(&result.trace, None),
                summary: Summary {
                    termination: result.trace.termination.to_string(),
                    steps: result.trace.steps(),
                    final_f: last.f,
                    final_grad_norm: last.grad_norm,
                    final_orth_defect: last.orth_defect,
                    convergence_order: None,
                    f_opt_gap: None,
                    jacobi: None,
                    ica: None,
                },
                wall_time_ms: wall,
            };
            Ok(TrialOutput {
                stdout_line: format!(
                    "{trial} {seed} {} {} {} {}",
                    result.trace.steps(),
                    result.trace.termination,
                    last.grad_norm,
                    last.f
                ),
                trace,
                polish_diffs: None,
            })
        }
        FamilyArg::Commuting => {
            let ((set, jac, result), wall) = timed(args.timing, || {
                let mut rng = PortableRng::seed_from_u64(seed);
                let (set, _) = commuting_set::<f64>(n, args.num_matrices, &mut rng);
                let jcfg = JacobiConfig::default();
                let jac = jacobi_diagonalize(&set, &jcfg)?;
                let result = solve_orthogonal(&set, &jac.y, cfg)?;
                Ok((set, jac, result))
            })?;
            let last = result.trace.final_record();
            let ym = result.y_final.matrix();
            let off: f64 = set
                .mats()
                .iter()
                .map(|a| off_norm_sq(&ym.matmul_tn(&a.matmul(ym))))
                .sum::<f64>()
                .sqrt();
            let trace = TraceFile {
                schema_version: SCHEMA_VERSION,
                config: base_config(args, cfg, n, p, trial),
                iterations: rows_from_trace(&result.trace, None),
                summary: Summary {
                    termination: result.trace.termination.to_string(),
                    steps: result.trace.steps(),
                    final_f: last.f,
                    final_grad_norm: last.grad_norm,
                    final_orth_defect: last.orth_defect,
                    convergence_order: None,
                    f_opt_gap: None,
                    jacobi: Some(JacobiSummary {
                        sweeps: jac.sweeps,
                        f: objective(&set, &jac.y)?,
                        grad_norm: riemannian_gradient(&set, &jac.y, Metric::Induced)?.norm(),
                        orth_defect: jac.y.orthonormality_defect(),
                        f_minus_newton: objective(&set, &jac.y)? - last.f,
                        grad_norm_minus_newton:
                            riemannian_gradient(&set, &jac.y, Metric::Induced)?.norm()
                                - last.grad_norm,
                        orth_defect_minus_newton: jac.y.orthonormality_defect()
                            - last.orth_defect,
                    }),
                    ica: None,
                },
                wall_time_ms: wall,
            };
            Ok(TrialOutput {
                stdout_line: format!(
                    "{trial} {seed} {} {} {} {} {}",
                    jac.sweeps,
                    result.trace.steps(),
                    result.trace.termination,
                    off,
                    last.grad_norm
                ),
                trace,
                polish_diffs: None,
            })
        }
    }
}

fn run_solver(
    set: &SymmetricSet<f64>,
    y0: &StiefelPoint<f64>,
    cfg: &NewtonConfig<f64>,
    n: usize,
    p: usize,
) -> Result<JDResult<f64>, CliError> {
    Ok(if p == n {
        solve_orthogonal(set, y0, cfg)?
    } else {
        solve(set, y0, cfg)?
    })
}
