//! `ica`: separate mixed signals. Channels come from CSV rows, PGM images,
//! or a synthetic generator; the recovered channels are written back in the
//! input's shape together with a trace.

use std::path::PathBuf;

use stiefel_jd::ica::{
    align, pipeline_warm_start, separate_with, synthetic_sources, SignalMatrix, SourceKind,
};
use stiefel_jd::io::{read_csv_matrix, read_pgm, write_csv_matrix, write_pgm};
use stiefel_jd::jacobi::JacobiConfig;
use stiefel_jd::matrix::DenseMatrix;
use stiefel_jd::newton::NewtonConfig;
use stiefel_jd::rng::PortableRng;
use stiefel_jd::verify::convergence_order;

use crate::commands::write_trace;
use crate::trace::{
    rows_from_trace, IcaSummary, JacobiSummary, Summary, TraceConfig, TraceFile, SCHEMA_VERSION,
};
use crate::{CliError, IcaArgs};

/// Channels loaded from disk; PGM inputs remember their image shape so the
/// outputs can be written back as images.
struct LoadedChannels {
    signal: SignalMatrix<f64>,
    image_shape: Option<(usize, usize)>,
}

fn load_channels(paths: &[PathBuf]) -> Result<LoadedChannels, CliError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut image_shape: Option<(usize, usize)> = None;
    let mut any_csv = false;
    for path in paths {
        let is_pgm = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("pgm"))
            .unwrap_or(false);
        if is_pgm {
            let img = read_pgm(path)?;
            let shape = img.pixels.shape();
            match image_shape {
                None => image_shape = Some(shape),
                Some(s) if s == shape => {}
                Some(s) => {
                    return Err(CliError::input(format!(
                        "{}: image is {}x{}, expected {}x{} like the first image",
                        path.display(),
                        shape.0,
                        shape.1,
                        s.0,
                        s.1
                    )))
                }
            }
            // Column-major flattening of the image is the channel.
            rows.push(img.pixels.data().to_vec());
        } else {
            any_csv = true;
            let m = read_csv_matrix(path)?;
            for r in 0..m.rows() {
                rows.push((0..m.cols()).map(|c| m.get(r, c)).collect());
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::input("no channels loaded"));
    }
    let t = rows[0].len();
    if rows.iter().any(|r| r.len() != t) {
        return Err(CliError::input("channels have different lengths"));
    }
    let n = rows.len();
    let x = DenseMatrix::from_fn(n, t, |r, c| rows[r][c]);
    Ok(LoadedChannels {
        signal: SignalMatrix::new(x)?,
        image_shape: if any_csv { None } else { image_shape },
    })
}

pub fn run(args: IcaArgs) -> Result<(), CliError> {
    let modes = [
        !args.mixtures.is_empty(),
        !args.sources.is_empty(),
        args.synthetic,
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if modes != 1 {
        return Err(CliError::input(
            "choose exactly one of --mixtures, --sources with --mixing, or --synthetic",
        ));
    }

    let mut truth: Option<SignalMatrix<f64>> = None;
    let mut image_shape = None;
    let x = if args.synthetic {
        if args.channels < 2 {
            return Err(CliError::input("--channels must be at least 2"));
        }
        let mut rng = PortableRng::seed_from_u64(args.seed);
        let kinds: Vec<SourceKind> = (0..args.channels).map(SourceKind::cycle).collect();
        let s = synthetic_sources::<f64>(&kinds, args.samples, &mut rng)?;
        // Well-conditioned random mixing: orthogonal times a positive scaling.
        let q = stiefel_jd::experiments::random_orthogonal::<f64>(args.channels, &mut rng);
        let d: Vec<f64> = (0..args.channels)
            .map(|_| rng.uniform_in(0.5, 1.5))
            .collect();
        let a = q.scale_cols(&d);
        let x = SignalMatrix::new(a.matmul(s.matrix()))?;
        truth = Some(s);
        x
    } else if !args.sources.is_empty() {
        let mixing_path = args
            .mixing
            .as_ref()
            .ok_or_else(|| CliError::input("--sources requires --mixing"))?;
        let loaded = load_channels(&args.sources)?;
        image_shape = loaded.image_shape;
        let a = read_csv_matrix(mixing_path)?;
        let n = loaded.signal.channels();
        if a.shape() != (n, n) {
            return Err(CliError::input(format!(
                "mixing matrix is {}x{}, expected {n}x{n}",
                a.rows(),
                a.cols()
            )));
        }
        let x = SignalMatrix::new(a.matmul(loaded.signal.matrix()))?;
        truth = Some(loaded.signal);
        x
    } else {
        let loaded = load_channels(&args.mixtures)?;
        image_shape = loaded.image_shape;
        loaded.signal
    };

    if !args.truth.is_empty() {
        truth = Some(load_channels(&args.truth)?.signal);
    }

    let n = x.channels();
    let samples = x.samples();
    let newton_cfg = NewtonConfig {
        max_iters: args.solver.max_iters,
        grad_tol: args.solver.grad_tol,
        metric: args.solver.metric.into(),
        ..NewtonConfig::default()
    };
    let warm_start: JacobiConfig<f64> = pipeline_warm_start(n);
    let mut result = separate_with(&x, &warm_start, &newton_cfg)?;

    // A contrast this small carries no fourth-order information: warn.
    let gaussian_floor = 10.0 * (n * n) as f64 / (samples as f64).sqrt();
    if result.contrast_norm <= gaussian_floor {
        eprintln!(
            "warning: cumulant contrast {:.3e} is at the Gaussian noise floor {:.3e}; \
             fourth-order separation is not identifiable",
            result.contrast_norm, gaussian_floor
        );
    }
    if result.fell_back {
        eprintln!("warning: Newton polish unavailable; returning the Jacobi solution");
    }

    if let Some(t) = &truth {
        if t.matrix().shape() == result.z.matrix().shape() {
            result.alignment = Some(align(&result.z, t)?);
        } else {
            eprintln!(
                "warning: truth shape {:?} does not match recovered {:?}; skipping alignment",
                t.matrix().shape(),
                result.z.matrix().shape()
            );
        }
    }

    std::fs::create_dir_all(&args.output.out)?;
    for i in 0..n {
        let channel = result.z.channel(i);
        if let Some((h, w)) = image_shape {
            // Rescale to [0, 1] for display; ICA scale is not identifiable.
            let lo = channel.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = channel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            let img = DenseMatrix::new(h, w, channel.iter().map(|v| (v - lo) / span).collect())
                .expect("channel length matches image shape");
            write_pgm(&args.output.out.join(format!("ica_channel{i}.pgm")), &img)?;
        } else {
            let row = DenseMatrix::from_fn(1, samples, |_, t| channel[t]);
            write_csv_matrix(&args.output.out.join(format!("ica_channel{i}.csv")), &row)?;
        }
    }
    write_csv_matrix(&args.output.out.join("ica_separating_matrix.csv"), &result.b_sep)?;

    let last = result.newton_trace.final_record();
    let grad_norms: Vec<f64> = result
        .newton_trace
        .records
        .iter()
        .map(|r| r.grad_norm)
        .collect();
    let trace = TraceFile {
        schema_version: SCHEMA_VERSION,
        config: TraceConfig {
            command: "ica".into(),
            family: args.synthetic.then(|| "synthetic".into()),
            n,
            p: n,
            num_matrices: n * (n + 1) / 2,
            seed: args.synthetic.then_some(args.seed),
            trial: None,
            metric: newton_cfg.metric.to_string(),
            max_iters: newton_cfg.max_iters,
            grad_tol: newton_cfg.grad_tol,
            perturbation_scale: None,
            jacobi_sweep_tol: Some(warm_start.sweep_tol),
        },
        iterations: rows_from_trace(&result.newton_trace, None),
        summary: Summary {
            termination: result.newton_trace.termination.to_string(),
            steps: result.newton_trace.steps(),
            final_f: result.f_newton,
            final_grad_norm: result.newton_grad_norm,
            final_orth_defect: last.orth_defect,
            convergence_order: convergence_order(&grad_norms),
            f_opt_gap: None,
            jacobi: Some(JacobiSummary {
                sweeps: result.jacobi_sweeps,
                f: result.f_jacobi,
                grad_norm: result.jacobi_grad_norm,
                orth_defect: result.jacobi_orth_defect,
                f_minus_newton: result.f_jacobi - result.f_newton,
                grad_norm_minus_newton: result.jacobi_grad_norm - result.newton_grad_norm,
                orth_defect_minus_newton: result.jacobi_orth_defect - result.newton_orth_defect,
            }),
            ica: Some(IcaSummary {
                channels: n,
                samples,
                contrast_norm: result.contrast_norm,
                fell_back: result.fell_back,
                alignment_permutation: result.alignment.as_ref().map(|a| a.permutation.clone()),
                alignment_scales: result.alignment.as_ref().map(|a| a.scales.clone()),
                alignment_correlations: result
                    .alignment
                    .as_ref()
                    .map(|a| a.correlations.clone()),
            }),
        },
        wall_time_ms: None,
    };
    write_trace(&args.output.out, "ica", args.output.format, &trace)?;

    print!(
        "channels={n} samples={samples} jacobi_grad_norm={} newton_grad_norm={} f_jacobi={} f_newton={} fell_back={}",
        result.jacobi_grad_norm,
        result.newton_grad_norm,
        result.f_jacobi,
        result.f_newton,
        result.fell_back
    );
    if let Some(alignment) = &result.alignment {
        let corrs: Vec<String> = alignment
            .correlations
            .iter()
            .map(|c| format!("{c:.6}"))
            .collect();
        print!(" correlations={}", corrs.join(","));
    }
    println!();
    Ok(())
}
