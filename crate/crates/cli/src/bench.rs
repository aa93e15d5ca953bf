//! Phase timings over synthetic spectra.
//!
//! A full update at the sizes worth benchmarking (2^12 and up) would spend
//! its memory and wall clock on dense eigenvector matrices and drown the
//! numbers being compared, so `bench` times the phases of one symmetric
//! rank-one eigenupdate kernel instead:
//!
//! * prepare — drawing the spectrum, assembling the secular problem,
//!   deflation, and building the Cauchy system (column norms included; the
//!   assembly is backend-independent O(n^2) work);
//! * secular — the root solve;
//! * matvec  — one application of the normalized Cauchy system to a single
//!   sampled coefficient row, the part the backends actually compete on
//!   (the fmm plan build is included).
//!
//! The error column compares the timed backend's row against the direct
//! summation on the same instance (zero for the naive backend by
//! definition). The orthogonality columns hold a backend-independent
//! diagnostic of the instance itself — the worst Gram defect over a few
//! sampled exact eigenvector columns — duplicated for u and v since the
//! kernel has one side. sigma_consistency reports trace conservation of the
//! solved spectrum. Instances are a pure function of (seed, size, repeat),
//! so the numeric columns are identical across runs and across backends.

use std::io::{self, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svdstream_core::cauchy::{apply_ctilde, CauchySystem};
use svdstream_core::fast::MAX_FAST_SIZE;
use svdstream_core::secular::{deflate, solve_secular, DeflatedProblem, SecularProblem, SecularRoots};
use svdstream_core::{Backend, DenseMatrix};

use crate::{order_column, parse_backend_name, resolve_seed, BenchArgs, CliError, Record, CSV_HEADER};

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    let sizes = parse_sizes(&args.sizes)?;
    let mut backends = Vec::new();
    for name in args.backends.split(',') {
        backends.push(parse_backend_name(name.trim(), args.epsilon)?);
    }
    if args.repeat == 0 {
        return Err(CliError::Usage("bench: --repeat must be at least 1".into()));
    }
    let seed = resolve_seed(args.seed)?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{CSV_HEADER}").map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    for &n in &sizes {
        for rep in 0..args.repeat {
            for &backend in &backends {
                if matches!(backend, Backend::Fast) && n > MAX_FAST_SIZE {
                    eprintln!(
                        "svdstream: skipping fast at n={n}: backend supports n <= {MAX_FAST_SIZE}"
                    );
                    continue;
                }
                let record = match run_one(seed, n, rep, backend) {
                    Ok(record) => record,
                    // A backend declining an instance (for example the
                    // factored backend's separation guard on nearly touching
                    // node pairs) voids this cell, not the whole run: warn
                    // and keep measuring the remaining cells.
                    Err(CliError::Numeric(msg)) => {
                        eprintln!(
                            "svdstream: skipping {} at n={n} repeat {rep}: {msg}",
                            backend.name()
                        );
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                writeln!(out, "{}", record.to_csv()).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            }
        }
    }
    Ok(())
}

fn parse_sizes(list: &str) -> Result<Vec<usize>, CliError> {
    let mut sizes = Vec::new();
    for tok in list.split(',') {
        let n: usize = tok
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bench: size {tok:?} is not a count")))?;
        if n < 2 {
            return Err(CliError::Usage(format!("bench: sizes must be at least 2, got {n}")));
        }
        sizes.push(n);
    }
    if sizes.is_empty() {
        return Err(CliError::Usage("bench: --sizes list is empty".into()));
    }
    Ok(sizes)
}

/// Stream for one (size, repeat) cell; deliberately independent of the
/// backend so every backend times the identical instance.
fn instance_rng(seed: u64, n: usize, rep: usize) -> ChaCha8Rng {
    let derived = seed
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (rep as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    ChaCha8Rng::seed_from_u64(derived)
}

fn numeric(e: svdstream_core::Error) -> CliError {
    CliError::Numeric(format!("bench kernel: {e}"))
}

fn run_one(seed: u64, n: usize, rep: usize, backend: Backend) -> Result<Record, CliError> {
    let mut rng = instance_rng(seed, n, rep);

    // Poles with floored gaps and weights bounded away from zero keep every
    // size in the same well-conditioned regime: nothing deflates, no root
    // crowds its pole, and the timings measure growth rather than
    // conditioning accidents. (Unfloored uniform draws at n in the
    // thousands generically put some root within machine precision of a
    // pole, which the Cauchy system rejects.)
    let t0 = Instant::now();
    let d: Vec<f64> =
        (0..n).map(|i| 1.0 + 8.0 * (i as f64 + rng.random_range(0.1..0.9)) / n as f64).collect();
    let z: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0.1..1.0) * if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 })
        .collect();
    let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let problem = SecularProblem::new(d, z, 1.0).map_err(numeric)?;
    let defl = deflate(&problem, None).map_err(numeric)?;
    let t_prepare = t0.elapsed();

    let t1 = Instant::now();
    let roots = solve_secular(&defl.reduced).map_err(numeric)?;
    let t_secular = t1.elapsed();

    let k = defl.reduced.d.len();
    let t2 = Instant::now();
    let sys = CauchySystem::new(defl.reduced.d.clone(), roots.mu.clone(), defl.reduced.z.clone())
        .map_err(numeric)?;
    let assemble = t2.elapsed();
    let u_row = DenseMatrix::new(1, k, row[..k].to_vec()).map_err(numeric)?;

    let t3 = Instant::now();
    let applied = apply_ctilde(&sys, &u_row, backend).map_err(numeric)?;
    let t_matvec = t3.elapsed();

    // Diagnostics are untimed.
    let error = if matches!(backend, Backend::Naive) {
        0.0
    } else {
        let reference = apply_ctilde(&sys, &u_row, Backend::Naive).map_err(numeric)?;
        let scale = reference.max_abs().max(1e-300);
        applied
            .as_slice()
            .iter()
            .zip(reference.as_slice())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    };
    let orth = sampled_gram_defect(&sys);
    let sigma = trace_defect(&problem, &defl, &roots);

    let t_prepare_ns = (t_prepare + assemble).as_nanos() as u64;
    let t_secular_ns = t_secular.as_nanos() as u64;
    let t_matvec_ns = t_matvec.as_nanos() as u64;
    Ok(Record {
        n,
        m: n,
        backend: backend.name(),
        p: order_column(backend)?,
        t_prepare_ns,
        t_secular_ns,
        t_matvec_ns,
        t_total_ns: t_prepare_ns + t_secular_ns + t_matvec_ns,
        error,
        orth_u: orth,
        orth_v: orth,
        sigma_consistency: sigma,
    })
}

/// Worst off-diagonal Gram magnitude (and diagonal deviation from 1) over a
/// handful of evenly spaced exact eigenvector columns, each dot product
/// taken directly against the defining formula in O(n).
fn sampled_gram_defect(sys: &CauchySystem) -> f64 {
    let k = sys.len();
    if k == 0 {
        return 0.0;
    }
    let samples = k.min(8);
    let picks: Vec<usize> = (0..samples).map(|t| t * (k - 1) / samples.max(1)).collect();
    let mut worst = 0.0f64;
    for (si, &j1) in picks.iter().enumerate() {
        for &j2 in &picks[si..] {
            let mut dot = 0.0;
            for i in 0..k {
                let zi = sys.abar[i];
                dot += zi * zi / ((sys.lambda[i] - sys.mu[j1]) * (sys.lambda[i] - sys.mu[j2]));
            }
            dot /= sys.col_norms[j1] * sys.col_norms[j2];
            let target = if j1 == j2 { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// Relative defect of trace conservation: solved roots plus deflated
/// eigenvalues must reproduce trace(D) + rho * ||z||^2.
fn trace_defect(problem: &SecularProblem, defl: &DeflatedProblem, roots: &SecularRoots) -> f64 {
    let mut lhs = 0.0;
    for &mu in &roots.mu {
        lhs += mu;
    }
    for &(_, val) in &defl.deflated {
        lhs += val;
    }
    let rhs = problem.d.iter().sum::<f64>() + problem.rho * problem.weight_norm2();
    (lhs - rhs).abs() / rhs.abs().max(1.0)
}
