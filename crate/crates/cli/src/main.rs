//! Benchmark and verification harness for rank-one SVD updating.
//!
//! Four subcommands: `gen` writes random matrix files, `update` runs one
//! rank-one update end to end and reports a CSV record, `bench` times the
//! update phases over synthetic spectra, and `verify` replays the invariant
//! suites against random instances. Exit codes: 0 success, 1 numerical or
//! verification failure, 2 usage or IO trouble.

mod bench;
mod matfile;
mod verify;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svdstream_core::cauchy::DEFAULT_EPSILON;
use svdstream_core::fmm::order_for_epsilon;
use svdstream_core::jacobi::jacobi_svd;
use svdstream_core::{update_svd, Backend, DenseMatrix, SvdFactors};

// ---------------------------------------------------------------- errors

/// CLI failure, split by exit code: everything the user can fix from the
/// command line (usage, IO, unparseable files) exits 2; numerical failures
/// and verification misses exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Parse(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Parse(m) => write!(f, "parse: {m}"),
            CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

// ---------------------------------------------------------------- cli

#[derive(Parser)]
#[command(name = "svdstream", version, about = "Rank-one SVD update benchmark harness")]
struct Cli {
    /// Worker threads for the row-parallel matvec phase (1 = sequential;
    /// results are identical for any value).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random matrix file with uniform entries in [lo, hi).
    Gen(GenArgs),
    /// Apply the rank-one update a b^T to a matrix file and write factors.
    Update(UpdateArgs),
    /// Time the update phases on synthetic spectra; CSV on stdout.
    Bench(BenchArgs),
    /// Replay the invariant suites on random instances.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
    /// Output path; stdout when omitted.
    out: Option<PathBuf>,
    /// PRNG seed (falls back to $SVDSTREAM_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct UpdateArgs {
    /// Matrix file holding A (m x n, m <= n).
    matrix: PathBuf,
    /// Vector file holding a (length m).
    a: PathBuf,
    /// Vector file holding b (length n).
    b: PathBuf,
    /// Prefix for the output factors <out>_U.mat, <out>_S.mat, <out>_V.mat.
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendChoice::Fmm)]
    backend: BackendChoice,
    /// Far-field accuracy for the fmm backend (default 5^-20, i.e. p = 20).
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated problem sizes, each at least 2.
    #[arg(long, required = true)]
    sizes: String,
    /// Comma-separated backends out of naive, fast, fmm.
    #[arg(long, default_value = "naive,fmm")]
    backends: String,
    /// Rows per (size, backend) pair.
    #[arg(long, default_value_t = 5)]
    repeat: usize,
    #[arg(long)]
    epsilon: Option<f64>,
    /// PRNG seed (falls back to $SVDSTREAM_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Problem size, at least 2.
    #[arg(long)]
    n: usize,
    /// Random instances per suite.
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = BackendChoice::Naive)]
    backend: BackendChoice,
    #[arg(long)]
    epsilon: Option<f64>,
    /// PRNG seed (falls back to $SVDSTREAM_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    Naive,
    Fast,
    Fmm,
}

impl BackendChoice {
    pub fn to_backend(self, epsilon: Option<f64>) -> Result<Backend, CliError> {
        let backend = match self {
            BackendChoice::Naive => Backend::Naive,
            BackendChoice::Fast => Backend::Fast,
            BackendChoice::Fmm => Backend::Fmm { epsilon: epsilon.unwrap_or(DEFAULT_EPSILON) },
        };
        backend.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(backend)
    }
}

pub fn parse_backend_name(name: &str, epsilon: Option<f64>) -> Result<Backend, CliError> {
    let choice = match name {
        "naive" => BackendChoice::Naive,
        "fast" => BackendChoice::Fast,
        "fmm" => BackendChoice::Fmm,
        other => {
            return Err(CliError::Usage(format!(
                "unknown backend {other:?} (expected naive, fast, or fmm)"
            )));
        }
    };
    choice.to_backend(epsilon)
}

/// --seed beats $SVDSTREAM_SEED beats 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("SVDSTREAM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("SVDSTREAM_SEED is not an unsigned integer: {v:?}"))),
        Err(_) => Ok(0),
    }
}

// ---------------------------------------------------------------- csv

pub const CSV_HEADER: &str =
    "n,m,backend,p,t_prepare_ns,t_secular_ns,t_matvec_ns,t_total_ns,error,orth_u,orth_v,sigma_consistency";

pub struct Record {
    pub n: usize,
    pub m: usize,
    pub backend: &'static str,
    pub p: usize,
    pub t_prepare_ns: u64,
    pub t_secular_ns: u64,
    pub t_matvec_ns: u64,
    pub t_total_ns: u64,
    pub error: f64,
    pub orth_u: f64,
    pub orth_v: f64,
    pub sigma_consistency: f64,
}

impl Record {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:e},{:e},{:e},{:e}",
            self.n,
            self.m,
            self.backend,
            self.p,
            self.t_prepare_ns,
            self.t_secular_ns,
            self.t_matvec_ns,
            self.t_total_ns,
            self.error,
            self.orth_u,
            self.orth_v,
            self.sigma_consistency
        )
    }
}

/// Expansion order reported in the `p` CSV column: the fmm order for fmm
/// rows, 0 for backends without an order parameter.
pub fn order_column(backend: Backend) -> Result<usize, CliError> {
    match backend {
        Backend::Fmm { epsilon } => {
            order_for_epsilon(epsilon).map_err(|e| CliError::Usage(e.to_string()))
        }
        _ => Ok(0),
    }
}

// ---------------------------------------------------------------- gen

fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    if args.rows == 0 || args.cols == 0 {
        return Err(CliError::Usage("gen: rows and cols must be at least 1".into()));
    }
    if !(args.lo.is_finite() && args.hi.is_finite() && args.lo < args.hi) {
        return Err(CliError::Usage(format!(
            "gen: need finite bounds with lo < hi, got [{}, {})",
            args.lo, args.hi
        )));
    }
    let seed = resolve_seed(args.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Entries drawn row-major, so a file is a pure function of
    // (rows, cols, lo, hi, seed).
    let m = DenseMatrix::from_fn(args.rows, args.cols, |_, _| rng.random_range(args.lo..args.hi));
    match &args.out {
        Some(path) => matfile::write_matrix(path, &m),
        None => matfile::write_matrix_stdout(&m),
    }
}

// ---------------------------------------------------------------- update

fn suffixed(base: &PathBuf, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_update(args: &UpdateArgs) -> Result<(), CliError> {
    let backend = args.backend.to_backend(args.epsilon)?;
    let a_mat = matfile::read_matrix(&args.matrix)?;
    let a = matfile::read_vector(&args.a)?;
    let b = matfile::read_vector(&args.b)?;

    let (u, s, v) = jacobi_svd(&a_mat)
        .map_err(|e| CliError::Numeric(format!("initial factorization failed: {e}")))?;
    let svd = SvdFactors::new(u, s, v)
        .map_err(|e| CliError::Numeric(format!("initial factorization failed: {e}")))?;
    let (factors, report) = update_svd(&svd, &a, &b, backend)
        .map_err(|e| CliError::Numeric(format!("update failed: {e}")))?;

    matfile::write_matrix(&suffixed(&args.out, "_U.mat"), &factors.u)?;
    let s_dense = DenseMatrix::from_fn(factors.s.rows(), factors.s.cols(), |i, j| {
        if i == j {
            factors.s.diag()[i]
        } else {
            0.0
        }
    });
    matfile::write_matrix(&suffixed(&args.out, "_S.mat"), &s_dense)?;
    matfile::write_matrix(&suffixed(&args.out, "_V.mat"), &factors.v)?;

    if report.negative_clamped {
        eprintln!("svdstream: warning: a negative updated eigenvalue was clamped to zero");
    }
    let record = Record {
        n: a_mat.cols(),
        m: a_mat.rows(),
        backend: backend.name(),
        p: order_column(backend)?,
        t_prepare_ns: report.timings.prepare_ns,
        t_secular_ns: report.timings.secular_ns,
        t_matvec_ns: report.timings.matvec_ns,
        t_total_ns: report.timings.total_ns,
        error: report.error,
        orth_u: report.orth_u,
        orth_v: report.orth_v,
        sigma_consistency: report.sigma_consistency,
    };
    println!("{CSV_HEADER}");
    println!("{}", record.to_csv());
    Ok(())
}

// ---------------------------------------------------------------- main

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("svdstream: {e}");
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Update(args) => cmd_update(args),
        Command::Bench(args) => bench::run(args),
        Command::Verify(args) => verify::run(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svdstream: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
