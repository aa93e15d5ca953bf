//! End-to-end checks of the svdstream binary: exit codes, file formats,
//! determinism, and the documented CSV contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CSV_HEADER: &str =
    "n,m,backend,p,t_prepare_ns,t_secular_ns,t_matvec_ns,t_total_ns,error,orth_u,orth_v,sigma_consistency";

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_svdstream"));
    // Tests control seeding explicitly; a seed leaking in from the
    // environment must not change what they observe.
    cmd.env_remove("SVDSTREAM_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn svdstream")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// The non-timing CSV columns: everything except t_*_ns, which legitimately
/// vary run to run.
fn stable_columns(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            [&f[..4], &f[8..]].concat().iter().map(|s| s.to_string()).collect()
        })
        .collect()
}

fn write_matrix(path: &Path, rows: usize, cols: usize, vals: &[f64]) {
    let mut body = format!("svdstream-matrix v1 {rows} {cols}\n");
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| format!("{:e}", vals[r * cols + c])).collect();
        body.push_str(&line.join(" "));
        body.push('\n');
    }
    fs::write(path, body).expect("write matrix file");
}

// ---------------------------------------------------------------- gen

#[test]
fn gen_is_deterministic_per_seed_and_respects_bounds() {
    let a = run(&["gen", "5", "7", "1", "9", "--seed", "42"]);
    let b = run(&["gen", "5", "7", "1", "9", "--seed", "42"]);
    let c = run(&["gen", "5", "7", "1", "9", "--seed", "43"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout, "same seed must reproduce the same matrix");
    assert_ne!(a.stdout, c.stdout, "different seeds must differ");

    let text = stdout_of(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "svdstream-matrix v1 5 7");
    let mut count = 0;
    for line in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().expect("numeric entry");
            assert!((1.0..9.0).contains(&v), "entry {v} outside [1, 9)");
            count += 1;
        }
    }
    assert_eq!(count, 35);
}

#[test]
fn gen_rejects_degenerate_requests() {
    assert_eq!(code(&run(&["gen", "0", "2", "1", "9"])), 2);
    assert_eq!(code(&run(&["gen", "2", "0", "1", "9"])), 2);
    assert_eq!(code(&run(&["gen", "2", "2", "9", "1"])), 2);
    assert_eq!(code(&run(&["gen", "2", "2", "1", "1"])), 2);
}

#[test]
fn gen_writes_the_out_file_when_given() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.mat");
    let out = run(&["gen", "3", "4", "0", "1", path.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty(), "file mode should not echo the matrix");
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("svdstream-matrix v1 3 4\n"));
    for tok in text.lines().skip(1).flat_map(str::split_whitespace) {
        let v: f64 = tok.parse().unwrap();
        assert!((0.0..1.0).contains(&v));
    }
}

// ---------------------------------------------------------------- update

#[test]
fn update_with_zero_vectors_is_a_reported_noop() {
    let dir = tempfile::tempdir().unwrap();
    let a_path = dir.path().join("A.mat");
    let zero_m = dir.path().join("zm.mat");
    let zero_n = dir.path().join("zn.mat");
    let out_prefix = dir.path().join("out");

    let gen = run(&["gen", "6", "6", "1", "9", a_path.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(code(&gen), 0);
    write_matrix(&zero_m, 1, 6, &[0.0; 6]);
    write_matrix(&zero_n, 1, 6, &[0.0; 6]);

    let out = run(&[
        "update",
        a_path.to_str().unwrap(),
        zero_m.to_str().unwrap(),
        zero_n.to_str().unwrap(),
        out_prefix.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    let error: f64 = fields[8].parse().unwrap();
    assert!(error <= 1e-12, "zero update reported error {error:e}");

    for suffix in ["_U.mat", "_S.mat", "_V.mat"] {
        let mut p = out_prefix.clone().into_os_string();
        p.push(suffix);
        assert!(Path::new(&p).exists(), "missing {suffix}");
    }
}

#[test]
fn update_accuracy_on_a_generated_ten_by_ten() {
    let dir = tempfile::tempdir().unwrap();
    let a_path = dir.path().join("A.mat");
    let u_path = dir.path().join("a.mat");
    let v_path = dir.path().join("b.mat");
    let out_prefix = dir.path().join("out");

    assert_eq!(code(&run(&["gen", "10", "10", "1", "9", a_path.to_str().unwrap(), "--seed", "1"])), 0);
    assert_eq!(code(&run(&["gen", "1", "10", "1", "9", u_path.to_str().unwrap(), "--seed", "2"])), 0);
    assert_eq!(code(&run(&["gen", "1", "10", "1", "9", v_path.to_str().unwrap(), "--seed", "3"])), 0);

    for (backend, bound) in [("fmm", 1e-6), ("naive", 1e-8)] {
        let out = run(&[
            "update",
            a_path.to_str().unwrap(),
            u_path.to_str().unwrap(),
            v_path.to_str().unwrap(),
            out_prefix.to_str().unwrap(),
            "--backend",
            backend,
        ]);
        assert_eq!(code(&out), 0);
        let text = stdout_of(&out);
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "10");
        assert_eq!(row[1], "10");
        assert_eq!(row[2], backend);
        let error: f64 = row[8].parse().unwrap();
        let orth_u: f64 = row[9].parse().unwrap();
        let orth_v: f64 = row[10].parse().unwrap();
        let sigma: f64 = row[11].parse().unwrap();
        assert!(error <= bound, "{backend} error {error:e}");
        assert!(orth_u <= 1e-7 && orth_v <= 1e-7);
        assert!(sigma <= 1e-8);
    }
}

#[test]
fn update_output_is_identical_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let a_path = dir.path().join("A.mat");
    let u_path = dir.path().join("a.mat");
    let v_path = dir.path().join("b.mat");
    assert_eq!(code(&run(&["gen", "12", "12", "1", "9", a_path.to_str().unwrap(), "--seed", "5"])), 0);
    assert_eq!(code(&run(&["gen", "1", "12", "1", "9", u_path.to_str().unwrap(), "--seed", "6"])), 0);
    assert_eq!(code(&run(&["gen", "1", "12", "1", "9", v_path.to_str().unwrap(), "--seed", "7"])), 0);

    let mut factors = Vec::new();
    for threads in ["1", "4"] {
        let prefix = dir.path().join(format!("out{threads}"));
        let out = run(&[
            "--threads",
            threads,
            "update",
            a_path.to_str().unwrap(),
            u_path.to_str().unwrap(),
            v_path.to_str().unwrap(),
            prefix.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        let mut triple = Vec::new();
        for suffix in ["_U.mat", "_S.mat", "_V.mat"] {
            let mut p = prefix.clone().into_os_string();
            p.push(suffix);
            triple.push(fs::read(&p).unwrap());
        }
        factors.push(triple);
    }
    assert_eq!(factors[0], factors[1], "factor files must be byte-identical across thread counts");
}

#[test]
fn update_rejects_unknown_backends_and_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let a_path = dir.path().join("A.mat");
    assert_eq!(code(&run(&["gen", "4", "4", "1", "9", a_path.to_str().unwrap(), "--seed", "1"])), 0);
    let p = a_path.to_str().unwrap();

    let bogus = run(&["update", p, p, p, "out", "--backend", "bogus"]);
    assert_eq!(code(&bogus), 2);

    let missing = run(&["update", "/nonexistent/X.mat", p, p, "out"]);
    assert_eq!(code(&missing), 2);

    let garbled = dir.path().join("bad.mat");
    fs::write(&garbled, "svdstream-matrix v1 2 2\n1 2 3\n").unwrap();
    let parse = run(&["update", garbled.to_str().unwrap(), p, p, "out"]);
    assert_eq!(code(&parse), 2);
}

// ---------------------------------------------------------------- bench

#[test]
fn bench_emits_the_documented_header_and_row_shape() {
    let out = run(&["bench", "--sizes", "4", "--backends", "naive", "--repeat", "1", "--seed", "0"]);
    assert_eq!(code(&out), 0);
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one row: {text}");
    assert_eq!(lines[0], CSV_HEADER);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 12);
    assert_eq!(fields[0], "4");
    assert_eq!(fields[1], "4");
    assert_eq!(fields[2], "naive");
    assert_eq!(fields[3], "0");
    let error: f64 = fields[8].parse().unwrap();
    assert_eq!(error, 0.0, "naive rows compare the backend against itself");
}

#[test]
fn bench_numeric_columns_are_reproducible() {
    let args = ["bench", "--sizes", "8,16", "--backends", "naive,fmm", "--repeat", "2", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(stable_columns(&stdout_of(&a)), stable_columns(&stdout_of(&b)));

    // The env var is the documented fallback for --seed.
    let via_env = bin()
        .args(["bench", "--sizes", "8,16", "--backends", "naive,fmm", "--repeat", "2"])
        .env("SVDSTREAM_SEED", "3")
        .output()
        .unwrap();
    assert_eq!(code(&via_env), 0);
    assert_eq!(stable_columns(&stdout_of(&a)), stable_columns(&stdout_of(&via_env)));
}

#[test]
fn bench_shares_one_instance_across_backends() {
    let out = run(&["bench", "--sizes", "32", "--backends", "naive,fmm", "--repeat", "1", "--seed", "4"]);
    assert_eq!(code(&out), 0);
    let cols = stable_columns(&stdout_of(&out));
    assert_eq!(cols.len(), 2);
    // Same instance means identical diagnostic columns (orth, sigma).
    assert_eq!(cols[0][5..], cols[1][5..]);
}

#[test]
fn bench_rejects_malformed_requests() {
    assert_eq!(code(&run(&["bench", "--sizes", "1", "--backends", "naive"])), 2);
    assert_eq!(code(&run(&["bench", "--sizes", "x", "--backends", "naive"])), 2);
    assert_eq!(code(&run(&["bench", "--sizes", "8", "--backends", "turbo"])), 2);
    assert_eq!(code(&run(&["bench", "--sizes", "8", "--repeat", "0"])), 2);
    assert_eq!(code(&bin().args(["bench", "--sizes", "8"]).env("SVDSTREAM_SEED", "nope").output().unwrap()), 2);
}

// ---------------------------------------------------------------- verify

#[test]
fn verify_passes_on_healthy_configurations() {
    let out = run(&["verify", "--n", "8", "--trials", "50", "--backend", "naive"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert!(text.contains("all invariants within tolerance"));
    assert!(text.contains("interlacing violations"));

    let fmm = run(&["verify", "--n", "12", "--trials", "10", "--backend", "fmm"]);
    assert_eq!(code(&fmm), 0);
}

#[test]
fn verify_fails_loudly_when_the_accuracy_budget_is_too_loose() {
    // epsilon 0.2 is order p = 1: the far-field model is far too coarse for
    // the 1e-6 reconstruction bound, and the run must say so and exit 1.
    let out = run(&["verify", "--n", "8", "--trials", "5", "--backend", "fmm", "--epsilon", "0.2"]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("reconstruction"), "stderr: {err}");
}

#[test]
fn verify_with_zero_trials_is_a_vacuous_pass() {
    let out = run(&["verify", "--n", "8", "--trials", "0"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn verify_rejects_unusable_sizes() {
    assert_eq!(code(&run(&["verify", "--n", "1", "--trials", "1"])), 2);
    assert_eq!(code(&run(&["verify", "--n", "600", "--trials", "1", "--backend", "fast"])), 2);
}
