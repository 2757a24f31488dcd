mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::TestRng;
use lvglasso::bench::{parse_results, RunManifest, RESULTS_HEADER};
use lvglasso::datagen::{generate_ground_truth, sample_mvn};
use lvglasso::matrix::{read_csv, write_csv};
use lvglasso::{SymmetricMatrix, Variant};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvglasso"))
        .args(args)
        .current_dir(dir)
        .env_remove("LVG_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_rejects_zero_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gen", "--p", "0", "--out", "x"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("--p"));
}

#[test]
fn gen_is_reproducible_and_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = run(dir.path(), &["gen", "--p", "20", "--ph", "2", "--seed", "7", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["sigma_hat.csv", "s_true.csv", "l_true.csv", "manifest.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        if f == "manifest.json" {
            let ma = RunManifest::from_json(std::str::from_utf8(&a).unwrap()).unwrap();
            assert_eq!(ma.seed, Some(7));
            assert_eq!(ma.command, "gen");
        } else {
            assert_eq!(a, b, "{f}");
        }
    }
    let gt = generate_ground_truth(20, 2, 0.1, 7).unwrap();
    let data = sample_mvn(&gt.precision_x, 100, 8).unwrap();
    let loaded = read_csv(dir.path().join("a/sigma_hat.csv")).unwrap();
    for (x, y) in loaded.iter().zip(data.sigma_hat.iter()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn solve_identity_recovers_analytic_solution() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(&SymmetricMatrix::identity(5), dir.path().join("eye.csv")).unwrap();
    let o = run(
        dir.path(),
        &[
            "solve", "--input", "eye.csv", "--alpha", "0.5", "--beta", "0.2", "--no-continuation",
            "--tol", "1e-10", "--max-iter", "5000", "--out", "sol",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = read_csv(dir.path().join("sol/S.csv")).unwrap();
    let l = read_csv(dir.path().join("sol/L.csv")).unwrap();
    assert!(s.max_abs_diff(&SymmetricMatrix::scaled_identity(5, 2.0 / 3.0)) <= 1e-6);
    assert!(l.iter().all(|v| v.abs() <= 1e-6));
    assert!(dir.path().join("sol/R.csv").exists());

    let text = fs::read_to_string(dir.path().join("sol/result.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["row"]["converged"], true);
    assert_eq!(json["row"]["variant"], "pgadm");
    assert!(json["kkt"]["stationarity_r"].as_f64().unwrap() < 1e-6);
    let manifest: RunManifest = serde_json::from_value(json["manifest"].clone()).unwrap();
    assert_eq!(manifest.inputs, vec!["eye.csv".to_string()]);
    assert!(!manifest.solver.unwrap().continuation.enabled);
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["solve", "--input", "missing.csv", "--alpha", "0.1", "--beta", "0.1", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.csv"));

    write_csv(&SymmetricMatrix::identity(3), dir.path().join("eye.csv")).unwrap();
    let o = run(
        dir.path(),
        &["solve", "--input", "eye.csv", "--alpha", "0.5", "--beta", "0.2", "--max-iter", "1", "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(dir.path().join("o/result.json").exists());

    fs::write(dir.path().join("bad.csv"), "1,2\n3\n").unwrap();
    let o = run(dir.path(), &["solve", "--input", "bad.csv", "--alpha", "0.5", "--beta", "0.2", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(
        dir.path(),
        &["solve", "--input", "eye.csv", "--alpha", "0.5", "--beta", "0.2", "--strict", "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(1), "strict mode rejects the default step");
}

#[test]
fn bench_writes_ordered_parseable_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gen", "--p", "30", "--ph", "3", "--seed", "5", "--out", "inst"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(
        dir.path(),
        &[
            "bench", "--input", "inst/sigma_hat.csv", "--alpha", "0.01", "--beta", "0.05",
            "--variant", "pgadm,consensus", "--no-continuation", "--tol", "1e-8", "--max-iter",
            "50000", "--jobs", "2", "--out", "b",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("b/results.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULTS_HEADER);
    let rows = parse_results(&text).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].variant, Variant::Pgadm);
    assert_eq!(rows[1].variant, Variant::ConsensusAdmm);
    assert!(rows.iter().all(|r| r.converged && r.cpu_seconds >= 0.0));
    let rel = (rows[0].obj - rows[1].obj).abs() / rows[0].obj.abs();
    assert!(rel <= 1e-4, "{rel}");
}

#[test]
fn bench_rejects_empty_or_ragged_grid() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(&SymmetricMatrix::identity(3), dir.path().join("eye.csv")).unwrap();
    let o = run(dir.path(), &["bench", "--input", "eye.csv", "--out", "b"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(
        dir.path(),
        &["bench", "--input", "eye.csv", "--alpha", "0.1,0.2", "--beta", "0.1,0.2,0.3", "--out", "b"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_records_failing_cells() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(&SymmetricMatrix::identity(3), dir.path().join("eye.csv")).unwrap();
    let o = run(
        dir.path(),
        &["bench", "--input", "eye.csv", "--alpha", "0.5,-1", "--beta", "0.2", "--out", "b"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("b/results.csv")).unwrap();
    let line = text.lines().nth(2).unwrap();
    assert!(line.starts_with("-1,0.2,pgadm,,"), "{line}");
    assert!(line.ends_with(",false"));
}

#[test]
fn ingest_selects_high_variance_columns() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("toy.csv"), "x,y\n1,0\n-1,0\n").unwrap();
    let o = run(dir.path(), &["ingest", "--input", "toy.csv", "--p", "1", "--out", "ing"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cov = read_csv(dir.path().join("ing/sigma_hat.csv")).unwrap();
    assert_eq!(cov.dim(), 1);
    assert_eq!(cov.get(0, 0), 1.0);
    assert!(dir.path().join("ing/manifest.json").exists());

    let o = run(dir.path(), &["ingest", "--input", "toy.csv", "--p", "3", "--out", "ing2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ingest_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = TestRng::new(3);
    let mut text = String::new();
    for _ in 0..100 {
        let row: Vec<String> = (0..30).map(|j| format!("{}", rng.range(-1.0, 1.0) * (1.0 + j as f64 / 10.0))).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(dir.path().join("raw.csv"), text).unwrap();
    let o = run(dir.path(), &["ingest", "--input", "raw.csv", "--p", "20", "--out", "ing"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(
        dir.path(),
        &["solve", "--input", "ing/sigma_hat.csv", "--alpha", "0.05", "--beta", "0.1", "--out", "sol"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn thread_cap_is_validated_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_lvglasso");
    let o = Command::new(bin)
        .args(["gen", "--p", "5", "--out", "g"])
        .current_dir(dir.path())
        .env("LVG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(bin)
        .args(["gen", "--p", "5", "--out", "g"])
        .current_dir(dir.path())
        .env("LVG_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m = RunManifest::read(dir.path().join("g/manifest.json")).unwrap();
    assert_eq!(m.threads, Some(2));
}
