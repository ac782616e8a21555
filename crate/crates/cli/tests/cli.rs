//! End-to-end runs of the compiled binary: every subcommand, the
//! file-to-file pipeline, and the reproducibility guarantees.

use std::path::Path;
use std::process::{Command, Output};

fn mixcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixcheck"))
        .args(args)
        .env_remove("MIXCHECK_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn calibration_is_reproducible_and_thread_invariant() {
    let args = [
        "critical-values",
        "--n",
        "5",
        "--N",
        "200",
        "--dist",
        "normal",
        "--seed",
        "7",
    ];
    let first = mixcheck(&args);
    let second = mixcheck(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "same flags, same bytes");

    let mut one_thread = args.to_vec();
    one_thread.extend(["--threads", "1"]);
    let mut four_threads = args.to_vec();
    four_threads.extend(["--threads", "4"]);
    assert_eq!(mixcheck(&one_thread).stdout, first.stdout);
    assert_eq!(mixcheck(&four_threads).stdout, first.stdout);

    let cv = stdout_json(&first);
    for key in [
        "n",
        "N",
        "dist",
        "perm_constraint",
        "alpha1",
        "alpha2",
        "c1",
        "c2",
        "achieved1",
        "achieved2",
        "seed",
    ] {
        assert!(cv.get(key).is_some(), "missing {key}");
    }
    let c1 = cv["c1"].as_f64().unwrap();
    let c2 = cv["c2"].as_f64().unwrap();
    assert!(c1 > 0.0 && c1 < 1.0);
    assert!(c2 > 0.0 && c2 <= 1.0 - c1);
    assert_eq!(cv["perm_constraint"]["c1"], "min-cycles:5");
    assert_eq!(cv["perm_constraint"]["c2"], "any");
}

#[test]
fn calibration_rejects_fewer_than_three_regions() {
    let out = mixcheck(&[
        "critical-values",
        "--n",
        "2",
        "--N",
        "100",
        "--dist",
        "normal",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_text(&out).contains("n >= 3"), "{}", stderr_text(&out));
}

#[test]
fn randomized_subcommands_demand_a_seed() {
    let calibrate = mixcheck(&["critical-values", "--n", "5", "--N", "100", "--dist", "normal"]);
    assert!(!calibrate.status.success());
    assert!(stderr_text(&calibrate).contains("--seed"));

    let simulate = mixcheck(&[
        "simulate",
        "--protocol",
        "identity",
        "--grid",
        "4",
        "--points-per-region",
        "10",
    ]);
    assert!(!simulate.status.success());
    assert!(stderr_text(&simulate).contains("--seed"));
}

#[test]
fn degenerate_distribution_completes_with_flags() {
    let out = mixcheck(&[
        "critical-values",
        "--n",
        "4",
        "--N",
        "100",
        "--dist",
        "const:1",
        "--seed",
        "2",
    ]);
    let cv = stdout_json(&out);
    assert_eq!(cv["degenerate1"], true);
    assert_eq!(cv["degenerate2"], true);
    // Every constant-component draw lands on the same flat spectrum.
    assert_eq!(cv["c2"].as_f64().unwrap(), 0.0);
}

#[test]
fn sample_and_ecdf_exports_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("c1-sample.csv");
    let ecdf = dir.path().join("c2-ecdf.csv");
    let out = mixcheck(&[
        "critical-values",
        "--n",
        "4",
        "--N",
        "100",
        "--dist",
        "normal",
        "--seed",
        "5",
        "--c1-sample-csv",
        sample.to_str().unwrap(),
        "--c2-ecdf-csv",
        ecdf.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_text(&out));

    let sample = std::fs::read_to_string(sample).unwrap();
    assert!(sample.starts_with("index,re,im,modulus,distance_to_one\n"));
    assert_eq!(sample.lines().count(), 101);

    let ecdf = std::fs::read_to_string(ecdf).unwrap();
    assert!(ecdf.starts_with("value,cumulative_probability\n"));
    let last = ecdf.lines().last().unwrap();
    assert!(last.ends_with(",1"), "ECDF must reach 1, got {last}");
}

fn calibrate_to(path: &Path, n: &str, seed: &str) {
    let out = mixcheck(&[
        "critical-values",
        "--n",
        n,
        "--N",
        "200",
        "--dist",
        "normal",
        "--seed",
        seed,
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_text(&out));
}

#[test]
fn simulate_then_test_reaches_a_verdict_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let cv = dir.path().join("cv.json");
    let transitions = dir.path().join("identity.csv");
    calibrate_to(&cv, "6", "9");

    let out = mixcheck(&[
        "simulate",
        "--protocol",
        "identity",
        "--grid",
        "6",
        "--points-per-region",
        "50",
        "--seed",
        "3",
        "--output",
        transitions.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_text(&out));
    let csv = std::fs::read_to_string(&transitions).unwrap();
    assert!(csv.starts_with("start,end\n"));
    assert_eq!(csv.lines().count(), 301);

    let out = mixcheck(&[
        "test",
        "--transitions",
        transitions.to_str().unwrap(),
        "--critical-values",
        cv.to_str().unwrap(),
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "Nonergodic");
    assert_eq!(report["region"], "NearOne");
    assert_eq!(report["entropy_nats"].as_f64().unwrap(), 0.0);
    assert!(report["mixing_rate"].is_null());
}

#[test]
fn count_matrix_input_is_equivalent_to_transitions() {
    let dir = tempfile::tempdir().unwrap();
    let cv = dir.path().join("cv.json");
    let counts = dir.path().join("counts.csv");
    calibrate_to(&cv, "5", "11");
    let diag: String = (0..5)
        .map(|i| {
            let mut row = vec!["0"; 5];
            row[i] = "40";
            row.join(",") + "\n"
        })
        .collect();
    std::fs::write(&counts, diag).unwrap();

    let out = mixcheck(&[
        "test",
        "--counts",
        counts.to_str().unwrap(),
        "--critical-values",
        cv.to_str().unwrap(),
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "Nonergodic");
    assert_eq!(report["lambda2_hat"]["re"].as_f64().unwrap(), 1.0);
}

#[test]
fn unsampled_regions_are_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let cv = dir.path().join("cv.json");
    let transitions = dir.path().join("partial.csv");
    calibrate_to(&cv, "3", "13");
    std::fs::write(&transitions, "start,end\n0,1\n1,0\n0,0\n").unwrap();

    let out = mixcheck(&[
        "test",
        "--transitions",
        transitions.to_str().unwrap(),
        "--critical-values",
        cv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_text(&out).contains("region 2"),
        "{}",
        stderr_text(&out)
    );
}

#[test]
fn bounds_table_covers_the_requested_range() {
    let out = mixcheck(&["bounds", "--kind", "normal", "--n", "11..20"]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 11, "header plus ten rows: {table}");
    assert_eq!(lines[0], "n,value,valid,reason");
    assert!(lines[1].starts_with("11,209.98214285714286,true"));
    assert!(lines.iter().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn bounds_flag_combinations_are_validated() {
    let gamma = mixcheck(&["bounds", "--kind", "gamma", "--alpha", "1", "--n", "10"]);
    assert!(gamma.status.success());
    let table = String::from_utf8(gamma.stdout).unwrap();
    assert!(table.lines().nth(1).unwrap().contains("inf,false,"));

    let general = mixcheck(&["bounds", "--kind", "general", "--dist", "const:1", "--n", "10"]);
    let table = String::from_utf8(general.stdout).unwrap();
    assert!(
        table.lines().nth(1).unwrap().starts_with("10,2.3512576"),
        "{table}"
    );

    assert!(!mixcheck(&["bounds", "--kind", "general", "--n", "10"])
        .status
        .success());
    assert!(!mixcheck(&["bounds", "--kind", "gamma", "--n", "12"])
        .status
        .success());
    assert!(
        !mixcheck(&["bounds", "--kind", "gamma", "--alpha", "1", "--dist", "normal", "--n", "12"])
            .status
            .success()
    );
    assert!(!mixcheck(&["bounds", "--kind", "weird", "--n", "10"])
        .status
        .success());
}

#[test]
fn two_region_values_match_the_closed_forms() {
    let exact = stdout_json(&mixcheck(&[
        "two-region",
        "--v1",
        "0.70710678",
        "--branch",
        "plus",
    ]));
    let lambda2 = exact["lambda2"].as_f64().unwrap();
    assert!((lambda2 + 1.0).abs() < 1e-8, "got {lambda2}");

    let fixed = stdout_json(&mixcheck(&["two-region", "--v1", "0", "--branch", "plus"]));
    assert_eq!(fixed["lambda2"].as_f64().unwrap(), 1.0);

    let expected = stdout_json(&mixcheck(&[
        "two-region",
        "--beta",
        "1,1",
        "--branch",
        "plus",
    ]));
    let value = expected["expected_lambda2"].as_f64().unwrap();
    assert!((value + 1.0 / 15.0).abs() < 1e-12, "got {value}");

    let out = mixcheck(&["two-region", "--v1", "1.5", "--branch", "plus"]);
    assert_eq!(out.status.code(), Some(1));
    let out = mixcheck(&[
        "two-region",
        "--v1",
        "0.3",
        "--beta",
        "1,1",
        "--branch",
        "plus",
    ]);
    assert!(!out.status.success(), "--v1 and --beta must conflict");
}

#[test]
fn entropy_reports_value_and_partition_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("uniform.csv");
    std::fs::write(&counts, "1,1\n1,1\n").unwrap();
    let out = stdout_json(&mixcheck(&["entropy", "--counts", counts.to_str().unwrap()]));
    assert_eq!(out["n"], 2);
    let h = out["entropy_nats"].as_f64().unwrap();
    assert!((h - 2f64.ln()).abs() < 1e-12);
    assert_eq!(out["suggested_partition_count"], 3);

    let transitions = dir.path().join("pairs.csv");
    std::fs::write(&transitions, "start,end\n0,0\n1,1\n").unwrap();
    let out = stdout_json(&mixcheck(&[
        "entropy",
        "--transitions",
        transitions.to_str().unwrap(),
        "--n",
        "2",
    ]));
    assert_eq!(out["entropy_nats"].as_f64().unwrap(), 0.0);
    assert_eq!(out["suggested_partition_count"], 3);
}

#[test]
fn simulate_rejects_mismatched_domains() {
    let out = mixcheck(&[
        "simulate",
        "--protocol",
        "cat",
        "--grid",
        "4",
        "--points-per-region",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_text(&out).contains("unit interval"),
        "{}",
        stderr_text(&out)
    );
}
