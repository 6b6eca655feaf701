use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartanflow"))
        .args(args)
        .env_remove("CARTANFLOW_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn stderr_error(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.lines().last().expect("one diagnostic line")).expect("stderr is json")
}

#[test]
fn spaces_list_json_has_eight_classes() {
    let out = run(&["spaces", "list", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 8);
    let kinds: Vec<&str> = arr.iter().map(|r| r["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["aiii", "bdi", "cii", "ai", "aii", "diii", "ci", "a2"]);
    // aiii(2,1): f1 with 2, 2f1 with 1
    let roots = &arr[0]["roots"];
    assert_eq!(roots.as_array().unwrap().len(), 2);
}

#[test]
fn spaces_list_text_is_a_table() {
    let out = run(&["spaces", "list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().next().unwrap().starts_with("kind"));
}

#[test]
fn density_ratio_is_the_calibrated_constant() {
    let out = run(&["density", "--class", "aiii", "--m", "2", "--n", "1", "--q", "2", "--method", "both"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["closed"].as_f64().unwrap(), 8.0);
    let (ratio, c) = (v["ratio"].as_f64().unwrap(), v["constant"].as_f64().unwrap());
    assert!((ratio - c).abs() <= 1e-8 * c);
    assert_eq!(v["meta"]["class"], "aiii");
}

#[test]
fn density_rejects_wrong_length() {
    let out = run(&["density", "--class", "bdi", "--m", "3", "--n", "2", "--q", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"], "validation");
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_parameters_exit_2() {
    let out = run(&["decompose", "--class", "aiii", "--m", "1", "--n", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["code"], 2);
    let out = run(&["decompose", "--class", "nope", "--n", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decompose_is_reproducible() {
    let args = ["decompose", "--class", "aiii", "--m", "3", "--n", "2", "--seed", "5", "--exact-slice"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert!(v["residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["q"].as_array().unwrap().len(), 2);
    assert_eq!(v["exact_slice"]["contained"], true);
}

#[test]
fn decompose_reads_matrix_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.json");
    // H(q) for aiii(2,1) with q = 1.5
    let z = [0.0, 0.0];
    let h = [0.0, 0.0];
    let a = [1.5, 0.0];
    let data = serde_json::json!({ "rows": 3, "cols": 3, "data": [z, z, h, z, z, a, h, a, z] });
    std::fs::write(&input, data.to_string()).unwrap();
    let out = run(&["decompose", "--class", "aiii", "--m", "2", "--n", "1", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((json(&out)["q"][0].as_f64().unwrap() - 1.5).abs() < 1e-12);

    // not in p
    let bad = serde_json::json!({ "rows": 3, "cols": 3, "data": [a, z, z, z, z, z, z, z, z] });
    std::fs::write(&input, bad.to_string()).unwrap();
    let out = run(&["decompose", "--class", "aiii", "--m", "2", "--n", "1", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_writes_csv_atomically_and_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    let base = ["sample", "--class", "aiii", "--m", "2", "--n", "1", "--count", "5000", "--bins", "16", "--seed", "7"];
    let mut a1 = base.to_vec();
    a1.extend(["--out", p1.to_str().unwrap()]);
    let mut a2 = base.to_vec();
    a2.extend(["--out", p2.to_str().unwrap(), "--threads", "3"]);
    assert_eq!(run(&a1).status.code(), Some(0));
    assert_eq!(run(&a2).status.code(), Some(0));
    let t1 = std::fs::read_to_string(&p1).unwrap();
    assert_eq!(t1, std::fs::read_to_string(&p2).unwrap());
    let mut lines = t1.lines();
    assert!(lines.next().unwrap().starts_with("# tool=cartanflow"));
    assert_eq!(lines.next().unwrap(), "coord,bin_lo,bin_hi,count,empirical_density,theoretical_density");
    let total: f64 = lines.map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap()).sum();
    assert_eq!(total, 5000.0);
    // only the output files remain, no temporaries
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn threads_fall_back_to_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_cartanflow"))
        .args(["sample", "--class", "ai", "--n", "2", "--count", "100", "--bins", "4"])
        .env("CARTANFLOW_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_run_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.csv");
    let out = run(&["sample", "--class", "aiii", "--m", "2", "--n", "1", "--bins", "1", "--out", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!p.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn flow_csv_columns() {
    let out = run(&["flow", "--class", "aiii", "--m", "2", "--n", "1", "--seed", "3", "--steps", "200", "--compare"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines().skip(1);
    assert_eq!(lines.next().unwrap(), "t,q_1,H,l_spec_1,l_spec_2,l_spec_3,deviation");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 201);
    let h0 = rows[0][2];
    for r in &rows {
        assert!((r[2] - h0).abs() < 1e-6 * h0.max(1.0));
        assert!(r[6] < 1e-6);
    }
}

#[test]
fn verify_density_passes_for_su21() {
    let out = run(&["verify-density", "--class", "aiii", "--m", "2", "--n", "1", "--count", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["constant_ratio_ok"], true);
    assert!(v["ks_statistic"].as_f64().unwrap() <= v["threshold"].as_f64().unwrap());
}

#[test]
fn verify_density_rank_too_large_is_unsupported() {
    let out = run(&["verify-density", "--class", "ai", "--n", "6", "--count", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"], "unsupported");
}
