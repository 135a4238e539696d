use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn curve(d: usize) -> String {
    let mut c = vec!["[1.0, 0.0]".to_string()];
    c.extend((0..d).map(|_| "[0.0, 0.0]".to_string()));
    format!("[curve]\ndegree = {d}\ncoeffs = [{}]\n[weight]\nkind = \"fs\"\n", c.join(", "))
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bergman"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn dims(d: usize, p: usize) -> Vec<String> {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &format!("seed = 1\np_ladder = [{p}]\n{}", curve(d)));
    let out = run(
        &["dims", "--config", cfg.to_str().unwrap(), "--output-dir", tmp.path().to_str().unwrap()],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| l.contains(','))
        .map(str::to_string)
        .collect()
}

#[test]
fn dims_table_cubic() {
    assert_eq!(dims(3, 2), vec!["w,2,7,7,7", "regular,2,8,8,8", "restriction,2,6,6,6"]);
}

#[test]
fn dims_table_conic() {
    assert_eq!(dims(2, 3), vec!["w,3,7,7,7", "regular,3,7,7,7", "restriction,3,7,7,7"]);
}

#[test]
fn dims_table_quartic_low_level() {
    // the closed form dp - d(d-3)/2 undercounts V_1 on quartics
    assert_eq!(dims(4, 1), vec!["w,1,5,5,5", "regular,1,7,7,7", "restriction,1,3,2,3"]);
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &curve(3));
    let out = run(&["dims", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &format!("seed = 1\n{}", curve(3)));
    let out = run(&["dims", "--config", cfg.to_str().unwrap()], &[("BERGMAN_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exit_code() {
    // e^{-2pφ} has a non-integrable pole at the origin
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "seed = 1\np_ladder = [1]\nkinds = [\"w\"]\n{}",
        curve(3).replace(
            "kind = \"fs\"",
            "kind = \"custom\"\nparams = { terms = [{ type = \"log_abs\", mass = 3.0, center = [0.0, 0.0] }] }"
        )
    );
    let cfg = config(tmp.path(), &body);
    let out = run(
        &["kernel", "--config", cfg.to_str().unwrap(), "--output-dir", tmp.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "numerical");
}

#[test]
fn run_directories_follow_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let go = |body: &str| {
        let cfg = config(tmp.path(), body);
        let out = run(
            &["dims", "--config", cfg.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()],
            &[("BERGMAN_THREADS", "1")],
        );
        assert!(out.status.success());
        let dir = PathBuf::from(String::from_utf8(out.stdout).unwrap().lines().last().unwrap());
        let csv = std::fs::read_to_string(dir.join("dims.csv")).unwrap();
        (dir, csv)
    };
    let (a, csv_a) = go(&format!("seed = 1\np_ladder = [1, 2]\n{}", curve(3)));
    let (b, csv_b) = go(&format!("seed = 1\np_ladder = [1, 2]\n{}", curve(3)));
    let (c, _) = go(&format!("seed = 2\np_ladder = [1, 2]\n{}", curve(3)));
    assert_eq!(a, b);
    assert_eq!(csv_a, csv_b);
    assert_ne!(a, c);
    assert!(a.exists() && c.exists());
    let hash = a.file_name().unwrap().to_str().unwrap().trim_start_matches("run-").to_string();
    assert!(csv_a.starts_with(&format!("# config_hash: {hash}\n")));
}

#[test]
fn zeros_outputs_carry_the_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "seed = 5\nn_samples = 10\nemit_plots = false\n{}\n[space]\nkind = \"regular\"\np = 2\n",
        curve(3)
    );
    let cfg = config(tmp.path(), &body);
    let out = run(
        &["zeros", "--config", cfg.to_str().unwrap(), "--output-dir", tmp.path().to_str().unwrap()],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = PathBuf::from(String::from_utf8(out.stdout).unwrap().lines().last().unwrap());
    let atoms = std::fs::read_to_string(dir.join("atoms.csv")).unwrap();
    let rows: Vec<&str> = atoms.lines().skip(2).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.starts_with("regular,2,") && r.ends_with(",-1")));
    let zeros = std::fs::read_to_string(dir.join("zeros.csv")).unwrap();
    let mult: usize = zeros.lines().skip(2).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(mult, 70);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("zeros_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["ensembles"][0]["radial_quantiles"].as_array().unwrap().len(), 64);
    assert_eq!(summary["ensembles"][0]["total_mass"], 3.0);
}
