//! End-to-end tests of the `aoi-sched` binary: exit codes, JSON and CSV
//! output shapes, error reporting, and agreement with the library.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aoi_sched::chain_oracle::{simulate, SimPolicy};
use aoi_sched::model::{pmf_from_erasures, DistortionSpec, SystemParams, ThresholdPolicy};
use aoi_sched::threshold_search::optimal_threshold;

const BIN: &str = env!("CARGO_BIN_EXE_aoi-sched");

const SMALL_CONFIG: &str = r#"{
  "p": 0.3,
  "e_max": 0.12,
  "M": 4,
  "sensors": { "q": [0.5, 0.5, 0.5, 0.5] },
  "distortion": { "breakpoints": [1, 4, 9], "levels": [1, 2, 3] }
}"#;

fn small_params() -> SystemParams {
    let spec = DistortionSpec::new(vec![1, 4, 9], vec![1, 2, 3], 4).unwrap();
    let pmf = pmf_from_erasures(&[0.5; 4]).unwrap();
    SystemParams::new(0.3, pmf, spec, 0.12).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn stderr_line(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).trim().to_string()
}

#[test]
fn validate_echoes_the_parsed_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = run(&["validate", "--config", config.to_str().unwrap()]);
    let json = stdout_json(&out);
    assert_eq!(json["sensor_count"], 4);
    assert_eq!(json["interval_count"], 3);
    assert_eq!(json["breakpoints"], serde_json::json!([1, 4, 9]));
    assert_eq!(json["level_tail_probs"].as_array().unwrap().len(), 3);
    let b1 = json["no_reset_probs"][0].as_f64().unwrap();
    assert!((b1 - (1.0 - 0.7 * small_params().tail_prob(1))).abs() < 1e-12);
}

#[test]
fn validate_rejects_a_malformed_config() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL_CONFIG.replace("[0.5, 0.5, 0.5, 0.5]", "[0.5, 0.5]");
    let config = write_config(dir.path(), &bad);
    let out = run(&["validate", "--config", config.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(
        stderr_line(&out).starts_with("error[invalid_parameter]:"),
        "{}",
        stderr_line(&out)
    );
}

#[test]
fn missing_config_reports_an_io_error() {
    let out = run(&["validate", "--config", "/nonexistent/config.json"]);
    assert!(!out.status.success());
    assert!(stderr_line(&out).starts_with("error[io]:"), "{}", stderr_line(&out));
}

#[test]
fn threshold_output_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = run(&[
        "threshold",
        "--config",
        config.to_str().unwrap(),
        "--beta",
        "25",
    ]);
    let json = stdout_json(&out);
    let expected = optimal_threshold(&small_params(), 25.0).unwrap();
    assert_eq!(json["k_star"].as_u64().unwrap(), expected.k_star);
    let cost = json["report"]["lagrangian_cost"].as_f64().unwrap();
    assert!((cost - expected.cost_star).abs() < 1e-12);
    assert_eq!(json["report"]["source"], "closed_form");
}

#[test]
fn solve_reports_the_mixture_and_its_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = run(&["solve", "--config", config.to_str().unwrap()]);
    let json = stdout_json(&out);
    let low = json["policy"]["low_policy"]["threshold"].as_u64().unwrap();
    let high = json["policy"]["high_policy"]["threshold"].as_u64().unwrap();
    assert!(low <= high);
    let mu = json["policy"]["mix_prob"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mu));
    let predicted = json["predicted_avg_energy"].as_f64().unwrap();
    assert!((predicted - 0.12).abs() < 0.02, "{predicted}");
    assert!(json["trace"]["iterations"].as_array().unwrap().len() > 1);
}

#[test]
fn sweep_produces_ordered_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out_path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--axis",
        "beta",
        "--values",
        "5,25,45",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_line(&out));

    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(!text.contains('\r'), "CSV must use LF line endings");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis,axis_value,solver,k_star,mu,beta,lagrangian_cost,avg_age,avg_energy,error"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let mut prev_k = 0u64;
    for (row, beta) in rows.iter().zip([5.0, 25.0, 45.0]) {
        assert_eq!(row[0], "beta");
        assert!((row[1].parse::<f64>().unwrap() - beta).abs() < 1e-9);
        assert_eq!(row[2], "closed_form");
        let k: u64 = row[3].parse().unwrap();
        assert!(k >= prev_k, "threshold must grow with beta");
        prev_k = k;
        assert!(row[6].contains('e'), "12-significant-digit format: {}", row[6]);
        assert!(row[9].is_empty());
    }
}

#[test]
fn sweep_reports_per_point_errors_inline() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--axis",
        "q",
        "--values",
        "0.5,1.0",
        "--beta",
        "10",
    ]);
    assert!(out.status.success(), "{}", stderr_line(&out));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0][9].is_empty());
    assert!(
        rows[1][9].starts_with("unreachable_level:"),
        "{}",
        &rows[1][9]
    );
    assert!(rows[1][3].is_empty() && rows[1][6].is_empty());
}

#[test]
fn rvi_sweep_solver_agrees_with_the_closed_form_solver() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let closed = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--axis",
        "beta",
        "--values",
        "5",
    ]);
    let rvi = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--axis",
        "beta",
        "--values",
        "5",
        "--solver",
        "rvi",
    ]);
    assert!(rvi.status.success(), "{}", stderr_line(&rvi));
    let k = |out: &Output| {
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .parse::<u64>()
            .unwrap()
    };
    assert_eq!(k(&closed), k(&rvi));
}

#[test]
fn simulate_threshold_runs_are_reproducible_and_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let args = [
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--k",
        "2",
        "--beta",
        "10",
        "--horizon",
        "50000",
        "--seed",
        "7",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);

    let json = stdout_json(&first);
    assert_eq!(json["mode"], "threshold");
    assert_eq!(json["result"]["rng"], "chacha12");
    let expected = simulate(
        &small_params(),
        &SimPolicy::from(ThresholdPolicy::new(2).unwrap()),
        50_000,
        7,
    )
    .unwrap();
    let age = json["result"]["empirical_avg_age"].as_f64().unwrap();
    assert_eq!(age, expected.empirical_avg_age);
    assert_eq!(
        json["result"]["windows"].as_array().unwrap().len(),
        expected.windows.len()
    );
}

#[test]
fn oracle_gap_is_negligible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = run(&[
        "oracle",
        "--config",
        config.to_str().unwrap(),
        "--k",
        "7",
        "--beta",
        "10",
    ]);
    let json = stdout_json(&out);
    assert!(json["relative_gap"].as_f64().unwrap() < 1e-10);
    assert_eq!(json["closed_form"]["source"], "closed_form");
    assert_eq!(json["chain_oracle"]["source"], "chain_oracle");
}

#[test]
fn thread_env_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let ok = Command::new(BIN)
        .args(["validate", "--config", config.to_str().unwrap()])
        .env("AOI_SCHED_THREADS", "2")
        .output()
        .unwrap();
    assert!(ok.status.success());

    let bad = Command::new(BIN)
        .args(["validate", "--config", config.to_str().unwrap()])
        .env("AOI_SCHED_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(
        String::from_utf8_lossy(&bad.stderr).starts_with("error[invalid_parameter]:"),
        "{}",
        String::from_utf8_lossy(&bad.stderr)
    );
}

#[test]
fn usage_errors_exit_nonzero() {
    let out = run(&["sweep", "--axis", "nonsense"]);
    assert!(!out.status.success());
}
