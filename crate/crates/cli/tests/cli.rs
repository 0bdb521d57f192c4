use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn wedesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wedesign")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of a CSV file keyed by header name.
fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    let mut rows = vec![header];
    rows.extend(r.records().map(Result::unwrap));
    rows
}

fn column(rows: &[csv::StringRecord], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn simulate_trial_two_matches_published_ens() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().display().to_string();
    let o = wedesign(&[
        "simulate", "--config", &config("trial2.json"), "--scenario", &config("h1.json"), "--reps", "10000", "--seed",
        "42", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("results.csv"));
    assert_eq!(rows.len(), 2);
    let ens: f64 = rows[1][column(&rows, "ens")].parse().unwrap();
    // Published 37.55 for the randomized rule on the second trial.
    assert!((ens - 37.55).abs() <= 1.0, "ENS {ens}");
    assert!(dir.path().join("results.json").exists());
}

#[test]
fn output_is_byte_identical_across_parallelism() {
    let run = |threads: &str| {
        let dir = TempDir::new().unwrap();
        let o = wedesign(&[
            "simulate", "--config", &config("phase1.json"), "--scenario", &config("phase1_scenario2.json"),
            "--scenario", &config("phase1_scenario2.json"), "--reps", "500", "--seed", "9", "--parallelism", threads,
            "--out", &dir.path().display().to_string(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (fs::read(dir.path().join("results.csv")).unwrap(), fs::read(dir.path().join("results.json")).unwrap())
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("1"), "same seed, same bytes");
}

#[test]
fn single_replication_is_summarized() {
    let o = wedesign(&["simulate", "--config", &config("phase1.json"), "--scenario", &config("phase1_scenario2.json"), "--reps", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<_> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][3], "1");
    assert_eq!(&rows[0][1], "phase1_scenario2");
}

#[test]
fn missing_and_malformed_inputs_exit_one() {
    let o = wedesign(&["simulate", "--config", "/nonexistent/cfg.json", "--scenario", &config("h1.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/cfg.json"));

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"arms\": 4, ").unwrap();
    let o = wedesign(&["simulate", "--config", &bad.display().to_string(), "--scenario", &config("h1.json")]);
    assert_eq!(o.status.code(), Some(1));

    // γ not summing to one fails while parsing.
    let text = fs::read_to_string(configs().join("trial2.json")).unwrap().replace("[0.001, 0.999]", "[0.3, 0.9]");
    fs::write(&bad, text).unwrap();
    let o = wedesign(&["simulate", "--config", &bad.display().to_string(), "--scenario", &config("h1.json")]);
    assert_eq!(o.status.code(), Some(1));

    let o = wedesign(&["reproduce", "table9"]);
    assert_eq!(o.status.code(), Some(1));
    let o = wedesign(&["simulate", "--rule", "III", "--config", &config("trial2.json"), "--scenario", &config("h1.json")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invariant_violations_exit_two() {
    let base = ["simulate", "--config", &config("trial2.json"), "--scenario", &config("h1.json"), "--reps", "10"];
    let o = wedesign(&[&base[..], &["--kappa", "0.4"]].concat());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("kappa"));
    let o = wedesign(&[&base[..], &["--kappa", "0.4", "--experimental-kappa-below-half"]].concat());
    assert!(o.status.success(), "{}", stderr(&o));

    // A scenario with the wrong number of arms parses but cannot be run.
    let o = wedesign(&["simulate", "--config", &config("trial2.json"), "--scenario", &config("phase1_scenario2.json")]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn flags_override_the_configuration_file() {
    let o = wedesign(&[
        "simulate", "--config", &config("trial2.json"), "--scenario", &config("h1.json"), "--reps", "20", "--rule", "II",
        "--kappa", "0.65",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let row = r.records().next().unwrap().unwrap();
    assert_eq!(&row[0], "WE_II");
    assert_eq!(&row[2], "0.65");
}

#[test]
fn reproduce_emits_a_side_by_side_table() {
    let dir = TempDir::new().unwrap();
    let o = wedesign(&["reproduce", "table2", "--reps", "200", "--out", &dir.path().display().to_string()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("table2.csv"));
    assert_eq!(
        rows[0].iter().collect::<Vec<_>>(),
        ["table", "design", "scenario", "metric", "published", "simulated", "abs_diff", "tolerance", "status"]
    );
    let status = column(&rows, "status");
    assert!(rows[1..].iter().any(|r| &r[status] == "external"));
    assert!(rows[1..].iter().filter(|r| &r[status] != "external").all(|r| !r[column(&rows, "simulated")].is_empty()));
    assert!(dir.path().join("table2.json").exists());
}

#[test]
fn reproduce_figure_one_sweeps_kappa() {
    let o = wedesign(&["reproduce", "figure1", "--reps", "30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<_> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 22, "two trials × eleven κ values");
    assert_eq!(&rows[0][0], "trial1");
    assert_eq!(&rows[21][1], "0.75");
}

#[test]
fn calibrations_run_on_small_grids() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().display().to_string();

    let o = wedesign(&["calibrate-cutoff", "--config", &config("trial2.json"), "--scenario", &config("h0.json"), "--reps", "400", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("cutoff.json")).unwrap()).unwrap();
    let cutoff = report["cutoff"].as_f64().unwrap();
    assert!(cutoff > 0.0 && cutoff <= 1.0, "cutoff {cutoff}");

    let o = wedesign(&["calibrate-safety", "--gamma-stars", "0.45,0.55", "--rates", "0.01,0.035", "--reps", "100", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_csv(&dir.path().join("safety_calibration.csv")).len(), 5);

    let o = wedesign(&["calibrate-prior", "--betas", "1,2", "--steps", "0.3", "--reps", "50", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("prior_calibration.csv"));
    assert_eq!(rows[0].iter().collect::<Vec<_>>(), ["beta", "step=0.3"]);
    assert_eq!(rows.len(), 3);
}

#[test]
fn calibrate_cutoff_needs_a_config() {
    let o = wedesign(&["calibrate-cutoff", "--scenario", &config("h0.json")]);
    assert_eq!(o.status.code(), Some(1));
}
