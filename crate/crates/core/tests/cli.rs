use std::path::Path;
use std::process::{Command, Output};

use mms_core::counts::exact_counts;
use mms_core::io::csv::parse_rankings_csv;
use mms_core::model::fit_mms;
use mms_core::partition::{PartitionEvaluator, SolverConfig};
use serde_json::Value;

fn mms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mms")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_doc(o: &Output) -> Value {
    assert!(!o.status.success());
    serde_json::from_slice(&o.stderr).expect("stderr is a JSON error document")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SAMPLE: &str = "a,b,c,d,e\n1,2,3,4,5\n1,2,3,5,4\n2,1,3,4,5\n1,3,2,4,5\n5,4,3,2,1\n4,5,3,2,1\n5,4,3,1,2\n1,2,3,4,5\n1,2,4,3,5\n2,1,3,5,4\n";

#[test]
fn counts_prints_summary() {
    let out = stdout(&mms(&["counts", "--n", "5", "--exact"]));
    assert!(out.contains("sum = 120"), "{out}");
    assert!(out.contains("provenance = exact"));
    let approx = stdout(&mms(&["counts", "--n", "16"]));
    assert!(approx.contains("provenance = approx"));
    let table = stdout(&mms(&["counts", "--n", "3", "--table"]));
    assert!(table.contains("d,log_count,count\n0,0,1\n2,"), "{table}");
}

#[test]
fn counts_uses_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    stdout(&mms(&["counts", "--n", "7", "--exact", "--cache", cache]));
    assert!(dir.path().join("spearman_counts_n7_exact.txt").exists());
    let again = stdout(&mms(&["counts", "--n", "7", "--exact", "--cache", cache]));
    assert!(again.contains("sum = 5040"));
}

#[test]
fn zeta_table_columns() {
    let out = stdout(&mms(&["zeta", "--n", "14", "--theta-grid", "0.5:0.5:1"]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("theta,log_z_exact,ratio_new,ratio_vmf"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 0.5);
    assert!(row[3] < 0.1, "vMF ratio {}", row[3]);
    assert!(row[2] > 5.0 * row[3]);
    let no_exact = stdout(&mms(&["zeta", "--n", "30", "--methods", "new,vmf", "--theta-grid", "0:1:3"]));
    assert_eq!(no_exact.lines().count(), 4);
    assert!(no_exact.starts_with("theta,log_z_new,log_z_vmf\n"));
    let bad = error_doc(&mms(&["zeta", "--n", "5", "--theta-grid", "1:2"]));
    assert_eq!(bad["error"]["kind"], "invalid_argument");
}

#[test]
fn single_component_fit_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", SAMPLE);
    let out = dir.path().join("r.json");
    stdout(&mms(&["fit", "--data", &data, "--g", "1", "--out", out.to_str().unwrap()]));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["schemaVersion"], 1);
    let fit = &doc["fits"][0];
    let direct = fit_mms(
        &parse_rankings_csv(&data).unwrap(),
        &PartitionEvaluator::new(exact_counts(5).unwrap()),
        &SolverConfig::default(),
    )
    .unwrap();
    let consensus: Vec<u32> = serde_json::from_value(fit["consensus"][0].clone()).unwrap();
    assert_eq!(consensus, direct.params.consensus.ranks());
    assert!((fit["thetas"][0].as_f64().unwrap() - direct.params.theta).abs() < 1e-9);
    assert!((fit["logLik"].as_f64().unwrap() - direct.log_lik).abs() < 1e-8);
    assert_eq!(doc["em"]["seed"], 0);
    assert_eq!(doc["counts"]["provenance"], "exact");
}

#[test]
fn g_range_fit_reports_curve() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", SAMPLE);
    let out = stdout(&mms(&["fit", "--data", &data, "--g-range", "1:3", "--seed", "4", "--responsibilities"]));
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["bicCurve"].as_array().unwrap().len(), 3);
    assert_eq!(doc["gRange"], serde_json::json!([1, 2, 3]));
    assert!(doc["fits"][1]["responsibilities"].is_array());
    let again = stdout(&mms(&["fit", "--data", &data, "--g-range", "1:3", "--seed", "4", "--responsibilities"]));
    assert_eq!(out, again);
}

#[test]
fn partial_fit_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "p.csv", "a,b,c,d,e\n1,2,NA,NA,NA\n1,NA,2,NA,NA\n2,1,3,NA,NA\n1,2,3,4,5\n");
    let out = stdout(&mms(&["fit", "--data", &data]));
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["fullData"], false);
    let capped = error_doc(&mms(&["fit", "--data", &data, "--partial-cap", "3"]));
    assert_eq!(capped["error"]["kind"], "completion_cap_exceeded");
}

#[test]
fn bad_csv_is_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "bad.csv", "a,b,c\n1,2,3\n1,1,2\n");
    let doc = error_doc(&mms(&["fit", "--data", &data]));
    assert_eq!(doc["error"]["kind"], "parse");
    let msg = doc["error"]["message"].as_str().unwrap();
    assert!(msg.contains(":3:") && msg.contains("duplicate rank"), "{msg}");
    let usage = mms(&["fit"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_doc(&usage)["error"]["kind"], "usage");
}

#[test]
fn rankify_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = write(dir.path(), "m.csv", "x,y,z\n3.5,1.0,2.0\n0.1,0.2,0.3\n3.5,1.0,2.0\n");
    let out = dir.path().join("r.csv");
    stdout(&mms(&["rankify", "--data", &matrix, "--direction", "desc", "--out", out.to_str().unwrap()]));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "x,y,z,freq\n1,3,2,2\n3,2,1,1\n");
    let asc = stdout(&mms(&["rankify", "--data", &matrix, "--direction", "ascending"]));
    assert!(asc.starts_with("x,y,z,freq\n3,1,2,2\n"));
}

#[test]
fn simulate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "s.toml",
        "study = \"recovery\"\nn = 5\nsample_size = 200\ntheta_min = 0.15\ntheta_max = 0.3\nreplicates = 2\nseed = 9\n",
    );
    let out = dir.path().join("rep.json");
    stdout(&mms(&["simulate", "--spec", &spec, "--out", out.to_str().unwrap()]));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["study"], "recovery");
    assert_eq!(doc["replicates"].as_array().unwrap().len(), 2);
    assert_eq!(doc["mean"]["phiRho"], 1.0);
    assert_eq!(doc["spec"]["seed"], 9);
    let broken = write(dir.path(), "b.toml", "study = \"recovery\"\nn = 5\n");
    assert_eq!(error_doc(&mms(&["simulate", "--spec", &broken]))["error"]["kind"], "config");
}
