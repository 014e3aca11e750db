use std::fs;
use std::path::Path;
use std::process::Command;

const IDENTITY: &str = "[time_change]\nkind = \"linear\"\nrate = 1.0\n\n[market]\np = 2.0\nx = 1.0\n\n\
                        [strategy]\ntheta = { kind = \"constant\", value = 0.5 }\n\n\
                        [simulation]\nn_physical = 64\nn_market = 64\nseed = 5\n";

fn tcbm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tcbm")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn verify_on_identity_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), IDENTITY);
    let out = tmp.path().join("out");
    let run = tcbm(&["verify", "--config", &config, "--out", out.to_str().unwrap(), "--paths", "10"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let s = summary(&out);
    assert_eq!(s["passed"], true);
    assert_eq!(s["n_paths"], 10);
    let records: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verify_records.json")).unwrap()).unwrap();
    assert_eq!(records.as_array().unwrap().len(), 20);
    assert_eq!(records[0]["theorem"], "3.6");
    assert_eq!(records[10]["theorem"], "3.7");
}

#[test]
fn demonstrate_failure_mode_reports_expected_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[time_change]\nkind = \"subordinator_drift\"\ndrift = 1.0\nintensity = 2.0\n\
                jump_law = { law = \"exponential\", mean = 1.0 }\n\n[market]\np = 2.0\nx = 1.0\n\n\
                [simulation]\nn_physical = 64\nn_market = 64\nn_paths = 1000\n\n[checks]\ndemonstrate_failure = true\n";
    let config = write_config(tmp.path(), text);
    let out = tmp.path().join("out");
    let run = tcbm(&["verify", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let s = summary(&out);
    let demo = s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "backward_identity_without_lambda_adaptedness")
        .unwrap();
    assert_eq!(demo["verdict"], "expected-fail: pass");
}

#[test]
fn optimize_with_zero_rate_keeps_wealth_fixed() {
    let tmp = tempfile::tempdir().unwrap();
    let text = IDENTITY.replace("value = 0.5", "value = 0.0");
    let config = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let run = tcbm(&["optimize", "--config", &config, "--out", out.to_str().unwrap(), "--paths", "50"]);
    assert_eq!(run.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(out.join("strategy_0.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["t", "nu_hat", "V", "U_of_V"]);
    for row in reader.records() {
        let row = row.unwrap();
        assert_eq!(&row[1], "0");
        assert_eq!(&row[2], "1");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("value_report.json")).unwrap()).unwrap();
    assert_eq!(report["mean"], -1.0);
    assert_eq!(report["stderr"], 0.0);
    assert_eq!(report["checks"][0]["passed"], true);
}

#[test]
fn simulate_writes_lf_csv_with_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), IDENTITY);
    let out = tmp.path().join("out");
    let run = tcbm(&["simulate", "--config", &config, "--out", out.to_str().unwrap(), "--paths", "2"]);
    assert_eq!(run.status.code(), Some(0));
    let text = fs::read_to_string(out.join("path_1_physical.csv")).unwrap();
    assert!(text.starts_with("t,Lambda,M,A,S\n"));
    assert!(!text.contains('\r'));
    assert!(out.join("lambda_0.csv").exists());
    assert!(!out.join("lambda_2.csv").exists());
}

#[test]
fn seed_override_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), IDENTITY);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    tcbm(&["simulate", "--config", &config, "--out", a.to_str().unwrap(), "--paths", "1"]);
    tcbm(&["simulate", "--config", &config, "--out", b.to_str().unwrap(), "--paths", "1", "--seed", "6"]);
    let read = |d: &Path| fs::read(d.join("path_0_market.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
    assert!(summary(&b)["config"].as_str().unwrap().contains("seed = 6"));
}

#[test]
fn invalid_config_exits_nonzero_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &IDENTITY.replace("p = 2.0", "p = 1.0"));
    let run = tcbm(&["verify", "--config", &config, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("line 6"), "{err}");
    assert!(err.contains("p must not be 0 or 1"), "{err}");
    let missing = tcbm(&["verify", "--config", "/definitely/missing.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn failing_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{IDENTITY}\n[checks]\nexact_rel_tol = -1.0\n");
    let config = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let run = tcbm(&["verify", "--config", &config, "--out", out.to_str().unwrap(), "--paths", "3"]);
    assert_eq!(run.status.code(), Some(1));
    assert_eq!(summary(&out)["passed"], false);
}
