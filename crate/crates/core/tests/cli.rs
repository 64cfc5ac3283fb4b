use std::path::Path;
use std::process::{Command, Output};

fn paracond(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paracond")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn build_then_verify_paraunitary() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("wh8.json");
    let file = file.to_str().unwrap();
    let built = paracond(&["build", "--transform", "wh", "--n", "8", "--out", file]);
    assert_eq!(built.status.code(), Some(0));
    assert!(Path::new(file).exists());
    let verified = paracond(&["verify", "paraunitary", "--input", file]);
    assert_eq!(verified.status.code(), Some(0), "{}", stdout(&verified));
    assert!(stdout(&verified).starts_with("paraunitary: pass"));
}

#[test]
fn random_lemma1_campaign_passes() {
    let o = paracond(&["verify", "lemma1", "--random", "100", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("100 programs, 5100/5100"));
}

#[test]
fn tightness_trace_has_two_rows() {
    let o = paracond(&["trace", "--tightness"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("t,gate,phi_re"));
    assert!(lines[1..].iter().all(|l| l.contains(",const,")));
}

#[test]
fn analyze_reports_tightness_condition() {
    let o = paracond(&["analyze", "--tightness"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let kappa = v["condition"]["algorithm_algebraic"].as_f64().unwrap();
    assert!((kappa - 16.0 / 9.0).abs() < 1e-12);
    assert_eq!(v["lemma1"]["holds"], true);
}

#[test]
fn claim3_on_unscaled_campaign_reports_failure() {
    // random programs do not keep their final support inside the windows
    let o = paracond(&["verify", "claim3", "--random", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn report_markdown_for_scaled_wh() {
    let o = paracond(&["report", "--transform", "wh", "--n", "4", "--window=-1,1", "--format", "md"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with('#'));
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    assert_eq!(paracond(&["build"]).status.code(), Some(2));
    assert_eq!(paracond(&["verify", "nosuchsuite", "--tightness"]).status.code(), Some(2));
    assert_eq!(paracond(&["lift", "--input", "/nonexistent/file.json"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"format_version\": 1, \"n\": 2, \"gates\": [{\"type\": \"constant\", \"i\": 0, \"value\": -1.0}]}").unwrap();
    let o = paracond(&["lift", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gate 0"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn lift_of_dft_has_no_exponents() {
    let o = paracond(&["lift", "--transform", "dft", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exponents"].as_array().unwrap().len(), 0);
    assert!(v["steps"].as_array().unwrap().iter().all(|s| s["paraunitary_residual"].as_f64().unwrap() <= 1e-9));
}
