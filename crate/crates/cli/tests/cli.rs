use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toricq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// serde_json's default float parser may be off by one ulp.
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn validate_exit_codes() {
    let good = run(&["--input", &data("cp2_corrected.json"), "--command", "validate"]);
    assert_eq!(good.status.code(), Some(0));
    assert!(stdout(&good).contains("# verdict: delzant"));

    let bad = run(&["--input", &data("non_delzant_triangle.json"), "--command", "validate"]);
    assert_eq!(bad.status.code(), Some(1));
    let text = stdout(&bad);
    let failing: Vec<_> = data_rows(&text).into_iter().filter(|r| r[3] == "false").collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0][0], "0;1");

    let missing = run(&["--input", "/nonexistent/poly.json", "--command", "validate"]);
    assert_eq!(missing.status.code(), Some(2));
    let unknown = run(&["--input", &data("cp2_corrected.json"), "--command", "bogus"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn norms_row_layout() {
    let out = run(&["--input", &data("cp1_corrected.json"), "--command", "norms", "--s-grid", "10,100"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 6);
    let limits: Vec<_> = rows.iter().filter(|r| r[1] == "inf").collect();
    assert_eq!(limits.len(), 2);
    for r in &limits {
        assert!(r[2].is_empty());
        assert_eq!(r[6], "true");
    }
}

#[test]
fn json_matches_csv() {
    let base = ["--input", &data("cp1_corrected.json"), "--command", "norms", "--s-grid", "10,40"];
    let csv = stdout(&run(&base));
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&run(&[&base[..], &["--format", "json"]].concat()))).unwrap();
    let entries = json.as_array().unwrap();
    let rows = data_rows(&csv);
    assert_eq!(entries.len(), rows.len());
    for (row, entry) in rows.iter().zip(entries) {
        let tilde: f64 = row[3].parse().unwrap();
        assert!(close(entry["tilde_norm2"].as_f64().unwrap(), tilde));
        match row[2].as_str() {
            "" => assert!(entry["norm2"].is_null()),
            v => assert!(close(entry["norm2"].as_f64().unwrap(), v.parse().unwrap())),
        }
    }
}

#[test]
fn flow_distances_decrease() {
    let out = run(&["--input", &data("cp2_corrected.json"), "--command", "flow", "--s-grid", "1,2,4,8,16,32,64,128,256"]);
    assert_eq!(out.status.code(), Some(0));
    let d: Vec<f64> = data_rows(&stdout(&out)).iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(d.len(), 9);
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    assert!(d[8] < 1e-2);
}

#[test]
fn reduce_audit_and_hyperplane() {
    let out = run(&["--input", &data("simplex2.json"), "--command", "reduce", "--p", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let dims: Vec<String> = data_rows(&text).iter().map(|r| r[1].clone()).collect();
    assert_eq!(dims, ["3", "2", "1"]);
    assert!(text.contains("# total: 6"));

    let out = run(&["--input", &data("c3_orthant.json"), "--command", "reduce", "--p", "1", "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("# class: worse"));
    let s: f64 = text
        .lines()
        .find(|l| l.starts_with(|c: char| c.is_ascii_digit()))
        .and_then(|l| l.split(',').nth(1))
        .map(|v| v.parse().unwrap())
        .unwrap();
    assert!((s - 2.0 / 3.0).abs() < 1e-6);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("points.csv");
    let out = run(&[
        "--input",
        &data("simplex2.json"),
        "--command",
        "points",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("index,m,hamiltonian"));
    assert_eq!(data_rows(&text).len(), 6);
}
