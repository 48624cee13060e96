mod common;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use common::fixed;
use flatspec::cli::{self, to_document};
use flatspec::geometry::{ManifoldClass, ManifoldDescriptor};
use flatspec::lattice::PlaneLattice;
use tempfile::TempDir;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Out {
    let mut argv = vec!["flatspec"];
    argv.extend_from_slice(args);
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = cli::run(argv, &mut o, &mut e);
    Out { code, stdout: String::from_utf8(o).unwrap(), stderr: String::from_utf8(e).unwrap() }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn doc(dir: &TempDir, name: &str, d: &ManifoldDescriptor) -> PathBuf {
    write(dir, name, &to_document(d))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn validate_prints_canonical_form() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "m6.json", r#"{"class": "M6", "params": {"lengths": [2, 1, 1.5]}}"#);
    let o = run(&["validate", s(&p)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let back = cli::parse_descriptor(&o.stdout).unwrap();
    assert_eq!(back, ManifoldDescriptor::M6 { lengths: [1.0, 1.5, 2.0] });
}

#[test]
fn validate_reports_field_paths() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "m2.json", r#"{"class": "M2", "params": {"lengths": [1, 1, 1], "angle_rad": 3.5}}"#);
    let o = run(&["validate", s(&p)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("params.angle_rad: angle out of open interval (0, π)"), "{}", o.stderr);

    let cases = [
        (r#"{"class": "M7", "params": {}}"#, "class"),
        (r#"{"class": "M4", "params": {"lengths": [1]}}"#, "params.lengths"),
        (r#"{"class": "M4", "params": {"lengths": [1, "x"]}}"#, "params.lengths[1]"),
        (r#"{"class": "M4", "params": {"lengths": [1, -2]}}"#, "params.lengths[1]"),
        (r#"{"class": "N2", "params": {"lengths": [1, 1], "angle_rad": 1.0}}"#, "params.height"),
        (r#"{"class": "M4", "params": {"lengths": [1, 2], "height": 1}}"#, "params.height"),
        (r#"{"class": "M1", "params": {"basis": [1, 0, 0, 0, 1, 0, 0, 1, 0]}}"#, "params.basis"),
        (r#"{"params": {"lengths": [1, 2]}}"#, "class"),
        (r#"[1, 2]"#, "$"),
        (r#"{"class": "M4""#, "$"),
    ];
    for (text, field) in cases {
        let p = write(&dir, "bad.json", text);
        let o = run(&["validate", s(&p)]);
        assert_eq!(o.code, 2, "{text}");
        assert!(o.stderr.contains(&format!("{field}:")), "{text}: {}", o.stderr);
    }
    assert_eq!(run(&["validate", "/nonexistent/x.json"]).code, 3);
}

#[test]
fn trace_csv_format_and_examples() {
    let dir = TempDir::new().unwrap();
    let p = doc(&dir, "cube.json", &ManifoldDescriptor::cube(1.0));
    let o = run(&["trace", s(&p), "--t-min", "1", "--t-max", "10", "--points", "2"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.starts_with("t,trace,err\n"));
    let rows = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 2);
    assert!((rows[1][1] - 1.0).abs() < 1e-10);
    assert!((rows[1][0] - 10.0).abs() < 1e-12);
    for line in o.stdout.lines().skip(1) {
        for field in line.split(',') {
            // 17 significant digits
            assert_eq!(field.split('e').next().unwrap().replace(['.', '-'], "").len(), 17, "{field}");
        }
    }
    assert_eq!(run(&["trace", s(&p), "--points", "0"]).code, 1);
    assert_eq!(run(&["trace", s(&p), "--t-min", "2", "--t-max", "1"]).code, 1);
    assert_eq!(run(&["trace", s(&p), "--eps", "-1"]).code, 1);
}

#[test]
fn commands_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let p = doc(&dir, "n2.json", &fixed(ManifoldClass::N2));
    for args in [vec!["trace", s(&p)], vec!["spectrum", s(&p), "--lambda-max", "150"], vec!["validate", s(&p)]] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.code, 0);
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn trace_writes_to_file() {
    let dir = TempDir::new().unwrap();
    let p = doc(&dir, "m3.json", &fixed(ManifoldClass::M3));
    let out = dir.path().join("m3.csv");
    let o = run(&["trace", s(&p), "--out", s(&out)]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.is_empty());
    assert_eq!(csv_rows(&std::fs::read_to_string(&out).unwrap()).len(), 60);
    assert_eq!(run(&["trace", s(&p), "--out", "/nonexistent/dir/x.csv"]).code, 3);
}

#[test]
fn pair_traces_agree_row_by_row() {
    let dir = TempDir::new().unwrap();
    let o = run(&["pair", "--ell", "1", "--out-dir", s(dir.path())]);
    assert_eq!(o.code, 0);
    let (a, b) = (dir.path().join("m4.json"), dir.path().join("m6.json"));
    let args = ["--t-min", "0.01", "--t-max", "10", "--points", "50", "--eps", "1e-12"];
    let ta = run(&[&["trace", s(&a)], &args[..]].concat());
    let tb = run(&[&["trace", s(&b)], &args[..]].concat());
    for (x, y) in csv_rows(&ta.stdout).iter().zip(csv_rows(&tb.stdout)) {
        assert_eq!(x[0], y[0]);
        assert!((x[1] - y[1]).abs() <= 2e-12, "t={}: {}", x[0], x[1] - y[1]);
    }
}

#[test]
fn spectrum_examples() {
    let dir = TempDir::new().unwrap();
    let p = doc(&dir, "cube.json", &ManifoldDescriptor::cube(1.0));
    let o = run(&["spectrum", s(&p), "--lambda-max", "40"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.starts_with("lambda,multiplicity\n"));
    let rows = csv_rows(&o.stdout);
    assert_eq!(rows[0], vec![0.0, 1.0]);
    assert!((rows[1][0] - 4.0 * PI * PI).abs() < 1e-12);
    assert_eq!(rows[1][1], 6.0);
    let o = run(&["spectrum", s(&p), "--lambda-max", "0"]);
    assert_eq!(csv_rows(&o.stdout), vec![vec![0.0, 1.0]]);
    assert_eq!(run(&["spectrum", s(&p), "--lambda-max", "-1"]).code, 1);

    run(&["pair", "--ell", "1", "--out-dir", s(dir.path())]);
    let a = csv_rows(&run(&["spectrum", s(&dir.path().join("m4.json")), "--lambda-max", "200"]).stdout);
    let b = csv_rows(&run(&["spectrum", s(&dir.path().join("m6.json")), "--lambda-max", "200"]).stdout);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x[0] - y[0]).abs() < 1e-10);
        assert_eq!(x[1], y[1]);
    }
}

#[test]
fn compare_examples() {
    let dir = TempDir::new().unwrap();
    run(&["pair", "--ell", "1", "--out-dir", s(dir.path())]);
    let (a, b) = (dir.path().join("m4.json"), dir.path().join("m6.json"));
    let o = run(&["compare", s(&a), s(&b)]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert!(o.stdout.starts_with("ISOSPECTRAL max_gap="));

    let o = run(&["compare", s(&a), s(&a)]);
    assert_eq!(o.code, 0);
    let gap: f64 = o.stdout.trim().strip_prefix("ISOSPECTRAL max_gap=").unwrap().parse().unwrap();
    assert!(gap <= 2.0 * 1e-9 / 4.0);

    let m2 = ManifoldDescriptor::M2 { l1: 1.0, plane: PlaneLattice::new(1.0, 1.2, 1.3) };
    let m2b = ManifoldDescriptor::M2 { l1: 1.0, plane: PlaneLattice::new(1.0, 1.2, 1.32) };
    let (p, q) = (doc(&dir, "p.json", &m2), doc(&dir, "q.json", &m2b));
    let o = run(&["compare", s(&p), s(&q)]);
    assert_eq!(o.code, 10);
    let rest = o.stdout.trim().strip_prefix("DISTINGUISHED t=").unwrap();
    let (t, gap) = rest.split_once(" gap=").unwrap();
    let (t, gap): (f64, f64) = (t.parse().unwrap(), gap.parse().unwrap());
    let direct = (flatspec::heat_trace::trace(&m2, t, 1e-13).unwrap()
        - flatspec::heat_trace::trace(&m2b, t, 1e-13).unwrap())
    .abs();
    assert!(gap > 1e-9 && (gap - direct).abs() < 1e-9);
    assert_eq!(run(&["compare", s(&p), s(&q), "--tol", "0"]).code, 1);
}

#[test]
fn reconstruct_examples() {
    let dir = TempDir::new().unwrap();
    let n3 = ManifoldDescriptor::N3 { lengths: [1.0, 2.0, 3.0] };
    let p = doc(&dir, "n3.json", &n3);
    let csv = dir.path().join("n3.csv");
    assert_eq!(run(&["trace", s(&p), "--out", s(&csv)]).code, 0);
    let o = run(&["reconstruct", s(&csv)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let r = cli::parse_descriptor(&o.stdout).unwrap();
    assert!(flatspec::geometry::is_isometric(&r, &n3, 1e-6), "{r:?}");

    let text = std::fs::read_to_string(&csv).unwrap();
    let short: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
    let sp = write(&dir, "short.csv", &short);
    let o = run(&["reconstruct", s(&sp)]);
    assert_eq!(o.code, 11);
    assert!(o.stderr.contains("insufficient samples"), "{}", o.stderr);

    // two-column input without header
    let bare: String = text.lines().skip(1).map(|l| {
        let c: Vec<&str> = l.split(',').collect();
        format!("{},{}\n", c[0], c[1])
    }).collect();
    let bp = write(&dir, "bare.csv", &bare);
    let o = run(&["reconstruct", s(&bp), "--hint", "N3"]);
    assert_eq!(o.code, 0, "{}", o.stderr);

    let bad = write(&dir, "bad.csv", "t,trace\n1,x\n");
    assert_eq!(run(&["reconstruct", s(&bad)]).code, 2);
    assert_eq!(run(&["reconstruct", s(&csv), "--hint", "Q9"]).code, 1);
}

#[test]
fn reconstruct_hint_mismatch() {
    let dir = TempDir::new().unwrap();
    let p = doc(&dir, "m2.json", &fixed(ManifoldClass::M2));
    let csv = dir.path().join("m2.csv");
    run(&["trace", s(&p), "--out", s(&csv)]);
    let o = run(&["reconstruct", s(&csv), "--hint", "M4"]);
    assert_eq!(o.code, 11);
    assert!(o.stderr.contains("hint M4") && o.stderr.contains("orientable"), "{}", o.stderr);
}

#[test]
fn pair_examples() {
    let dir = TempDir::new().unwrap();
    let o = run(&["pair", "--ell", "1", "--out-dir", s(dir.path())]);
    assert_eq!(o.code, 0);
    let m4 = cli::parse_descriptor(&std::fs::read_to_string(dir.path().join("m4.json")).unwrap()).unwrap();
    let m6 = cli::parse_descriptor(&std::fs::read_to_string(dir.path().join("m6.json")).unwrap()).unwrap();
    assert_eq!(m4, ManifoldDescriptor::M4 { l1: 2.0, l: 1.0 });
    assert_eq!(m6, ManifoldDescriptor::M6 { lengths: [1.0, 2.0, 1.0] });
    assert_eq!(run(&["pair", "--ell", "0"]).code, 1);
    assert_eq!(run(&["pair", "--ell", "-1"]).code, 1);
    assert_eq!(run(&["pair"]).code, 1);
}

#[test]
fn round_trip_every_class() {
    let dir = TempDir::new().unwrap();
    for c in ManifoldClass::ALL {
        let p = doc(&dir, "d.json", &fixed(c));
        let csv = dir.path().join("d.csv");
        let rec = dir.path().join("r.json");
        assert_eq!(run(&["trace", s(&p), "--out", s(&csv)]).code, 0);
        let o = run(&["reconstruct", s(&csv), "--out", s(&rec)]);
        assert_eq!(o.code, 0, "{c}: {}", o.stderr);
        let o = run(&["compare", s(&p), s(&rec)]);
        assert_eq!(o.code, 0, "{c}: {}", o.stdout);
    }
}

#[test]
fn search_covering_and_defaults() {
    let o = run(&["search", "--classes", "M4,M6", "--lo", "0.5", "--hi", "1", "--step", "0.5"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.ends_with("hits=1\n"), "{}", o.stdout);
    assert_eq!(run(&["search", "--classes", "M4,M4"]).code, 1);
    assert_eq!(run(&["search", "--classes", "M4"]).code, 1);
    assert_eq!(run(&["search", "--step", "0.0001", "--classes", "M1,M2"]).code, 4);

    let o = run(&["covering", "M2"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("M1 -> M2 folds=2") && o.stdout.contains("M2 -> M6 folds=2"));
    assert_eq!(run(&["covering"]).stdout.lines().count(), 9);

    let o = run(&["defaults"]);
    assert_eq!(o.code, 0);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["compare"]["tol"], 1e-9);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(run(&[]).code, 1);
    assert_eq!(run(&["frobnicate"]).code, 1);
    assert_eq!(run(&["trace"]).code, 1);
    let o = run(&["--help"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("reconstruct"));
    assert!(run(&["trace", "--help"]).stdout.contains("--t-min"));
}

#[test]
fn binary_exit_codes_and_point_cap() {
    let bin = env!("CARGO_BIN_EXE_flatspec");
    let dir = TempDir::new().unwrap();
    let p = doc(&dir, "cube.json", &ManifoldDescriptor::cube(1.0));
    let st = Command::new(bin).args(["trace", s(&p), "--points", "3"]).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let st = Command::new(bin)
        .args(["trace", s(&p), "--points", "3"])
        .env("FLATSPEC_POINT_CAP", "5")
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(4), "{}", String::from_utf8_lossy(&st.stderr));
    assert_eq!(Command::new(bin).arg("nope").output().unwrap().status.code(), Some(1));
}
