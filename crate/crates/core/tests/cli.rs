use std::path::Path;
use std::process::{Command, Output};

fn wmar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmar"))
        .args(args)
        .output()
        .expect("run wmar")
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    serde_json::from_str(stderr.trim()).unwrap_or_else(|_| panic!("not JSON: {stderr}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = wmar(&["simulate", "--seed", "7", "--features", "2", "--steps", "30", "--out-dir", s(d)]);
        assert!(out.status.success());
    }
    for name in ["raw.csv", "centered.csv", "coeffs.json", "means.csv", "config.json"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let other = dir.path().join("c");
    wmar(&["simulate", "--seed", "8", "--features", "2", "--steps", "30", "--out-dir", s(&other)]);
    assert_ne!(
        std::fs::read(a.join("raw.csv")).unwrap(),
        std::fs::read(other.join("raw.csv")).unwrap()
    );
}

#[test]
fn constant_series_fails_with_gram_singular() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("const.csv");
    let mut csv = String::from("feature,time,q_0,q_1,q_2,q_3\n");
    for t in 0..6 {
        csv.push_str(&format!("x,{t},0.1,0.2,0.3,0.4\n"));
    }
    std::fs::write(&input, csv).unwrap();
    let out = wmar(&["fit", "--input", s(&input), "--out-dir", s(dir.path())]);
    assert!(!out.status.success());
    let e = error_line(&out);
    assert_eq!(e["error"], "gram_singular");
    assert!(e["message"].as_str().unwrap().contains("eigenvalue"));
    assert!(!dir.path().join("fit.json").exists());
}

#[test]
fn usage_errors_are_machine_readable() {
    let out = wmar(&["fit", "--tol", "abc", "--input", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");

    let out = wmar(&["fit", "--input", "/nonexistent/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "io");
}

#[test]
fn help_mentions_every_command() {
    let out = wmar(&["--help"]);
    assert!(out.status.success());
    let help = String::from_utf8(out.stdout).unwrap();
    for cmd in ["simulate", "fit", "rmsd-study", "forecast", "graph", "center", "distance", "fan", "validate"] {
        assert!(help.contains(cmd), "{cmd}");
    }
}

#[test]
fn samples_long_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("samples.csv");
    // two features whose sample spread follows a deterministic pattern
    let mut csv = String::from("feature,time,value\n");
    for t in 0..40 {
        for k in 0..50 {
            let u = (k as f64 + 0.5) / 50.0;
            let a = (u * (0.6 + 0.3 * ((t as f64) * 0.7).sin())).min(1.0);
            let b = (u * u * (0.8 + 0.15 * ((t as f64) * 1.3).cos())).min(1.0);
            csv.push_str(&format!("a,{t},{a}\nb,{t},{b}\n"));
        }
    }
    std::fs::write(&input, csv).unwrap();
    let out_dir = dir.path().join("out");
    let out = wmar(&[
        "fit", "--input", s(&input), "--input-format", "samples-long", "--grid-h", "0.02",
        "--out-dir", s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("fit.json")).unwrap()).unwrap();
    assert_eq!(report["n"], 2);
    assert_eq!(report["grid_size"], 50);

    let out = wmar(&["fit", "--input", s(&input), "--input-format", "samples-long"]);
    assert!(!out.status.success());
    assert_eq!(error_line(&out)["error"], "invalid_argument");
}

#[test]
fn manifest_mismatch_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    assert!(wmar(&["simulate", "--features", "2", "--steps", "10", "--out-dir", d]).status.success());
    let manifest = dir.path().join("manifest.json");
    let text = std::fs::read_to_string(&manifest).unwrap().replace("0.01", "0.02");
    std::fs::write(&manifest, text).unwrap();
    let out = wmar(&["fit", "--input", &format!("{d}/raw.csv"), "--manifest", s(&manifest), "--out-dir", d]);
    assert!(!out.status.success());
    assert_eq!(error_line(&out)["error"], "format");
}

#[test]
fn svg_outputs_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    assert!(wmar(&["simulate", "--features", "2", "--steps", "20", "--out-dir", d]).status.success());
    assert!(wmar(&["fan", "--input", &format!("{d}/raw.csv"), "--series", "f2", "--out-dir", d]).status.success());
    let out = wmar(&[
        "rmsd-study", "--features", "2", "--t-schedule", "20,40", "--replicates", "2", "--burn-in", "10",
        "--out-dir", d,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["fan.svg", "rmsd_mean.svg", "rmsd_std.svg", "timing.svg"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_well_formed(&text);
    }
    let table = std::fs::read_to_string(dir.path().join("rmsd.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("alpha,T,mean,std"));
    assert_eq!(table.lines().count(), 5);
}

/// Tag balance check: every opening tag is closed in order.
fn assert_well_formed(text: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let end = rest[start..].find('>').expect("unterminated tag") + start;
        let tag = &rest[start + 1..end];
        if let Some(name) = tag.strip_prefix('/') {
            assert_eq!(stack.pop().as_deref(), Some(name.trim()), "mismatched </{name}>");
        } else if !tag.ends_with('/') {
            let name = tag.split_whitespace().next().unwrap();
            stack.push(name.to_string());
        }
        assert!(!rest[start + 1..end].contains('<'), "stray '<'");
        rest = &rest[end + 1..];
    }
    assert!(stack.is_empty(), "unclosed {stack:?}");
}
