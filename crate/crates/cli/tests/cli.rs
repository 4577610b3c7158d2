use std::path::Path;
use std::process::{Command, Output};

fn crashfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crashfit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = crashfit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_reaches_clearance_at_150cm() {
    let text = ok(&["simulate", "--altitude", "150cm"]);
    assert!(text.starts_with("# generated-by crashfit"));
    assert!(text.contains("\nt_s,x_m,v_mps,a_mps2,sensor_mps2,sensor_filtered_mps2\n"));
    let hit = data_rows(&text)
        .iter()
        .any(|r| r[1].parse::<f64>().unwrap() >= 0.016);
    assert!(hit);
}

#[test]
fn simulate_from_rest_settles_at_static_sag() {
    let text = ok(&["simulate", "--altitude", "0", "--t-max", "0.3"]);
    let last = data_rows(&text).pop().unwrap();
    let x: f64 = last[1].parse().unwrap();
    let sag = 0.241 * 9.81 / 7040.0;
    assert!((x - sag).abs() < 1e-9, "{x}");
}

#[test]
fn simulate_truncates_at_clearance() {
    let text = ok(&["simulate", "--altitude", "2m", "--truncate"]);
    let rows = data_rows(&text);
    let xs: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(*xs.last().unwrap() >= 0.016);
    assert!(xs[..xs.len() - 1].iter().all(|&x| x < 0.016));
    assert!(text.contains("truncation=displacement-limit"));
}

#[test]
fn missing_output_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nope").join("trace.csv");
    let out = crashfit(&["simulate", "--altitude", "1.5", "--out", p(&target)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(crashfit(&["simulate"]).status.code(), Some(1));
    assert_eq!(
        crashfit(&["simulate", "--altitude", "high"]).status.code(),
        Some(1)
    );
    assert_eq!(
        crashfit(&["energy", "--cutoff-hz", "6000"]).status.code(),
        Some(1),
        "cutoff above Nyquist"
    );
    assert_eq!(crashfit(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_is_overridden_by_flags_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test rig\nmass = 0.3\ndamping = 40\n").unwrap();
    let text = ok(&[
        "energy",
        "--config",
        p(&cfg),
        "--damping",
        "50",
        "--altitudes",
        "1",
    ]);
    let header = text.lines().next().unwrap();
    assert!(header.contains("mass=0.3 damping=50 "), "{header}");

    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(
        crashfit(&["energy", "--config", p(&cfg)]).status.code(),
        Some(1)
    );
}

#[test]
fn energy_table_matches_expectations() {
    let text = ok(&["energy", "--altitudes", "50cm,100cm,150cm,2000cm"]);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let f: Vec<f64> = r[5..8].iter().map(|v| v.parse().unwrap()).collect();
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    assert_eq!(rows[0][8], "false");
    assert_eq!(rows[1][8], "false");
    assert_eq!(rows[2][8], "true");
    let last: Vec<f64> = rows[3][5..7].iter().map(|v| v.parse().unwrap()).collect();
    assert!(last[0] + last[1] > 0.25);
}

#[test]
fn energy_default_grid() {
    let rows = data_rows(&ok(&["energy"]));
    assert_eq!(rows.len(), 80);
    assert_eq!(rows[0][0], "25");
    assert_eq!(rows[79][0], "2000");
}

#[test]
fn fit_stiffness_on_exact_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("static.csv");
    let mut body = String::from("displacement_mm,force_N\n");
    for i in 0..=10 {
        let x_mm = i as f64 * 0.5;
        body.push_str(&format!("{x_mm},{}\n", 2.36 + 7040.0 * x_mm / 1000.0));
    }
    std::fs::write(&csv, body).unwrap();
    let report = dir.path().join("k.json");
    ok(&[
        "fit-stiffness",
        "--input",
        p(&csv),
        "--weight",
        "2.36",
        "--out",
        p(&report),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["mode"], "stiffness");
    let k = v["parameters"]["k"].as_f64().unwrap();
    assert!((k - 7040.0).abs() < 1e-9 * 7040.0, "{k}");
    for key in ["loss", "iterations", "converged"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn fit_stiffness_rejects_bad_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("static.csv");
    std::fs::write(&csv, "x,y\n1,2\n").unwrap();
    assert_eq!(
        crashfit(&["fit-stiffness", "--input", p(&csv)])
            .status
            .code(),
        Some(2)
    );
}

fn synth_dir(dir: &Path, trials: &str, noise: &str) {
    ok(&[
        "synth",
        "--out",
        p(dir),
        "--trials",
        trials,
        "--noise",
        noise,
        "--seed",
        "5",
    ]);
}

#[test]
fn synth_reproduces_trial_structure() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("logs");
    synth_dir(&data, "101,97,89", "0.5");
    let mut counts = std::collections::BTreeMap::new();
    for entry in std::fs::read_dir(&data).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.ends_with(".log") {
            *counts.entry(name[..7].to_string()).or_insert(0) += 1;
        }
    }
    let expected: Vec<(String, i32)> = vec![
        ("h0050cm".into(), 101),
        ("h0100cm".into(), 97),
        ("h0150cm".into(), 89),
    ];
    assert_eq!(counts.into_iter().collect::<Vec<_>>(), expected);
    let truth = std::fs::read_to_string(data.join("ground_truth.csv")).unwrap();
    assert_eq!(data_rows(&truth).len(), 287);
}

#[test]
fn segment_agrees_with_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    synth_dir(dir.path(), "4", "0.2");
    let truth = data_rows(&std::fs::read_to_string(dir.path().join("ground_truth.csv")).unwrap());
    let found = data_rows(&ok(&["segment", p(dir.path())]));
    assert_eq!(truth.len(), found.len());
    for (t, f) in truth.iter().zip(&found) {
        assert_eq!(t[0], f[0]);
        let a: i64 = t[4].parse().unwrap();
        let b: i64 = f[4].parse().unwrap();
        assert!((a - b).abs() <= 2);
    }
}

#[test]
fn segment_rest_only_log_fails_with_phase() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("rest.log");
    let mut body =
        String::from("# trial_id=rest\n# altitude_cm=100\n# sample_rate_hz=1000\n# units=g\n");
    for i in 0..500 {
        body.push_str(&format!("{},0,0,1\n", i as f64 / 1000.0));
    }
    std::fs::write(&log, body).unwrap();
    let out = crashfit(&["segment", p(&log)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rest.log"), "{err}");
    assert!(err.to_lowercase().contains("free"), "{err}");
}

#[test]
fn fit_damping_fixed_k_recovers_c() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("logs");
    synth_dir(&data, "10", "0.5");
    let report = dir.path().join("fit.json");
    let summary = ok(&["fit-damping", p(&data), "--out", p(&report)]);
    assert!(summary.contains("joint fit loss"), "{summary}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["mode"], "damping-fixed-k");
    assert_eq!(v["converged"], true);
    let c = v["parameters"]["c"].as_f64().unwrap();
    assert!((c - 46.0).abs() < 0.05 * 46.0, "{c}");
    assert_eq!(v["parameters"]["k"].as_f64().unwrap(), 7040.0);
    assert!(v["comparison"]["joint"]["loss"].is_number());
}

#[test]
fn fit_damping_without_inputs_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_ne!(
        crashfit(&["fit-damping", p(dir.path())]).status.code(),
        Some(0)
    );
    assert_ne!(crashfit(&["fit-damping"]).status.code(), Some(0));
}

#[test]
fn fit_damping_lists_unreadable_logs() {
    let dir = tempfile::tempdir().unwrap();
    synth_dir(dir.path(), "1", "0");
    std::fs::write(dir.path().join("broken.log"), "# units=furlongs\n").unwrap();
    let out = crashfit(&["fit-damping", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.log"));
}

#[test]
fn fit_damping_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    synth_dir(dir.path(), "1", "0.5");
    let report = dir.path().join("fit.json");
    let out = crashfit(&[
        "fit-damping",
        p(dir.path()),
        "--out",
        p(&report),
        "--max-iterations",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["converged"], false);
}

#[test]
fn loss_surface_argmin_on_generator() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("logs");
    synth_dir(&data, "3", "0.2");
    let grid = dir.path().join("surface.csv");
    let printed = ok(&[
        "loss-surface",
        p(&data),
        "--c-range",
        "36:56",
        "--k-range",
        "6040:8040",
        "--resolution",
        "11x11",
        "--out",
        p(&grid),
    ]);
    assert!(printed.contains("c = 46, k = 7040"), "{printed}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("surface.json")).unwrap())
            .unwrap();
    assert_eq!(v["argmin"]["c"].as_f64().unwrap(), 46.0);
    assert_eq!(v["argmin"]["k"].as_f64().unwrap(), 7040.0);
    let raw = std::fs::read_to_string(&grid).unwrap();
    let rows = data_rows(&raw);
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.len() == 12));
    assert!(dir.path().join("surface.ln1p.csv").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    synth_dir(&a, "2", "0.5");
    synth_dir(&b, "2", "0.5");
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for n in &names {
        assert_eq!(
            std::fs::read(a.join(n)).unwrap(),
            std::fs::read(b.join(n)).unwrap(),
            "{n:?}"
        );
    }
    let fa = dir.path().join("fa.json");
    let fb = dir.path().join("fb.json");
    ok(&["fit-damping", p(&a), "--joint", "--out", p(&fa)]);
    ok(&["fit-damping", p(&b), "--joint", "--out", p(&fb)]);
    let strip = |path: &Path| std::fs::read_to_string(path).unwrap();
    assert_eq!(strip(&fa), strip(&fb));
    assert_eq!(
        ok(&["simulate", "--altitude", "1"]),
        ok(&["simulate", "--altitude", "1"])
    );
    assert_eq!(ok(&["energy"]), ok(&["energy"]));
}

#[test]
fn different_seeds_give_different_noise() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["synth", "--out", p(&a), "--trials", "1", "--seed", "1"]);
    ok(&["synth", "--out", p(&b), "--trials", "1", "--seed", "2"]);
    let read = |d: &Path| std::fs::read_to_string(d.join("h0050cm_001.log")).unwrap();
    assert_ne!(read(&a), read(&b));
}
