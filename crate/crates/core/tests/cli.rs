use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::process::{Command, Output};

fn geoqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoqc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8(b.to_vec()).unwrap()
}

/// `key = value` lines of a report.
fn report(s: &str) -> HashMap<String, String> {
    s.lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .collect()
}

fn num(r: &HashMap<String, String>, key: &str) -> f64 {
    r.get(key)
        .unwrap_or_else(|| panic!("missing {key}"))
        .parse()
        .unwrap()
}

#[test]
fn sweep_minimal_grid_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let grid = [
        "sweep",
        "--detuning-min",
        "1.5",
        "--detuning-max",
        "2.5",
        "--detuning-count",
        "2",
        "--omega1-min",
        "0.5",
        "--omega1-max",
        "3",
        "--omega1-count",
        "2",
    ];
    for path in [&a, &b] {
        let mut args = grid.to_vec();
        args.extend(["--output", path.to_str().unwrap()]);
        let o = geoqc(&args);
        assert!(o.status.success(), "{}", text(&o.stderr));
        let out = text(&o.stdout);
        assert!(out.contains("# units:") && out.contains("# config: detuning_count = 2"));
        assert_eq!(out.lines().filter(|l| l.starts_with("peak = ")).count(), 2);
    }
    let csv = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(
        csv.lines().next(),
        Some("detuning_over_piJ,omega1_over_piJ,delta_gamma_rad")
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // CSV on stdout moves the report to stderr
    let o = geoqc(&grid);
    assert!(o.status.success());
    assert_eq!(text(&o.stdout), csv);
    assert!(text(&o.stderr).contains("# geoqc sweep"));
}

#[test]
fn sweep_rejects_single_point_axes() {
    let o = geoqc(&["sweep", "--omega1-count", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_list_and_negative_control() {
    let o = geoqc(&["verify", "--list"]);
    assert!(o.status.success());
    let out = text(&o.stdout);
    assert!(out.contains("cone-phase") && out.contains("solid-angle-law"));
    assert!(!out.contains("PASS"));

    let o = geoqc(&["verify", "--diabatic", "--check", "cone-phase"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stdout).contains("FAIL cone-phase"));
    assert!(text(&o.stderr).contains("cone-phase"));
}

#[test]
fn verify_full_suite_passes() {
    let o = geoqc(&["verify"]);
    let out = text(&o.stdout);
    assert!(o.status.success(), "{out}");
    assert!(!out.contains("FAIL"));
    assert_eq!(num(&report(&out), "failed"), 0.0);
    // same seed, same numbers
    assert_eq!(
        geoqc(&["verify", "--check", "solid-angle-law"]).stdout,
        geoqc(&["verify", "--check", "solid-angle-law"]).stdout
    );
}

#[test]
fn simulate_without_drive_has_no_geometric_phase() {
    let o = geoqc(&["simulate", "--omega1", "0"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let r = report(&text(&o.stdout));
    assert!(num(&r, "geometric_phase").abs() < 1e-6);
    assert!(num(&r, "forward.geometric").abs() < 1e-6);
}

#[test]
fn simulate_cone_phase_is_rate_independent() {
    // defaults: θ = π/3, |Ω′| = 1, sweep 500
    let o = geoqc(&["simulate"]);
    assert!(o.status.success());
    let a = report(&text(&o.stdout));
    assert!((num(&a, "geometric_phase") + FRAC_PI_2).abs() < 1e-3);
    assert_eq!(a["adiabatic"], "true");
    let o = geoqc(&["simulate", "--sweep-time", "1000"]);
    let b = report(&text(&o.stdout));
    assert!((num(&a, "geometric_phase") - num(&b, "geometric_phase")).abs() < 1e-3);
    assert!((num(&a, "forward.dynamic") - num(&b, "forward.dynamic")).abs() > 1.0);
}

#[test]
fn simulate_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let o = geoqc(&[
        "simulate",
        "--stride",
        "1000",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,sx,sy,sz,re0,im0,re1,im1"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 100);
    for r in &rows {
        assert_eq!(r.len(), 8);
        let norm = r[4] * r[4] + r[5] * r[5] + r[6] * r[6] + r[7] * r[7];
        assert!((norm - 1.0).abs() < 1e-9);
        assert!((r[1] * r[1] + r[2] * r[2] + r[3] * r[3] - 1.0).abs() < 1e-9);
    }
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[0][3], 1.0);

    let o = geoqc(&["simulate", "--stride", "1000", "--output", "-"]);
    assert_eq!(text(&o.stdout), csv);
    assert!(text(&o.stderr).contains("geometric_phase = "));
}

#[test]
fn simulate_warns_when_diabatic() {
    let o = geoqc(&["simulate", "--sweep-time", "10", "--ramp-time", "2"]);
    assert!(o.status.success());
    assert_eq!(report(&text(&o.stdout))["adiabatic"], "false");
    assert!(text(&o.stderr).contains("warning"));
}

#[test]
fn echo_reports_both_forms() {
    let o = geoqc(&["echo"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let r = report(&text(&o.stdout));
    assert!(num(&r, "difference_error") < 5e-3);
    assert!(num(&r, "cos_form_error") < 5e-3);
    assert!(num(&r, "dynamic_residual").abs() < 1e-3);
    // a diabatic echo is refused
    assert_eq!(
        geoqc(&["echo", "--sweep-time", "10", "--ramp-time", "2"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn conditional_gate_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    // detuning 3πJ, ω₁ = 2πJ; the flag overrides the file's ω₁
    std::fs::write(
        &cfg,
        format!(
            "# spot point\nomega-a = 40\nomega = {}\nomega1 = 1\n",
            40.0 - 3.0 * PI
        ),
    )
    .unwrap();
    let w1 = (2.0 * PI).to_string();
    let o = geoqc(&[
        "--config",
        cfg.to_str().unwrap(),
        "conditional",
        "--omega1",
        &w1,
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let out = text(&o.stdout);
    assert!(out.contains(&format!("# config: omega1 = {w1}")));
    let r = report(&out);
    assert!(num(&r, "gate_fidelity") >= 0.999);
    assert!(num(&r, "leakage") < 1e-3);
    let expected = PI
        * ((3.0 * PI + PI) / (3.0 * PI + PI).hypot(2.0 * PI)
            - (3.0 * PI - PI) / (3.0 * PI - PI).hypot(2.0 * PI));
    assert!((num(&r, "delta_gamma") - expected).abs() < 1e-9);
}

#[test]
fn usage_errors() {
    assert_eq!(
        geoqc(&["simulate", "--omega1", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        geoqc(&["simulate", "--omega0", "10", "--omega", "10", "--omega1", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        geoqc(&["simulate", "--sweep-time", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        geoqc(&["simulate", "--no-such-flag"]).status.code(),
        Some(2)
    );
    assert_eq!(
        geoqc(&["conditional", "--omega-a", "5", "--omega-b", "10"])
            .status
            .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "omega0 = 10\n").unwrap();
    // omega0 is a single-spin key, unknown to sweep
    let o = geoqc(&["--config", cfg.to_str().unwrap(), "sweep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("omega0"));
    assert_eq!(
        geoqc(&[
            "--config",
            dir.path().join("missing").to_str().unwrap(),
            "sweep"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn unwritable_output_is_a_failure() {
    let o = geoqc(&["simulate", "--output", "/nonexistent/dir/traj.csv"]);
    assert_eq!(o.status.code(), Some(1));
}
