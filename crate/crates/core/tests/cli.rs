use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn workloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workloop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn report_value(out: &Output, key: &str) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    let prefix = format!("{key}=");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` in report:\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn duffing_opt_valid_column_flips_at_critical_beta_star() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let cfg = config("duffing-opt.toml");
    let out = workloop(&[
        "duffing-opt",
        path_str(&cfg),
        "--sweep.lo",
        "1.27",
        "--sweep.hi",
        "1.28",
        "--sweep.steps",
        "2001",
        "--output.csv",
        path_str(&csv),
        "--output.svg",
        path_str(&dir.path().join("sweep.svg")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["beta_star", "alpha", "beta", "valid", "margin"]);
    let rows: Vec<(f64, bool)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), &r[3] == "true")
        })
        .collect();
    assert_eq!(rows.len(), 2001);
    let flip = rows
        .windows(2)
        .position(|w| w[0].1 && !w[1].1)
        .expect("valid column flips");
    assert_eq!(rows.windows(2).filter(|w| w[0].1 != w[1].1).count(), 1);
    let (last_valid, first_invalid) = (rows[flip].0, rows[flip + 1].0);
    for b in [last_valid, first_invalid] {
        assert!((b - 1.27324).abs() <= 1e-5, "flip at {b}");
    }
    assert!((report_value(&out, "beta_star_crit") - 1.27324).abs() < 1e-5);
}

#[test]
fn freq_band_contains_reference_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("freq-band.toml");
    let csv = dir.path().join("band.csv");
    let out = workloop(&[
        "freq-band",
        path_str(&cfg),
        "--output.csv",
        path_str(&csv),
        "--output.svg",
        path_str(&dir.path().join("band.svg")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(report_value(&out, "omega_lo") <= 0.693 * 2.0);
    assert!(report_value(&out, "omega_hi") >= 1.163 * 2.0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("omega,rho,margin,resonant"));
    assert_eq!(text.lines().count(), 72);
}

#[test]
fn single_step_sweep_exits_with_config_error() {
    let cfg = config("duffing-opt.toml");
    let out = workloop(&["duffing-opt", path_str(&cfg), "--sweep.steps", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(
        err.starts_with("error kind=config-invalid exit=2 reason="),
        "{err}"
    );
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_are_config_errors() {
    let out = workloop(&["transmogrify", "x.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error kind=config-invalid"));

    let cfg = config("analyze.toml");
    let out = workloop(&["analyze", path_str(&cfg), "--plant.zeta"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_files_are_io_errors() {
    let out = workloop(&["analyze", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).starts_with("error kind=io exit=4"));

    let cfg = config("analyze.toml");
    let out = workloop(&[
        "analyze",
        path_str(&cfg),
        "--output.csv",
        "/nonexistent/dir/loop.csv",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn non_monotonic_signal_is_a_numerical_failure() {
    // ρ = 0.5 adds velocity reversals, so no bivalued loop exists
    let cfg = config("analyze.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = workloop(&[
        "analyze",
        path_str(&cfg),
        "--signal.cos",
        "[0.0, 0.5, 0.0, 0.5]",
        "--output.csv",
        path_str(&dir.path().join("a.csv")),
        "--output.svg",
        path_str(&dir.path().join("a.svg")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error kind=numerical-failure exit=3"));
    assert!(
        !dir.path().join("a.csv").exists(),
        "no partial output on failure"
    );
}

#[test]
fn analyze_reports_resonant_linear_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("analyze.toml");
    let csv = dir.path().join("loop.csv");
    let out = workloop(&[
        "analyze",
        path_str(&cfg),
        "--output.csv",
        path_str(&csv),
        "--output.svg",
        path_str(&dir.path().join("loop.svg")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("command=analyze\n"));
    assert!(text.contains("\nresonant=true\n"));
    // p_net = π c Ω x̂² with c = 2ζω0
    let expect = std::f64::consts::PI * 0.4 * 2.0;
    assert!((report_value(&out, "p_net") - expect).abs() < 1e-9 * expect);

    // the exported loop re-enters as a tabulated plant with the same area
    let replay = dir.path().join("replay.toml");
    std::fs::write(
        &replay,
        format!(
            "[plant]\nkind = \"tabulated\"\ntable = {:?}\n\n[elasticity]\nkind = \"polynomial\"\ncoeffs = []\n",
            path_str(&csv)
        ),
    )
    .unwrap();
    let out2 = workloop(&["analyze", path_str(&replay)]);
    assert!(out2.status.success(), "{}", stderr(&out2));
    assert!((report_value(&out2, "p_net") - expect).abs() < 1e-6 * expect);
}

#[test]
fn one_way_reports_half_duty_cycle() {
    let cfg = config("one-way.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = workloop(&[
        "one-way",
        path_str(&cfg),
        "--output.csv",
        path_str(&dir.path().join("p.csv")),
        "--output.svg",
        path_str(&dir.path().join("p.svg")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!((report_value(&out, "duty_cycle") - 0.5).abs() <= 0.01);
    assert_eq!(report_value(&out, "max_abs_f_upper"), 0.0);

    let bad = workloop(&["one-way", path_str(&cfg), "--one_way.side", "sideways"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulate_tracks_target() {
    let cfg = config("simulate.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = workloop(&[
        "simulate",
        path_str(&cfg),
        "--output.csv",
        path_str(&dir.path().join("f.csv")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(report_value(&out, "max_deviation") < 1e-6);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = config("freq-band.toml");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut stdouts = vec![];
    for d in &dirs {
        let out = workloop(&[
            "freq-band",
            path_str(&cfg),
            "--sweep.steps",
            "11",
            "--output.csv",
            path_str(&d.path().join("b.csv")),
            "--output.svg",
            path_str(&d.path().join("b.svg")),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        stdouts.push(out.stdout);
    }
    assert_eq!(stdouts[0], stdouts[1]);
    for f in ["b.csv", "b.svg"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}
