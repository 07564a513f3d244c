use std::path::{Path, PathBuf};
use std::process::Command;

use coord_cli::{dispatch, CliOutput, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK};
use tempfile::TempDir;

const DSBS02: &str = r#"{"alphabet_x": ["0", "1"], "alphabet_y": ["0", "1"], "pmf": [[0.4, 0.1], [0.1, 0.4]]}"#;

fn run(args: &[&str]) -> CliOutput {
    dispatch(std::iter::once("coord").chain(args.iter().copied()))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The closed-form X−U−Y channel for DSBS(0.2): U is X through a BSC(b).
fn wyner_aux_02() -> String {
    let b = 0.5 * (1.0 - (1.0f64 - 0.4).sqrt());
    let q = |x: usize, y: usize| if x == y { 0.4 } else { 0.1 };
    let row = |x: usize, y: usize| {
        let w = |u: usize| {
            let px = if u == x { 1.0 - b } else { b };
            let py = if u == y { 1.0 - b } else { b };
            0.5 * px * py / q(x, y)
        };
        format!("[{}, {}]", w(0), w(1))
    };
    format!(
        r#"{{"card_u": 2, "card_u1": 1, "card_u2": 1, "cond": {{"0,0": {}, "0,1": {}, "1,0": {}, "1,1": {}}}}}"#,
        row(0, 0),
        row(0, 1),
        row(1, 0),
        row(1, 1)
    )
}

#[test]
fn info_measures() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "dsbs02.json", DSBS02);
    let mi = run(&["info", "--dist", s(&f), "--measure", "mi"]);
    assert_eq!(mi.exit_code, EXIT_OK);
    assert_eq!(mi.stdout, "0.278071905112638\n");
    let h = run(&["info", "--dist", s(&f), "--measure", "entropy"]);
    assert_eq!(h.stdout, "1.72192809488736\n");
    let tv = run(&["info", "--dist", s(&f), "--measure", "tv"]);
    assert_eq!(tv.stdout, "0.300000000000000\n");
}

#[test]
fn dsbs_tstar_and_curve() {
    let out = run(&["dsbs", "--a", "0.1", "--tstar"]);
    assert_eq!(out.exit_code, EXIT_OK);
    let t: f64 = out.stdout.trim().parse().unwrap();
    assert!((t - 0.343436).abs() < 1e-4);

    let curve = run(&["dsbs", "--a", "0.2", "--points", "3"]);
    let lines: Vec<&str> = curve.stdout.lines().collect();
    assert_eq!(lines[0], "t,f,i_joint,i_cond");
    assert!(lines[1].starts_with("0.00000000000000,0.352952450491633,"));
    assert!(lines[3].starts_with("1.00000000000000,0.278071905112638,"));

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("curve.csv");
    let written = run(&["dsbs", "--a", "0.2", "--points", "3", "--out", s(&path)]);
    assert_eq!(written.exit_code, EXIT_OK);
    assert_eq!(written.stdout.lines().count(), 1);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), curve.stdout);

    assert_eq!(run(&["dsbs", "--a", "0.5", "--tstar"]).exit_code, EXIT_INVALID);
}

#[test]
fn region_commands() {
    assert_eq!(
        run(&["region", "xy-equal", "--hx", "1.0", "--rates", "0.5,0.5,0.5"]).stdout,
        "member\n"
    );
    assert_eq!(
        run(&["region", "xy-equal", "--hx", "1.0", "--rates", "0.49,10,10"]).stdout,
        "not member\n"
    );
    assert_eq!(
        run(&["region", "xy-equal", "--hx", "1.0", "--rates", "0.5,0.5"]).exit_code,
        EXIT_INVALID
    );

    let dir = TempDir::new().unwrap();
    let dist = write(&dir, "q.json", DSBS02);
    let sources = write(
        &dir,
        "aux.json",
        r#"{"card_u": 1, "card_u1": 2, "card_u2": 2, "cond": {
            "0,0": [1, 0, 0, 0], "0,1": [0, 1, 0, 0], "1,0": [0, 0, 1, 0], "1,1": [0, 0, 0, 1]}}"#,
    );
    let check = |rates| {
        run(&[
            "region",
            "check",
            "--dist",
            s(&dist),
            "--aux",
            s(&sources),
            "--rates",
            rates,
        ])
    };
    assert_eq!(check("0.28,0.9,0.9").stdout, "member\n");
    assert_eq!(check("0.27,0.9,0.9").stdout, "not member\n");

    let trivial = write(
        &dir,
        "trivial.json",
        r#"{"card_u": 1, "card_u1": 1, "card_u2": 1, "cond": {"0,0": [1], "0,1": [1], "1,0": [1], "1,1": [1]}}"#,
    );
    let violation = run(&[
        "region",
        "check",
        "--dist",
        s(&dist),
        "--aux",
        s(&trivial),
        "--rates",
        "1,1,1",
    ]);
    assert_eq!(violation.exit_code, EXIT_INVALID);
    assert!(violation.stderr.contains("markov"));
}

#[test]
fn wyner_and_ulsr() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "q.json", DSBS02);
    let w = run(&[
        "wyner",
        "--dist",
        s(&f),
        "--card",
        "2",
        "--restarts",
        "8",
        "--seed",
        "3",
    ]);
    assert_eq!(w.exit_code, EXIT_OK, "{}", w.stderr);
    let value: f64 = w
        .stdout
        .lines()
        .next()
        .unwrap()
        .strip_prefix("value ")
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 0.705904900983266).abs() < 1e-3);
    assert_eq!(
        w.stdout,
        run(&[
            "wyner",
            "--dist",
            s(&f),
            "--card",
            "2",
            "--restarts",
            "8",
            "--seed",
            "3"
        ])
        .stdout
    );

    // a single symbol cannot separate dependent X and Y
    let infeasible = run(&["wyner", "--dist", s(&f), "--card", "1", "--restarts", "2"]);
    assert_eq!(infeasible.exit_code, EXIT_INFEASIBLE);

    let u = run(&[
        "ulsr",
        "--dist",
        s(&f),
        "--form",
        "maxpair",
        "--restarts",
        "8",
        "--threads",
        "2",
    ]);
    assert_eq!(u.exit_code, EXIT_OK, "{}", u.stderr);
    let value: f64 = u
        .stdout
        .lines()
        .next()
        .unwrap()
        .strip_prefix("value ")
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 0.1774341).abs() < 1e-3, "{value}");
    assert!(u.stdout.contains("form maxpair\n"));
    assert!(u.stdout.contains("card_u 6\n"));
}

#[test]
fn simulate_is_reproducible_and_echoes_rates() {
    let dir = TempDir::new().unwrap();
    let dist = write(&dir, "q.json", DSBS02);
    let aux = write(&dir, "aux.json", &wyner_aux_02());
    let args = |seed: &str| {
        vec![
            "simulate",
            "--dist",
            s(&dist),
            "--aux",
            s(&aux),
            "--n",
            "8",
            "--rates",
            "0.8,0.25,0.5,0.5",
            "--trials",
            "200",
            "--seed",
            seed,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    let first = dispatch(std::iter::once("coord".to_string()).chain(args("5")));
    assert_eq!(first.exit_code, EXIT_OK, "{}", first.stderr);
    let second = dispatch(std::iter::once("coord".to_string()).chain(args("5")));
    assert_eq!(first.stdout, second.stdout);

    let report: serde_json::Value = serde_json::from_str(&first.stdout).unwrap();
    assert_eq!(report["trials_run"], 200);
    let echo = &report["config_echo"];
    assert_eq!(echo["message_rate"].as_f64().unwrap(), 0.8 / 2.0 + 0.25);
    assert_eq!(echo["shared_rate1"].as_f64().unwrap(), 0.5 + 0.8 / 2.0);
    assert_eq!(echo["index_sizes"]["m0_half_bits"], 4);

    let out = dir.path().join("report.json");
    let mut with_out = args("5");
    with_out.extend(["--out".to_string(), s(&out).to_string()]);
    let summary = dispatch(std::iter::once("coord".to_string()).chain(with_out));
    assert_eq!(summary.stdout.lines().count(), 1);
    assert!(summary.stdout.starts_with("tv_per_letter "));
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(saved, report);

    let degenerate = write(
        &dir,
        "deg.json",
        r#"{"card_u": 1, "card_u1": 1, "card_u2": 1, "cond": {"0,0": [1], "0,1": [1], "1,0": [1], "1,1": [1]}}"#,
    );
    let bad = run(&[
        "simulate",
        "--dist",
        s(&dist),
        "--aux",
        s(&degenerate),
        "--n",
        "8",
        "--rates",
        "0,0,0,0",
        "--trials",
        "5",
        "--seed",
        "1",
    ]);
    assert_eq!(bad.exit_code, EXIT_INVALID);
}

#[test]
fn usage_errors() {
    let unknown = run(&["teleport"]);
    assert_eq!(unknown.exit_code, EXIT_INVALID);
    assert!(unknown.stdout.is_empty());
    assert!(unknown.stderr.contains("Usage"));
    assert_eq!(
        run(&["info", "--dist", "x.json", "--measure", "mi", "--bogus"]).exit_code,
        EXIT_INVALID
    );
    assert_eq!(
        run(&["info", "--dist", "/nonexistent/q.json", "--measure", "mi"]).exit_code,
        EXIT_INVALID
    );
    assert_eq!(run(&["--help"]).exit_code, EXIT_OK);
}

#[test]
fn binary_exit_codes_and_streams() {
    let bin = env!("CARGO_BIN_EXE_coord");
    let ok = Command::new(bin)
        .args(["region", "xy-equal", "--hx", "1.0", "--rates", "0.5,0.5,0.5"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8(ok.stdout).unwrap(), "member\n");

    let bad = Command::new(bin).arg("nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_INVALID));
    assert!(bad.stdout.is_empty());
    assert!(!bad.stderr.is_empty());
}
