use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tslab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_case2_reports_self_confirming() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["classify", "--problem", s(&config("case2")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("SelfConfirming"));
    assert!(dir.path().join("classification.json").exists());
}

#[test]
fn classify_three_model_geometry_is_conclusive_or_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["classify", "--problem", s(&config("tri_repelling")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("InteriorErgodic") || out.contains("Inconclusive"));
    assert!(out.contains("noise"), "margins are printed");
}

#[test]
fn invalid_and_malformed_problems() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"models": [], "true_means": [0.0, 1.0]}"#).unwrap();
    assert_eq!(code(&run(&["classify", "--problem", s(&empty), "--out", s(dir.path())])), 3);

    let bad_sigma = dir.path().join("sigma.json");
    std::fs::write(&bad_sigma, r#"{"models": [[1, 0], [0, 1]], "sigma": -1, "true_means": [0, 1]}"#).unwrap();
    assert_eq!(code(&run(&["classify", "--problem", s(&bad_sigma), "--out", s(dir.path())])), 3);

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    assert_eq!(code(&run(&["classify", "--problem", s(&broken), "--out", s(dir.path())])), 2);

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"models": [[1, 0], [0, 1]], "true_means": [0, 1], "extra": 1}"#).unwrap();
    assert_eq!(code(&run(&["classify", "--problem", s(&unknown), "--out", s(dir.path())])), 2);

    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run(&["classify", "--problem", s(&missing)])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
    assert_eq!(code(&run(&["simulate", "--horizon", "-3", "--problem", s(&config("case1"))])), 2);
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["simulate", "--problem", s(&config("case4")), "--horizon", "500", "--seed", "7", "--out", s(d.path())]);
        assert_eq!(code(&o), 0);
    }
    let x = std::fs::read(a.path().join("trajectory.csv")).unwrap();
    let y = std::fs::read(b.path().join("trajectory.csv")).unwrap();
    assert_eq!(x, y);
    let c = tempfile::tempdir().unwrap();
    run(&["simulate", "--problem", s(&config("case4")), "--horizon", "500", "--seed", "8", "--out", s(c.path())]);
    assert_ne!(x, std::fs::read(c.path().join("trajectory.csv")).unwrap());
}

#[test]
fn simulate_case1_always_plays_action_one() {
    let dir = tempfile::tempdir().unwrap();
    run(&["simulate", "--problem", s(&config("case1")), "--horizon", "500", "--out", s(dir.path())]);
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 500);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("1")));
}

#[test]
fn simulate_zero_horizon_is_a_config_error() {
    let o = run(&["simulate", "--problem", s(&config("case1")), "--horizon", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn mc_case4_writes_histogram_and_case2_absorption() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "mc", "--problem", s(&config("case4")), "--reps", "40", "--stationary-horizon", "20000", "--chains", "4",
        "--out", s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("histogram.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mc_summary.json")).unwrap()).unwrap();
    assert!(summary["stationary"]["alpha_star"].as_f64().is_some());
    assert!(summary["absorption"].is_null());

    let dir = tempfile::tempdir().unwrap();
    let o = run(&["mc", "--problem", s(&config("case2")), "--reps", "40", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mc_summary.json")).unwrap()).unwrap();
    let p = summary["absorption"]["p_hat"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(!dir.path().join("histogram.csv").exists());
    let class: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("classification.json")).unwrap()).unwrap();
    assert_eq!(class["two_arm"]["p_star_mc"].as_f64(), Some(p));
}

#[test]
fn mc_zero_reps_is_a_config_error() {
    assert_eq!(code(&run(&["mc", "--problem", s(&config("case2")), "--reps", "0"])), 2);
}

fn read_field(dir: &Path) -> Vec<Vec<f64>> {
    let csv = std::fs::read_to_string(dir.join("field.csv")).unwrap();
    csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn field_two_model_self_defeating_changes_sign_once() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "field", "--problem", s(&config("case4")), "--s-min", "-10", "--s-max", "10", "--resolution", "201", "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_field(dir.path());
    assert_eq!(rows.len(), 201);
    let signs: Vec<bool> = rows.iter().map(|r| r[1] > 0.0).collect();
    assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);
}

#[test]
fn field_vanishes_at_the_fixed_point() {
    let problem = tslab::BanditProblem::from_json_file(config("tri_repelling")).unwrap();
    let geom = tslab::drift::DriftGeometry::from_problem(&problem);
    let star = geom.s_star.unwrap().into_vec();
    let dir = tempfile::tempdir().unwrap();
    let (a0, a1) = (format!("{}", star[0] - 1.0), format!("{}", star[0] + 1.0));
    let (b0, b1) = (format!("{}", star[1] - 1.0), format!("{}", star[1] + 1.0));
    let o = run(&[
        "field", "--problem", s(&config("tri_repelling")), "--s-min", &a0, "--s-max", &a1, "--s2-min", &b0, "--s2-max", &b1,
        "--resolution", "1", "--out", s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_field(dir.path());
    assert_eq!(rows.len(), 1);
    let xi = (rows[0][2].powi(2) + rows[0][3].powi(2)).sqrt();
    assert!(xi < 1e-8, "|xi(S*)| = {xi}");
}

#[test]
fn field_argument_errors() {
    assert_eq!(code(&run(&["field", "--problem", s(&config("case4")), "--resolution", "0"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let four = dir.path().join("four.json");
    std::fs::write(
        &four,
        r#"{"models": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]], "true_means": [0.5,0.4,0.3,0.2]}"#,
    )
    .unwrap();
    assert_eq!(code(&run(&["field", "--problem", s(&four), "--out", s(dir.path())])), 2);
    let o = run(&["field", "--problem", s(&four), "--slice", "0.5", "--resolution", "3", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_field(dir.path()).len(), 9);
}

#[test]
fn kernel_exp_outputs_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kernel-exp", "--m-list", "2,3", "--trials", "20000", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[2] <= v[4] && v[4] <= v[3], "theory inside CI: {row}");
    }
    let o = run(&["kernel-exp", "--m-list", "2", "--trials", "1", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("degenerate CI"));
    let o = run(&["kernel-exp", "--m-list", "10", "--trials", "10", "--out", s(dir.path())]);
    assert!(std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap().contains(",0.001953125"));
    assert_eq!(code(&o), 0);
    assert_eq!(code(&run(&["kernel-exp", "--m-list", "1,3"])), 2);
}
