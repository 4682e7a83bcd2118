//! File formats read by the plotting scripts, plus batch-level reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use serde_json::Value;
use tslab::lab::mc_batch;
use tslab::BanditProblem;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(format!("{name}.json"))
}

/// One directory populated by every subcommand, shared across tests.
fn outputs() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap().to_string();
        let runs: Vec<Vec<String>> = vec![
            vec!["simulate".into(), "--problem".into(), p("case4"), "--horizon".into(), "50".into()],
            vec![
                "mc".into(), "--problem".into(), p("case4"), "--reps".into(), "20".into(),
                "--stationary-horizon".into(), "5000".into(), "--chains".into(), "2".into(),
            ],
            vec!["field".into(), "--problem".into(), p("tri_repelling"), "--resolution".into(), "4".into()],
            vec!["kernel-exp".into(), "--m-list".into(), "2,3".into(), "--trials".into(), "100".into()],
        ];
        for mut args in runs {
            args.extend(["--out".into(), out.clone()]);
            let o = Command::new(env!("CARGO_BIN_EXE_tslab")).args(&args).output().unwrap();
            assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        }
        dir
    })
    .path()
}

fn p(name: &str) -> String {
    config(name).to_str().unwrap().to_string()
}

fn header(file: &str) -> Vec<String> {
    let text = std::fs::read_to_string(outputs().join(file)).unwrap();
    text.lines().next().unwrap().split(',').map(str::to_string).collect()
}

fn json(file: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(outputs().join(file)).unwrap()).unwrap()
}

fn has_keys(v: &Value, keys: &[&str]) {
    for k in keys {
        assert!(v.get(k).is_some(), "missing key {k} in {v}");
    }
}

fn check_provenance(v: &Value) {
    has_keys(&v["provenance"], &["problem_hash", "master_seed", "tool_version", "rng_algorithm"]);
    assert!(!v["provenance"]["problem_hash"].as_str().unwrap().is_empty());
}

fn check_sidecar(csv: &str) {
    check_provenance(&json(&format!("{csv}.meta.json")));
}

#[test]
fn trajectory_csv() {
    assert_eq!(header("trajectory.csv"), ["t", "action", "reward", "instant_regret", "pi_1", "pi_2"]);
    check_sidecar("trajectory.csv");
    has_keys(&json("trajectory.csv.meta.json")["details"], &["horizon", "seed", "stream_id", "thin"]);
}

#[test]
fn mean_paths_csv() {
    assert_eq!(header("mean_paths.csv"), ["t", "mean_pi_1", "mean_pi_2", "mean_regret"]);
    check_sidecar("mean_paths.csv");
}

#[test]
fn histogram_csv() {
    assert_eq!(header("histogram.csv"), ["bin_left", "bin_right", "count"]);
    check_sidecar("histogram.csv");
}

#[test]
fn field_csv() {
    assert_eq!(header("field.csv"), ["s1", "s2", "xi_1", "xi_2", "pi_1", "pi_2", "pi_3"]);
    check_sidecar("field.csv");
    has_keys(&json("field.csv.meta.json")["details"], &["fixed_point", "s_star", "s_range", "resolution"]);
}

#[test]
fn kernel_csv() {
    assert_eq!(header("kernel.csv"), ["m", "p_hat", "ci_lo", "ci_hi", "p_theory"]);
    check_sidecar("kernel.csv");
}

#[test]
fn classification_json() {
    let v = json("classification.json");
    check_provenance(&v);
    has_keys(
        &v,
        &["problem_hash", "num_models", "num_actions", "misspecified", "prescribed_actions", "tree", "geometry", "two_arm"],
    );
    has_keys(&v["geometry"], &["D", "G", "d_vectors", "fixed_point", "s_star"]);
    has_keys(&v["tree"], &["models", "verdict", "children", "conditions"]);
    has_keys(&v["two_arm"], &["label", "deltas", "p_star_formula", "p_star_mc", "predicted_action_probs"]);
}

#[test]
fn mc_summary_json() {
    let v = json("mc_summary.json");
    check_provenance(&v);
    has_keys(
        &v,
        &[
            "reps", "horizon", "path_t", "mean_belief_path", "mean_regret_path", "action_freq", "action_freq_ci",
            "mean_total_regret", "surviving_faces", "absorption", "stationary", "limiting",
        ],
    );
    has_keys(&v["stationary"], &["alpha_star", "histograms", "mean_belief", "action_freq"]);
    has_keys(&v["limiting"], &["predicted", "empirical", "empirical_ci"]);
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn terminal_pi1(seed: u64, reps: usize) -> Vec<f64> {
    let problem = BanditProblem::from_json_file(config("case4")).unwrap();
    mc_batch(&problem, 200, reps, seed).unwrap().terminal_beliefs.iter().map(|b| b[0]).collect()
}

#[test]
fn batches_reproduce_and_seeds_agree_statistically() {
    let a = terminal_pi1(11, 400);
    assert_eq!(a, terminal_pi1(11, 400));
    // Replication i is a function of (seed, i) only.
    assert_eq!(&a[..200], &terminal_pi1(11, 200)[..]);

    let (m1, s1) = mean_se(&a[..200]);
    let (m2, s2) = mean_se(&a[200..]);
    assert!((m1 - m2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt(), "halves {m1} vs {m2}");

    let b = terminal_pi1(12, 400);
    assert_ne!(a, b);
    let (ma, sa) = mean_se(&a);
    let (mb, sb) = mean_se(&b);
    assert!((ma - mb).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "seeds {ma} vs {mb}");
}
