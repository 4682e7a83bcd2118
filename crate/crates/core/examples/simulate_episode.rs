//! One Thompson Sampling episode: prints a thinned belief path and writes the
//! trajectory CSV (with its provenance sidecar) to a temporary directory.
//!
//! ```text
//! cargo run --release --example simulate_episode [-- path/to/problem.json]
//! ```

use tslab::{cumulative_regret, run_episode, BanditProblem, RngStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/case4.json").to_string());
    let problem = BanditProblem::from_json_file(&path)?;
    let traj = run_episode(&problem, 500, RngStream::new(7, 0));
    let regret = cumulative_regret(&traj);
    for (t, b) in traj.belief_path().into_iter().step_by(50) {
        println!("t={t:>3}  pi={:?}  cumulative regret {:.3}", b.probs(), if t == 0 { 0.0 } else { regret[t - 1] });
    }
    let out = std::env::temp_dir().join("tslab_episode.csv");
    traj.write_csv(&out, problem.num_models())?;
    println!("final belief {:?}; wrote {}", traj.final_belief().probs(), out.display());
    Ok(())
}
