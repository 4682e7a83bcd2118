//! Drift geometry of a three-model problem: vertex drifts, fixed point,
//! hull membership, spectrum of Sym(G), angle audit and the small-noise gate.
//!
//! ```text
//! cargo run --release --example drift_geometry [-- path/to/problem.json]
//! ```

use tslab::drift::{noise_bound, AngleConfig, ConditionReport, DriftGeometry};
use tslab::BanditProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/spectral_stable.json").to_string());
    let problem = BanditProblem::from_json_file(&path)?;
    let geom = DriftGeometry::from_problem(&problem);
    for (j, d) in geom.d_vectors.iter().enumerate() {
        println!("d(a_{}) = {d:?}", j + 1);
    }
    println!("G = {:?}", geom.g.to_rows());
    println!("fixed point: {:?} ({:?})", geom.fixed_point.as_ref().map(|b| b.probs().to_vec()), geom.fixed_point_status);
    let report = ConditionReport::evaluate(&geom, noise_bound(&problem), Some(&AngleConfig::with_seed(1)));
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
