//! Recursive regime trees for the bundled three-model geometries.
//!
//! ```text
//! cargo run --release --example multi_model_classification
//! ```

use tslab::classify::{classify, ClassifyConfig};
use tslab::BanditProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples");
    for name in ["tri_repelling", "tri_attracting", "tri_edge", "tri_dominant", "spectral_stable", "spectral_unstable"] {
        let problem = BanditProblem::from_json_file(format!("{dir}/{name}.json"))?;
        let report = classify(&problem, &ClassifyConfig::default());
        println!("== {name}: {:?} (depth {})", report.tree.verdict, report.tree.depth());
        print!("{}", report.tree.render());
    }
    Ok(())
}
