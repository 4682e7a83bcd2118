//! Classifies the four bundled two-model cases with the closed-form table.
//!
//! ```text
//! cargo run --release --example two_arm_classification
//! ```

use tslab::classify::classify_two_arm;
use tslab::BanditProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples");
    for n in 1..=4 {
        let problem = BanditProblem::from_json_file(format!("{dir}/case{n}.json"))?;
        let r = classify_two_arm(&problem)?;
        println!("case {n}: {:?}", r.label);
        println!("  deltas           = ({:+.4}, {:+.4})", r.deltas.0, r.deltas.1);
        println!("  limit law        = {:?}", r.predicted_limit);
        if let Some(p) = r.p_star_formula {
            println!("  mean-field p*    = {p:.4}");
        }
        match r.predicted_regret {
            Some(x) => println!("  long-run regret  = {x:.4}"),
            None => println!("  long-run regret  = {}", r.regret_formula),
        }
    }
    Ok(())
}
