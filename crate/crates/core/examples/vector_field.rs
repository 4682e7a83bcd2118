//! Mean drift field on a log-odds lattice, in the CSV layout the plotting
//! scripts read (`s1..,xi_1..,pi_1..`).
//!
//! ```text
//! cargo run --release --example vector_field > field.csv
//! ```

use tslab::cli::field_csv;
use tslab::drift::{mean_drift, DriftGeometry};
use tslab::{BanditProblem, LogOdds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/tri_repelling.json");
    let geom = DriftGeometry::from_problem(&BanditProblem::from_json_file(path)?);
    let axis: Vec<f64> = (0..=12).map(|i| -3.0 + 0.5 * i as f64).collect();
    print!("{}", field_csv(&geom, &[axis.clone(), axis], &[]));
    if let Some(s) = &geom.s_star {
        let xi = mean_drift(&geom, &LogOdds::new(s.as_slice().to_vec())?);
        eprintln!("S* = {:?}, |xi(S*)| = {:.2e}", s.as_slice(), xi.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(())
}
