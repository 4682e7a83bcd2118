//! Builds Gaussian problems from target vertex drifts and classifies them.
//!
//! ```text
//! cargo run --release --example design_problem            # print a report
//! cargo run --release --example design_problem -- out/    # also write JSON configs
//! ```

use std::path::PathBuf;

use tslab::classify::{classify, ClassifyConfig};
use tslab::design::{design_from_drifts, DesignConfig};
use tslab::drift::vertex_drift;

/// Named target geometries; the spectral pair share the uniform fixed point.
fn targets() -> Vec<(&'static str, Vec<Vec<f64>>, Option<f64>)> {
    let e = 0.1;
    vec![
        ("tri_repelling", vec![vec![2.0, 0.5], vec![-0.5, 2.0], vec![-1.5, -2.0]], None),
        ("tri_attracting", vec![vec![-2.0, -0.5], vec![0.5, -2.0], vec![1.5, 2.0]], None),
        ("tri_edge", vec![vec![-0.5, 1.5], vec![1.5, -0.5], vec![1.0, 1.0]], None),
        ("tri_dominant", vec![vec![1.0, 1.5], vec![-0.5, 1.0], vec![0.3, 0.8]], None),
        (
            "spectral_stable",
            vec![vec![-2.0 * e / 3.0, e / 3.0], vec![e / 3.0, -2.0 * e / 3.0], vec![e / 3.0, e / 3.0]],
            Some(3.0),
        ),
        (
            "spectral_unstable",
            vec![vec![2.0 * e / 3.0, -e / 3.0], vec![-e / 3.0, 2.0 * e / 3.0], vec![-e / 3.0, -e / 3.0]],
            Some(3.0),
        ),
    ]
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: Option<PathBuf> = std::env::args().nth(1).map(PathBuf::from);
    for (name, d, offset) in targets() {
        let cfg = DesignConfig { offset, ..DesignConfig::default() };
        let problem = design_from_drifts(&d, &cfg)?;
        let report = classify(&problem, &ClassifyConfig::default());
        println!("== {name} ==");
        for j in 0..d.len() {
            println!("  d(a_{}) = {:?}", j + 1, vertex_drift(&problem, j));
        }
        print!("{}", report.summary());
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.json"));
            std::fs::write(&path, serde_json::to_string_pretty(&problem.to_spec())? + "\n")?;
            println!("  wrote {}", path.display());
        }
    }
    Ok(())
}
