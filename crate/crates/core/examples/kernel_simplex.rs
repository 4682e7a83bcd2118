//! How often the kernel of a random Gaussian (m-1) x m matrix meets the simplex.
//!
//! ```text
//! cargo run --release --example kernel_simplex
//! ```

use tslab::lab::kernel_simplex_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>3} {:>9} {:>21} {:>9} {:>6}", "m", "p_hat", "95% CI", "2^(1-m)", "in 3σ");
    for m in 2..=8 {
        let r = kernel_simplex_experiment(m, 100_000, 42)?;
        let ok = (r.p_hat - r.p_theory).abs() <= r.band_3sigma();
        println!("{m:>3} {:>9.5} [{:>8.5}, {:>8.5}] {:>9.5} {:>6}", r.p_hat, r.ci.0, r.ci.1, r.p_theory, ok);
    }
    Ok(())
}
