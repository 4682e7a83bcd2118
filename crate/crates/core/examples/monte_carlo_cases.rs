//! Replicates the four two-model cases: batch summary, plus the absorption
//! estimate where beliefs concentrate and the stationary estimate where they mix.
//!
//! ```text
//! cargo run --release --example monte_carlo_cases
//! ```

use tslab::classify::{classify, ClassifyConfig, TwoArmLabel};
use tslab::lab::{
    estimate_absorption, estimate_stationary, limiting_action_frequencies, mc_batch, AbsorptionConfig,
    StationaryConfig,
};
use tslab::BanditProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples");
    for n in 1..=4 {
        let problem = BanditProblem::from_json_file(format!("{dir}/case{n}.json"))?;
        let report = classify(&problem, &ClassifyConfig::default());
        let summary = mc_batch(&problem, 500, 300, 2024)?;
        let label = report.two_arm.as_ref().map(|t| t.label).expect("two-arm case");
        println!("case {n} ({label:?})");
        println!("  mean terminal belief  {:?}", summary.mean_belief_path.last().unwrap());
        println!("  mean total regret     {:.3}", summary.mean_total_regret);
        println!("  final-window freq     {:?}", summary.action_freq);
        match label {
            TwoArmLabel::SelfConfirming => {
                let a = estimate_absorption(&problem, &AbsorptionConfig::new(2000, 2024))?;
                println!(
                    "  absorption p_hat      {:.4} [{:.4}, {:.4}] (mean-field {:.4}), censored {}",
                    a.p_hat,
                    a.ci.0,
                    a.ci.1,
                    report.two_arm.as_ref().unwrap().p_star_formula.unwrap(),
                    a.censored_count
                );
            }
            TwoArmLabel::SelfDefeating => {
                let s = estimate_stationary(&problem, &StationaryConfig::new(100_000, 20, 2024))?;
                println!("  alpha*                {:.4}", s.alpha_star);
                println!("  mass in [0.1, 0.9]    {:.4}", s.histograms[0].mass_in(0.1, 0.9));
                println!("  regret per period     {:.4} vs (1 - alpha*) * 0.4 = {:.4}", s.mean_regret_per_period, (1.0 - s.alpha_star) * 0.4);
            }
            _ => {}
        }
        let lim = limiting_action_frequencies(&summary, &report)?;
        println!("  predicted alpha(a)    {:?} -> regret {:.4} ({})", lim.predicted, lim.predicted_regret, lim.basis);
    }
    Ok(())
}
