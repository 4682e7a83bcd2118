//! Command-line front end. Exit status: 0 success (including inconclusive
//! verdicts), 2 bad arguments or unreadable/malformed config, 3 invalid problem.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::belief::{softmax_slice, LogOdds};
use crate::classify::{classify, ClassificationReport, ClassifyConfig, TwoArmLabel, Verdict};
use crate::drift::{mean_drift, AngleConfig, DriftGeometry};
use crate::engine::run_episode_thinned;
use crate::error::Error;
use crate::export::{write_json_report, write_with_sidecar, Provenance};
use crate::lab::{
    estimate_absorption, estimate_stationary, kernel_simplex_experiment, limiting_action_frequencies, mc_batch_with,
    AbsorptionConfig, McConfig, StationaryConfig, DEFAULT_BINS, DEFAULT_BURN_IN_FRAC, DEFAULT_EPS_FACE, DEFAULT_S_ABS,
};
use crate::problem::BanditProblem;
use crate::rng::RngStream;

#[derive(Debug, Parser)]
#[command(name = "tslab", version, about = "Thompson Sampling under misspecification: classify, simulate, replicate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a problem and write classification.json.
    Classify(ClassifyArgs),
    /// Run one episode and write its trajectory CSV.
    Simulate(SimulateArgs),
    /// Replicated episodes plus absorption or stationary estimates.
    Mc(McArgs),
    /// Mean drift field on a lattice of log-odds.
    Field(FieldArgs),
    /// Random-kernel simplex experiment.
    KernelExp(KernelArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem JSON file.
    #[arg(long)]
    pub problem: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Recursion cap for the regime tree.
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 500)]
    pub horizon: usize,
    /// Stream id within the master seed.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Record beliefs every `thin` rounds.
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 500)]
    pub horizon: usize,
    #[arg(long, default_value_t = 300)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_EPS_FACE)]
    pub eps_face: f64,
    /// Absorption threshold on |S|.
    #[arg(long, default_value_t = DEFAULT_S_ABS)]
    pub s_abs: f64,
    #[arg(long, default_value_t = 100_000)]
    pub horizon_cap: usize,
    /// Replications for the absorption estimate; defaults to --reps.
    #[arg(long)]
    pub abs_reps: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub stationary_horizon: usize,
    #[arg(long, default_value_t = 20)]
    pub chains: usize,
    #[arg(long, default_value_t = DEFAULT_BURN_IN_FRAC)]
    pub burn_in_frac: f64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    pub s_min: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub s_max: f64,
    /// Range of the second axis; defaults to the first.
    #[arg(long, allow_negative_numbers = true)]
    pub s2_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s2_max: Option<f64>,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 25)]
    pub resolution: usize,
    /// Fixed values for coordinates 3..M-1, comma separated (required when M > 3).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub slice: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    pub m_list: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Problem(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Problem(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidProblem { .. } => Failure::Problem(e.to_string()),
            Error::Io(_) | Error::Json(_) | Error::InvalidArgument(_) => Failure::Config(e.to_string()),
            other => Failure::Problem(other.to_string()),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn load(path: &Path) -> std::result::Result<BanditProblem, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
    BanditProblem::from_json_str(&text).map_err(|e| match e {
        Error::Json(j) => config(format!("malformed problem file {}: {j}", path.display())),
        other => other.into(),
    })
}

fn out_dir(p: &Path) -> std::result::Result<(), Failure> {
    std::fs::create_dir_all(p).map_err(|e| config(format!("cannot create {}: {e}", p.display())))
}

/// Parses `args` and runs the command; the return value is the process exit status.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let res = match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Field(a) => cmd_field(a),
        Command::KernelExp(a) => cmd_kernel_exp(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Problem(m) => eprintln!("invalid problem: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn classify_cfg(seed: u64, max_depth: usize) -> ClassifyConfig {
    ClassifyConfig { max_depth, angle: AngleConfig::with_seed(seed) }
}

pub fn cmd_classify(a: &ClassifyArgs) -> CmdResult {
    let problem = load(&a.common.problem)?;
    if a.max_depth == 0 {
        return Err(config("--max-depth must be at least 1"));
    }
    out_dir(&a.common.out)?;
    let report = classify(&problem, &classify_cfg(a.common.seed, a.max_depth));
    let prov = Provenance::new(&report.problem_hash, a.common.seed);
    write_json_report(&a.common.out.join("classification.json"), &report, &prov)?;
    print!("{}", report.summary());
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    if a.horizon == 0 {
        return Err(config("--horizon must be at least 1"));
    }
    if a.thin == 0 {
        return Err(config("--thin must be at least 1"));
    }
    let problem = load(&a.common.problem)?;
    out_dir(&a.common.out)?;
    let traj = run_episode_thinned(&problem, a.horizon, RngStream::new(a.common.seed, a.stream), a.thin);
    let path = a.common.out.join("trajectory.csv");
    traj.write_csv(&path, problem.num_models())?;
    let total: f64 = traj.steps.iter().map(|s| s.instant_regret).sum();
    println!("wrote {} ({} rounds, cumulative regret {total:.4})", path.display(), a.horizon);
    Ok(())
}

fn wants_stationary(report: &ClassificationReport) -> bool {
    match &report.two_arm {
        Some(t) => matches!(t.label, TwoArmLabel::SelfDefeating | TwoArmLabel::AgreementZero),
        None => report
            .tree
            .leaves()
            .iter()
            .any(|l| l.verdict == Verdict::InteriorErgodic || l.verdict == Verdict::Inconclusive && l.models.len() > 1),
    }
}

fn wants_absorption(report: &ClassificationReport) -> bool {
    report.num_models == 2
        && report.two_arm.as_ref().is_some_and(|t| {
            matches!(
                t.label,
                TwoArmLabel::SelfConfirming | TwoArmLabel::UniformDominanceNu | TwoArmLabel::UniformDominanceGamma
            )
        })
}

pub fn cmd_mc(a: &McArgs) -> CmdResult {
    if a.horizon == 0 || a.reps == 0 {
        return Err(config("--horizon and --reps must be at least 1"));
    }
    if !(a.s_abs > 0.0) || a.horizon_cap == 0 || a.abs_reps == Some(0) {
        return Err(config("--s-abs, --horizon-cap and --abs-reps must be positive"));
    }
    if !(0.0..1.0).contains(&a.burn_in_frac) || a.bins == 0 || a.chains == 0 || a.stationary_horizon == 0 {
        return Err(config("stationary settings out of range"));
    }
    if !(a.eps_face > 0.0 && a.eps_face < 1.0) {
        return Err(config("--eps-face must lie in (0, 1)"));
    }
    let problem = load(&a.common.problem)?;
    out_dir(&a.common.out)?;
    let seed = a.common.seed;
    let mut mc = McConfig::new(a.horizon, a.reps, seed);
    mc.eps_face = a.eps_face;
    let mut summary = mc_batch_with(&problem, &mc)?;
    let mut report = classify(&problem, &classify_cfg(seed, 8));

    if wants_absorption(&report) {
        let cfg = AbsorptionConfig {
            s_abs: a.s_abs,
            horizon_cap: a.horizon_cap,
            reps: a.abs_reps.unwrap_or(a.reps),
            master_seed: seed,
            s0: None,
        };
        let est = estimate_absorption(&problem, &cfg)?;
        if let Some(t) = report.two_arm.as_mut() {
            t.p_star_mc = Some(est.p_hat);
        }
        summary.absorption = Some(est);
    }
    if wants_stationary(&report) {
        let burn_in = (a.stationary_horizon as f64 * a.burn_in_frac) as usize;
        let cfg = StationaryConfig { horizon: a.stationary_horizon, burn_in, bins: a.bins, chains: a.chains, master_seed: seed };
        let est = estimate_stationary(&problem, &cfg)?;
        for h in &est.histograms {
            let name = if h.coordinate == 0 { "histogram.csv".to_string() } else { format!("histogram_pi_{}.csv", h.coordinate + 1) };
            if h.coordinate > 0 && problem.num_models() == 2 {
                continue;
            }
            let details = json!({ "coordinate": h.coordinate + 1, "burn_in": est.burn_in, "horizon": est.horizon, "chains": est.chains });
            write_with_sidecar(&a.common.out.join(name), h.to_csv().as_bytes(), &summary.provenance, details)?;
        }
        summary.stationary = Some(est);
    }

    let limiting = limiting_action_frequencies(&summary, &report)?;
    let dir = &a.common.out;
    let details = json!({ "reps": summary.reps, "horizon": summary.horizon, "path_stride": summary.path_stride });
    write_with_sidecar(&dir.join("mean_paths.csv"), summary.paths_csv().as_bytes(), &summary.provenance, details)?;
    let mut doc = serde_json::to_value(&summary).map_err(Error::from)?;
    doc["limiting"] = serde_json::to_value(&limiting).map_err(Error::from)?;
    std::fs::write(dir.join("mc_summary.json"), serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n")
        .map_err(Error::from)?;
    write_json_report(&dir.join("classification.json"), &report, &summary.provenance)?;

    let mut msg = String::new();
    let _ = writeln!(msg, "{} reps x {} rounds, mean total regret {:.4}", summary.reps, summary.horizon, summary.mean_total_regret);
    let _ = writeln!(msg, "final-window action frequencies {:?} (+/- {:?})", summary.action_freq, summary.action_freq_ci);
    for (face, f) in summary.face_frequencies() {
        let _ = writeln!(msg, "  surviving face {face}: {f:.3}");
    }
    if let Some(abs) = &summary.absorption {
        let _ = writeln!(
            msg,
            "absorption: p_hat = {:.4} CI [{:.4}, {:.4}], absorbed {}, censored {}",
            abs.p_hat, abs.ci.0, abs.ci.1, abs.absorbed_count, abs.censored_count
        );
        if let Some(p) = report.two_arm.as_ref().and_then(|t| t.p_star_formula) {
            let _ = writeln!(msg, "  mean-field p* = {p:.4}");
        }
    }
    if let Some(st) = &summary.stationary {
        let _ = writeln!(msg, "stationary: alpha* = {:.4}, regret/period {:.4}", st.alpha_star, st.mean_regret_per_period);
    }
    let _ = writeln!(msg, "predicted action probabilities {:?} ({}), regret {:.4}", limiting.predicted, limiting.basis, limiting.predicted_regret);
    print!("{msg}");
    Ok(())
}

fn lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// CSV rows `s_1..,xi_1..,pi_1..` over the requested lattice.
pub fn field_csv(geom: &DriftGeometry, axes: &[Vec<f64>], slice: &[f64]) -> String {
    let dim = geom.dim();
    let mut out = String::new();
    let header: Vec<String> = (1..=dim)
        .map(|k| format!("s{k}"))
        .chain((1..=dim).map(|k| format!("xi_{k}")))
        .chain((1..=dim + 1).map(|k| format!("pi_{k}")))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for axis in axes {
        points = points.into_iter().flat_map(|p| axis.iter().map(move |x| [p.clone(), vec![*x]].concat())).collect();
    }
    for p in points {
        let s: Vec<f64> = p.into_iter().chain(slice.iter().copied()).collect();
        let xi = mean_drift(geom, &LogOdds::new(s.clone()).expect("finite lattice"));
        let pi = softmax_slice(&s);
        let row: Vec<String> = s.iter().chain(&xi).chain(&pi).map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn cmd_field(a: &FieldArgs) -> CmdResult {
    if a.resolution == 0 {
        return Err(config("--resolution must be at least 1"));
    }
    let (lo2, hi2) = (a.s2_min.unwrap_or(a.s_min), a.s2_max.unwrap_or(a.s_max));
    if !(a.s_min < a.s_max && lo2 < hi2) || [a.s_min, a.s_max, lo2, hi2].iter().any(|x| !x.is_finite()) {
        return Err(config("axis ranges must be finite with min < max"));
    }
    let problem = load(&a.common.problem)?;
    let dim = problem.num_models() - 1;
    let slice = a.slice.clone().unwrap_or_default();
    let free = dim.min(2);
    if dim > 2 && slice.len() != dim - 2 {
        return Err(config(format!("{dim}-dimensional log-odds need --slice with {} values", dim - 2)));
    }
    if dim <= 2 && !slice.is_empty() {
        return Err(config("--slice only applies when there are more than three models"));
    }
    if slice.iter().any(|x| !x.is_finite()) {
        return Err(config("--slice values must be finite"));
    }
    out_dir(&a.common.out)?;
    let geom = DriftGeometry::from_problem(&problem);
    let mut axes = vec![lattice(a.s_min, a.s_max, a.resolution)];
    if free == 2 {
        axes.push(lattice(lo2, hi2, a.resolution));
    }
    let csv = field_csv(&geom, &axes, &slice);
    let prov = Provenance::new(&problem.hash(), a.common.seed);
    let details = json!({
        "resolution": a.resolution,
        "s_range": [a.s_min, a.s_max],
        "s2_range": if free == 2 { json!([lo2, hi2]) } else { json!(null) },
        "slice": slice,
        "fixed_point": geom.fixed_point,
        "s_star": geom.s_star,
    });
    let path = a.common.out.join("field.csv");
    write_with_sidecar(&path, csv.as_bytes(), &prov, details)?;
    println!("wrote {} ({} lattice points)", path.display(), a.resolution.pow(free as u32));
    Ok(())
}

pub fn cmd_kernel_exp(a: &KernelArgs) -> CmdResult {
    if a.m_list.is_empty() {
        return Err(config("--m-list is empty"));
    }
    if let Some(bad) = a.m_list.iter().find(|&&m| m < 2) {
        return Err(config(format!("every m must be at least 2 (got {bad})")));
    }
    if a.trials == 0 {
        return Err(config("--trials must be at least 1"));
    }
    out_dir(&a.out)?;
    let mut csv = String::from("m,p_hat,ci_lo,ci_hi,p_theory\n");
    let mut flags = Vec::new();
    for &m in &a.m_list {
        let r = kernel_simplex_experiment(m, a.trials, a.seed)?;
        let _ = writeln!(csv, "{},{},{},{},{}", r.m, r.p_hat, r.ci.0, r.ci.1, r.p_theory);
        println!(
            "m={m}: p_hat={:.5} CI [{:.5}, {:.5}] theory {:.5}{}",
            r.p_hat,
            r.ci.0,
            r.ci.1,
            r.p_theory,
            if r.degenerate_ci { "  (degenerate CI)" } else { "" }
        );
        flags.push(json!({ "m": m, "hits": r.hits, "degenerate_ci": r.degenerate_ci }));
    }
    let prov = Provenance::new("none", a.seed);
    write_with_sidecar(&a.out.join("kernel.csv"), csv.as_bytes(), &prov, json!({ "trials": a.trials, "rows": flags }))?;
    Ok(())
}
