//! Replicated experiments: batch summaries, absorption and stationary
//! estimators, surviving-face detection and the random-kernel experiment.
//!
//! Replication `i` always draws from stream `i` of the master seed, and
//! partial sums are combined in replication order, so every estimate is
//! bit-identical regardless of how rayon schedules the work.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{softmax_slice, LogOdds};
use crate::classify::ClassificationReport;
use crate::engine::{Chain, Trajectory};
use crate::error::{Error, Result};
use crate::export::Provenance;
use crate::linalg::{null_vector, Matrix};
use crate::problem::{BanditProblem, ModelSet};
use crate::rng::RngStream;

pub const DEFAULT_S_ABS: f64 = 20.0;
pub const DEFAULT_EPS_FACE: f64 = 1e-3;
pub const DEFAULT_WINDOW_FRAC: f64 = 0.1;
pub const DEFAULT_BURN_IN_FRAC: f64 = 0.2;
pub const DEFAULT_BINS: usize = 50;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Replications summed sequentially inside one parallel task.
const CHUNK: usize = 8;
/// Mean paths are stored at no more than this many time points.
const MAX_PATH_POINTS: usize = 10_000;

/// Normal-approximation interval for a binomial proportion, clipped to [0, 1].
pub fn wald_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let p = successes as f64 / n as f64;
    let h = Z95 * (p * (1.0 - p) / n as f64).sqrt();
    ((p - h).max(0.0), (p + h).min(1.0))
}

fn final_window(horizon: usize, frac: f64) -> usize {
    ((horizon as f64 * frac).ceil() as usize).clamp(1, horizon.max(1))
}

/// Probability of each action under a belief: mass of the models prescribing it.
fn action_probs(probs: &[f64], prescribed: &[usize], num_actions: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_actions];
    for (p, &a) in probs.iter().zip(prescribed) {
        out[a] += p;
    }
    out
}

// ---------------------------------------------------------------------------
// Batch summary

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub horizon: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub eps_face: f64,
    /// Fraction of the horizon used for terminal frequencies and face detection.
    pub window_frac: f64,
    /// Record the mean paths every `path_stride` rounds; 0 picks a stride automatically.
    pub path_stride: usize,
}

impl McConfig {
    pub fn new(horizon: usize, reps: usize, master_seed: u64) -> Self {
        Self { horizon, reps, master_seed, eps_face: DEFAULT_EPS_FACE, window_frac: DEFAULT_WINDOW_FRAC, path_stride: 0 }
    }

    fn stride(&self) -> usize {
        if self.path_stride > 0 {
            self.path_stride
        } else {
            self.horizon.div_ceil(MAX_PATH_POINTS).max(1)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if !(self.window_frac > 0.0 && self.window_frac <= 1.0) {
            return Err(Error::InvalidArgument("window fraction must lie in (0, 1]".into()));
        }
        if !(self.eps_face > 0.0 && self.eps_face < 1.0) {
            return Err(Error::InvalidArgument("eps_face must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Replications that ended with the same surviving face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceCount {
    pub face: ModelSet,
    pub count: usize,
    /// Final-window time average of each action's selection probability,
    /// averaged over the replications on this face.
    pub mean_action_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionEstimate {
    pub s_abs: f64,
    pub horizon_cap: usize,
    pub reps: usize,
    /// Runs that reached `S ≥ s_abs` (the first model wins).
    pub absorbed_plus: usize,
    pub absorbed_minus: usize,
    pub absorbed_count: usize,
    pub censored_count: usize,
    pub censored_fraction: f64,
    /// Fraction of absorbed runs that ended at the first model.
    pub p_hat: f64,
    pub ci: (f64, f64),
    /// Largest distance from the nearest vertex among absorbed runs.
    pub max_vertex_distance: f64,
    pub mean_absorption_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// 0-based model whose posterior mass is binned.
    pub coordinate: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(coordinate: usize, bins: usize) -> Self {
        let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
        Self { coordinate, edges, counts: vec![0; bins] }
    }

    fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let i = ((x * bins as f64) as usize).min(bins - 1);
        self.counts[i] += 1;
    }

    fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of samples in bins lying entirely inside `[lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let tol = 1e-12;
        let inside: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(i, _)| self.edges[*i] >= lo - tol && self.edges[i + 1] <= hi + tol)
            .map(|(_, c)| c)
            .sum();
        inside as f64 / self.total().max(1) as f64
    }

    /// `bin_left,bin_right,count`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], c);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryEstimate {
    pub horizon: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub samples: u64,
    /// One histogram per model coordinate.
    pub histograms: Vec<Histogram>,
    /// Time-average posterior mass of each model after burn-in.
    pub mean_belief: Vec<f64>,
    /// Time-average mass of the first model.
    pub alpha_star: f64,
    /// Time average of each action's selection probability after burn-in.
    pub mean_action_probs: Vec<f64>,
    /// Realized action frequencies after burn-in.
    pub action_freq: Vec<f64>,
    pub mean_regret_per_period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub reps: usize,
    pub horizon: usize,
    pub master_seed: u64,
    pub problem_hash: String,
    pub num_models: usize,
    pub num_actions: usize,
    pub path_stride: usize,
    /// Rounds at which the mean paths are recorded (1-based: after `t` updates).
    pub path_t: Vec<usize>,
    /// Mean posterior after each recorded round, one row per entry of `path_t`.
    pub mean_belief_path: Vec<Vec<f64>>,
    /// Mean cumulative regret after each recorded round.
    pub mean_regret_path: Vec<f64>,
    pub window: usize,
    /// Action frequencies over the final window, pooled over replications.
    pub action_freq: Vec<f64>,
    /// 95% half-widths, treating per-replication window frequencies as i.i.d.
    pub action_freq_ci: Vec<f64>,
    /// Action frequencies over the whole run.
    pub action_freq_full: Vec<f64>,
    /// Mean cumulative regret at the horizon.
    pub mean_total_regret: f64,
    pub terminal_beliefs: Vec<Vec<f64>>,
    pub surviving_faces: Vec<FaceCount>,
    pub eps_face: f64,
    pub absorption: Option<AbsorptionEstimate>,
    pub stationary: Option<StationaryEstimate>,
    pub provenance: Provenance,
}

impl McSummary {
    /// `t,mean_pi_1..mean_pi_M,mean_regret`
    pub fn paths_csv(&self) -> String {
        let mut out = String::from("t");
        for j in 1..=self.num_models {
            let _ = write!(out, ",mean_pi_{j}");
        }
        out.push_str(",mean_regret\n");
        for ((t, b), r) in self.path_t.iter().zip(&self.mean_belief_path).zip(&self.mean_regret_path) {
            let _ = write!(out, "{t}");
            for x in b {
                let _ = write!(out, ",{x}");
            }
            let _ = writeln!(out, ",{r}");
        }
        out
    }

    /// Frequency of each detected face, keyed by its display form.
    pub fn face_frequencies(&self) -> BTreeMap<String, f64> {
        self.surviving_faces.iter().map(|f| (f.face.to_string(), f.count as f64 / self.reps as f64)).collect()
    }
}

struct RepOutcome {
    terminal: Vec<f64>,
    face: ModelSet,
    window_counts: Vec<u64>,
    full_counts: Vec<u64>,
    window_probs: Vec<f64>,
}

struct PartialSums {
    belief: Vec<f64>,
    regret: Vec<f64>,
    reps: Vec<RepOutcome>,
}

fn run_rep(problem: &BanditProblem, cfg: &McConfig, stream: RngStream, stride: usize, sums: &mut PartialSums) {
    let (m, a_count, horizon) = (problem.num_models(), problem.num_actions(), cfg.horizon);
    let window = final_window(horizon, cfg.window_frac);
    let prescribed = problem.prescribed_actions();
    let mut chain = Chain::new(problem, stream);
    let mut regret = 0.0;
    let mut window_counts = vec![0u64; a_count];
    let mut full_counts = vec![0u64; a_count];
    let mut window_probs = vec![0.0; a_count];
    let mut max_mass = vec![0.0f64; m];
    let mut point = 0;
    for t in 0..horizon {
        let in_window = t >= horizon - window;
        if in_window {
            let probs = softmax_slice(chain.log_odds());
            for (j, p) in probs.iter().enumerate() {
                max_mass[j] = max_mass[j].max(*p);
            }
            for (acc, p) in window_probs.iter_mut().zip(action_probs(&probs, &prescribed, a_count)) {
                *acc += p;
            }
        }
        let round = chain.step();
        regret += problem.per_period_regret(round.action);
        full_counts[round.action] += 1;
        if in_window {
            window_counts[round.action] += 1;
        }
        let done = t + 1;
        if done % stride == 0 || done == horizon {
            let probs = softmax_slice(chain.log_odds());
            for (acc, p) in sums.belief[point * m..(point + 1) * m].iter_mut().zip(&probs) {
                *acc += p;
            }
            sums.regret[point] += regret;
            point += 1;
        }
    }
    let terminal = softmax_slice(chain.log_odds());
    for (j, p) in terminal.iter().enumerate() {
        max_mass[j] = max_mass[j].max(*p);
    }
    let face = face_from_max_mass(&max_mass, cfg.eps_face);
    window_probs.iter_mut().for_each(|p| *p /= window as f64);
    sums.reps.push(RepOutcome { terminal, face, window_counts, full_counts, window_probs });
}

fn face_from_max_mass(max_mass: &[f64], eps: f64) -> ModelSet {
    let kept: Vec<usize> = (0..max_mass.len()).filter(|&j| max_mass[j] > eps).collect();
    if kept.is_empty() {
        ModelSet::all(max_mass.len())
    } else {
        ModelSet(kept)
    }
}

fn path_times(horizon: usize, stride: usize) -> Vec<usize> {
    let mut t: Vec<usize> = (1..=horizon).filter(|t| t % stride == 0).collect();
    if t.last() != Some(&horizon) {
        t.push(horizon);
    }
    t
}

/// Runs `reps` independent episodes and aggregates them.
pub fn mc_batch(problem: &BanditProblem, horizon: usize, reps: usize, master_seed: u64) -> Result<McSummary> {
    mc_batch_with(problem, &McConfig::new(horizon, reps, master_seed))
}

pub fn mc_batch_with(problem: &BanditProblem, cfg: &McConfig) -> Result<McSummary> {
    cfg.validate()?;
    let (m, a_count) = (problem.num_models(), problem.num_actions());
    let stride = cfg.stride();
    let times = path_times(cfg.horizon, stride);
    let points = times.len();
    let chunks: Vec<PartialSums> = (0..cfg.reps.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sums = PartialSums { belief: vec![0.0; points * m], regret: vec![0.0; points], reps: Vec::new() };
            for rep in c * CHUNK..((c + 1) * CHUNK).min(cfg.reps) {
                run_rep(problem, cfg, RngStream::new(cfg.master_seed, rep as u64), stride, &mut sums);
            }
            sums
        })
        .collect();

    let n = cfg.reps as f64;
    let mut belief = vec![0.0; points * m];
    let mut regret = vec![0.0; points];
    for c in &chunks {
        belief.iter_mut().zip(&c.belief).for_each(|(a, b)| *a += b);
        regret.iter_mut().zip(&c.regret).for_each(|(a, b)| *a += b);
    }
    let reps: Vec<&RepOutcome> = chunks.iter().flat_map(|c| &c.reps).collect();
    let window = final_window(cfg.horizon, cfg.window_frac);

    let mut window_counts = vec![0u64; a_count];
    let mut full_counts = vec![0u64; a_count];
    for r in &reps {
        window_counts.iter_mut().zip(&r.window_counts).for_each(|(a, b)| *a += b);
        full_counts.iter_mut().zip(&r.full_counts).for_each(|(a, b)| *a += b);
    }
    let action_freq: Vec<f64> = window_counts.iter().map(|&c| c as f64 / (n * window as f64)).collect();
    let action_freq_ci = (0..a_count)
        .map(|a| {
            if cfg.reps < 2 {
                return 0.0;
            }
            let var = reps
                .iter()
                .map(|r| (r.window_counts[a] as f64 / window as f64 - action_freq[a]).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            Z95 * (var / n).sqrt()
        })
        .collect();

    let mut faces: BTreeMap<ModelSet, (usize, Vec<f64>)> = BTreeMap::new();
    for r in &reps {
        let e = faces.entry(r.face.clone()).or_insert_with(|| (0, vec![0.0; a_count]));
        e.0 += 1;
        e.1.iter_mut().zip(&r.window_probs).for_each(|(a, b)| *a += b);
    }
    let surviving_faces = faces
        .into_iter()
        .map(|(face, (count, probs))| FaceCount {
            face,
            count,
            mean_action_probs: probs.into_iter().map(|p| p / count as f64).collect(),
        })
        .collect();

    let mean_regret_path: Vec<f64> = regret.iter().map(|r| r / n).collect();
    Ok(McSummary {
        reps: cfg.reps,
        horizon: cfg.horizon,
        master_seed: cfg.master_seed,
        problem_hash: problem.hash(),
        num_models: m,
        num_actions: a_count,
        path_stride: stride,
        path_t: times,
        mean_belief_path: belief.chunks(m).map(|row| row.iter().map(|x| x / n).collect()).collect(),
        mean_total_regret: *mean_regret_path.last().expect("horizon >= 1"),
        mean_regret_path,
        window,
        action_freq,
        action_freq_ci,
        action_freq_full: full_counts.iter().map(|&c| c as f64 / (n * cfg.horizon as f64)).collect(),
        terminal_beliefs: reps.iter().map(|r| r.terminal.clone()).collect(),
        surviving_faces,
        eps_face: cfg.eps_face,
        absorption: None,
        stationary: None,
        provenance: Provenance::new(&problem.hash(), cfg.master_seed),
    })
}

// ---------------------------------------------------------------------------
// Absorption

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionConfig {
    pub s_abs: f64,
    pub horizon_cap: usize,
    pub reps: usize,
    pub master_seed: u64,
    /// Starting log-odds; the prior's when absent.
    pub s0: Option<f64>,
}

impl AbsorptionConfig {
    pub fn new(reps: usize, master_seed: u64) -> Self {
        Self { s_abs: DEFAULT_S_ABS, horizon_cap: 100_000, reps, master_seed, s0: None }
    }
}

enum Fate {
    Plus(usize),
    Minus(usize),
    Censored,
}

/// Runs each replication until `|S| ≥ s_abs` or the cap.
pub fn estimate_absorption(problem: &BanditProblem, cfg: &AbsorptionConfig) -> Result<AbsorptionEstimate> {
    if problem.num_models() != 2 {
        return Err(Error::NotTwoModel(problem.num_models()));
    }
    if !(cfg.s_abs > 0.0 && cfg.s_abs.is_finite()) {
        return Err(Error::InvalidArgument("s_abs must be a positive real".into()));
    }
    if cfg.reps == 0 || cfg.horizon_cap == 0 {
        return Err(Error::InvalidArgument("reps and horizon cap must be at least 1".into()));
    }
    let fates: Vec<(Fate, f64)> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let stream = RngStream::new(cfg.master_seed, rep as u64);
            let mut chain = match cfg.s0 {
                Some(s) => Chain::from_log_odds(problem, LogOdds::new(vec![s]).expect("finite start"), stream),
                None => Chain::new(problem, stream),
            };
            for t in 1..=cfg.horizon_cap {
                chain.step();
                let s = chain.log_odds()[0];
                if s.abs() >= cfg.s_abs {
                    let p = softmax_slice(chain.log_odds());
                    let dist = p[0].min(p[1]) * std::f64::consts::SQRT_2;
                    return (if s > 0.0 { Fate::Plus(t) } else { Fate::Minus(t) }, dist);
                }
            }
            (Fate::Censored, f64::NAN)
        })
        .collect();
    let (mut plus, mut minus, mut censored, mut time_sum) = (0usize, 0usize, 0usize, 0.0);
    let mut max_dist = 0.0f64;
    for (f, d) in &fates {
        match f {
            Fate::Plus(t) => {
                plus += 1;
                time_sum += *t as f64;
            }
            Fate::Minus(t) => {
                minus += 1;
                time_sum += *t as f64;
            }
            Fate::Censored => {
                censored += 1;
                continue;
            }
        }
        max_dist = max_dist.max(*d);
    }
    let absorbed = plus + minus;
    Ok(AbsorptionEstimate {
        s_abs: cfg.s_abs,
        horizon_cap: cfg.horizon_cap,
        reps: cfg.reps,
        absorbed_plus: plus,
        absorbed_minus: minus,
        absorbed_count: absorbed,
        censored_count: censored,
        censored_fraction: censored as f64 / cfg.reps as f64,
        p_hat: if absorbed > 0 { plus as f64 / absorbed as f64 } else { f64::NAN },
        ci: wald_interval(plus, absorbed),
        max_vertex_distance: max_dist,
        mean_absorption_time: if absorbed > 0 { time_sum / absorbed as f64 } else { f64::NAN },
    })
}

// ---------------------------------------------------------------------------
// Stationary law

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryConfig {
    pub horizon: usize,
    pub burn_in: usize,
    pub bins: usize,
    pub chains: usize,
    pub master_seed: u64,
}

impl StationaryConfig {
    /// Burn-in defaults to 20% of the horizon.
    pub fn new(horizon: usize, chains: usize, master_seed: u64) -> Self {
        let burn_in = (horizon as f64 * DEFAULT_BURN_IN_FRAC) as usize;
        Self { horizon, burn_in, bins: DEFAULT_BINS, chains, master_seed }
    }
}

struct StationarySums {
    hist: Vec<Histogram>,
    belief: Vec<f64>,
    probs: Vec<f64>,
    counts: Vec<u64>,
    regret: f64,
}

/// Pools `chains` long runs after discarding the burn-in.
pub fn estimate_stationary(problem: &BanditProblem, cfg: &StationaryConfig) -> Result<StationaryEstimate> {
    if cfg.horizon == 0 || cfg.chains == 0 || cfg.bins == 0 {
        return Err(Error::InvalidArgument("horizon, chains and bins must be at least 1".into()));
    }
    if cfg.burn_in >= cfg.horizon {
        return Err(Error::InvalidArgument("burn-in must be shorter than the horizon".into()));
    }
    let (m, a_count) = (problem.num_models(), problem.num_actions());
    let prescribed = problem.prescribed_actions();
    let per_chain: Vec<StationarySums> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut chain = Chain::new(problem, RngStream::new(cfg.master_seed, c as u64));
            let mut s = StationarySums {
                hist: (0..m).map(|j| Histogram::new(j, cfg.bins)).collect(),
                belief: vec![0.0; m],
                probs: vec![0.0; a_count],
                counts: vec![0; a_count],
                regret: 0.0,
            };
            for t in 0..cfg.horizon {
                if t >= cfg.burn_in {
                    let p = softmax_slice(chain.log_odds());
                    for (j, x) in p.iter().enumerate() {
                        s.hist[j].add(*x);
                        s.belief[j] += x;
                    }
                    s.probs.iter_mut().zip(action_probs(&p, &prescribed, a_count)).for_each(|(a, b)| *a += b);
                    let round = chain.step();
                    s.counts[round.action] += 1;
                    s.regret += problem.per_period_regret(round.action);
                } else {
                    chain.step();
                }
            }
            s
        })
        .collect();
    let mut hist: Vec<Histogram> = (0..m).map(|j| Histogram::new(j, cfg.bins)).collect();
    let (mut belief, mut probs, mut counts, mut regret) = (vec![0.0; m], vec![0.0; a_count], vec![0u64; a_count], 0.0);
    for s in &per_chain {
        hist.iter_mut().zip(&s.hist).for_each(|(a, b)| a.merge(b));
        belief.iter_mut().zip(&s.belief).for_each(|(a, b)| *a += b);
        probs.iter_mut().zip(&s.probs).for_each(|(a, b)| *a += b);
        counts.iter_mut().zip(&s.counts).for_each(|(a, b)| *a += b);
        regret += s.regret;
    }
    let samples = (cfg.chains * (cfg.horizon - cfg.burn_in)) as u64;
    let n = samples as f64;
    let mean_belief: Vec<f64> = belief.iter().map(|x| x / n).collect();
    Ok(StationaryEstimate {
        horizon: cfg.horizon,
        burn_in: cfg.burn_in,
        chains: cfg.chains,
        samples,
        histograms: hist,
        alpha_star: mean_belief[0],
        mean_belief,
        mean_action_probs: probs.iter().map(|x| x / n).collect(),
        action_freq: counts.iter().map(|&c| c as f64 / n).collect(),
        mean_regret_per_period: regret / n,
    })
}

// ---------------------------------------------------------------------------
// Faces

/// Models whose posterior mass exceeded `eps_face` at least once among the
/// last `window` rounds (recorded beliefs plus the terminal one).
pub fn detect_surviving_face(traj: &Trajectory, eps_face: f64, window: usize) -> ModelSet {
    let path = traj.belief_path();
    let m = traj.final_log_odds.dim() + 1;
    let start = traj.meta.horizon.saturating_sub(window);
    let mut max_mass = vec![0.0f64; m];
    for (_, b) in path.iter().filter(|(t, _)| *t >= start) {
        for (j, p) in b.probs().iter().enumerate() {
            max_mass[j] = max_mass[j].max(*p);
        }
    }
    face_from_max_mass(&max_mass, eps_face)
}

// ---------------------------------------------------------------------------
// Random kernels

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelExperiment {
    pub m: usize,
    pub trials: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub ci: (f64, f64),
    pub p_theory: f64,
    /// Zero-width interval: every trial agreed (or there was only one).
    pub degenerate_ci: bool,
}

impl KernelExperiment {
    /// Half-width of the 99.7% binomial band around the theoretical value.
    pub fn band_3sigma(&self) -> f64 {
        3.0 * (self.p_theory * (1.0 - self.p_theory) / self.trials as f64).sqrt()
    }
}

const KERNEL_CHUNK: usize = 1024;

/// Draws Gaussian `(m−1)×m` matrices and checks whether the kernel meets the simplex.
pub fn kernel_simplex_experiment(m: usize, trials: usize, master_seed: u64) -> Result<KernelExperiment> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("m must be at least 2, got {m}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let hits: usize = (0..trials.div_ceil(KERNEL_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = RngStream::new(master_seed, c as u64).generator();
            let n = KERNEL_CHUNK.min(trials - c * KERNEL_CHUNK);
            let mut hits = 0;
            for _ in 0..n {
                let rows: Vec<Vec<f64>> =
                    (0..m - 1).map(|_| (0..m).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
                let k = null_vector(&Matrix::from_rows(&rows));
                if k.iter().all(|x| *x > 0.0) || k.iter().all(|x| *x < 0.0) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p_hat = hits as f64 / trials as f64;
    let ci = wald_interval(hits, trials);
    Ok(KernelExperiment {
        m,
        trials,
        hits,
        p_hat,
        ci,
        p_theory: 2f64.powi(1 - m as i32),
        degenerate_ci: ci.1 - ci.0 <= 0.0,
    })
}

// ---------------------------------------------------------------------------
// Predicted vs empirical action frequencies

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitingFrequencies {
    pub predicted: Vec<f64>,
    pub empirical: Vec<f64>,
    pub empirical_ci: Vec<f64>,
    pub predicted_regret: f64,
    /// Per-period regret over the final window.
    pub empirical_regret: f64,
    /// How the prediction was formed.
    pub basis: String,
    /// Monte Carlo weight of each terminal face.
    pub weights: Vec<(ModelSet, f64)>,
}

/// Combines the classification with Monte Carlo weights into predicted
/// long-run action probabilities.
pub fn limiting_action_frequencies(summary: &McSummary, report: &ClassificationReport) -> Result<LimitingFrequencies> {
    if summary.problem_hash != report.problem_hash {
        return Err(Error::MismatchedProblem { left: summary.problem_hash.clone(), right: report.problem_hash.clone() });
    }
    let a_count = summary.num_actions;
    let regrets = &report.action_regrets;
    let n = summary.reps as f64;
    let weights: Vec<(ModelSet, f64)> =
        summary.surviving_faces.iter().map(|f| (f.face.clone(), f.count as f64 / n)).collect();

    // Vertices contribute the action their model prescribes; larger faces the
    // time-averaged selection probabilities observed on them.
    let mut plug_in = vec![0.0; a_count];
    for f in &summary.surviving_faces {
        let w = f.count as f64 / n;
        if f.face.len() == 1 {
            plug_in[report.prescribed_actions[f.face.as_slice()[0]] - 1] += w;
        } else {
            plug_in.iter_mut().zip(&f.mean_action_probs).for_each(|(a, p)| *a += w * p);
        }
    }
    let (predicted, basis) = match report.two_arm.as_ref().and_then(|t| t.predicted_action_probs.clone()) {
        Some(p) => (p, "closed form".to_string()),
        None => (plug_in, "face weights and final-window time averages".to_string()),
    };
    let predicted_regret = predicted.iter().zip(regrets).map(|(p, r)| p * r).sum();
    let empirical_regret = summary.action_freq.iter().zip(regrets).map(|(p, r)| p * r).sum();
    Ok(LimitingFrequencies {
        predicted,
        empirical: summary.action_freq.clone(),
        empirical_ci: summary.action_freq_ci.clone(),
        predicted_regret,
        empirical_regret,
        basis,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify, ClassifyConfig};
    use crate::engine::{cumulative_regret, run_episode};

    fn case(nu: [f64; 2], gamma: [f64; 2], g: [f64; 2]) -> BanditProblem {
        BanditProblem::gaussian(vec![nu.to_vec(), gamma.to_vec()], g.to_vec()).unwrap()
    }
    fn case2() -> BanditProblem {
        case([1.0, -1.0], [-1.0, 1.0], [0.6, 0.2])
    }
    fn case4() -> BanditProblem {
        case([1.0, -1.0], [-1.0, 1.0], [-0.2, -0.6])
    }

    #[test]
    fn single_rep_matches_run_episode() {
        let p = case4();
        let s = mc_batch(&p, 200, 1, 9).unwrap();
        let traj = run_episode(&p, 200, RngStream::new(9, 0));
        let cum = cumulative_regret(&traj);
        assert_eq!(s.mean_regret_path, cum);
        assert_eq!(s.terminal_beliefs[0], traj.final_belief().probs());
        let b = traj.steps[50].belief.as_ref().unwrap();
        assert_eq!(s.mean_belief_path[49], b.probs());
    }

    #[test]
    fn deterministic_and_accounting_identity() {
        let p = case2();
        let a = mc_batch(&p, 300, 37, 3).unwrap();
        let b = mc_batch(&p, 300, 37, 3).unwrap();
        assert_eq!(a, b);
        let total: f64 = a.action_freq.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let rhs: f64 = (0..2).map(|x| a.action_freq_full[x] * p.per_period_regret(x)).sum();
        assert!((a.mean_total_regret / 300.0 - rhs).abs() < 1e-12);
    }

    #[test]
    fn zero_reps_rejected() {
        assert!(mc_batch(&case2(), 10, 0, 0).is_err());
        assert!(mc_batch(&case2(), 0, 10, 0).is_err());
    }

    #[test]
    fn stride_keeps_terminal_point() {
        let mut cfg = McConfig::new(105, 3, 1);
        cfg.path_stride = 10;
        let s = mc_batch_with(&case4(), &cfg).unwrap();
        assert_eq!(s.path_t.last(), Some(&105));
        assert_eq!(s.path_t.len(), 11);
        assert_eq!(s.mean_belief_path.len(), 11);
    }

    #[test]
    fn censoring_is_monotone() {
        let p = case2();
        let mut lo = AbsorptionConfig::new(200, 5);
        lo.horizon_cap = 60;
        lo.s_abs = 5.0;
        let mut hi = lo.clone();
        hi.s_abs = 20.0;
        let a = estimate_absorption(&p, &lo).unwrap();
        let b = estimate_absorption(&p, &hi).unwrap();
        assert!(b.absorbed_count <= a.absorbed_count);
        assert_eq!(a.absorbed_count + a.censored_count, 200);
    }

    #[test]
    fn symmetric_problem_is_fair_coin() {
        // Mirror-image models with symmetric rewards.
        let p = case([1.0, -1.0], [-1.0, 1.0], [0.3, 0.3]);
        let est = estimate_absorption(&p, &AbsorptionConfig::new(2000, 11)).unwrap();
        assert!(est.ci.0 <= 0.5 && 0.5 <= est.ci.1, "{est:?}");
    }

    #[test]
    fn dominance_absorbs_at_first_model() {
        let p = case([1.0, -1.0], [-1.0, 1.0], [0.7, -0.7]);
        let est = estimate_absorption(&p, &AbsorptionConfig::new(200, 2)).unwrap();
        assert_eq!(est.absorbed_plus, 200);
    }

    #[test]
    fn absorption_needs_two_models() {
        let p = BanditProblem::gaussian(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]], vec![0.0, 0.0]).unwrap();
        assert!(matches!(estimate_absorption(&p, &AbsorptionConfig::new(5, 0)), Err(Error::NotTwoModel(3))));
    }

    #[test]
    fn identical_models_stay_at_prior() {
        let p = case([1.0, -1.0], [1.0, -1.0], [0.0, 0.0]);
        let est = estimate_stationary(&p, &StationaryConfig::new(500, 2, 0)).unwrap();
        let h = &est.histograms[0];
        assert_eq!(h.counts[25], h.total());
        assert!((est.alpha_star - 0.5).abs() < 1e-12);
    }

    #[test]
    fn histogram_csv_shape() {
        let est = estimate_stationary(&case4(), &StationaryConfig::new(2000, 2, 0)).unwrap();
        let csv = est.histograms[0].to_csv();
        assert!(csv.starts_with("bin_left,bin_right,count\n"));
        assert_eq!(csv.lines().count(), DEFAULT_BINS + 1);
        assert_eq!(est.histograms[0].total(), est.samples);
    }

    #[test]
    fn faces_for_absorbing_and_ergodic_runs() {
        let traj = run_episode(&case([1.0, -1.0], [-1.0, 1.0], [0.7, -0.7]), 500, RngStream::new(1, 0));
        assert_eq!(detect_surviving_face(&traj, DEFAULT_EPS_FACE, 50), ModelSet(vec![0]));
        let traj = run_episode(&case4(), 2000, RngStream::new(1, 0));
        assert_eq!(detect_surviving_face(&traj, DEFAULT_EPS_FACE, 200), ModelSet(vec![0, 1]));
    }

    #[test]
    fn kernel_small_cases() {
        let k = kernel_simplex_experiment(2, 1, 0).unwrap();
        assert!(k.degenerate_ci);
        assert!(kernel_simplex_experiment(1, 10, 0).is_err());
        let k = kernel_simplex_experiment(10, 10, 0).unwrap();
        assert!((k.p_theory - 0.001953125).abs() < 1e-15);
        let k = kernel_simplex_experiment(3, 20_000, 4).unwrap();
        assert!((k.p_hat - 0.25).abs() < k.band_3sigma() + 1e-12);
    }

    #[test]
    fn mismatched_problem_is_rejected() {
        let s = mc_batch(&case2(), 20, 2, 0).unwrap();
        let r = classify(&case4(), &ClassifyConfig::default());
        assert!(matches!(limiting_action_frequencies(&s, &r), Err(Error::MismatchedProblem { .. })));
    }

    #[test]
    fn vertex_mixture_plug_in() {
        let p = case2();
        let s = mc_batch(&p, 400, 60, 8).unwrap();
        let r = classify(&p, &ClassifyConfig::default());
        let lf = limiting_action_frequencies(&s, &r).unwrap();
        let w_nu: f64 = s.surviving_faces.iter().filter(|f| f.face == ModelSet(vec![0])).map(|f| f.count as f64).sum::<f64>() / 60.0;
        assert!((lf.predicted[0] - w_nu).abs() < 1e-12, "{lf:?}");
    }

    #[test]
    fn wald_interval_edges() {
        assert_eq!(wald_interval(0, 10), (0.0, 0.0));
        assert_eq!(wald_interval(10, 10), (1.0, 1.0));
        let (lo, hi) = wald_interval(50, 100);
        assert!((hi - lo - 2.0 * Z95 * 0.05).abs() < 1e-12);
    }
}
