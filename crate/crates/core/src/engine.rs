//! Thompson Sampling over a finite model class.
//!
//! The state is carried in log-odds coordinates, so beliefs can approach the
//! simplex boundary without any division by a vanishing mass.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::belief::{softmax, softmax_slice, Belief, LogOdds};
use crate::error::Result;
use crate::export::{write_with_sidecar, Provenance};
use crate::problem::BanditProblem;
use crate::rng::{RngStream, RNG_ALGORITHM};

/// One Thompson Sampling round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub t: usize,
    /// Belief the model was sampled from; `None` on thinned-out rounds.
    pub belief: Option<Belief>,
    pub log_odds: Option<LogOdds>,
    pub sampled_model: usize,
    pub action: usize,
    pub reward: f64,
    pub instant_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub seed: u64,
    pub stream_id: u64,
    pub horizon: usize,
    pub problem_hash: String,
    pub rng_algorithm: String,
    pub thin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    /// State after the last update.
    pub final_log_odds: LogOdds,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn final_belief(&self) -> Belief {
        softmax(&self.final_log_odds)
    }

    /// `(t, belief)` for every recorded round, followed by the terminal state at `t = horizon`.
    pub fn belief_path(&self) -> Vec<(usize, Belief)> {
        let mut out: Vec<(usize, Belief)> =
            self.steps.iter().filter_map(|s| s.belief.clone().map(|b| (s.t, b))).collect();
        out.push((self.steps.len(), self.final_belief()));
        out
    }

    pub fn actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.action)
    }

    /// CSV with header `t,action,reward,instant_regret,pi_1..pi_M`; actions are 1-based.
    /// Thinned rounds leave the belief columns empty.
    pub fn to_csv(&self, num_models: usize) -> String {
        let mut out = String::from("t,action,reward,instant_regret");
        for m in 1..=num_models {
            out.push_str(&format!(",pi_{m}"));
        }
        out.push('\n');
        for s in &self.steps {
            out.push_str(&format!("{},{},{},{}", s.t, s.action + 1, s.reward, s.instant_regret));
            match &s.belief {
                Some(b) => b.probs().iter().for_each(|p| out.push_str(&format!(",{p}"))),
                None => (0..num_models).for_each(|_| out.push(',')),
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, num_models: usize) -> Result<()> {
        let prov = Provenance::new(&self.meta.problem_hash, self.meta.seed);
        let extra = serde_json::to_value(&self.meta)?;
        write_with_sidecar(path.as_ref(), self.to_csv(num_models).as_bytes(), &prov, extra)
    }

    pub fn write_json(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, self)?;
        Ok(())
    }
}

/// Reward increment coefficients: `Z = alpha[a] + v[a] * r`.
#[derive(Debug, Clone)]
pub(crate) struct Increments {
    alpha: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Increments {
    pub(crate) fn new(problem: &BanditProblem) -> Self {
        let models = problem.models();
        let m = models.num_models();
        let s2 = models.sigma() * models.sigma();
        let (mut alpha, mut v) = (Vec::new(), Vec::new());
        for a in 0..models.num_actions() {
            let mu_ref = models.mean(m - 1, a);
            alpha.push((0..m - 1).map(|k| (mu_ref * mu_ref - models.mean(k, a).powi(2)) / (2.0 * s2)).collect());
            v.push((0..m - 1).map(|k| (models.mean(k, a) - mu_ref) / s2).collect());
        }
        Self { alpha, v }
    }

    /// Reward coefficient `v_a` of the increment line for action `a`.
    pub(crate) fn slope(&self, a: usize) -> &[f64] {
        &self.v[a]
    }

    #[inline]
    pub(crate) fn apply(&self, s: &mut [f64], a: usize, r: f64) {
        for ((sk, al), vk) in s.iter_mut().zip(&self.alpha[a]).zip(&self.v[a]) {
            *sk += al + vk * r;
        }
    }
}

/// A single Thompson Sampling chain, stepped one round at a time.
#[derive(Debug, Clone)]
pub struct Chain<'a> {
    problem: &'a BanditProblem,
    prescribed: Vec<usize>,
    inc: Increments,
    s: Vec<f64>,
    rng: ChaCha8Rng,
}

/// Outcome of one [`Chain::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round {
    pub sampled_model: usize,
    pub action: usize,
    pub reward: f64,
}

impl<'a> Chain<'a> {
    /// Starts from the problem's prior.
    pub fn new(problem: &'a BanditProblem, rng: RngStream) -> Self {
        let p = problem.prior().probs();
        let last = p[p.len() - 1].ln();
        let s = p[..p.len() - 1].iter().map(|x| x.ln() - last).collect();
        Self::from_log_odds(problem, LogOdds::new(s).expect("interior prior has finite log-odds"), rng)
    }

    pub fn from_log_odds(problem: &'a BanditProblem, s0: LogOdds, rng: RngStream) -> Self {
        assert_eq!(s0.dim() + 1, problem.num_models(), "log-odds dimension");
        Self {
            problem,
            prescribed: problem.prescribed_actions(),
            inc: Increments::new(problem),
            s: s0.into_vec(),
            rng: rng.generator(),
        }
    }

    pub fn log_odds(&self) -> &[f64] {
        &self.s
    }

    pub fn belief(&self) -> Belief {
        Belief::new(softmax_slice(&self.s)).expect("softmax output is a belief")
    }

    /// Samples a model by an inverse-CDF walk, plays its action, observes a
    /// reward and updates the log-odds.
    pub fn step(&mut self) -> Round {
        let probs = softmax_slice(&self.s);
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut model = probs.len() - 1;
        for (j, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                model = j;
                break;
            }
        }
        let action = self.prescribed[model];
        let z: f64 = self.rng.sample(StandardNormal);
        let env = self.problem.env();
        let reward = env.mean(action) + env.sigma_true() * z;
        self.inc.apply(&mut self.s, action, reward);
        Round { sampled_model: model, action, reward }
    }
}

/// Runs `horizon` rounds of Thompson Sampling, recording every belief.
pub fn run_episode(problem: &BanditProblem, horizon: usize, rng: RngStream) -> Trajectory {
    run_episode_thinned(problem, horizon, rng, 1)
}

/// Like [`run_episode`] but records beliefs only on rounds with `t % thin == 0`.
pub fn run_episode_thinned(problem: &BanditProblem, horizon: usize, rng: RngStream, thin: usize) -> Trajectory {
    let thin = thin.max(1);
    let mut chain = Chain::new(problem, rng);
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (belief, log_odds) = if t % thin == 0 {
            (Some(chain.belief()), Some(LogOdds::new(chain.log_odds().to_vec()).expect("finite state")))
        } else {
            (None, None)
        };
        let round = chain.step();
        steps.push(Step {
            t,
            belief,
            log_odds,
            sampled_model: round.sampled_model,
            action: round.action,
            reward: round.reward,
            instant_regret: problem.per_period_regret(round.action),
        });
    }
    Trajectory {
        steps,
        final_log_odds: LogOdds::new(chain.log_odds().to_vec()).expect("finite state"),
        meta: TrajectoryMeta {
            seed: rng.master_seed,
            stream_id: rng.stream_id,
            horizon,
            problem_hash: problem.hash(),
            rng_algorithm: RNG_ALGORITHM.to_string(),
            thin,
        },
    }
}

/// Prefix sums of the instantaneous regret.
pub fn cumulative_regret(traj: &Trajectory) -> Vec<f64> {
    traj.steps
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s.instant_regret;
            Some(*acc)
        })
        .collect()
}
