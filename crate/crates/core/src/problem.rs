//! Misspecified Gaussian bandit problems: a finite model class, the true
//! environment, and a prior over models.
//!
//! Model and action indices are 0-based in the Rust API. Serialized reports
//! and CSV exports use 1-based indices.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::belief::Belief;
use crate::error::{Error, Result};

/// Tolerance for the entrywise equality used by [`BanditProblem::is_misspecified`].
pub const TOL_EQ: f64 = 1e-12;

/// Per-model, per-action Gaussian means with a shared standard deviation.
/// The last row is the reference model for log-odds coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelClass {
    means: Vec<Vec<f64>>,
    sigma: f64,
}

impl ModelClass {
    pub fn new(means: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::InvalidProblem {
                field: "models",
                reason: format!("need at least 2 models, got {}", means.len()),
            });
        }
        let actions = means[0].len();
        if actions < 2 {
            return Err(Error::InvalidProblem {
                field: "models",
                reason: format!("need at least 2 actions, got {actions}"),
            });
        }
        if let Some(i) = means.iter().position(|row| row.len() != actions) {
            return Err(Error::InvalidProblem {
                field: "models",
                reason: format!("row {} has {} entries, expected {actions}", i + 1, means[i].len()),
            });
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem { field: "models", reason: "non-finite mean".into() });
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidProblem { field: "sigma", reason: format!("must be positive, got {sigma}") });
        }
        Ok(Self { means, sigma })
    }

    pub fn num_models(&self) -> usize {
        self.means.len()
    }

    pub fn num_actions(&self) -> usize {
        self.means[0].len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn mean(&self, model: usize, action: usize) -> f64 {
        self.means[model][action]
    }

    /// Smallest action index achieving the maximum mean of model `m`.
    pub fn optimal_action(&self, m: usize) -> usize {
        argmax_first(&self.means[m])
    }

    /// Gaussian log-density `log f_m(r | a)`.
    pub fn log_density(&self, m: usize, a: usize, r: f64) -> f64 {
        let z = (r - self.means[m][a]) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// The true reward law: `R | A = a ~ Normal(g[a], sigma_true²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueEnvironment {
    g: Vec<f64>,
    sigma_true: f64,
}

impl TrueEnvironment {
    pub fn new(g: Vec<f64>, sigma_true: f64) -> Result<Self> {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem { field: "true_means", reason: "non-finite entry".into() });
        }
        if !(sigma_true.is_finite() && sigma_true > 0.0) {
            return Err(Error::InvalidProblem {
                field: "sigma_true",
                reason: format!("must be positive, got {sigma_true}"),
            });
        }
        Ok(Self { g, sigma_true })
    }

    pub fn means(&self) -> &[f64] {
        &self.g
    }

    pub fn mean(&self, a: usize) -> f64 {
        self.g[a]
    }

    pub fn sigma_true(&self) -> f64 {
        self.sigma_true
    }

    /// Smallest index of the true best action.
    pub fn oracle_action(&self) -> usize {
        argmax_first(&self.g)
    }

    /// `g(a*) - g(a)`, never negative.
    pub fn per_period_regret(&self, a: usize) -> f64 {
        self.g[self.oracle_action()] - self.g[a]
    }
}

/// A full problem instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditProblem {
    models: ModelClass,
    env: TrueEnvironment,
    prior: Belief,
}

/// JSON document layout for a problem definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub models: Vec<Vec<f64>>,
    #[serde(default = "unit")]
    pub sigma: f64,
    pub true_means: Vec<f64>,
    #[serde(default = "unit")]
    pub sigma_true: f64,
    /// Defaults to the uniform prior when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
}

fn unit() -> f64 {
    1.0
}

impl BanditProblem {
    pub fn new(models: ModelClass, env: TrueEnvironment, prior: Belief) -> Result<Self> {
        if env.means().len() != models.num_actions() {
            return Err(Error::InvalidProblem {
                field: "true_means",
                reason: format!("length {} does not match {} actions", env.means().len(), models.num_actions()),
            });
        }
        if prior.len() != models.num_models() {
            return Err(Error::InvalidProblem {
                field: "prior",
                reason: format!("length {} does not match {} models", prior.len(), models.num_models()),
            });
        }
        if !prior.is_interior() {
            return Err(Error::InvalidProblem { field: "prior", reason: "every model needs positive prior mass".into() });
        }
        Ok(Self { models, env, prior })
    }

    /// Convenience constructor with unit variances and a uniform prior.
    pub fn gaussian(means: Vec<Vec<f64>>, g: Vec<f64>) -> Result<Self> {
        let models = ModelClass::new(means, 1.0)?;
        let prior = Belief::uniform(models.num_models());
        Self::new(models, TrueEnvironment::new(g, 1.0)?, prior)
    }

    pub fn from_spec(spec: ProblemSpec) -> Result<Self> {
        if spec.models.is_empty() {
            return Err(Error::InvalidProblem { field: "models", reason: "empty model array".into() });
        }
        let models = ModelClass::new(spec.models, spec.sigma)?;
        let env = TrueEnvironment::new(spec.true_means, spec.sigma_true)?;
        let prior = match spec.prior {
            None => Belief::uniform(models.num_models()),
            Some(p) => Belief::new(p).map_err(|e| Error::InvalidProblem { field: "prior", reason: e.to_string() })?,
        };
        Self::new(models, env, prior)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_spec(&self) -> ProblemSpec {
        ProblemSpec {
            models: self.models.means.clone(),
            sigma: self.models.sigma,
            true_means: self.env.g.clone(),
            sigma_true: self.env.sigma_true,
            prior: Some(self.prior.probs().to_vec()),
        }
    }

    pub fn with_prior(&self, prior: Belief) -> Result<Self> {
        Self::new(self.models.clone(), self.env.clone(), prior)
    }

    pub fn models(&self) -> &ModelClass {
        &self.models
    }

    pub fn env(&self) -> &TrueEnvironment {
        &self.env
    }

    pub fn prior(&self) -> &Belief {
        &self.prior
    }

    pub fn num_models(&self) -> usize {
        self.models.num_models()
    }

    pub fn num_actions(&self) -> usize {
        self.models.num_actions()
    }

    pub fn optimal_action(&self, m: usize) -> usize {
        self.models.optimal_action(m)
    }

    pub fn oracle_action(&self) -> usize {
        self.env.oracle_action()
    }

    pub fn per_period_regret(&self, a: usize) -> f64 {
        self.env.per_period_regret(a)
    }

    /// True when no model reproduces the true reward law: no row equals `g`
    /// entrywise with matching standard deviation (within [`TOL_EQ`]).
    pub fn is_misspecified(&self) -> bool {
        if (self.models.sigma - self.env.sigma_true).abs() > TOL_EQ {
            return true;
        }
        !self
            .models
            .means
            .iter()
            .any(|row| row.iter().zip(&self.env.g).all(|(m, g)| (m - g).abs() <= TOL_EQ))
    }

    /// Action prescribed to each model, `a_j = φ(θ_j)`.
    pub fn prescribed_actions(&self) -> Vec<usize> {
        (0..self.num_models()).map(|m| self.optimal_action(m)).collect()
    }

    /// Expected log-likelihood `E_g[log f_m(R | a)]` under the true law.
    pub fn expected_log_likelihood(&self, m: usize, a: usize) -> f64 {
        let s2 = self.models.sigma * self.models.sigma;
        let diff = self.env.g[a] - self.models.means[m][a];
        -(diff * diff + self.env.sigma_true * self.env.sigma_true) / (2.0 * s2)
            - self.models.sigma.ln()
            - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    /// Stable short hash (16 hex chars of SHA-256 over the canonical JSON).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&self.to_spec()).expect("problem spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// A set of model indices (0-based in Rust, 1-based when serialized).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ModelSet(pub Vec<usize>);

impl ModelSet {
    pub fn all(m: usize) -> Self {
        Self((0..m).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, m: usize) -> bool {
        self.0.contains(&m)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl std::fmt::Display for ModelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| (m + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Serialize for ModelSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|m| m + 1))
    }
}

impl<'de> Deserialize<'de> for ModelSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        if v.contains(&0) {
            return Err(serde::de::Error::custom("model indices are 1-based"));
        }
        Ok(Self(v.into_iter().map(|m| m - 1).collect()))
    }
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
