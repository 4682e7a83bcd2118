//! Posterior beliefs in two coordinate systems: points of the probability
//! simplex and their log-odds chart relative to the last model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::BanditProblem;

/// Sum-to-one tolerance for [`Belief`].
pub const TOL_SUM: f64 = 1e-10;
/// Entries at or below this are treated as lying on the simplex boundary.
pub const FLOOR_EPS: f64 = 1e-300;

/// A probability vector over the model class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("belief must be non-empty".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(format!("belief entries must be finite and >= 0: {probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOL_SUM {
            return Err(Error::InvalidArgument(format!("belief sums to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights into a belief.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if !(total.is_finite() && total > 0.0) || w.iter().any(|x| *x < 0.0) {
            return Err(Error::InvalidArgument(format!("cannot normalize weights {w:?}")));
        }
        Ok(Self { probs: w.iter().map(|x| x / total).collect() })
    }

    pub fn uniform(m: usize) -> Self {
        Self { probs: vec![1.0 / m as f64; m] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_interior(&self) -> bool {
        self.probs.iter().all(|p| *p > 0.0)
    }

    /// The first `M-1` coordinates, `π_{-M}`.
    pub fn head(&self) -> &[f64] {
        &self.probs[..self.probs.len() - 1]
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Vec<f64> {
        b.probs
    }
}

impl std::ops::Index<usize> for Belief {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

/// Log-odds `s_k = log(π_k / π_M)` for `k < M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogOdds {
    s: Vec<f64>,
}

impl LogOdds {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("log-odds must be finite: {s:?}")));
        }
        Ok(Self { s })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { s: vec![0.0; dim] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.s
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    /// Shifts by an increment in place.
    pub fn add_assign(&mut self, z: &[f64]) {
        for (s, dz) in self.s.iter_mut().zip(z) {
            *s += dz;
        }
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.s)
    }
}

/// Maps log-odds back to the simplex with a max-shift so large `|s|` never overflows.
pub fn softmax(s: &LogOdds) -> Belief {
    Belief { probs: softmax_slice(&s.s) }
}

pub(crate) fn softmax_slice(s: &[f64]) -> Vec<f64> {
    let shift = s.iter().copied().fold(0.0_f64, f64::max);
    let mut out: Vec<f64> = s.iter().map(|v| (v - shift).exp()).collect();
    out.push((-shift).exp());
    let z: f64 = out.iter().sum();
    for p in &mut out {
        *p /= z;
    }
    out
}

/// `log(1 + Σ exp s_k)` computed stably.
pub fn log_sum_exp1(s: &[f64]) -> f64 {
    let shift = s.iter().copied().fold(0.0_f64, f64::max);
    shift + ((-shift).exp() + s.iter().map(|v| (v - shift).exp()).sum::<f64>()).ln()
}

pub fn to_log_odds(b: &Belief) -> Result<LogOdds> {
    if let Some((index, &value)) = b.probs.iter().enumerate().find(|(_, p)| **p <= FLOOR_EPS) {
        return Err(Error::BoundaryBelief { index, value });
    }
    let last = b.probs[b.probs.len() - 1].ln();
    Ok(LogOdds { s: b.head().iter().map(|p| p.ln() - last).collect() })
}

/// `Z_k = log f_k(r|a) - log f_M(r|a)` for `k < M`, in closed form for Gaussians.
pub fn log_likelihood_increment(problem: &BanditProblem, a: usize, r: f64) -> Vec<f64> {
    let models = problem.models();
    let m = models.num_models();
    let s2 = models.sigma() * models.sigma();
    let mu_ref = models.mean(m - 1, a);
    (0..m - 1)
        .map(|k| {
            let mu = models.mean(k, a);
            (mu - mu_ref) * r / s2 + (mu_ref * mu_ref - mu * mu) / (2.0 * s2)
        })
        .collect()
}

/// Posterior after observing reward `r` for action `a`, computed in log space.
pub fn bayes_update(b: &Belief, problem: &BanditProblem, a: usize, r: f64) -> Result<Belief> {
    if b.len() != problem.num_models() {
        return Err(Error::DimensionMismatch { expected: problem.num_models(), actual: b.len() });
    }
    let models = problem.models();
    let logs: Vec<f64> = b
        .probs
        .iter()
        .enumerate()
        .map(|(m, p)| p.ln() + models.log_density(m, a, r))
        .collect();
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::NumericalUnderflow);
    }
    let w: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(Belief { probs: w.into_iter().map(|x| x / z).collect() })
}

/// `∂π_i/∂s_k`, an `M × (M-1)` matrix.
pub fn softmax_jacobian(b: &Belief) -> Matrix {
    let m = b.len();
    let p = &b.probs;
    let mut j = Matrix::zeros(m, m - 1);
    for i in 0..m {
        for k in 0..m - 1 {
            j[(i, k)] = if i == k { p[i] * (1.0 - p[i]) } else { -p[i] * p[k] };
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_model(nu: [f64; 2], gamma: [f64; 2], g: [f64; 2]) -> BanditProblem {
        BanditProblem::gaussian(vec![nu.to_vec(), gamma.to_vec()], g.to_vec()).unwrap()
    }

    #[test]
    fn softmax_examples() {
        let u = softmax(&LogOdds::zeros(3));
        for p in u.probs() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let b = softmax(&LogOdds::new(vec![3f64.ln()]).unwrap());
        assert!((b[0] - 0.75).abs() < 1e-12 && (b[1] - 0.25).abs() < 1e-12);
        let big = softmax(&LogOdds::new(vec![800.0, -800.0]).unwrap());
        assert!(big.probs().iter().all(|p| p.is_finite()));
        assert!((big.probs().iter().sum::<f64>() - 1.0).abs() < TOL_SUM);
    }

    #[test]
    fn log_odds_examples() {
        assert_eq!(to_log_odds(&Belief::uniform(4)).unwrap().as_slice(), &[0.0; 3]);
        let s = to_log_odds(&Belief::new(vec![0.75, 0.25]).unwrap()).unwrap();
        assert!((s.as_slice()[0] - 3f64.ln()).abs() < 1e-12);
        let err = to_log_odds(&Belief::new(vec![1.0, 0.0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::BoundaryBelief { index: 1, .. }));
    }

    #[test]
    fn increment_matches_density_difference() {
        let p = two_model([1.0, -1.0], [0.6, -0.6], [0.95, -0.5]);
        let z = log_likelihood_increment(&p, 0, 0.8);
        assert!(z[0].abs() < 1e-12, "{z:?}");
        for r in [-2.0, 0.1, 3.5] {
            for a in 0..2 {
                let direct = p.models().log_density(0, a, r) - p.models().log_density(1, a, r);
                assert!((log_likelihood_increment(&p, a, r)[0] - direct).abs() < 1e-12);
            }
        }
        let same = two_model([0.3, 0.1], [0.3, 0.1], [0.0, 0.0]);
        assert_eq!(log_likelihood_increment(&same, 1, 12.0), vec![0.0]);
    }

    #[test]
    fn bayes_update_examples() {
        let same = two_model([0.3, 0.1], [0.3, 0.1], [0.0, 0.0]);
        let b = Belief::new(vec![0.3, 0.7]).unwrap();
        let post = bayes_update(&b, &same, 0, 5.0).unwrap();
        assert!((post[0] - 0.3).abs() < 1e-15);

        // Two-model update agrees with the sigmoid of the shifted log-odds.
        let p = two_model([1.0, -1.0], [-1.0, 1.0], [0.6, 0.2]);
        let s0 = 0.4;
        let b = softmax(&LogOdds::new(vec![s0]).unwrap());
        let r = 0.37;
        let post = bayes_update(&b, &p, 1, r).unwrap();
        let z = log_likelihood_increment(&p, 1, r)[0];
        let sig = 1.0 / (1.0 + (-(s0 + z)).exp());
        assert!((post[0] - sig).abs() < 1e-12);

        let u = Belief::uniform(2);
        let post = bayes_update(&u, &p, 0, 1.0).unwrap();
        assert!(post[0] > 0.5);
    }

    #[test]
    fn jacobian_examples() {
        let j = softmax_jacobian(&Belief::uniform(2));
        assert_eq!((j.rows(), j.cols()), (2, 1));
        assert!((j[(0, 0)] - 0.25).abs() < 1e-15 && (j[(1, 0)] + 0.25).abs() < 1e-15);
    }

    fn log_odds_vec(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-15.0f64..15.0, 1..max_dim)
    }

    proptest! {
        #[test]
        fn round_trip(s in log_odds_vec(6)) {
            let b = softmax(&LogOdds::new(s.clone()).unwrap());
            prop_assert!((b.probs().iter().sum::<f64>() - 1.0).abs() < TOL_SUM);
            let back = to_log_odds(&b).unwrap();
            for (x, y) in back.as_slice().iter().zip(&s) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            let again = softmax(&back);
            for (x, y) in again.probs().iter().zip(b.probs()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn jacobian_columns_and_finite_differences(s in proptest::collection::vec(-4.0f64..4.0, 1..5)) {
            let b = softmax(&LogOdds::new(s.clone()).unwrap());
            let j = softmax_jacobian(&b);
            let h = 1e-5;
            for k in 0..s.len() {
                let col: f64 = (0..b.len()).map(|i| j[(i, k)]).sum();
                prop_assert!(col.abs() < 1e-15);
                let mut up = s.clone();
                let mut dn = s.clone();
                up[k] += h;
                dn[k] -= h;
                let pu = softmax_slice(&up);
                let pd = softmax_slice(&dn);
                for i in 0..b.len() {
                    let fd = (pu[i] - pd[i]) / (2.0 * h);
                    prop_assert!((fd - j[(i, k)]).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn update_paths_agree(
            s in proptest::collection::vec(-5.0f64..5.0, 1..4),
            seed_means in proptest::collection::vec(-2.0f64..2.0, 12),
            r in -4.0f64..4.0,
            a in 0usize..3,
        ) {
            let m = s.len() + 1;
            let means: Vec<Vec<f64>> = (0..m).map(|i| seed_means[i * 3..i * 3 + 3].to_vec()).collect();
            let p = BanditProblem::gaussian(means, vec![0.0, 0.5, 1.0]).unwrap();
            let b = softmax(&LogOdds::new(s.clone()).unwrap());
            let post = bayes_update(&b, &p, a, r).unwrap();
            prop_assert!((post.probs().iter().sum::<f64>() - 1.0).abs() < TOL_SUM);
            let mut via = LogOdds::new(s).unwrap();
            via.add_assign(&log_likelihood_increment(&p, a, r));
            let direct = to_log_odds(&post).unwrap();
            for (x, y) in direct.as_slice().iter().zip(via.as_slice()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            let q = softmax(&via);
            for (x, y) in q.probs().iter().zip(post.probs()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
