//! Inverse design: Gaussian problems whose vertex drifts equal given vectors.
//!
//! Model `j` is made to prefer action `j`. For each action column the
//! reference model's mean is put at 0 and the true mean at `±c`; every other
//! model's offset then solves the scalar quadratic
//! `x (2c − x) = 2σ² d`. Adding a constant to a whole column (all models and
//! the truth) leaves the drifts unchanged, so the column shifts are chosen by
//! Bellman–Ford to make each model's own action its strict optimum.

use crate::error::{Error, Result};
use crate::problem::BanditProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConfig {
    pub sigma: f64,
    /// Distance between the truth and the reference model in every column;
    /// chosen from the target sizes when absent.
    pub offset: Option<f64>,
    /// Allow the large root of the quadratic when no small-root design works.
    /// Large roots inflate the increment noise.
    pub allow_large_roots: bool,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self { sigma: 1.0, offset: None, allow_large_roots: true }
    }
}

/// Builds an `M`-model, `M`-action problem whose `d(a_j)` are `d_vectors[j]`.
pub fn design_from_drifts(d_vectors: &[Vec<f64>], cfg: &DesignConfig) -> Result<BanditProblem> {
    let m = d_vectors.len();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two drift vectors".into()));
    }
    for d in d_vectors {
        if d.len() != m - 1 {
            return Err(Error::DimensionMismatch { expected: m - 1, actual: d.len() });
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("drift entries must be finite".into()));
        }
    }
    if !(cfg.sigma > 0.0 && cfg.sigma.is_finite()) {
        return Err(Error::InvalidArgument("sigma must be positive".into()));
    }
    let s2 = cfg.sigma * cfg.sigma;
    let dmax = d_vectors.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    let c = cfg.offset.unwrap_or_else(|| (2.0 * (2.0 * s2 * dmax).sqrt()).max(1.0));
    if c * c < 2.0 * s2 * dmax {
        return Err(Error::InvalidArgument(format!("offset {c} too small for drift magnitude {dmax}")));
    }

    let entries = m * (m - 1);
    let mut best: Option<(f64, Candidate)> = None;
    let root_masks: Vec<u64> = if cfg.allow_large_roots && entries <= 12 {
        let mut v: Vec<u64> = (0..1u64 << entries).collect();
        v.sort_by_key(|x| x.count_ones());
        v
    } else {
        vec![0]
    };
    let mut fewest_large = None;
    for mask in root_masks {
        if fewest_large.is_some_and(|k| mask.count_ones() > k) {
            break;
        }
        for signs in 0..1u64 << m {
            let cand = Candidate::build(d_vectors, c, s2, signs, mask);
            let margin = cand.max_margin();
            if margin > 1e-9 && best.as_ref().is_none_or(|(b, _)| margin > *b) {
                best = Some((margin, cand));
                fewest_large = Some(mask.count_ones());
            }
        }
    }
    let (margin, cand) = best.ok_or_else(|| {
        Error::InvalidArgument("no Gaussian design makes every model prefer its own action".into())
    })?;
    cand.into_problem(margin / 2.0, cfg.sigma)
}

struct Candidate {
    /// `x[k][a]`: offset of model `k` from the reference model in column `a`.
    x: Vec<Vec<f64>>,
    /// Truth minus reference mean, per column.
    c: Vec<f64>,
}

impl Candidate {
    fn build(d: &[Vec<f64>], c: f64, s2: f64, signs: u64, mask: u64) -> Self {
        let m = d.len();
        let cols: Vec<f64> = (0..m).map(|a| if signs >> a & 1 == 1 { -c } else { c }).collect();
        let x = (0..m - 1)
            .map(|k| {
                (0..m)
                    .map(|a| {
                        let ca = cols[a];
                        let disc = (ca * ca - 2.0 * s2 * d[a][k]).max(0.0).sqrt();
                        let large = mask >> (k * m + a) & 1 == 1;
                        // Roots of x² − 2cx + 2σ²d = 0; the small one is written to avoid cancellation.
                        let big = ca + ca.signum() * disc;
                        if large {
                            big
                        } else if big == 0.0 {
                            0.0
                        } else {
                            2.0 * s2 * d[a][k] / big
                        }
                    })
                    .collect()
            })
            .collect();
        Self { x, c: cols }
    }

    fn mean(&self, model: usize, a: usize) -> f64 {
        self.x.get(model).map_or(0.0, |row| row[a])
    }

    /// Shifts `b` with `b_a − b_j ≤ μ_j(j) − μ_j(a) − margin`, if any exist.
    fn shifts(&self, margin: f64) -> Option<Vec<f64>> {
        let m = self.c.len();
        let mut edges = Vec::with_capacity(m * (m - 1));
        for j in 0..m {
            for a in (0..m).filter(|&a| a != j) {
                edges.push((j, a, self.mean(j, j) - self.mean(j, a) - margin));
            }
        }
        let mut dist = vec![0.0; m];
        for _ in 0..m {
            let mut changed = false;
            for &(u, v, w) in &edges {
                if dist[u] + w < dist[v] - 1e-15 {
                    dist[v] = dist[u] + w;
                    changed = true;
                }
            }
            if !changed {
                return Some(dist);
            }
        }
        None
    }

    /// Largest margin for which shifts exist (0 when none do).
    fn max_margin(&self) -> f64 {
        if self.shifts(0.0).is_none() {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 4.0 * self.c[0].abs() + 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.shifts(mid).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn into_problem(self, margin: f64, sigma: f64) -> Result<BanditProblem> {
        let m = self.c.len();
        let b = self.shifts(margin).expect("margin below the feasible maximum");
        let means = (0..m).map(|k| (0..m).map(|a| self.mean(k, a) + b[a]).collect()).collect();
        let g = (0..m).map(|a| self.c[a] + b[a]).collect();
        BanditProblem::from_spec(crate::problem::ProblemSpec {
            models: means,
            sigma,
            true_means: g,
            sigma_true: sigma,
            prior: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::vertex_drift;
    use proptest::prelude::*;

    fn check(d: &[Vec<f64>]) -> BanditProblem {
        let p = design_from_drifts(d, &DesignConfig::default()).unwrap();
        for (j, target) in d.iter().enumerate() {
            assert_eq!(p.optimal_action(j), j);
            let got = vertex_drift(&p, j);
            for (x, y) in got.iter().zip(target) {
                assert!((x - y).abs() < 1e-9, "model {j}: {got:?} vs {target:?}");
            }
        }
        p
    }

    #[test]
    fn interior_panels() {
        check(&[vec![2.0, 0.5], vec![-0.5, 2.0], vec![-1.5, -2.0]]);
        check(&[vec![-2.0, -0.5], vec![0.5, -2.0], vec![1.5, 2.0]]);
    }

    #[test]
    fn outside_panels() {
        check(&[vec![-0.5, 1.5], vec![1.5, -0.5], vec![1.0, 1.0]]);
        check(&[vec![1.0, 1.5], vec![-0.5, 1.0], vec![0.3, 0.8]]);
    }

    #[test]
    fn two_models_and_small_drifts() {
        check(&[vec![0.3], vec![-0.1]]);
        let e = 0.05;
        check(&[vec![-2.0 * e / 3.0, e / 3.0], vec![e / 3.0, -2.0 * e / 3.0], vec![e / 3.0, e / 3.0]]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(design_from_drifts(&[vec![1.0]], &DesignConfig::default()).is_err());
        assert!(design_from_drifts(&[vec![1.0, 2.0], vec![1.0]], &DesignConfig::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn designed_drifts_match(m in 2usize..=4, seed in prop::collection::vec(-2.0f64..2.0, 12)) {
            let d: Vec<Vec<f64>> = (0..m).map(|j| (0..m - 1).map(|k| seed[j * 3 + k]).collect()).collect();
            if let Ok(p) = design_from_drifts(&d, &DesignConfig::default()) {
                for (j, target) in d.iter().enumerate() {
                    prop_assert_eq!(p.optimal_action(j), j);
                    for (x, y) in vertex_drift(&p, j).iter().zip(target) {
                        prop_assert!((x - y).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
