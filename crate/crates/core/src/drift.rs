//! Drift geometry of the log-odds chain.
//!
//! Each model `j` prescribes an action `a_j`; playing it moves the log-odds by
//! a vertex drift `d(a_j)` in expectation. The mean drift at any state is the
//! belief-weighted mix of those vectors, so the origin's position relative to
//! their convex hull, and the matrix `G` with columns `d(a_j) - d(a_M)`,
//! determine the long-run behaviour.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{log_sum_exp1, softmax_slice, to_log_odds, Belief, LogOdds};
use crate::engine::Increments;
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, Matrix};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::problem::BanditProblem;
use crate::rng::RngStream;

pub const TOL_RANK: f64 = 1e-9;
pub const TOL_FP: f64 = 1e-8;
pub const EPS_INT: f64 = 1e-9;
pub const TOL_EIG: f64 = 1e-10;
/// Fixed points with a coordinate below this are treated as boundary points.
pub const MIN_FIXED_POINT_MASS: f64 = 1e-12;
pub const DEFAULT_RADII: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];
pub const DEFAULT_SAMPLES_PER_RADIUS: usize = 512;
/// Sharp bound on the operator norm of the softmax Hessian.
pub const SOFTMAX_HESSIAN_BOUND: f64 = 0.5;

/// `(Δ_1, Δ_2)` for a two-model, two-action problem.
///
/// `Δ_i > 0` means playing action `i` favours the first model.
pub fn delta_two_arm(problem: &BanditProblem) -> Result<(f64, f64)> {
    let d = deltas_by_action(problem)?;
    if d.len() != 2 {
        return Err(Error::WrongShape { models: 2, actions: d.len() });
    }
    Ok((d[0], d[1]))
}

/// Expected log-likelihood ratio of model 1 over model 2 under every action.
pub fn deltas_by_action(problem: &BanditProblem) -> Result<Vec<f64>> {
    if problem.num_models() != 2 {
        return Err(Error::NotTwoModel(problem.num_models()));
    }
    Ok((0..problem.num_actions()).map(|a| action_drift(problem, a)[0]).collect())
}

/// Expected increment when action `a` is played.
pub fn action_drift(problem: &BanditProblem, a: usize) -> Vec<f64> {
    let models = problem.models();
    let m = models.num_models();
    let s2 = models.sigma() * models.sigma();
    let g = problem.env().mean(a);
    let mu_ref = models.mean(m - 1, a);
    (0..m - 1)
        .map(|k| {
            let mu = models.mean(k, a);
            (mu - mu_ref) * (2.0 * g - mu - mu_ref) / (2.0 * s2)
        })
        .collect()
}

/// `d(a_j)`: the expected increment when model `j`'s preferred action is played.
pub fn vertex_drift(problem: &BanditProblem, j: usize) -> Vec<f64> {
    action_drift(problem, problem.optimal_action(j))
}

/// Status of the interior fixed point search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedPointStatus {
    Unique,
    /// Kernel of `D` has dimension > 1; one interior point found by LP.
    NonUnique,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HullStatus {
    InteriorPoint,
    BoundaryPoint,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralVerdict {
    NegDef,
    PosDef,
    Indefinite,
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub status: FixedPointStatus,
    pub belief: Option<Belief>,
    pub log_odds: Option<LogOdds>,
    /// Set when the numerical rank of `D` is ambiguous or the kernel direction
    /// only touches the simplex boundary.
    pub degenerate_kernel: bool,
    pub singular_values: Vec<f64>,
}

/// Vertex drifts and derived matrices. Field names follow the serialized layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftGeometry {
    pub d_vectors: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Matrix,
    #[serde(rename = "G")]
    pub g: Matrix,
    pub fixed_point: Option<Belief>,
    pub s_star: Option<LogOdds>,
    pub fixed_point_status: FixedPointStatus,
    pub degenerate_kernel: bool,
}

impl DriftGeometry {
    pub fn from_problem(problem: &BanditProblem) -> Self {
        let d = (0..problem.num_models()).map(|j| vertex_drift(problem, j)).collect();
        Self::from_vectors(d).expect("vertex drifts have consistent dimension")
    }

    /// Builds the geometry from `M` vectors in `R^{M-1}`.
    pub fn from_vectors(d_vectors: Vec<Vec<f64>>) -> Result<Self> {
        let m = d_vectors.len();
        if m < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 drift vectors, got {m}")));
        }
        if let Some(bad) = d_vectors.iter().find(|v| v.len() != m - 1) {
            return Err(Error::DimensionMismatch { expected: m - 1, actual: bad.len() });
        }
        if d_vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("drift vectors must be finite".into()));
        }
        let d = Matrix::from_columns(&d_vectors);
        let last = &d_vectors[m - 1];
        let rel: Vec<Vec<f64>> = d_vectors[..m - 1].iter().map(|v| linalg::sub(v, last)).collect();
        let g = Matrix::from_columns(&rel);
        let mut geom = Self {
            d_vectors,
            d,
            g,
            fixed_point: None,
            s_star: None,
            fixed_point_status: FixedPointStatus::Absent,
            degenerate_kernel: false,
        };
        let fp = interior_fixed_point(&geom);
        geom.fixed_point = fp.belief;
        geom.s_star = fp.log_odds;
        geom.fixed_point_status = fp.status;
        geom.degenerate_kernel = fp.degenerate_kernel;
        Ok(geom)
    }

    pub fn num_models(&self) -> usize {
        self.d_vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.d_vectors.len() - 1
    }

    /// Restricts to the drift vectors of the listed models, re-expressed
    /// relative to the last listed model.
    pub fn relative_to(&self, models: &[usize]) -> Result<Self> {
        let m = self.num_models();
        if models.len() < 2 {
            return Err(Error::InvalidArgument("a sub-geometry needs at least two models".into()));
        }
        // Back to absolute expected log-likelihood differences: with the reference
        // appended as a zero coordinate, entry k of d_j is E[l_k - l_M].
        let full = |v: &[f64]| -> Vec<f64> { v.iter().copied().chain(std::iter::once(0.0)).collect() };
        let r = *models.last().expect("non-empty");
        if let Some(&bad) = models.iter().find(|&&i| i >= m) {
            return Err(Error::ModelOutOfRange { index: bad, count: m });
        }
        let vecs = models
            .iter()
            .map(|&j| {
                let f = full(&self.d_vectors[j]);
                models[..models.len() - 1].iter().map(|&k| f[k] - f[r]).collect()
            })
            .collect();
        Self::from_vectors(vecs)
    }
}

/// `ξ(S) = Σ_j π_j(S) d(a_j)`.
pub fn mean_drift(geom: &DriftGeometry, s: &LogOdds) -> Vec<f64> {
    mean_drift_slice(geom, s.as_slice())
}

pub(crate) fn mean_drift_slice(geom: &DriftGeometry, s: &[f64]) -> Vec<f64> {
    let p = softmax_slice(s);
    geom.d.mul_vec(&p)
}

/// Finds an interior belief `π*` with `D π* = 0`.
pub fn interior_fixed_point(geom: &DriftGeometry) -> FixedPoint {
    let m = geom.num_models();
    let sv = linalg::singular_values(&geom.d.transpose());
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > TOL_RANK * smax && smax > 0.0).count();
    // Numerical rank is ambiguous when the smallest retained singular value
    // sits within a few orders of magnitude of the cut-off.
    let ambiguous = smax > 0.0 && sv.iter().any(|&s| s > TOL_RANK * smax && s < 1e3 * TOL_RANK * smax);
    let absent = |degenerate: bool| FixedPoint {
        status: FixedPointStatus::Absent,
        belief: None,
        log_odds: None,
        degenerate_kernel: degenerate,
        singular_values: sv.clone(),
    };

    if rank + 1 < m {
        // Kernel dimension above one: look for any strictly positive kernel point.
        return match max_min_weight(geom) {
            Some((lambda, t)) if t > MIN_FIXED_POINT_MASS => {
                let b = Belief::from_weights(&lambda).expect("LP weights are a distribution");
                let s = to_log_odds(&b).ok();
                FixedPoint {
                    status: FixedPointStatus::NonUnique,
                    belief: Some(b),
                    log_odds: s,
                    degenerate_kernel: ambiguous,
                    singular_values: sv.clone(),
                }
            }
            _ => absent(ambiguous),
        };
    }

    let v = linalg::null_vector(&geom.d);
    let sign = if v.iter().all(|x| *x > 0.0) {
        1.0
    } else if v.iter().all(|x| *x < 0.0) {
        -1.0
    } else {
        let touches = v.iter().any(|x| x.abs() < MIN_FIXED_POINT_MASS)
            && (v.iter().all(|x| *x > -MIN_FIXED_POINT_MASS) || v.iter().all(|x| *x < MIN_FIXED_POINT_MASS));
        return absent(ambiguous || touches);
    };
    let w: Vec<f64> = v.iter().map(|x| x * sign).collect();
    let b = Belief::from_weights(&w).expect("positive kernel vector");
    if b.probs().iter().any(|p| *p < MIN_FIXED_POINT_MASS) {
        return absent(true);
    }
    let residual = norm(&geom.d.mul_vec(b.probs()));
    let scale = geom.d.max_abs().max(1.0);
    if residual > TOL_FP * scale {
        return absent(true);
    }
    let s = to_log_odds(&b).ok();
    FixedPoint {
        status: FixedPointStatus::Unique,
        belief: Some(b),
        log_odds: s,
        degenerate_kernel: ambiguous,
        singular_values: sv,
    }
}

/// `max t` over `{λ >= t, Σλ = 1, Dλ = 0}`. `None` when infeasible.
fn max_min_weight(geom: &DriftGeometry) -> Option<(Vec<f64>, f64)> {
    let m = geom.num_models();
    let mut obj = vec![0.0; m + 1];
    obj[m] = 1.0;
    let mut lp = LinearProgram::maximize(obj);
    let mut ones = vec![1.0; m + 1];
    ones[m] = 0.0;
    lp = lp.constraint(ones, Relation::Eq, 1.0);
    for k in 0..geom.dim() {
        let mut row: Vec<f64> = geom.d.row(k).to_vec();
        row.push(0.0);
        lp = lp.constraint(row, Relation::Eq, 0.0);
    }
    for j in 0..m {
        let mut row = vec![0.0; m + 1];
        row[j] = 1.0;
        row[m] = -1.0;
        lp = lp.constraint(row, Relation::Ge, 0.0);
    }
    match lp.solve() {
        LpOutcome::Optimal { x, value } => Some((x[..m].to_vec(), value)),
        _ => None,
    }
}

/// A direction `w` with `w·d(a_j) >= margin > 0` for every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatingDirection {
    pub w: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullReport {
    pub status: HullStatus,
    /// Convex weights with `Dλ = 0`, when the origin is in the hull.
    pub weights: Option<Vec<f64>>,
    pub separating_direction: Option<SeparatingDirection>,
}

/// Locates the origin relative to the convex hull of the vertex drifts.
///
/// When outside, the separating direction is the unit vector toward the
/// hull's nearest point to the origin, which maximizes the margin.
pub fn origin_in_hull(geom: &DriftGeometry) -> HullReport {
    match max_min_weight(geom) {
        Some((lambda, t)) => HullReport {
            status: if t > EPS_INT { HullStatus::InteriorPoint } else { HullStatus::BoundaryPoint },
            weights: Some(lambda),
            separating_direction: None,
        },
        None => {
            let (_, p) = min_norm_point(&geom.d_vectors);
            let len = norm(&p);
            let sep = (len > 0.0).then(|| {
                let w: Vec<f64> = p.iter().map(|x| x / len).collect();
                let margin = geom.d_vectors.iter().map(|d| dot(&w, d)).fold(f64::INFINITY, f64::min);
                SeparatingDirection { w, margin }
            });
            HullReport { status: HullStatus::Outside, weights: None, separating_direction: sep }
        }
    }
}

/// Closest point of `conv{points}` to the origin, with its convex weights.
///
/// Exact active-set enumeration for up to 12 points, Frank–Wolfe beyond.
pub fn min_norm_point(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let dim = points[0].len();
    let combine = |lambda: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (l, p) in lambda.iter().zip(points) {
            for (o, x) in out.iter_mut().zip(p) {
                *o += l * x;
            }
        }
        out
    };
    if n <= 12 {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let k = idx.len();
            // KKT system of min ‖Σ λ_i p_i‖² subject to Σ λ_i = 1.
            let mut a = Matrix::zeros(k + 1, k + 1);
            for (r, &i) in idx.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    a[(r, c)] = dot(&points[i], &points[j]);
                }
                a[(r, k)] = 1.0;
                a[(k, r)] = 1.0;
            }
            let mut rhs = vec![0.0; k + 1];
            rhs[k] = 1.0;
            let Some(sol) = linalg::solve(&a, &rhs) else { continue };
            if sol[..k].iter().any(|l| *l < -1e-12) {
                continue;
            }
            let mut lambda = vec![0.0; n];
            for (r, &i) in idx.iter().enumerate() {
                lambda[i] = sol[r].max(0.0);
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            let val = norm(&combine(&lambda));
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, lambda));
            }
        }
        let lambda = best.expect("singletons are always feasible").1;
        let p = combine(&lambda);
        (lambda, p)
    } else {
        let mut lambda = vec![1.0 / n as f64; n];
        for it in 0..20_000 {
            let x = combine(&lambda);
            let (j, _) = points
                .iter()
                .enumerate()
                .map(|(j, p)| (j, dot(p, &x)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            let step = 2.0 / (it as f64 + 2.0);
            lambda.iter_mut().for_each(|l| *l *= 1.0 - step);
            lambda[j] += step;
        }
        let p = combine(&lambda);
        (lambda, p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Eigenvalue of smallest magnitude, used by the small-noise gate.
    pub lambda_smallest_magnitude: f64,
    pub eigenvalues: Vec<f64>,
    pub verdict: SpectralVerdict,
}

/// Definiteness of `Sym(G) = (G + Gᵀ)/2`.
pub fn spectral_test(geom: &DriftGeometry) -> SpectralReport {
    spectral_of(&geom.g)
}

pub fn spectral_of(g: &Matrix) -> SpectralReport {
    let eig = linalg::symmetric_eigen(&g.symmetric_part());
    let values = eig.values;
    let lambda_min = values[0];
    let lambda_max = values[values.len() - 1];
    let smallest = values.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs())).expect("non-empty");
    let verdict = if values.iter().any(|l| l.abs() <= TOL_EIG) {
        SpectralVerdict::Singular
    } else if lambda_max < -TOL_EIG {
        SpectralVerdict::NegDef
    } else if lambda_min > TOL_EIG {
        SpectralVerdict::PosDef
    } else {
        SpectralVerdict::Indefinite
    };
    SpectralReport { lambda_min, lambda_max, lambda_smallest_magnitude: smallest, eigenvalues: values, verdict }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AngleVerdict {
    Holds,
    FailsAt { s: Vec<f64>, value: f64 },
}

/// Numerical audit of `⟨ξ(S), S - S*⟩ < 0` on spheres around `S*`.
/// A `Holds` verdict only covers the sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    /// Largest normalized inner product found on each sphere.
    pub max_per_radius: Vec<f64>,
    pub max_overall: f64,
    pub verdict: AngleVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleConfig {
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub rng: RngStream,
}

impl AngleConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { radii: DEFAULT_RADII.to_vec(), samples_per_radius: DEFAULT_SAMPLES_PER_RADIUS, rng: RngStream::new(seed, 0) }
    }
}

pub fn angle_test(geom: &DriftGeometry, cfg: &AngleConfig) -> Result<AngleReport> {
    let s_star = geom.s_star.as_ref().ok_or(Error::NoFixedPoint)?.as_slice().to_vec();
    let dim = s_star.len();
    let per_radius: Vec<(f64, Vec<f64>)> = cfg
        .radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut rng = cfg.rng.substream(i as u64).generator();
            let mut worst = (f64::NEG_INFINITY, s_star.clone());
            for _ in 0..cfg.samples_per_radius {
                let u = loop {
                    let u: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let n = norm(&u);
                    if n > 1e-12 {
                        break u.into_iter().map(|x| x / n).collect::<Vec<_>>();
                    }
                };
                let s: Vec<f64> = s_star.iter().zip(&u).map(|(c, x)| c + r * x).collect();
                let val = dot(&mean_drift_slice(geom, &s), &u);
                if val > worst.0 {
                    worst = (val, s);
                }
            }
            worst
        })
        .collect();
    let max_per_radius: Vec<f64> = per_radius.iter().map(|w| w.0).collect();
    let (max_overall, witness) = per_radius
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((f64::NEG_INFINITY, s_star));
    let verdict = if max_overall < 0.0 {
        AngleVerdict::Holds
    } else {
        AngleVerdict::FailsAt { s: witness, value: max_overall }
    };
    Ok(AngleReport {
        radii: cfg.radii.clone(),
        samples_per_radius: cfg.samples_per_radius,
        max_per_radius,
        max_overall,
        verdict,
    })
}

/// `V(S) = log(1 + Σ e^{S_k}) - ⟨S, π*_{-M}⟩` and its gradient `π_{-M}(S) - π*_{-M}`.
pub fn softmax_potential(s: &LogOdds, pi_star: &Belief) -> (f64, Vec<f64>) {
    let s = s.as_slice();
    let head = pi_star.head();
    let v = log_sum_exp1(s) - dot(s, head);
    let p = softmax_slice(s);
    let grad = p[..s.len()].iter().zip(head).map(|(a, b)| a - b).collect();
    (v, grad)
}

/// Hessian of the softmax potential, `diag(π_{-M}) - π_{-M} π_{-M}ᵀ`.
pub fn softmax_potential_hessian(s: &LogOdds) -> Matrix {
    let p = softmax_slice(s.as_slice());
    let n = s.dim();
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            h[(i, k)] = if i == k { p[i] - p[i] * p[i] } else { -p[i] * p[k] };
        }
    }
    h
}

/// Uniform bound on `E‖S_{t+1} - S_t‖²`: the largest second moment among the
/// increment laws of the prescribed actions.
pub fn noise_bound(problem: &BanditProblem) -> f64 {
    let inc = Increments::new(problem);
    let st2 = problem.env().sigma_true().powi(2);
    let mut actions = problem.prescribed_actions();
    actions.sort_unstable();
    actions.dedup();
    actions
        .into_iter()
        .map(|a| {
            let mean = action_drift(problem, a);
            let v = inc.slope(a);
            dot(&mean, &mean) + st2 * dot(v, v)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub sigma_bar_sq: f64,
    pub c_inf: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub lambda_min: f64,
    pub threshold: f64,
    pub small_noise_ok: bool,
}

/// Compares the noise bound against `|λ_min| c_∞² / L`, with `λ_min` the
/// smallest-magnitude eigenvalue of `Sym(G)` and `c_∞ = min_j π*_j`.
pub fn small_noise_check(geom: &DriftGeometry, spectral: &SpectralReport, sigma_bar_sq: f64) -> Result<NoiseReport> {
    let pi = geom.fixed_point.as_ref().ok_or(Error::NoFixedPoint)?;
    let c_inf = pi.probs().iter().copied().fold(f64::INFINITY, f64::min);
    let l = SOFTMAX_HESSIAN_BOUND;
    let lambda_min = spectral.lambda_smallest_magnitude;
    let threshold = lambda_min.abs() * c_inf * c_inf / l;
    Ok(NoiseReport { sigma_bar_sq, c_inf, l, lambda_min, threshold, small_noise_ok: sigma_bar_sq <= threshold })
}

/// Fixed point recovered from the plain-column system `[d_1 … d_{M-1}] y = -d_M`,
/// normalizing `(y, 1)` onto the simplex. `None` if the system is singular or
/// the solution leaves the open simplex.
pub fn fixed_point_via_plain_columns(geom: &DriftGeometry) -> Option<Belief> {
    let m = geom.num_models();
    let plain = Matrix::from_columns(&geom.d_vectors[..m - 1]);
    let rhs: Vec<f64> = geom.d_vectors[m - 1].iter().map(|x| -x).collect();
    let y = linalg::solve(&plain, &rhs)?;
    let mut w = y;
    w.push(1.0);
    if w.iter().any(|x| *x <= 0.0) {
        return None;
    }
    Belief::from_weights(&w).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeuristicVerdict {
    Pass,
    Unknown,
}

/// Heuristic for the rank/reversibility requirement on the increment support.
///
/// The support is a union of lines `α_a + v_a r`, one per prescribed action.
/// If the slopes `v_a` span the log-odds space, a zero-sum combination of
/// points on these lines exists (solve for the rewards), so the check passes.
/// Otherwise nothing is concluded.
pub fn support_rank_heuristic(problem: &BanditProblem) -> HeuristicVerdict {
    let dim = problem.num_models() - 1;
    let inc = Increments::new(problem);
    let mut actions = problem.prescribed_actions();
    actions.sort_unstable();
    actions.dedup();
    let slopes: Vec<Vec<f64>> = actions.iter().map(|&a| inc.slope(a).to_vec()).collect();
    let span = Matrix::from_columns(&slopes);
    let sv = linalg::singular_values(&span.transpose());
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| smax > 0.0 && s > TOL_RANK * smax).count();
    if rank >= dim {
        HeuristicVerdict::Pass
    } else {
        HeuristicVerdict::Unknown
    }
}

/// Sufficient-condition diagnostics for one geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub hull_status: HullStatus,
    pub spectral: SpectralReport,
    pub angle: Option<AngleReport>,
    pub noise: Option<NoiseReport>,
    pub separating_direction: Option<SeparatingDirection>,
}

impl ConditionReport {
    pub fn evaluate(geom: &DriftGeometry, sigma_bar_sq: f64, angle: Option<&AngleConfig>) -> Self {
        let hull = origin_in_hull(geom);
        let spectral = spectral_test(geom);
        let noise = small_noise_check(geom, &spectral, sigma_bar_sq).ok();
        let angle = match (angle, geom.s_star.is_some()) {
            (Some(cfg), true) => angle_test(geom, cfg).ok(),
            _ => None,
        };
        Self { hull_status: hull.status, spectral, angle, noise, separating_direction: hull.separating_direction }
    }
}
