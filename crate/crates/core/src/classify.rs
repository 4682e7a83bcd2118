//! Regime classification: the two-arm table and the recursive multi-model tree.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::drift::{
    delta_two_arm, noise_bound, support_rank_heuristic, AngleConfig, AngleVerdict, ConditionReport, DriftGeometry,
    HeuristicVerdict, HullStatus, SpectralVerdict,
};
use crate::error::{Error, Result};
use crate::problem::{BanditProblem, ModelClass, ModelSet};

/// Sign calls within this distance of zero are knife-edge.
pub const TOL_DELTA: f64 = 1e-9;
/// Faces are only enumerated for nodes with at most this many models.
pub const MAX_ENUM_MODELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoArmLabel {
    AgreementPos,
    AgreementZero,
    AgreementNeg,
    SelfConfirming,
    UniformDominanceNu,
    UniformDominanceGamma,
    SelfDefeating,
    /// Disagreement with a Δ within tolerance of zero.
    Inconclusive,
}

/// Long-run law of the posterior mass on the first model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LimitLaw {
    PointMass { model: usize },
    Bernoulli { p: f64 },
    InvariantMeasure,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoArmRegime {
    pub label: TwoArmLabel,
    /// `(Δ_1, Δ_2)` in the problem's own action order.
    pub deltas: (f64, f64),
    pub agreement: bool,
    /// Actions preferred by the first (ν) and second (γ) model, 1-based.
    pub nu_action: usize,
    pub gamma_action: usize,
    /// True when actions were swapped so that ν's action is called arm 1.
    pub actions_swapped: bool,
    /// Deltas after the swap: `(Δ at ν's action, Δ at γ's action)`.
    pub oriented_deltas: (f64, f64),
    pub knife_edge: bool,
    pub predicted_limit: LimitLaw,
    /// Mean-field absorption probability at ν, `-Δ'_2 / (Δ'_1 - Δ'_2)`.
    pub p_star_formula: Option<f64>,
    /// Monte Carlo absorption frequency, filled in by an experiment.
    pub p_star_mc: Option<f64>,
    /// Long-run action probabilities in the problem's action order, when
    /// they do not depend on an unknown weight.
    pub predicted_action_probs: Option<Vec<f64>>,
    /// Average regret, when it does not depend on an unknown weight.
    pub predicted_regret: Option<f64>,
    pub regret_formula: String,
    #[serde(skip)]
    regrets: (f64, f64),
}

impl TwoArmRegime {
    /// Long-run `(P[ν's action], average regret)` given the weight that the
    /// table leaves open: `p*` for self-confirming, `α*` for self-defeating.
    pub fn predicted_with_weight(&self, weight: f64) -> (f64, f64) {
        let (r_nu, r_gamma) = self.regrets;
        let p = match self.label {
            TwoArmLabel::SelfConfirming | TwoArmLabel::SelfDefeating | TwoArmLabel::AgreementZero => weight,
            TwoArmLabel::AgreementPos | TwoArmLabel::AgreementNeg => 1.0,
            TwoArmLabel::UniformDominanceNu => 1.0,
            TwoArmLabel::UniformDominanceGamma => 0.0,
            TwoArmLabel::Inconclusive => weight,
        };
        if self.agreement {
            return (1.0, r_nu);
        }
        (p, p * r_nu + (1.0 - p) * r_gamma)
    }
}

/// Classifies a two-model, two-action problem.
pub fn classify_two_arm(problem: &BanditProblem) -> Result<TwoArmRegime> {
    if problem.num_models() != 2 || problem.num_actions() != 2 {
        return Err(Error::WrongShape { models: problem.num_models(), actions: problem.num_actions() });
    }
    let deltas = delta_two_arm(problem)?;
    let d = [deltas.0, deltas.1];
    let (a_nu, a_gamma) = (problem.optimal_action(0), problem.optimal_action(1));
    let (r_nu, r_gamma) = (problem.per_period_regret(a_nu), problem.per_period_regret(a_gamma));
    let sign = |x: f64| -> i8 {
        if x > TOL_DELTA {
            1
        } else if x < -TOL_DELTA {
            -1
        } else {
            0
        }
    };
    let agreement = a_nu == a_gamma;
    let swapped = a_nu == 1 && !agreement;
    let oriented = (d[a_nu], d[a_gamma]);
    let mut p_star_formula = None;
    let (label, limit, knife_edge) = if agreement {
        match sign(d[a_nu]) {
            1 => (TwoArmLabel::AgreementPos, LimitLaw::PointMass { model: 0 }, false),
            -1 => (TwoArmLabel::AgreementNeg, LimitLaw::PointMass { model: 1 }, false),
            _ => (TwoArmLabel::AgreementZero, LimitLaw::Bernoulli { p: 0.5 }, true),
        }
    } else {
        match (sign(oriented.0), sign(oriented.1)) {
            (1, -1) => {
                let p = -oriented.1 / (oriented.0 - oriented.1);
                p_star_formula = Some(p);
                (TwoArmLabel::SelfConfirming, LimitLaw::Bernoulli { p }, false)
            }
            (1, 1) => (TwoArmLabel::UniformDominanceNu, LimitLaw::PointMass { model: 0 }, false),
            (-1, -1) => (TwoArmLabel::UniformDominanceGamma, LimitLaw::PointMass { model: 1 }, false),
            (-1, 1) => (TwoArmLabel::SelfDefeating, LimitLaw::InvariantMeasure, false),
            _ => (TwoArmLabel::Inconclusive, LimitLaw::Unknown, true),
        }
    };

    let probs_for = |p_nu: f64| -> Vec<f64> {
        let mut v = vec![0.0; 2];
        v[a_nu] += p_nu;
        v[a_gamma] += 1.0 - p_nu;
        v
    };
    let (probs, regret, formula) = match label {
        TwoArmLabel::AgreementPos | TwoArmLabel::AgreementNeg | TwoArmLabel::AgreementZero => {
            (Some(probs_for(1.0)), Some(r_nu), "g(a*) - g(common action)".to_string())
        }
        TwoArmLabel::UniformDominanceNu => (Some(probs_for(1.0)), Some(r_nu), "g(a*) - g(phi(nu))".into()),
        TwoArmLabel::UniformDominanceGamma => (Some(probs_for(0.0)), Some(r_gamma), "g(a*) - g(phi(gamma))".into()),
        TwoArmLabel::SelfConfirming => (
            None,
            None,
            format!("{r_nu} w.p. p*, {r_gamma} w.p. 1 - p* (expected p* * {r_nu} + (1 - p*) * {r_gamma})"),
        ),
        TwoArmLabel::SelfDefeating => {
            (None, None, format!("alpha* * {r_nu} + (1 - alpha*) * {r_gamma}, alpha* = E_mu[pi(nu)]"))
        }
        TwoArmLabel::Inconclusive => (None, None, "undetermined (knife-edge)".into()),
    };

    Ok(TwoArmRegime {
        label,
        deltas,
        agreement,
        nu_action: a_nu + 1,
        gamma_action: a_gamma + 1,
        actions_swapped: swapped,
        oriented_deltas: oriented,
        knife_edge,
        predicted_limit: limit,
        p_star_formula,
        p_star_mc: None,
        predicted_action_probs: probs,
        predicted_regret: regret,
        regret_formula: formula,
        regrets: (r_nu, r_gamma),
    })
}

/// A face of the simplex: either a single vertex or a sub-problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Face {
    Vertex { model: usize },
    Problem(BanditProblem),
}

/// Keeps the listed models (order preserved, duplicates dropped) with the
/// prior renormalized over them; the last listed model becomes the reference.
pub fn restrict_to_face(problem: &BanditProblem, face: &[usize]) -> Result<Face> {
    if face.is_empty() {
        return Err(Error::EmptyFace);
    }
    let m = problem.num_models();
    if let Some(&bad) = face.iter().find(|&&i| i >= m) {
        return Err(Error::ModelOutOfRange { index: bad, count: m });
    }
    let mut idx: Vec<usize> = Vec::new();
    for &i in face {
        if !idx.contains(&i) {
            idx.push(i);
        }
    }
    if idx.len() == 1 {
        return Ok(Face::Vertex { model: idx[0] });
    }
    let means = idx.iter().map(|&i| problem.models().means()[i].clone()).collect();
    let models = ModelClass::new(means, problem.models().sigma())?;
    let w: Vec<f64> = idx.iter().map(|&i| problem.prior()[i]).collect();
    let prior = Belief::from_weights(&w)?;
    Ok(Face::Problem(BanditProblem::new(models, problem.env().clone(), prior)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    InteriorErgodic,
    VertexSelection,
    UniformDominance,
    FaceErgodic,
    NestedMixed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTree {
    pub models: ModelSet,
    pub verdict: Verdict,
    pub hull_status: Option<HullStatus>,
    pub fixed_point: Option<Belief>,
    pub conditions: Option<ConditionReport>,
    pub notes: Vec<String>,
    pub children: Vec<RegimeTree>,
}

impl RegimeTree {
    pub fn leaves(&self) -> Vec<&RegimeTree> {
        if self.children.is_empty() {
            vec![self]
        } else {
            self.children.iter().flat_map(|c| c.leaves()).collect()
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Indented human-readable rendering with margins.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        let _ = write!(out, "{pad}{} {:?}", self.models, self.verdict);
        if let Some(h) = self.hull_status {
            let _ = write!(out, "  hull={h:?}");
        }
        if let Some(c) = &self.conditions {
            let s = &c.spectral;
            let _ = write!(out, "  Sym(G)={:?} [{:.4e}, {:.4e}]", s.verdict, s.lambda_min, s.lambda_max);
            if let Some(n) = &c.noise {
                let _ = write!(out, "  noise {:.4e} vs {:.4e} ({})", n.sigma_bar_sq, n.threshold, if n.small_noise_ok { "ok" } else { "too large" });
            }
            if let Some(a) = &c.angle {
                let _ = write!(out, "  angle max={:.4e}", a.max_overall);
            }
            if let Some(w) = &c.separating_direction {
                let _ = write!(out, "  margin={:.4e}", w.margin);
            }
        }
        out.push('\n');
        for n in &self.notes {
            let _ = writeln!(out, "{pad}  - {n}");
        }
        for c in &self.children {
            c.render_into(out, indent + 1);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    pub max_depth: usize,
    pub angle: AngleConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self { max_depth: 8, angle: AngleConfig::with_seed(0) }
    }
}

/// Recursive classification of a problem of any size.
pub fn classify_multi(problem: &BanditProblem, cfg: &ClassifyConfig) -> RegimeTree {
    let geom = DriftGeometry::from_problem(problem);
    let noise = |face: &[usize]| match restrict_to_face(problem, face) {
        Ok(Face::Problem(p)) => noise_bound(&p),
        _ => 0.0,
    };
    classify_node(&geom, &noise, &ModelSet::all(problem.num_models()), 0, true, cfg)
}

/// Classification from drift vectors alone, with a fixed noise bound for every face.
pub fn classify_geometry(geom: &DriftGeometry, sigma_bar_sq: f64, cfg: &ClassifyConfig) -> RegimeTree {
    let noise = |_: &[usize]| sigma_bar_sq;
    classify_node(geom, &noise, &ModelSet::all(geom.num_models()), 0, true, cfg)
}

fn leaf(models: ModelSet, verdict: Verdict, note: Option<String>) -> RegimeTree {
    RegimeTree {
        models,
        verdict,
        hull_status: None,
        fixed_point: None,
        conditions: None,
        notes: note.into_iter().collect(),
        children: Vec::new(),
    }
}

fn classify_node(
    base: &DriftGeometry,
    noise: &(dyn Fn(&[usize]) -> f64 + Sync),
    face: &ModelSet,
    depth: usize,
    outside_chain: bool,
    cfg: &ClassifyConfig,
) -> RegimeTree {
    if face.len() == 1 {
        let verdict = if outside_chain { Verdict::UniformDominance } else { Verdict::VertexSelection };
        return leaf(face.clone(), verdict, None);
    }
    if depth >= cfg.max_depth {
        return leaf(face.clone(), Verdict::Inconclusive, Some(format!("depth cap {} reached", cfg.max_depth)));
    }
    let geom = if face.len() == base.num_models() { base.clone() } else { base.relative_to(face.as_slice()).expect("valid face") };
    let sigma_bar_sq = noise(face.as_slice());
    let cond = ConditionReport::evaluate(&geom, sigma_bar_sq, Some(&cfg.angle));
    let hull = cond.hull_status;
    let mut node = RegimeTree {
        models: face.clone(),
        verdict: Verdict::Inconclusive,
        hull_status: Some(hull),
        fixed_point: geom.fixed_point.clone().map(|b| lift(&b, face, base.num_models())),
        conditions: None,
        notes: Vec::new(),
        children: Vec::new(),
    };
    if geom.degenerate_kernel {
        node.notes.push("degenerate kernel of D".into());
    }

    match hull {
        HullStatus::Outside => {
            node.notes.push("origin outside the drift hull: transient".into());
        }
        _ if geom.fixed_point.is_none() => {
            node.notes.push("origin on the hull boundary without an interior fixed point".into());
            node.conditions = Some(cond);
            return node;
        }
        _ => {
            let small = cond.noise.as_ref().is_some_and(|n| n.small_noise_ok);
            let angle_holds = cond.angle.as_ref().is_some_and(|a| a.verdict == AngleVerdict::Holds);
            // On an edge the chain is scalar and the drift signs decide it outright.
            let edge = face.len() == 2;
            match cond.spectral.verdict {
                SpectralVerdict::NegDef if edge => {
                    node.notes.push("two-model face with self-defeating drift signs: positive recurrent".into());
                    node.verdict = Verdict::InteriorErgodic;
                    node.conditions = Some(cond);
                    return node;
                }
                SpectralVerdict::PosDef if edge => {
                    node.notes.push("two-model face with self-confirming drift signs: transient".into());
                }
                SpectralVerdict::NegDef if small => {
                    node.notes.push("Sym(G) negative definite with small noise".into());
                    node.verdict = Verdict::InteriorErgodic;
                    node.conditions = Some(cond);
                    return node;
                }
                _ if angle_holds => {
                    node.notes.push("angle condition holds on all sampled spheres (numerical audit)".into());
                    node.verdict = Verdict::InteriorErgodic;
                    node.conditions = Some(cond);
                    return node;
                }
                SpectralVerdict::PosDef if small => {
                    node.notes.push("Sym(G) positive definite with small noise: transient".into());
                }
                v => {
                    node.notes.push(format!("no sufficient condition fires (Sym(G) {v:?}, small noise {small}, angle {})", if angle_holds { "holds" } else { "fails" }));
                    node.conditions = Some(cond);
                    return node;
                }
            }
        }
    }

    let outside = hull == HullStatus::Outside;
    node.conditions = Some(cond);
    if face.len() > MAX_ENUM_MODELS {
        node.notes.push(format!("face enumeration skipped above {MAX_ENUM_MODELS} models; use Monte Carlo face detection"));
        return node;
    }
    let candidates = candidate_faces(&geom, face, node.conditions.as_ref().and_then(|c| c.separating_direction.as_ref().map(|s| s.w.clone())));
    node.children = candidates
        .par_iter()
        .map(|sub| classify_node(base, noise, sub, depth + 1, outside_chain && outside, cfg))
        .collect();
    node.verdict = combine(&node.children);
    node
}

/// Node verdict from the distinct terminal faces its children reach.
fn combine(children: &[RegimeTree]) -> Verdict {
    let mut leaves: Vec<&RegimeTree> = children.iter().flat_map(|c| c.leaves()).collect();
    leaves.sort_by(|a, b| a.models.cmp(&b.models));
    leaves.dedup_by(|a, b| a.models == b.models);
    if leaves.iter().all(|l| l.verdict == Verdict::Inconclusive) {
        return Verdict::Inconclusive;
    }
    if leaves.iter().all(|l| l.models.len() == 1) {
        return if leaves.len() == 1 && leaves[0].verdict == Verdict::UniformDominance {
            Verdict::UniformDominance
        } else {
            Verdict::VertexSelection
        };
    }
    if leaves.len() == 1 && leaves[0].verdict == Verdict::InteriorErgodic {
        return Verdict::FaceErgodic;
    }
    Verdict::NestedMixed
}

/// Embeds a face belief into the full simplex.
fn lift(b: &Belief, face: &ModelSet, m: usize) -> Belief {
    let mut v = vec![0.0; m];
    for (k, &i) in face.as_slice().iter().enumerate() {
        v[i] = b[k];
    }
    Belief::new(v).expect("lifted belief")
}

/// Proper faces that could capture the dynamics.
///
/// A face `I` is stable against invasion when, with play restricted to the
/// actions of `I`, every outside model is beaten in expected log-likelihood
/// by some single model of `I` under all of those actions. Maximal such faces
/// are proposed; if none exists, all faces one model smaller are. Faces are
/// ordered by their smallest `w·d(a_j)` when a separating direction is known.
fn candidate_faces(geom: &DriftGeometry, face: &ModelSet, w: Option<Vec<f64>>) -> Vec<ModelSet> {
    let n = face.len();
    // ll[j][k]: expected log-likelihood of local model k (up to a constant) when local model j's action is played.
    let ll: Vec<Vec<f64>> =
        geom.d_vectors.iter().map(|d| d.iter().copied().chain(std::iter::once(0.0)).collect()).collect();
    let stable = |mask: u32| -> bool {
        let inside: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        // A face with its own interior balance repels an outsider when the
        // balanced mixture favours every inside model over it.
        if inside.len() >= 2 {
            if let Some(fp) = geom.relative_to(&inside).ok().and_then(|g| g.fixed_point) {
                let w = fp.probs();
                return (0..n).filter(|k| mask & (1 << k) == 0).all(|k| {
                    inside.iter().all(|&i| {
                        inside.iter().zip(w).map(|(&j, wj)| wj * (ll[j][i] - ll[j][k])).sum::<f64>() > TOL_DELTA
                    })
                });
            }
        }
        (0..n).filter(|k| mask & (1 << k) == 0).all(|k| {
            inside.iter().any(|&i| inside.iter().all(|&j| ll[j][i] > ll[j][k] + TOL_DELTA))
        })
    };
    let full = (1u32 << n) - 1;
    let stable_masks: Vec<u32> = (1..full).filter(|&m| stable(m)).collect();
    let maximal: Vec<u32> = stable_masks
        .iter()
        .copied()
        .filter(|&m| !stable_masks.iter().any(|&o| o != m && o & m == m))
        .collect();
    let masks = if maximal.is_empty() { (0..n).map(|drop| full & !(1 << drop)).collect() } else { maximal };
    let mut faces: Vec<(f64, ModelSet)> = masks
        .into_iter()
        .map(|mask| {
            let local: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let key = w.as_ref().map_or(0.0, |w| {
                local.iter().map(|&j| crate::linalg::dot(w, &geom.d_vectors[j])).fold(f64::INFINITY, f64::min)
            });
            (key, ModelSet(local.iter().map(|&i| face.as_slice()[i]).collect()))
        })
        .collect();
    faces.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    faces.into_iter().map(|f| f.1).collect()
}

/// Everything the classifier says about one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub problem_hash: String,
    pub num_models: usize,
    pub num_actions: usize,
    pub misspecified: bool,
    /// Action each model would play, 1-based.
    pub prescribed_actions: Vec<usize>,
    /// Per-period regret of each action under the true environment.
    pub action_regrets: Vec<f64>,
    /// Present for two-model, two-action problems.
    pub two_arm: Option<TwoArmRegime>,
    pub tree: RegimeTree,
    pub geometry: DriftGeometry,
    /// Heuristic check of the rank/reversibility requirement on the increments.
    pub support_rank: HeuristicVerdict,
    /// Uniform bound on the one-step second moment.
    pub sigma_bar_sq: f64,
}

impl ClassificationReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "problem {} ({} models x {} actions), misspecified: {}", self.problem_hash, self.num_models, self.num_actions, self.misspecified);
        if let Some(t) = &self.two_arm {
            let _ = writeln!(out, "two-arm regime: {:?}", t.label);
            let _ = writeln!(out, "  deltas = ({}, {}), agreement = {}", t.deltas.0, t.deltas.1, t.agreement);
            if let Some(p) = t.p_star_formula {
                let _ = writeln!(out, "  p* (mean-field) = {p}");
            }
            if let Some(p) = t.p_star_mc {
                let _ = writeln!(out, "  p* (Monte Carlo) = {p}");
            }
            let _ = writeln!(out, "  regret: {}", t.regret_formula);
        }
        let _ = writeln!(out, "support rank heuristic: {:?}, noise bound {:.6e}", self.support_rank, self.sigma_bar_sq);
        out.push_str("regime tree:\n");
        out.push_str(&self.tree.render());
        out
    }
}

/// Two-arm table (when applicable) plus the recursive tree.
pub fn classify(problem: &BanditProblem, cfg: &ClassifyConfig) -> ClassificationReport {
    let two_arm = (problem.num_models() == 2 && problem.num_actions() == 2)
        .then(|| classify_two_arm(problem).expect("shape checked"));
    ClassificationReport {
        problem_hash: problem.hash(),
        num_models: problem.num_models(),
        num_actions: problem.num_actions(),
        misspecified: problem.is_misspecified(),
        prescribed_actions: problem.prescribed_actions().iter().map(|a| a + 1).collect(),
        action_regrets: (0..problem.num_actions()).map(|a| problem.per_period_regret(a)).collect(),
        two_arm,
        tree: classify_multi(problem, cfg),
        geometry: DriftGeometry::from_problem(problem),
        support_rank: support_rank_heuristic(problem),
        sigma_bar_sq: noise_bound(problem),
    }
}
