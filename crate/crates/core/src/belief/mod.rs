//! Probability over candidate goals and the ways it gets updated.

mod classifier;
mod proposal;
mod summary;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attractor::{ActionField, AttractorError, JudgeError};
use crate::bank::{Goal, GoalId, PreferenceMap};
use crate::domain::Action;
use crate::trace::BeliefEntry;

pub use classifier::{classify_sequence, BigramClassifier, SequenceClassifier};
pub use proposal::{GoalProposer, ProposerConfig};
pub use summary::{summarize, InteractionSummary, Phase, RECENT_ACTIONS};

/// Default additive smoothing for action likelihoods.
pub const ACTION_EPSILON: f64 = 0.01;

const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("belief needs at least one goal")]
    Empty,
    #[error("goal `{0}` appears twice")]
    DuplicateGoal(GoalId),
    #[error("weights must be finite, nonnegative and not all zero")]
    ZeroMass,
    #[error("no action field for goal `{0}`")]
    MissingField(GoalId),
    #[error("classifier has no training sequences")]
    EmptyBank,
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Attractor(#[from] AttractorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalBelief {
    goals: Vec<Goal>,
    probs: Vec<f64>,
}

impl GoalBelief {
    pub fn uniform(goals: Vec<Goal>) -> Result<Self, BeliefError> {
        let w = vec![1.0; goals.len()];
        GoalBelief::from_weights(goals, w)
    }

    /// Normalizes nonnegative weights into a belief.
    pub fn from_weights(goals: Vec<Goal>, weights: Vec<f64>) -> Result<Self, BeliefError> {
        if goals.is_empty() {
            return Err(BeliefError::Empty);
        }
        assert_eq!(goals.len(), weights.len(), "one weight per goal");
        let mut seen = BTreeSet::new();
        for g in &goals {
            if !seen.insert(&g.id) {
                return Err(BeliefError::DuplicateGoal(g.id.clone()));
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BeliefError::ZeroMass);
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(BeliefError::ZeroMass);
        }
        let probs = weights.iter().map(|w| w / total).collect();
        Ok(GoalBelief { goals, probs })
    }

    /// Normalizes log-weights without underflow.
    pub fn from_log_weights(goals: Vec<Goal>, logw: &[f64]) -> Result<Self, BeliefError> {
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(BeliefError::ZeroMass);
        }
        GoalBelief::from_weights(goals, logw.iter().map(|l| (l - max).exp()).collect())
    }

    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Goal, f64)> {
        self.goals.iter().zip(self.probs.iter().copied())
    }

    pub fn prob(&self, id: &str) -> f64 {
        self.goals.iter().position(|g| g.id == id).map_or(0.0, |i| self.probs[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.goals.iter().any(|g| g.id == id)
    }

    /// Goals by descending probability, ties by id.
    pub fn ranked(&self) -> Vec<(&Goal, f64)> {
        let mut v: Vec<(&Goal, f64)> = self.iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));
        v
    }

    /// Most probable goal; ties go to the smallest id.
    pub fn argmax(&self) -> &Goal {
        self.ranked()[0].0
    }

    /// Most probable goal, or `None` when the top is tied.
    pub fn argmax_unique(&self) -> Option<&Goal> {
        let r = self.ranked();
        match r.as_slice() {
            [(g, _)] => Some(g),
            [(g, p), (_, q), ..] if p > q => Some(g),
            _ => None,
        }
    }

    pub fn snapshot(&self, k: usize) -> Vec<BeliefEntry> {
        self.ranked()
            .into_iter()
            .take(k)
            .map(|(g, p)| BeliefEntry { goal: g.id.clone(), name: g.name.clone(), p })
            .collect()
    }

    /// Number of goals with probability above `threshold`.
    pub fn support(&self, threshold: f64) -> usize {
        self.probs.iter().filter(|p| **p > threshold).count()
    }

    /// Smallest high-probability set: goals in rank order until `mass` is
    /// covered, at most `max`, each at least `min_p`. Probabilities are not
    /// renormalized.
    pub fn plausible(&self, mass: f64, max: usize, min_p: f64) -> Vec<(GoalId, f64)> {
        let mut out = Vec::new();
        let mut acc = 0.0;
        for (g, p) in self.ranked() {
            if out.len() >= max || acc >= mass || p < min_p {
                break;
            }
            acc += p;
            out.push((g.id.clone(), p));
        }
        out
    }

    /// Posterior after multiplying each goal by a likelihood.
    pub fn reweight(&self, mut likelihood: impl FnMut(&Goal) -> f64) -> Result<Self, BeliefError> {
        let w = self.iter().map(|(g, p)| p * likelihood(g)).collect();
        GoalBelief::from_weights(self.goals.clone(), w)
    }

    pub fn is_normalized(&self) -> bool {
        let total: f64 = self.probs.iter().sum();
        (total - 1.0).abs() <= TOLERANCE && self.probs.iter().all(|p| *p >= 0.0)
    }
}

/// Shannon entropy in bits.
pub fn entropy(belief: &GoalBelief) -> f64 {
    let h: f64 = belief.probs().iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum();
    h.max(0.0)
}

/// Bayes update on an observed action: p(g) is scaled by F_g(a) + eps.
pub fn update_from_action(
    belief: &GoalBelief,
    action: &Action,
    fields: &BTreeMap<GoalId, ActionField>,
    eps: f64,
) -> Result<GoalBelief, BeliefError> {
    let mut lik = Vec::with_capacity(belief.len());
    for g in belief.goals() {
        let f = fields.get(&g.id).ok_or_else(|| BeliefError::MissingField(g.id.clone()))?;
        lik.push(f.get(action) + eps);
    }
    let mut i = 0;
    belief.reweight(|_| {
        i += 1;
        lik[i - 1]
    })
}

/// Soft prior from stated preferences: every preference that does not
/// apply to a goal multiplies its weight by `floor`.
pub fn preference_prior(
    goals: &[Goal],
    prefs: &PreferenceMap,
    stated: &[String],
    floor: f64,
) -> Result<GoalBelief, BeliefError> {
    let w = goals
        .iter()
        .map(|g| {
            stated
                .iter()
                .filter(|l| prefs.goals_of(l).is_some())
                .map(|l| if prefs.applies(l, &g.id) { 1.0 } else { floor })
                .product()
        })
        .collect();
    GoalBelief::from_weights(goals.to_vec(), w)
}
