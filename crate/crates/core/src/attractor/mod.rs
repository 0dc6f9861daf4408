//! Attractor fields: nonnegative relevance maps from a source (goal,
//! preference, answer) over targets, and the aggregate action score.

mod cache;
mod http;
mod judge;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{GoalId, PolicyBank, PreferenceMap};
use crate::domain::Action;

pub use cache::CachedJudge;
pub use http::{HttpJudge, ENDPOINT_ENV};
pub use judge::{tokenize, Judge, JudgeError, Lexicon, MockJudge};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttractorError {
    #[error("unknown field source `{0}`")]
    UnknownSource(String),
    #[error("no field for `{0}`")]
    MissingField(String),
    #[error("field scores must be finite and nonnegative (`{target}` = {value})")]
    Negative { target: String, value: f64 },
    #[error("judge called with no targets")]
    EmptyTargets,
    #[error("weights must be nonnegative and not both zero")]
    BadWeights,
    #[error(transparent)]
    Judge(#[from] JudgeError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FieldSource {
    Goal(GoalId),
    Preference(String),
    Answer(String),
}

impl fmt::Display for FieldSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSource::Goal(g) => write!(f, "goal:{g}"),
            FieldSource::Preference(p) => write!(f, "pref:{p}"),
            FieldSource::Answer(a) => write!(f, "answer:{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorField<T: Ord> {
    pub source: FieldSource,
    scores: BTreeMap<T, f64>,
}

impl<T: Ord + fmt::Display> AttractorField<T> {
    pub fn new(source: FieldSource, scores: BTreeMap<T, f64>) -> Result<Self, AttractorError> {
        if let Some((t, &v)) = scores.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(AttractorError::Negative { target: t.to_string(), value: v });
        }
        Ok(AttractorField { source, scores })
    }
}

impl<T: Ord> AttractorField<T> {
    /// Score of a target; absent targets score 0.
    pub fn get(&self, target: &T) -> f64 {
        self.scores.get(target).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &f64)> {
        self.scores.iter()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.scores.values().copied().fold(0.0, f64::max)
    }
}

pub type ActionField = AttractorField<Action>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub goal: f64,
    pub preference: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights { goal: 1.0, preference: 1.0 }
    }
}

impl ScoreWeights {
    pub fn new(goal: f64, preference: f64) -> Result<Self, AttractorError> {
        let w = ScoreWeights { goal, preference };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), AttractorError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if ok(self.goal) && ok(self.preference) && self.goal + self.preference > 0.0 {
            Ok(())
        } else {
            Err(AttractorError::BadWeights)
        }
    }

    pub fn scaled(&self, c: f64) -> ScoreWeights {
        ScoreWeights { goal: self.goal * c, preference: self.preference * c }
    }
}

fn frequencies(seqs: &[Vec<Action>]) -> BTreeMap<Action, f64> {
    let mut counts: BTreeMap<Action, f64> = BTreeMap::new();
    for s in seqs {
        let mut seen: Vec<&Action> = s.iter().collect();
        seen.sort();
        seen.dedup();
        for a in seen {
            *counts.entry(a.clone()).or_default() += 1.0;
        }
    }
    let n = seqs.len().max(1) as f64;
    counts.values_mut().for_each(|c| *c /= n);
    counts
}

/// Mixture of per-goal frequency fields with the given weights (normalized).
pub fn pooled_field(
    source: FieldSource,
    goals: &[(GoalId, f64)],
    bank: &PolicyBank,
) -> Result<ActionField, AttractorError> {
    let total: f64 = goals.iter().map(|(_, w)| w).sum();
    let mut scores: BTreeMap<Action, f64> = BTreeMap::new();
    for (g, w) in goals {
        let seqs = bank.sequences(g).ok_or_else(|| AttractorError::UnknownSource(g.clone()))?;
        if total <= 0.0 {
            continue;
        }
        for (a, f) in frequencies(seqs) {
            *scores.entry(a).or_default() += f * w / total;
        }
    }
    AttractorField::new(source, scores)
}

/// Relative frequency of each action across the source's linearizations.
/// A preference pools its goals with equal weight.
pub fn field_from_policy_bank(
    source: &FieldSource,
    bank: &PolicyBank,
    prefs: &PreferenceMap,
) -> Result<ActionField, AttractorError> {
    match source {
        FieldSource::Goal(g) => {
            let seqs = bank.sequences(g).ok_or_else(|| AttractorError::UnknownSource(g.clone()))?;
            AttractorField::new(source.clone(), frequencies(seqs))
        }
        FieldSource::Preference(p) => {
            let goals = prefs.goals_of(p).ok_or_else(|| AttractorError::UnknownSource(p.clone()))?;
            let weighted: Vec<(GoalId, f64)> = goals.iter().map(|g| (g.clone(), 1.0)).collect();
            pooled_field(source.clone(), &weighted, bank)
        }
        FieldSource::Answer(a) => Err(AttractorError::UnknownSource(a.clone())),
    }
}

/// Asks the judge to score `targets` against `source`.
pub fn field_from_judge(
    source: FieldSource,
    text: &str,
    targets: &[String],
    context: &str,
    judge: &dyn Judge,
) -> Result<AttractorField<String>, AttractorError> {
    if targets.is_empty() {
        return Err(AttractorError::EmptyTargets);
    }
    let raw = judge.score(text, targets, context)?;
    let mut scores = BTreeMap::new();
    for t in targets {
        match raw.get(t) {
            Some(v) if v.is_finite() => {
                scores.insert(t.clone(), v.clamp(0.0, 1.0));
            }
            _ => return Err(JudgeError::Malformed(format!("no usable score for `{t}`")).into()),
        }
    }
    AttractorField::new(source, scores)
}

/// Goal and preference terms resolved once and reused for many actions.
#[derive(Debug, Clone, Default)]
pub struct ScoringTerms<'a> {
    terms: Vec<(f64, &'a ActionField)>,
}

impl<'a> ScoringTerms<'a> {
    /// `goals` pairs each goal with its belief probability; goal terms are
    /// weighted by `w.goal * p(g)` and preference terms by `w.preference`.
    pub fn resolve(
        goals: &[(GoalId, f64)],
        goal_fields: &'a BTreeMap<GoalId, ActionField>,
        prefs: &[String],
        pref_fields: &'a BTreeMap<String, ActionField>,
        w: &ScoreWeights,
    ) -> Result<Self, AttractorError> {
        let mut terms = Vec::new();
        for (g, p) in goals {
            let f = goal_fields.get(g).ok_or_else(|| AttractorError::MissingField(g.clone()))?;
            terms.push((w.goal * p, f));
        }
        for l in prefs {
            let f = pref_fields.get(l).ok_or_else(|| AttractorError::MissingField(l.clone()))?;
            terms.push((w.preference, f));
        }
        Ok(ScoringTerms { terms })
    }

    pub fn from_terms(terms: Vec<(f64, &'a ActionField)>) -> Self {
        ScoringTerms { terms }
    }

    pub fn push(&mut self, weight: f64, field: &'a ActionField) {
        self.terms.push((weight, field));
    }

    pub fn score(&self, action: &Action) -> f64 {
        self.terms.iter().map(|(w, f)| w * f.get(action)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// S(a) = sum over goals of w_g p(g) F_g(a) plus sum over preferences of
/// w_l F_l(a).
pub fn aggregate_score(
    action: &Action,
    goals: &[(GoalId, f64)],
    goal_fields: &BTreeMap<GoalId, ActionField>,
    prefs: &[String],
    pref_fields: &BTreeMap<String, ActionField>,
    w: &ScoreWeights,
) -> Result<f64, AttractorError> {
    Ok(ScoringTerms::resolve(goals, goal_fields, prefs, pref_fields, w)?.score(action))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_reject_negative_scores() {
        let mut m = BTreeMap::new();
        m.insert("x".to_string(), -0.1);
        assert!(AttractorField::new(FieldSource::Answer("a".into()), m).is_err());
    }

    #[test]
    fn weights_validate() {
        assert!(ScoreWeights::new(0.0, 0.0).is_err());
        assert!(ScoreWeights::new(-1.0, 2.0).is_err());
        assert!(ScoreWeights::new(0.0, 1.0).is_ok());
    }
}
