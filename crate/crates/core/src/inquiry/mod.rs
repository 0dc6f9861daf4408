//! When to ask, what to ask, and how answers change the belief.

mod generate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attractor::JudgeError;
use crate::bank::GoalId;
use crate::belief::{entropy, BeliefError, GoalBelief, InteractionSummary};

pub use generate::{
    parse_templates, Attribute, BankQuestionGenerator, JudgeQuestionGenerator, Template, SOMETHING_ELSE,
};

/// Goals at or below this probability do not count toward n in the gate.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

/// Questions worth less than this are never asked.
pub const MIN_VALUE: f64 = 1e-9;

/// Question values this close count as tied.
pub const VALUE_TIE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InquiryError {
    #[error("cost schedule needs 0 <= c_min <= c_max and t_q >= 1")]
    BadSchedule,
    #[error("question `{id}`: {msg}")]
    BadQuestion { id: String, msg: String },
    #[error("question `{question}` has no likelihoods for goal `{goal}`")]
    MissingLikelihood { question: String, goal: GoalId },
    #[error("`{answer}` is not an answer to `{question}`")]
    UnknownAnswer { question: String, answer: String },
    #[error("question templates line {line}: {msg}")]
    Template { line: usize, msg: String },
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostSchedule {
    pub c_min: f64,
    pub c_max: f64,
    /// Timesteps for the cost to decay from `c_max` to `c_min`.
    pub t_q: usize,
    pub last_asked: Option<usize>,
}

impl Default for CostSchedule {
    fn default() -> Self {
        CostSchedule { c_min: 0.2, c_max: 2.0, t_q: 5, last_asked: None }
    }
}

impl CostSchedule {
    pub fn new(c_min: f64, c_max: f64, t_q: usize) -> Result<Self, InquiryError> {
        if !(c_min >= 0.0 && c_max >= c_min && c_max.is_finite() && t_q >= 1) {
            return Err(InquiryError::BadSchedule);
        }
        Ok(CostSchedule { c_min, c_max, t_q, last_asked: None })
    }

    /// Cost of interrupting at `t`; decays linearly after each question.
    pub fn cost(&self, t: usize) -> f64 {
        let Some(last) = self.last_asked else {
            return self.c_min;
        };
        let dt = t.saturating_sub(last);
        if dt >= self.t_q {
            self.c_min
        } else {
            self.c_max - (self.c_max - self.c_min) * dt as f64 / self.t_q as f64
        }
    }

    pub fn record_ask(&mut self, t: usize) {
        self.last_asked = Some(t);
    }
}

pub fn interruption_cost(sched: &CostSchedule, t: usize) -> f64 {
    sched.cost(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionCategory {
    Preference,
    Ingredient,
    Appliance,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub category: QuestionCategory,
    pub answers: Vec<String>,
    /// p(answer | goal), one row per goal in answer order.
    likelihoods: BTreeMap<GoalId, Vec<f64>>,
}

impl Question {
    pub fn new(
        id: &str,
        text: &str,
        category: QuestionCategory,
        answers: Vec<String>,
        likelihoods: BTreeMap<GoalId, Vec<f64>>,
    ) -> Result<Self, InquiryError> {
        let bad = |msg: String| InquiryError::BadQuestion { id: id.to_string(), msg };
        if answers.len() < 2 {
            return Err(bad("needs at least two answers".into()));
        }
        let distinct: BTreeSet<&String> = answers.iter().collect();
        if distinct.len() != answers.len() {
            return Err(bad("answers repeat".into()));
        }
        for (g, row) in &likelihoods {
            if row.len() != answers.len() {
                return Err(bad(format!("row for `{g}` has {} entries", row.len())));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(bad(format!("row for `{g}` has invalid entries")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(bad(format!("row for `{g}` sums to {total}")));
            }
        }
        Ok(Question { id: id.to_string(), text: text.to_string(), category, answers, likelihoods })
    }

    /// Builds rows from nonnegative affinities: p(ans|g) is proportional
    /// to affinity + eps.
    pub fn from_affinity(
        id: &str,
        text: &str,
        category: QuestionCategory,
        answers: Vec<String>,
        affinity: BTreeMap<GoalId, Vec<f64>>,
        eps: f64,
    ) -> Result<Self, InquiryError> {
        let rows = affinity
            .into_iter()
            .map(|(g, row)| {
                let total: f64 = row.iter().map(|f| f.max(0.0) + eps).sum();
                let norm = if total > 0.0 {
                    row.iter().map(|f| (f.max(0.0) + eps) / total).collect()
                } else {
                    vec![1.0 / row.len() as f64; row.len()]
                };
                (g, norm)
            })
            .collect();
        Question::new(id, text, category, answers, rows)
    }

    pub fn answer_index(&self, answer: &str) -> Option<usize> {
        self.answers.iter().position(|a| a == answer)
    }

    pub fn likelihood_row(&self, goal: &str) -> Option<&[f64]> {
        self.likelihoods.get(goal).map(Vec::as_slice)
    }

    pub fn likelihood(&self, goal: &str, answer: usize) -> Option<f64> {
        self.likelihoods.get(goal).and_then(|r| r.get(answer).copied())
    }

    pub fn covers(&self, goal: &str) -> bool {
        self.likelihoods.contains_key(goal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskDecision {
    pub ask: bool,
    pub entropy: f64,
    pub scaled_cost: f64,
    pub chosen: Option<Question>,
    pub delta_h: f64,
}

/// The entropy gate: ask when H(g) > C_q(t) log2(n).
pub fn should_ask(belief: &GoalBelief, sched: &CostSchedule, t: usize) -> AskDecision {
    let h = entropy(belief);
    let n = belief.support(SUPPORT_THRESHOLD).max(1);
    let scaled = sched.cost(t) * (n as f64).log2();
    AskDecision { ask: h > scaled, entropy: h, scaled_cost: scaled, chosen: None, delta_h: 0.0 }
}

fn rows_for<'a>(q: &'a Question, belief: &GoalBelief) -> Result<Vec<Option<&'a [f64]>>, InquiryError> {
    belief
        .iter()
        .map(|(g, p)| match q.likelihood_row(&g.id) {
            Some(r) => Ok(Some(r)),
            None if p == 0.0 => Ok(None),
            None => Err(InquiryError::MissingLikelihood { question: q.id.clone(), goal: g.id.clone() }),
        })
        .collect()
}

fn posterior_with(belief: &GoalBelief, rows: &[Option<&[f64]>], ans: usize) -> Result<GoalBelief, InquiryError> {
    let w: Vec<f64> = belief.probs().iter().zip(rows).map(|(p, r)| p * r.map_or(0.0, |r| r[ans])).collect();
    if w.iter().sum::<f64>() <= 0.0 {
        return Ok(belief.clone());
    }
    Ok(GoalBelief::from_weights(belief.goals().to_vec(), w)?)
}

/// p(g | ans) by Bayes. An answer no candidate could give leaves the
/// belief unchanged.
pub fn posterior(q: &Question, belief: &GoalBelief, answer: usize) -> Result<GoalBelief, InquiryError> {
    let rows = rows_for(q, belief)?;
    posterior_with(belief, &rows, answer)
}

/// Expected entropy reduction with answers taken as equally likely.
pub fn question_value(q: &Question, belief: &GoalBelief) -> Result<f64, InquiryError> {
    let rows = rows_for(q, belief)?;
    let h = entropy(belief);
    let n = q.answers.len() as f64;
    let mut expected = 0.0;
    for a in 0..q.answers.len() {
        expected += entropy(&posterior_with(belief, &rows, a)?) / n;
    }
    Ok(h - expected)
}

/// Highest-value question; ties (within [`VALUE_TIE`]) go to the
/// smallest id.
pub fn select_question<'a>(
    candidates: &'a [Question],
    belief: &GoalBelief,
) -> Result<Option<(&'a Question, f64)>, InquiryError> {
    let mut best: Option<(&Question, f64)> = None;
    for q in candidates {
        let v = question_value(q, belief)?;
        best = match best {
            Some((b, bv)) if bv > v + VALUE_TIE || ((bv - v).abs() <= VALUE_TIE && b.id <= q.id) => Some((b, bv)),
            _ => Some((q, v)),
        };
    }
    Ok(best)
}

/// Gate plus selection; questions already asked and worthless ones are
/// skipped.
pub fn decide(
    belief: &GoalBelief,
    sched: &CostSchedule,
    t: usize,
    candidates: &[Question],
    asked: &BTreeSet<String>,
) -> Result<AskDecision, InquiryError> {
    let mut d = should_ask(belief, sched, t);
    if !d.ask {
        return Ok(d);
    }
    let fresh: Vec<Question> = candidates.iter().filter(|q| !asked.contains(&q.id)).cloned().collect();
    match select_question(&fresh, belief)? {
        Some((q, v)) if v > MIN_VALUE => {
            d.chosen = Some(q.clone());
            d.delta_h = v;
        }
        _ => d.ask = false,
    }
    Ok(d)
}

/// Folds an answer into the belief and the summary, where it also becomes
/// a stated preference.
pub fn apply_answer(
    belief: &GoalBelief,
    summary: &InteractionSummary,
    q: &Question,
    answer: &str,
) -> Result<(GoalBelief, InteractionSummary), InquiryError> {
    let idx = q
        .answer_index(answer)
        .ok_or_else(|| InquiryError::UnknownAnswer { question: q.id.clone(), answer: answer.to_string() })?;
    let post = posterior(q, belief, idx)?;
    let mut s = summary.clone();
    s.record_answer(&q.text, answer);
    Ok((post, s))
}
