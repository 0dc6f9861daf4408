//! Scripted human that follows one linearization of its goal.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bank::{Goal, PolicyBank};
use crate::domain::{Action, ActionInstance, Agent, DomainSpec, WorldState};
use crate::inquiry::Question;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HumanError {
    #[error("no scripts for goal `{0}`")]
    NoScript(String),
    #[error("human cannot perform `{step}`: {reason}")]
    Stuck { step: Action, reason: String },
    #[error("it is not the human's turn")]
    WrongTurn,
    #[error("question `{0}` does not cover the human's goal")]
    NotCovered(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum HumanMove {
    Act(ActionInstance),
    Done,
}

#[derive(Debug, Clone)]
pub struct SimHuman {
    pub true_goal: Goal,
    pub stated_prefs: Vec<String>,
    script: Vec<Action>,
    cursor: usize,
    done: BTreeSet<Action>,
    noise: Option<(f64, ChaCha8Rng)>,
}

impl SimHuman {
    pub fn new(true_goal: Goal, script: Vec<Action>, stated_prefs: Vec<String>) -> Self {
        SimHuman { true_goal, stated_prefs, script, cursor: 0, done: BTreeSet::new(), noise: None }
    }

    /// Picks one of the goal's policy-bank sequences with `seed`.
    pub fn from_policy_bank(
        true_goal: Goal,
        bank: &PolicyBank,
        stated_prefs: Vec<String>,
        seed: u64,
    ) -> Result<Self, HumanError> {
        let seqs = bank
            .sequences(&true_goal.id)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| HumanError::NoScript(true_goal.id.clone()))?;
        let idx = ChaCha8Rng::seed_from_u64(seed).gen_range(0..seqs.len());
        let script = seqs[idx].clone();
        Ok(SimHuman::new(true_goal, script, stated_prefs))
    }

    /// With probability `eps` an answer is drawn uniformly instead.
    pub fn with_answer_noise(mut self, eps: f64, seed: u64) -> Self {
        self.noise = Some((eps, ChaCha8Rng::seed_from_u64(seed)));
        self
    }

    pub fn script(&self) -> &[Action] {
        &self.script
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Records an action by either agent.
    pub fn observe(&mut self, action: &Action) {
        self.done.insert(action.clone());
    }

    fn satisfied(&self, domain: &DomainSpec, state: &WorldState, step: &Action) -> bool {
        self.done.contains(step) || domain.effects_hold(state, step)
    }

    /// The first script step not yet done and whose effects are absent.
    pub fn next_action(&mut self, domain: &DomainSpec, state: &WorldState) -> Result<HumanMove, HumanError> {
        if domain.is_terminal(state) {
            return Ok(HumanMove::Done);
        }
        if state.turn != Agent::Human {
            return Err(HumanError::WrongTurn);
        }
        while self.cursor < self.script.len() && self.satisfied(domain, state, &self.script[self.cursor]) {
            self.cursor += 1;
        }
        let Some(step) = self.script.get(self.cursor).cloned() else {
            return Ok(HumanMove::Done);
        };
        if !domain.is_legal(state, &step) {
            return Err(HumanError::Stuck { step, reason: "preconditions do not hold".into() });
        }
        self.cursor += 1;
        Ok(HumanMove::Act(ActionInstance::new(step, Agent::Human)))
    }

    /// The most likely answer under the true goal; ties go to the
    /// lexicographically first answer.
    pub fn answer(&mut self, q: &Question) -> Result<String, HumanError> {
        if let Some((eps, rng)) = &mut self.noise {
            if rng.gen::<f64>() < *eps {
                return Ok(q.answers[rng.gen_range(0..q.answers.len())].clone());
            }
        }
        let row = q.likelihood_row(&self.true_goal.id).ok_or_else(|| HumanError::NotCovered(q.id.clone()))?;
        let best = row
            .iter()
            .zip(&q.answers)
            .max_by(|a, b| a.0.total_cmp(b.0).then_with(|| b.1.cmp(a.1)))
            .map(|(_, a)| a.clone())
            .expect("questions have answers");
        Ok(best)
    }
}
