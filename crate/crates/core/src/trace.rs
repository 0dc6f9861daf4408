//! Episode record: every action, wait and question with belief snapshots.

use serde::{Deserialize, Serialize};

use crate::bank::{ExperimentSpec, Goal, GoalId};
use crate::domain::{Action, ActionInstance, Agent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefEntry {
    pub goal: GoalId,
    pub name: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Action { action: ActionInstance },
    Wait,
    Question { id: String, text: String, answer: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub timestep: usize,
    pub agent: Agent,
    pub kind: EventKind,
    /// Top goals after the event.
    pub belief: Vec<BeliefEntry>,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Running,
    /// Served with every recipe step done.
    Completed,
    /// Served while recipe steps were still missing.
    Incomplete,
    /// Hit the step cap.
    StepCap,
    /// The human could not continue.
    Stuck,
    /// Interactive session left early.
    Quit,
}

impl Outcome {
    pub fn is_failure(self) -> bool {
        matches!(self, Outcome::Incomplete | Outcome::StepCap | Outcome::Stuck)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub experiment: Option<ExperimentSpec>,
    pub method: String,
    pub true_goal: Option<Goal>,
    pub stated_prefs: Vec<String>,
    pub events: Vec<TraceEvent>,
    pub ground_truth_len: usize,
    pub outcome: Outcome,
    /// Recipe steps still unsatisfied when the episode ended.
    pub remaining_steps: usize,
    /// Robot actions that were not pending steps of the true recipe.
    pub robot_mistakes: usize,
    pub note: Option<String>,
}

impl EpisodeTrace {
    pub fn new(method: &str, stated_prefs: Vec<String>) -> Self {
        EpisodeTrace {
            experiment: None,
            method: method.to_string(),
            true_goal: None,
            stated_prefs,
            events: Vec::new(),
            ground_truth_len: 0,
            outcome: Outcome::Running,
            remaining_steps: 0,
            robot_mistakes: 0,
            note: None,
        }
    }

    pub fn push(&mut self, agent: Agent, kind: EventKind, belief: Vec<BeliefEntry>, summary: String) {
        let timestep = self.events.len();
        self.events.push(TraceEvent { timestep, agent, kind, belief, summary });
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionInstance> {
        self.events.iter().filter_map(|e| match &e.kind {
            EventKind::Action { action } => Some(action),
            _ => None,
        })
    }

    pub fn human_actions(&self) -> Vec<Action> {
        self.actions().filter(|a| a.agent == Agent::Human).map(|a| a.action.clone()).collect()
    }

    pub fn action_count(&self) -> usize {
        self.actions().count()
    }

    pub fn questions(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.events.iter().filter_map(|e| match &e.kind {
            EventKind::Question { id, text, answer } => Some((id.as_str(), text.as_str(), answer.as_str())),
            _ => None,
        })
    }

    pub fn question_count(&self) -> usize {
        self.questions().count()
    }
}
