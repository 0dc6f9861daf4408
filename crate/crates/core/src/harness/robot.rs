use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::method::{FieldKind, GoalSource, Inference, MethodConfig, RobotKind};
use super::{Assets, HarnessError};
use crate::attractor::{ActionField, FieldSource, Judge, ScoringTerms};
use crate::bank::{Goal, GoalId};
use crate::belief::{
    preference_prior, update_from_action, GoalBelief, GoalProposer, InteractionSummary, ProposerConfig, ACTION_EPSILON,
};
use crate::domain::{Action, ActionInstance, Agent, DomainSpec, WorldState};
use crate::inquiry::{decide, posterior, should_ask, CostSchedule, JudgeQuestionGenerator, Question};
use crate::planner::{expand, select_action, ActionScorer};
use crate::trace::BeliefEntry;

/// Plausible goals used for planning.
pub const PRED_MASS: f64 = 0.95;
pub const PRED_MAX: usize = 5;
pub const PRED_MIN_P: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum RobotMove {
    Act(ActionInstance),
    Wait,
}

/// The robot side of an episode: belief upkeep, questions and planning.
pub struct Robot<'a> {
    assets: &'a Assets,
    method: &'a MethodConfig,
    stated: Vec<String>,
    answers: Vec<(Question, String)>,
    history: Vec<ActionInstance>,
    performed: BTreeSet<Action>,
    belief: Option<GoalBelief>,
    log_prior: Vec<f64>,
    action_loglik: Vec<f64>,
    proposer: Option<GoalProposer>,
    judge_questions: Option<JudgeQuestionGenerator>,
    schedule: CostSchedule,
    asked: BTreeSet<String>,
}

impl<'a> Robot<'a> {
    pub fn new(assets: &'a Assets, method: &'a MethodConfig, stated: Vec<String>) -> Result<Self, HarnessError> {
        method.validate().map_err(HarnessError::Config)?;
        let mut r = Robot {
            assets,
            method,
            stated,
            answers: Vec::new(),
            history: Vec::new(),
            performed: BTreeSet::new(),
            belief: None,
            log_prior: Vec::new(),
            action_loglik: Vec::new(),
            proposer: None,
            judge_questions: None,
            schedule: method.schedule,
            asked: BTreeSet::new(),
        };
        if method.robot != RobotKind::Planner {
            return Ok(r);
        }
        if method.fields == FieldKind::Judge {
            r.judge_questions = Some(assets.judge_questions(method.answer_eps));
        }
        match method.goals {
            GoalSource::Bank => {
                let goals = assets.bank.goals();
                r.log_prior = r.prior(&goals)?;
                r.action_loglik = vec![0.0; goals.len()];
                r.recompute()?;
            }
            GoalSource::Proposed => {
                let mut p = GoalProposer::new(assets.vocabulary.clone(), ProposerConfig::default());
                r.belief = Some(p.propose(&r.summary(), &*assets.judge, None)?);
                r.proposer = Some(p);
            }
        }
        Ok(r)
    }

    fn prior(&self, goals: &[Goal]) -> Result<Vec<f64>, HarnessError> {
        if !self.method.use_preferences {
            return Ok(vec![0.0; goals.len()]);
        }
        let floor = self.method.preference_floor;
        match self.method.fields {
            FieldKind::Policy => {
                let b = preference_prior(goals, &self.assets.bank.preferences, &self.stated, floor)?;
                Ok(b.probs().iter().map(|p| p.ln()).collect())
            }
            FieldKind::Judge => {
                let names: Vec<String> = goals.iter().map(|g| g.name.clone()).collect();
                let mut lp = vec![0.0; goals.len()];
                for l in &self.stated {
                    let s = self.assets.judge.score(l, &names, "")?;
                    for (i, n) in names.iter().enumerate() {
                        lp[i] += (s.get(n).copied().unwrap_or(0.0).clamp(0.0, 1.0) + floor).ln();
                    }
                }
                Ok(lp)
            }
        }
    }

    /// Bank goals: prior, action evidence and answers combined in log space.
    fn recompute(&mut self) -> Result<(), HarnessError> {
        let goals = self.assets.bank.goals();
        let mut lw: Vec<f64> = self.log_prior.clone();
        if self.method.inference == Inference::Classifier {
            let human: Vec<Action> = self.human_history();
            for (w, ll) in lw.iter_mut().zip(self.assets.classifier.log_likelihoods(&human)) {
                *w += ll;
            }
        } else {
            for (w, ll) in lw.iter_mut().zip(&self.action_loglik) {
                *w += ll;
            }
        }
        for (q, a) in &self.answers {
            let idx = q.answer_index(a).expect("recorded answers are valid");
            for (w, g) in lw.iter_mut().zip(&goals) {
                *w += q.likelihood(&g.id, idx).unwrap_or(0.0).ln();
            }
        }
        self.belief = Some(GoalBelief::from_log_weights(goals, &lw)?);
        Ok(())
    }

    fn human_history(&self) -> Vec<Action> {
        self.history.iter().filter(|a| a.agent == Agent::Human).map(|a| a.action.clone()).collect()
    }

    pub fn belief(&self) -> Option<&GoalBelief> {
        self.belief.as_ref()
    }

    pub fn snapshot(&self) -> Vec<BeliefEntry> {
        self.belief.as_ref().map(|b| b.snapshot(3)).unwrap_or_default()
    }

    pub fn preferences(&self) -> Vec<String> {
        let mut p = self.stated.clone();
        p.extend(self.answers.iter().map(|(_, a)| a.clone()));
        p
    }

    pub fn asked(&self) -> &BTreeSet<String> {
        &self.asked
    }

    pub fn schedule(&self) -> &CostSchedule {
        &self.schedule
    }

    pub fn summary(&self) -> InteractionSummary {
        let answers = self.answers.iter().map(|(q, a)| (q.text.clone(), a.clone())).collect();
        InteractionSummary::from_parts(self.stated.clone(), answers, &self.history, self.belief.as_ref())
    }

    fn judge_goal_field(&self, g: &Goal, context: &str) -> Result<Arc<ActionField>, HarnessError> {
        self.assets.judge_field(FieldSource::Goal(g.id.clone()), &g.name, context)
    }

    /// Records an action by either agent; human actions are evidence.
    pub fn observe(&mut self, act: &ActionInstance) -> Result<(), HarnessError> {
        let context = self.summary().phase_context();
        self.history.push(act.clone());
        self.performed.insert(act.action.clone());
        if self.method.robot != RobotKind::Planner || act.agent != Agent::Human {
            return Ok(());
        }
        match (self.method.goals, self.method.inference) {
            (GoalSource::Bank, Inference::Classifier) => self.recompute(),
            (GoalSource::Bank, Inference::Fields) => {
                for (i, g) in self.assets.bank.goals().iter().enumerate() {
                    let f = match self.method.fields {
                        FieldKind::Policy => self.assets.goal_fields[&g.id].get(&act.action),
                        FieldKind::Judge => self.judge_goal_field(g, &context)?.get(&act.action),
                    };
                    self.action_loglik[i] += (f + ACTION_EPSILON).ln();
                }
                self.recompute()
            }
            (GoalSource::Proposed, _) => {
                let b = self.belief.clone().expect("proposed belief exists");
                let mut fields: BTreeMap<GoalId, ActionField> = BTreeMap::new();
                for g in b.goals() {
                    fields.insert(g.id.clone(), (*self.judge_goal_field(g, &context)?).clone());
                }
                self.belief = Some(update_from_action(&b, &act.action, &fields, ACTION_EPSILON)?);
                Ok(())
            }
        }
    }

    /// Start of a robot turn: open-case candidates are revised.
    pub fn begin_turn(&mut self) -> Result<(), HarnessError> {
        if let Some(mut p) = self.proposer.take() {
            let s = self.summary();
            let b = p.propose(&s, &*self.assets.judge, self.belief.as_ref());
            self.proposer = Some(p);
            self.belief = Some(b?);
        }
        Ok(())
    }

    /// Runs the ask gate and picks a question; the schedule records the ask.
    pub fn consider_question(&mut self, t: usize) -> Result<Option<Question>, HarnessError> {
        if !self.method.questions || self.method.robot != RobotKind::Planner {
            return Ok(None);
        }
        let Some(belief) = self.belief.as_ref() else {
            return Ok(None);
        };
        if !should_ask(belief, &self.schedule, t).ask {
            return Ok(None);
        }
        let candidates = match &self.judge_questions {
            Some(j) => j.generate(belief)?,
            None => self.assets.questions.generate(belief)?,
        };
        let d = decide(belief, &self.schedule, t, &candidates, &self.asked)?;
        match d.chosen {
            Some(q) if d.ask => {
                self.schedule.record_ask(t);
                self.asked.insert(q.id.clone());
                Ok(Some(q))
            }
            _ => Ok(None),
        }
    }

    /// Makes sure a question can be answered for `goal` in the open case.
    pub fn answerable(&self, q: &Question, goal: &Goal) -> Result<Question, HarnessError> {
        match &self.judge_questions {
            Some(j) => Ok(j.cover(q, goal)?),
            None => Ok(q.clone()),
        }
    }

    pub fn receive_answer(&mut self, q: &Question, answer: &str) -> Result<(), HarnessError> {
        let idx = q
            .answer_index(answer)
            .ok_or_else(|| HarnessError::Config(format!("`{answer}` does not answer `{}`", q.id)))?;
        self.answers.push((q.clone(), answer.to_string()));
        match self.method.goals {
            GoalSource::Bank => self.recompute(),
            GoalSource::Proposed => {
                let b = self.belief.as_ref().expect("proposed belief exists");
                self.belief = Some(posterior(q, b, idx)?);
                Ok(())
            }
        }
    }

    pub fn choose(&mut self, state: &WorldState) -> Result<RobotMove, HarnessError> {
        match self.method.robot {
            RobotKind::Passive => Ok(RobotMove::Wait),
            RobotKind::JudgeOnly => self.choose_greedy(state),
            RobotKind::Planner => self.choose_planned(state),
        }
    }

    fn choose_greedy(&self, state: &WorldState) -> Result<RobotMove, HarnessError> {
        let legal = self.assets.domain.legal_actions(state, Agent::Robot);
        if legal.is_empty() {
            return Ok(RobotMove::Wait);
        }
        let texts: Vec<String> = legal.iter().map(|a| a.action.describe()).collect();
        let scores =
            self.assets.judge.score(&self.preferences().join(", "), &texts, &self.summary().phase_context())?;
        let mut best: Option<(f64, &ActionInstance)> = None;
        for (a, t) in legal.iter().zip(&texts) {
            let s = scores.get(t).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, a));
            }
        }
        Ok(match best {
            Some((s, a)) if s > 0.0 => RobotMove::Act(a.clone()),
            _ => RobotMove::Wait,
        })
    }

    fn choose_planned(&self, state: &WorldState) -> Result<RobotMove, HarnessError> {
        let belief = self.belief.as_ref().expect("planner robots keep a belief");
        let context = self.summary().phase_context();
        let g_pred = belief.plausible(PRED_MASS, PRED_MAX, PRED_MIN_P);
        let w = self.method.planner.weights;

        let mut owned: Vec<(f64, Arc<ActionField>)> = Vec::new();
        let mut borrowed: Vec<(f64, &ActionField)> = Vec::new();
        for (g, p) in &g_pred {
            match self.method.fields {
                FieldKind::Policy => {
                    let f = self
                        .assets
                        .goal_fields
                        .get(g)
                        .ok_or_else(|| HarnessError::Config(format!("no field for `{g}`")))?;
                    borrowed.push((w.goal * p, f));
                }
                FieldKind::Judge => {
                    let goal = belief.goals().iter().find(|x| &x.id == g).expect("plausible goals are candidates");
                    owned.push((w.goal * p, self.judge_goal_field(goal, &context)?));
                }
            }
        }
        if self.method.use_preferences {
            for l in &self.stated {
                match self.method.fields {
                    FieldKind::Policy => {
                        if let Some(f) = self.assets.pref_fields.get(l) {
                            borrowed.push((w.preference, f));
                        }
                    }
                    FieldKind::Judge => {
                        owned.push((
                            w.preference,
                            self.assets.judge_field(FieldSource::Preference(l.clone()), l, &context)?,
                        ));
                    }
                }
            }
            for (q, a) in &self.answers {
                let f = match self.method.fields {
                    FieldKind::Policy => self.assets.answer_field(q, a)?,
                    FieldKind::Judge => self.assets.judge_field(FieldSource::Answer(a.clone()), a, &context)?,
                };
                owned.push((w.preference, f));
            }
        }
        let mut terms = ScoringTerms::from_terms(borrowed);
        for (wt, f) in &owned {
            terms.push(*wt, f);
        }

        let total: f64 = g_pred.iter().map(|(_, p)| p).sum();
        let step_sets: Vec<(f64, BTreeSet<&Action>)> =
            g_pred.iter().map(|(g, p)| (p / total, self.assets.steps(g).unwrap_or(&[]).iter().collect())).collect();
        let scorer = Scorer {
            assets: self.assets,
            terms,
            filter: self.method.progress_filter.then(|| g_pred.iter().map(|(g, _)| g.clone()).collect()),
            performed: &self.performed,
            divergence: self.method.divergence_bonus,
            step_sets,
        };
        let tree = expand(state, &self.assets.domain, &scorer, &self.method.planner)?;
        if tree.children.iter().all(|c| c.node_score <= 0.0) {
            return Ok(RobotMove::Wait);
        }
        Ok(RobotMove::Act(select_action(&tree)?))
    }
}

struct Scorer<'s> {
    assets: &'s Assets,
    terms: ScoringTerms<'s>,
    filter: Option<Vec<GoalId>>,
    performed: &'s BTreeSet<Action>,
    divergence: f64,
    step_sets: Vec<(f64, BTreeSet<&'s Action>)>,
}

impl ActionScorer for Scorer<'_> {
    fn candidates(&self, domain: &DomainSpec, state: &WorldState, agent: Agent) -> Vec<ActionInstance> {
        let Some(goals) = &self.filter else {
            return domain.legal_actions(state, agent);
        };
        if domain.is_terminal(state) {
            return Vec::new();
        }
        let set: BTreeSet<Action> = goals
            .iter()
            .flat_map(|g| self.assets.pending(g, state, self.performed))
            .filter(|a| domain.is_legal(state, a))
            .collect();
        set.into_iter().map(|a| ActionInstance::new(a, agent)).collect()
    }

    fn score(&self, _state: &WorldState, action: &ActionInstance) -> f64 {
        let mut s = self.terms.score(&action.action);
        if self.divergence > 0.0 {
            let m: f64 = self.step_sets.iter().filter(|(_, set)| set.contains(&action.action)).map(|(p, _)| p).sum();
            s += self.divergence * m * (1.0 - m);
        }
        s
    }
}
