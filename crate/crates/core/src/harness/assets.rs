use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use super::HarnessError;
use crate::attractor::{
    field_from_judge, field_from_policy_bank, pooled_field, ActionField, AttractorField, CachedJudge, FieldSource,
    Judge, MockJudge,
};
use crate::bank::{build_policy_bank, Goal, GoalBank, GoalId, PolicyBank};
use crate::belief::BigramClassifier;
use crate::bundled;
use crate::domain::{Action, DomainSpec, WorldState};
use crate::inquiry::{parse_templates, BankQuestionGenerator, JudgeQuestionGenerator, Question, Template};

pub type SharedJudge = Arc<CachedJudge<Box<dyn Judge>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssetConfig {
    /// Linearizations kept per goal.
    pub policy_cap: Option<usize>,
    pub policy_seed: u64,
}

impl Default for AssetConfig {
    fn default() -> Self {
        AssetConfig { policy_cap: Some(200), policy_seed: 0 }
    }
}

#[derive(Debug, Clone)]
struct NetIndex {
    nodes: Vec<Action>,
    preds: Vec<u64>,
}

/// Everything episodes share: world, banks, trained models, precomputed
/// fields and the cached judge.
pub struct Assets {
    pub domain: DomainSpec,
    pub bank: GoalBank,
    pub policy: PolicyBank,
    pub classifier: BigramClassifier,
    pub goal_fields: BTreeMap<GoalId, ActionField>,
    pub pref_fields: BTreeMap<String, ActionField>,
    pub templates: Vec<Template>,
    pub questions: BankQuestionGenerator,
    pub judge: SharedJudge,
    /// Dish names the open case proposes from.
    pub vocabulary: Vec<Goal>,
    actions: Vec<Action>,
    descriptions: Vec<String>,
    nets: BTreeMap<GoalId, NetIndex>,
    judge_fields: Mutex<HashMap<(String, String), Arc<ActionField>>>,
    answer_fields: Mutex<HashMap<(String, String), Arc<ActionField>>>,
}

impl Assets {
    /// Bundled data with the offline judge.
    pub fn bundled() -> Result<Assets, HarnessError> {
        Assets::bundled_with(Box::new(MockJudge::bundled()), AssetConfig::default())
    }

    pub fn bundled_with(judge: Box<dyn Judge>, cfg: AssetConfig) -> Result<Assets, HarnessError> {
        let vocabulary = MockJudge::bundled().lexicon().dishes().iter().map(|(n, t)| Goal::named(n, *t)).collect();
        Assets::build(
            bundled::domain(),
            bundled::goal_bank(),
            parse_templates(bundled::QUESTIONS)?,
            vocabulary,
            judge,
            cfg,
        )
    }

    pub fn build(
        domain: DomainSpec,
        bank: GoalBank,
        templates: Vec<Template>,
        vocabulary: Vec<Goal>,
        judge: Box<dyn Judge>,
        cfg: AssetConfig,
    ) -> Result<Assets, HarnessError> {
        bank.validate(&domain)?;
        let policy = build_policy_bank(&bank, &domain, cfg.policy_cap, cfg.policy_seed)?;
        let classifier = BigramClassifier::train(&bank.goals(), &policy)?;
        let mut goal_fields = BTreeMap::new();
        for g in bank.goals() {
            let f = field_from_policy_bank(&FieldSource::Goal(g.id.clone()), &policy, &bank.preferences)?;
            goal_fields.insert(g.id, f);
        }
        let mut pref_fields = BTreeMap::new();
        for l in bank.preferences.preferences() {
            let f = field_from_policy_bank(&FieldSource::Preference(l.clone()), &policy, &bank.preferences)?;
            pref_fields.insert(l.clone(), f);
        }
        let questions = BankQuestionGenerator::new(templates.clone(), &bank, BankQuestionGenerator::DEFAULT_EPS);
        let actions: Vec<Action> = domain.actions().cloned().collect();
        let descriptions = actions.iter().map(Action::describe).collect();
        let nets = bank
            .entries
            .iter()
            .map(|e| {
                let idx = NetIndex { nodes: e.network.nodes().to_vec(), preds: e.network.predecessor_masks() };
                (e.goal.id.clone(), idx)
            })
            .collect();
        Ok(Assets {
            domain,
            bank,
            policy,
            classifier,
            goal_fields,
            pref_fields,
            templates,
            questions,
            judge: Arc::new(CachedJudge::new(judge)),
            vocabulary,
            actions,
            descriptions,
            nets,
            judge_fields: Mutex::new(HashMap::new()),
            answer_fields: Mutex::new(HashMap::new()),
        })
    }

    pub fn judge_questions(&self, eps: f64) -> JudgeQuestionGenerator {
        let judge: Arc<dyn Judge> = self.judge.clone();
        JudgeQuestionGenerator::new(self.templates.clone(), judge, eps)
    }

    pub fn goal(&self, id: &str) -> Option<Goal> {
        self.bank.get(id).map(|e| e.goal.clone())
    }

    /// Judge field over every ground action for a free-text source.
    pub fn judge_field(
        &self,
        source: FieldSource,
        text: &str,
        context: &str,
    ) -> Result<Arc<ActionField>, HarnessError> {
        let key = (text.to_string(), context.to_string());
        if let Some(f) = self.judge_fields.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let by_text = field_from_judge(source.clone(), text, &self.descriptions, context, &*self.judge)?;
        let scores = self
            .actions
            .iter()
            .zip(&self.descriptions)
            .map(|(a, d)| (a.clone(), by_text.get(d)))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        let f = Arc::new(AttractorField::new(source, scores)?);
        self.judge_fields.lock().unwrap().insert(key, f.clone());
        Ok(f)
    }

    /// Policy field for an answer: bank goals pooled by how likely each
    /// would give it.
    pub fn answer_field(&self, q: &Question, answer: &str) -> Result<Arc<ActionField>, HarnessError> {
        let key = (q.id.clone(), answer.to_string());
        if let Some(f) = self.answer_fields.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let idx = q
            .answer_index(answer)
            .ok_or_else(|| HarnessError::Config(format!("`{answer}` does not answer `{}`", q.id)))?;
        let weights: Vec<(GoalId, f64)> =
            self.bank.goals().into_iter().filter_map(|g| q.likelihood(&g.id, idx).map(|p| (g.id, p))).collect();
        let f = Arc::new(pooled_field(FieldSource::Answer(answer.to_string()), &weights, &self.policy)?);
        self.answer_fields.lock().unwrap().insert(key, f.clone());
        Ok(f)
    }

    pub fn steps(&self, goal: &str) -> Option<&[Action]> {
        self.nets.get(goal).map(|n| n.nodes.as_slice())
    }

    /// Steps of `goal` not yet done whose predecessors are all done. A step
    /// counts as done once performed or once its effects hold.
    pub fn pending(&self, goal: &str, state: &WorldState, performed: &BTreeSet<Action>) -> Vec<Action> {
        let Some(net) = self.nets.get(goal) else {
            return Vec::new();
        };
        let mut done = 0u64;
        for (i, a) in net.nodes.iter().enumerate() {
            if performed.contains(a) || self.domain.effects_hold(state, a) {
                done |= 1 << i;
            }
        }
        net.nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| done >> i & 1 == 0 && net.preds[*i] & !done == 0)
            .map(|(_, a)| a.clone())
            .collect()
    }

    /// Steps of `goal` not yet done, regardless of order.
    pub fn remaining(&self, goal: &str, state: &WorldState, performed: &BTreeSet<Action>) -> usize {
        self.steps(goal)
            .map(|s| s.iter().filter(|a| !performed.contains(*a) && !self.domain.effects_hold(state, a)).count())
            .unwrap_or(0)
    }
}
