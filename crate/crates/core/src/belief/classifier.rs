use std::collections::{BTreeSet, HashMap};

use super::{BeliefError, GoalBelief};
use crate::bank::{Goal, PolicyBank};
use crate::domain::Action;

/// Maps a partial human action sequence to a belief over goals.
pub trait SequenceClassifier: Send + Sync {
    fn classify(&self, history: &[Action]) -> Result<GoalBelief, BeliefError>;
}

#[derive(Debug, Clone, Default)]
struct BigramCounts {
    pairs: HashMap<(Option<usize>, usize), f64>,
    contexts: HashMap<Option<usize>, f64>,
}

/// Per-goal bigram model with a start token and add-one smoothing.
#[derive(Debug, Clone)]
pub struct BigramClassifier {
    goals: Vec<Goal>,
    vocab: HashMap<Action, usize>,
    models: Vec<BigramCounts>,
}

impl BigramClassifier {
    pub fn train(goals: &[Goal], bank: &PolicyBank) -> Result<Self, BeliefError> {
        let data: Vec<(Goal, Vec<Vec<Action>>)> =
            goals.iter().map(|g| (g.clone(), bank.sequences(&g.id).map(<[_]>::to_vec).unwrap_or_default())).collect();
        BigramClassifier::train_on(data)
    }

    pub fn train_on(data: Vec<(Goal, Vec<Vec<Action>>)>) -> Result<Self, BeliefError> {
        if data.is_empty() || data.iter().all(|(_, s)| s.is_empty()) {
            return Err(BeliefError::EmptyBank);
        }
        let all: BTreeSet<&Action> = data.iter().flat_map(|(_, s)| s.iter().flatten()).collect();
        let vocab: HashMap<Action, usize> = all.into_iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let mut goals = Vec::new();
        let mut models = Vec::new();
        for (g, seqs) in data {
            let mut m = BigramCounts::default();
            for s in &seqs {
                let mut prev = None;
                for a in s {
                    let id = vocab[a];
                    *m.pairs.entry((prev, id)).or_default() += 1.0;
                    *m.contexts.entry(prev).or_default() += 1.0;
                    prev = Some(id);
                }
            }
            goals.push(g);
            models.push(m);
        }
        Ok(BigramClassifier { goals, vocab, models })
    }

    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    /// Log-likelihood of the history under each goal's model.
    pub fn log_likelihoods(&self, history: &[Action]) -> Vec<f64> {
        // Unseen actions share one extra vocabulary slot.
        let v = self.vocab.len() as f64 + 1.0;
        let ids: Vec<usize> = history.iter().map(|a| self.vocab.get(a).copied().unwrap_or(usize::MAX)).collect();
        self.models
            .iter()
            .map(|m| {
                let mut ll = 0.0;
                let mut prev = None;
                for &id in &ids {
                    let c = m.pairs.get(&(prev, id)).copied().unwrap_or(0.0);
                    let n = m.contexts.get(&prev).copied().unwrap_or(0.0);
                    ll += ((c + 1.0) / (n + v)).ln();
                    prev = (id != usize::MAX).then_some(id);
                }
                ll
            })
            .collect()
    }
}

impl SequenceClassifier for BigramClassifier {
    fn classify(&self, history: &[Action]) -> Result<GoalBelief, BeliefError> {
        GoalBelief::from_log_weights(self.goals.clone(), &self.log_likelihoods(history))
    }
}

/// Posterior over goals given the human's actions so far.
pub fn classify_sequence(history: &[Action], classifier: &dyn SequenceClassifier) -> Result<GoalBelief, BeliefError> {
    classifier.classify(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::RecipeType;

    fn a(s: &str) -> Action {
        s.parse().unwrap()
    }

    #[test]
    fn empty_history_is_uniform() {
        let data = vec![
            (Goal::named("x", RecipeType::Stew), vec![vec![a("gather(oats)"), a("mix(pot)")]]),
            (Goal::named("y", RecipeType::Stew), vec![vec![a("gather(rice)"), a("mix(pot)")]]),
        ];
        let c = BigramClassifier::train_on(data).unwrap();
        let b = c.classify(&[]).unwrap();
        assert!((b.prob("x") - 0.5).abs() < 1e-12);
        let b = c.classify(&[a("gather(oats)")]).unwrap();
        assert!(b.prob("x") > 0.5);
        assert!(BigramClassifier::train_on(vec![]).is_err());
    }
}
