use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BeliefError, GoalBelief, InteractionSummary};
use crate::attractor::{Judge, JudgeError};
use crate::bank::{Goal, GoalId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposerConfig {
    /// Weight of the judge score against the prior mass.
    pub blend: f64,
    pub drop_threshold: f64,
    /// Consecutive low-scoring updates before a goal is dropped.
    pub drop_after: usize,
    pub max_goals: usize,
}

impl Default for ProposerConfig {
    fn default() -> Self {
        ProposerConfig { blend: 0.5, drop_threshold: 0.02, drop_after: 2, max_goals: 8 }
    }
}

/// Keeps a judge-scored candidate set: goals that keep scoring below the
/// threshold are removed and the best unseen ones are added.
#[derive(Debug, Clone)]
pub struct GoalProposer {
    vocabulary: Vec<Goal>,
    config: ProposerConfig,
    strikes: BTreeMap<GoalId, usize>,
}

impl GoalProposer {
    pub fn new(vocabulary: Vec<Goal>, config: ProposerConfig) -> Self {
        GoalProposer { vocabulary, config, strikes: BTreeMap::new() }
    }

    pub fn vocabulary(&self) -> &[Goal] {
        &self.vocabulary
    }

    pub fn config(&self) -> &ProposerConfig {
        &self.config
    }

    /// One proposal round. With no current belief the candidates start
    /// from scratch; if nothing survives, the current belief is kept.
    pub fn propose(
        &mut self,
        summary: &InteractionSummary,
        judge: &dyn Judge,
        current: Option<&GoalBelief>,
    ) -> Result<GoalBelief, BeliefError> {
        let names: Vec<String> = self.vocabulary.iter().map(|g| g.name.clone()).collect();
        let raw = judge.score(&summary.judge_text(), &names, "")?;
        let mut score = BTreeMap::new();
        for g in &self.vocabulary {
            let s = raw
                .get(&g.name)
                .copied()
                .filter(|s| s.is_finite())
                .ok_or_else(|| JudgeError::Malformed(format!("no score for `{}`", g.name)))?;
            score.insert(g.id.clone(), s.clamp(0.0, 1.0));
        }
        let cfg = self.config;

        let mut kept: Vec<(Goal, f64)> = Vec::new();
        if let Some(cur) = current {
            for (g, p) in cur.iter() {
                let s = score.get(&g.id).copied().unwrap_or(0.0);
                let strikes = self.strikes.entry(g.id.clone()).or_default();
                if s < cfg.drop_threshold {
                    *strikes += 1;
                } else {
                    *strikes = 0;
                }
                if *strikes < cfg.drop_after {
                    kept.push((g.clone(), p));
                }
            }
        }
        let mut fresh: Vec<&Goal> = self
            .vocabulary
            .iter()
            .filter(|g| !kept.iter().any(|(k, _)| k.id == g.id))
            .filter(|g| score[&g.id] >= cfg.drop_threshold)
            .collect();
        fresh.sort_by(|a, b| score[&b.id].total_cmp(&score[&a.id]).then_with(|| a.id.cmp(&b.id)));
        for g in fresh {
            if kept.len() >= cfg.max_goals {
                break;
            }
            self.strikes.insert(g.id.clone(), 0);
            kept.push((g.clone(), 0.0));
        }

        let total_s: f64 = kept.iter().map(|(g, _)| score.get(&g.id).copied().unwrap_or(0.0)).sum();
        let total_p: f64 = kept.iter().map(|(_, p)| p).sum();
        let weights: Vec<f64> = kept
            .iter()
            .map(|(g, p)| {
                let s = if total_s > 0.0 { score.get(&g.id).copied().unwrap_or(0.0) / total_s } else { 0.0 };
                let prior = if total_p > 0.0 { p / total_p } else { 0.0 };
                (1.0 - cfg.blend) * prior + cfg.blend * s
            })
            .collect();
        let goals: Vec<Goal> = kept.into_iter().map(|(g, _)| g).collect();
        match GoalBelief::from_weights(goals, weights) {
            Ok(b) => Ok(b),
            Err(BeliefError::Empty | BeliefError::ZeroMass) => match current {
                Some(cur) => Ok(cur.clone()),
                None => {
                    let n = self.vocabulary.len().min(cfg.max_goals.max(1));
                    GoalBelief::uniform(self.vocabulary[..n].to_vec())
                }
            },
            Err(e) => Err(e),
        }
    }
}
