//! Recipe goals, their task networks, sampled policy sequences, and the
//! preference map used to build experiments.

mod network;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Action, DomainSpec, Id, Verb};

pub use network::{TaskNetwork, ENUMERATION_LIMIT, MAX_NODES};
pub use parser::parse_goal_bank;

pub type GoalId = String;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BankError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("goal `{0}` is defined twice")]
    DuplicateGoal(GoalId),
    #[error("step `{0}` appears twice in one network")]
    DuplicateStep(String),
    #[error("edge ({0}, {1}) refers to a missing node")]
    BadEdge(usize, usize),
    #[error("precedence constraints contain a cycle")]
    Cyclic,
    #[error("network has {0} steps; at most 64 are supported")]
    TooLarge(usize),
    #[error("{0} linearizations is too many to enumerate; pass a cap")]
    TooMany(u128),
    #[error("unknown goal `{0}`")]
    UnknownGoal(GoalId),
    #[error("goal `{goal}`: {msg}")]
    InvalidGoal { goal: GoalId, msg: String },
    #[error("goal `{goal}`: step {step} `{action}` cannot be executed: {reason}")]
    Inexecutable { goal: GoalId, step: usize, action: String, reason: String },
    #[error("preference `{0}` has no goals")]
    EmptyPreference(String),
    #[error("goal `{0}` is not covered by any preference")]
    Uncovered(GoalId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RecipeType {
    Pasta,
    Stew,
    Salad,
    Oatmeal,
    Smoothie,
    Parfait,
}

impl RecipeType {
    pub const ALL: [RecipeType; 6] = [
        RecipeType::Pasta,
        RecipeType::Stew,
        RecipeType::Salad,
        RecipeType::Oatmeal,
        RecipeType::Smoothie,
        RecipeType::Parfait,
    ];
}

impl fmt::Display for RecipeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for RecipeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RecipeType::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown recipe type `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Goal {
    pub id: GoalId,
    pub name: String,
    pub recipe_type: RecipeType,
}

impl Goal {
    /// A goal named in free text, with an id derived from the name.
    pub fn named(name: &str, recipe_type: RecipeType) -> Goal {
        Goal { id: slug(name), name: name.trim().to_string(), recipe_type }
    }
}

/// Lowercase, underscore-separated form of a name.
pub fn slug(name: &str) -> String {
    name.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_ascii_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalEntry {
    pub goal: Goal,
    pub main_ingredient: Id,
    pub network: TaskNetwork,
}

impl GoalEntry {
    pub fn steps(&self) -> &[Action] {
        self.network.nodes()
    }

    /// Ingredients the recipe touches.
    pub fn ingredients(&self) -> BTreeSet<Id> {
        self.steps()
            .iter()
            .filter_map(|a| match a.verb {
                Verb::CollectWater => Some("water".to_string()),
                Verb::Gather | Verb::Pour | Verb::Cook | Verb::Blend | Verb::ReduceHeat => a.item.clone(),
                _ => None,
            })
            .collect()
    }

    pub fn appliances(&self) -> BTreeSet<Id> {
        self.steps().iter().filter(|a| a.verb == Verb::TurnOn).filter_map(|a| a.item.clone()).collect()
    }

    pub fn serving_container(&self) -> Option<&str> {
        self.steps().iter().find(|a| a.verb == Verb::Serve).and_then(|a| a.item.as_deref())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMap {
    order: Vec<String>,
    goals: BTreeMap<String, Vec<GoalId>>,
}

impl PreferenceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pref: &str, goals: Vec<GoalId>) -> Result<(), BankError> {
        if goals.is_empty() {
            return Err(BankError::EmptyPreference(pref.to_string()));
        }
        if !self.goals.contains_key(pref) {
            self.order.push(pref.to_string());
        }
        let entry = self.goals.entry(pref.to_string()).or_default();
        for g in goals {
            if !entry.contains(&g) {
                entry.push(g);
            }
        }
        Ok(())
    }

    /// Preferences in declaration order.
    pub fn preferences(&self) -> &[String] {
        &self.order
    }

    pub fn goals_of(&self, pref: &str) -> Option<&[GoalId]> {
        self.goals.get(pref).map(Vec::as_slice)
    }

    pub fn prefs_of(&self, goal: &str) -> Vec<&str> {
        self.order.iter().filter(|p| self.goals[*p].iter().any(|g| g == goal)).map(String::as_str).collect()
    }

    pub fn applies(&self, pref: &str, goal: &str) -> bool {
        self.goals.get(pref).is_some_and(|gs| gs.iter().any(|g| g == goal))
    }

    /// Goals shared by two preferences, sorted by id.
    pub fn intersection(&self, a: &str, b: &str) -> Vec<GoalId> {
        let (Some(ga), Some(gb)) = (self.goals.get(a), self.goals.get(b)) else {
            return Vec::new();
        };
        let sb: BTreeSet<&GoalId> = gb.iter().collect();
        let set: BTreeSet<GoalId> = ga.iter().filter(|g| sb.contains(g)).cloned().collect();
        set.into_iter().collect()
    }

    /// Unordered preference pairs whose goal sets overlap, in declaration order.
    pub fn intersecting_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (i, a) in self.order.iter().enumerate() {
            for b in &self.order[i + 1..] {
                if !self.intersection(a, b).is_empty() {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalBank {
    pub entries: Vec<GoalEntry>,
    pub preferences: PreferenceMap,
}

impl GoalBank {
    pub fn goals(&self) -> Vec<Goal> {
        self.entries.iter().map(|e| e.goal.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&GoalEntry> {
        self.entries.iter().find(|e| e.goal.id == id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks ids, preference references, and that every step is a ground
    /// action of the domain.
    pub fn validate(&self, domain: &DomainSpec) -> Result<(), BankError> {
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if !ids.insert(e.goal.id.as_str()) {
                return Err(BankError::DuplicateGoal(e.goal.id.clone()));
            }
            for a in e.steps() {
                if !domain.contains_action(a) {
                    return Err(BankError::InvalidGoal {
                        goal: e.goal.id.clone(),
                        msg: format!("unknown action `{a}`"),
                    });
                }
            }
            if !domain.items.contains(&e.main_ingredient) {
                return Err(BankError::InvalidGoal {
                    goal: e.goal.id.clone(),
                    msg: format!("main ingredient `{}` is not an item", e.main_ingredient),
                });
            }
            if e.serving_container().is_none() {
                return Err(BankError::InvalidGoal { goal: e.goal.id.clone(), msg: "no serve step".into() });
            }
        }
        for p in self.preferences.preferences() {
            for g in self.preferences.goals_of(p).unwrap_or_default() {
                if !ids.contains(g.as_str()) {
                    return Err(BankError::UnknownGoal(g.clone()));
                }
            }
        }
        if let Some(e) = self.entries.iter().find(|e| self.preferences.prefs_of(&e.goal.id).is_empty()) {
            return Err(BankError::Uncovered(e.goal.id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyBank {
    pub cap: Option<usize>,
    sequences: BTreeMap<GoalId, Vec<Vec<Action>>>,
}

impl PolicyBank {
    pub fn sequences(&self, goal: &str) -> Option<&[Vec<Action>]> {
        self.sequences.get(goal).map(Vec::as_slice)
    }

    pub fn goals(&self) -> impl Iterator<Item = &GoalId> {
        self.sequences.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GoalId, &Vec<Vec<Action>>)> {
        self.sequences.iter()
    }

    pub fn total(&self) -> usize {
        self.sequences.values().map(Vec::len).sum()
    }
}

fn goal_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Replays a sequence from the initial state with the agents taking turns
/// (`apply` hands the turn over after each step), and requires the final state to be terminal.
pub fn replay(domain: &DomainSpec, goal: &str, seq: &[Action]) -> Result<(), BankError> {
    let mut state = domain.initial_state();
    for (k, a) in seq.iter().enumerate() {
        state = domain.apply(&state, a).map_err(|e| BankError::Inexecutable {
            goal: goal.to_string(),
            step: k,
            action: a.to_string(),
            reason: e.to_string(),
        })?;
    }
    if !domain.is_terminal(&state) {
        return Err(BankError::Inexecutable {
            goal: goal.to_string(),
            step: seq.len(),
            action: "<end>".into(),
            reason: "final state is not terminal".into(),
        });
    }
    Ok(())
}

/// Samples up to `cap` linearizations per goal and checks each one is
/// executable in the domain, with the two agents taking turns.
pub fn build_policy_bank(
    bank: &GoalBank,
    domain: &DomainSpec,
    cap: Option<usize>,
    seed: u64,
) -> Result<PolicyBank, BankError> {
    let mut sequences = BTreeMap::new();
    for (i, e) in bank.entries.iter().enumerate() {
        let seqs = e.network.linearizations(cap, goal_seed(seed, i))?;
        for s in &seqs {
            replay(domain, &e.goal.id, s)?;
        }
        sequences.insert(e.goal.id.clone(), seqs);
    }
    Ok(PolicyBank { cap, sequences })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub index: usize,
    pub preferences: (String, String),
    pub true_goal: GoalId,
    pub seed: u64,
}

/// One experiment per intersecting preference pair, with the true goal
/// drawn uniformly from the shared goals.
pub fn generate_experiments(prefs: &PreferenceMap, seed: u64) -> Vec<ExperimentSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    prefs
        .intersecting_pairs()
        .into_iter()
        .enumerate()
        .map(|(index, (a, b))| {
            let shared = prefs.intersection(&a, &b);
            let true_goal = shared[rng.gen_range(0..shared.len())].clone();
            ExperimentSpec { index, preferences: (a, b), true_goal, seed: rng.next_u64() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankStats {
    pub goals: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub mean_len: f64,
    pub sd_len: f64,
    pub preferences: usize,
    pub intersecting_pairs: usize,
}

impl BankStats {
    pub fn of(bank: &GoalBank) -> BankStats {
        let lens: Vec<f64> = bank.entries.iter().map(|e| e.network.len() as f64).collect();
        let n = lens.len().max(1) as f64;
        let mean = lens.iter().sum::<f64>() / n;
        let var = lens.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
        BankStats {
            goals: bank.len(),
            min_len: bank.entries.iter().map(|e| e.network.len()).min().unwrap_or(0),
            max_len: bank.entries.iter().map(|e| e.network.len()).max().unwrap_or(0),
            mean_len: mean,
            sd_len: var.sqrt(),
            preferences: bank.preferences.preferences().len(),
            intersecting_pairs: bank.preferences.intersecting_pairs().len(),
        }
    }
}
