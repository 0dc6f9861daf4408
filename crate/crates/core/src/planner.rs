//! Receding-horizon tree search over alternating robot and human moves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attractor::ScoreWeights;
use crate::domain::{ActionInstance, Agent, DomainSpec, WorldState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("the plan tree has no actions")]
    NoAction,
    #[error("horizon and branch cap must be at least 1")]
    BadConfig,
}

/// Supplies the candidate moves at a node and their scores.
pub trait ActionScorer {
    /// Candidate actions for `agent` in `state`; defaults to every legal one.
    fn candidates(&self, domain: &DomainSpec, state: &WorldState, agent: Agent) -> Vec<ActionInstance> {
        domain.legal_actions(state, agent)
    }

    fn score(&self, state: &WorldState, action: &ActionInstance) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub horizon: usize,
    /// Top-K actions kept per node; `None` keeps all.
    pub branch_cap: Option<usize>,
    pub weights: ScoreWeights,
    /// Whether predicted human moves count toward branch cost.
    pub include_human_terms: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { horizon: 2, branch_cap: Some(4), weights: ScoreWeights::default(), include_human_terms: true }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.horizon == 0 || self.branch_cap == Some(0) {
            return Err(PlanError::BadConfig);
        }
        self.weights.validate().map_err(|_| PlanError::BadConfig)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanNode {
    pub state: WorldState,
    pub incoming: Option<ActionInstance>,
    pub depth: usize,
    /// Agent to move at this node.
    pub agent: Agent,
    /// Score of the incoming action.
    pub node_score: f64,
    /// Sum of counted node scores from the root to here.
    pub path_score: f64,
    pub children: Vec<PlanNode>,
}

impl PlanNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(PlanNode::size).sum::<usize>()
    }
}

/// Keeps the `cap` best-scoring actions, ties by action order.
pub fn top_k(mut scored: Vec<(ActionInstance, f64)>, cap: Option<usize>) -> Vec<(ActionInstance, f64)> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if let Some(k) = cap {
        scored.truncate(k);
    }
    scored
}

pub fn expand(
    root: &WorldState,
    domain: &DomainSpec,
    scorer: &dyn ActionScorer,
    cfg: &PlannerConfig,
) -> Result<PlanNode, PlanError> {
    cfg.validate()?;
    let mut node = PlanNode {
        state: root.clone(),
        incoming: None,
        depth: 0,
        agent: root.turn,
        node_score: 0.0,
        path_score: 0.0,
        children: Vec::new(),
    };
    grow(&mut node, domain, scorer, cfg);
    Ok(node)
}

fn grow(node: &mut PlanNode, domain: &DomainSpec, scorer: &dyn ActionScorer, cfg: &PlannerConfig) {
    if node.depth >= cfg.horizon {
        return;
    }
    let agent = node.state.turn;
    let scored: Vec<(ActionInstance, f64)> = scorer
        .candidates(domain, &node.state, agent)
        .into_iter()
        .filter(|a| a.agent == agent && domain.is_legal(&node.state, &a.action))
        .map(|a| {
            let s = scorer.score(&node.state, &a);
            (a, s)
        })
        .collect();
    for (act, s) in top_k(scored, cfg.branch_cap) {
        let state = domain.step(&node.state, &act).expect("candidate is legal");
        let counted = cfg.include_human_terms || act.agent == Agent::Robot;
        let mut child = PlanNode {
            agent: state.turn,
            state,
            incoming: Some(act),
            depth: node.depth + 1,
            node_score: s,
            path_score: node.path_score + if counted { s } else { 0.0 },
            children: Vec::new(),
        };
        grow(&mut child, domain, scorer, cfg);
        node.children.push(child);
    }
}

/// Negated sum of the counted scores on the root-to-leaf path.
pub fn branch_cost(leaf: &PlanNode) -> f64 {
    // Adding zero folds -0.0 into 0.0 so equal costs compare equal.
    -leaf.path_score + 0.0
}

/// Every root-to-leaf branch with its cost.
pub fn branches(tree: &PlanNode) -> Vec<(Vec<ActionInstance>, f64)> {
    fn walk(n: &PlanNode, path: &mut Vec<ActionInstance>, out: &mut Vec<(Vec<ActionInstance>, f64)>) {
        if let Some(a) = &n.incoming {
            path.push(a.clone());
        }
        if n.is_leaf() {
            if !path.is_empty() {
                out.push((path.clone(), branch_cost(n)));
            }
        } else {
            for c in &n.children {
                walk(c, path, out);
            }
        }
        if n.incoming.is_some() {
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(tree, &mut Vec::new(), &mut out);
    out
}

/// First action of the cheapest branch; ties go to the smaller path.
pub fn select_action(tree: &PlanNode) -> Result<ActionInstance, PlanError> {
    branches(tree)
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
        .map(|(path, _)| path[0].clone())
        .ok_or(PlanError::NoAction)
}
