mod common;

use goalplan::bundled;
use goalplan::domain::{ActionInstance, Agent, DomainSpec, WorldState};
use goalplan::planner::{
    branch_cost, branches, expand, select_action, ActionScorer, PlanError, PlanNode, PlannerConfig,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// First `n` legal actions, scored by position.
struct FirstN(usize);

impl ActionScorer for FirstN {
    fn candidates(&self, domain: &DomainSpec, state: &WorldState, agent: Agent) -> Vec<ActionInstance> {
        domain.legal_actions(state, agent).into_iter().take(self.0).collect()
    }

    fn score(&self, _: &WorldState, a: &ActionInstance) -> f64 {
        a.action.to_string().len() as f64 / 10.0
    }
}

fn cfg(horizon: usize, branch_cap: Option<usize>) -> PlannerConfig {
    PlannerConfig { horizon, branch_cap, ..PlannerConfig::default() }
}

fn robot_turn(domain: &DomainSpec) -> WorldState {
    let s = domain.initial_state();
    domain.step(&s, &domain.legal_actions(&s, Agent::Human)[0]).unwrap()
}

#[test]
fn one_level_keeps_every_candidate() {
    let d = bundled::domain();
    let root = robot_turn(&d);
    assert_eq!(root.turn, Agent::Robot);
    let tree = expand(&root, &d, &FirstN(3), &cfg(1, None)).unwrap();
    assert_eq!(tree.children.len(), 3);
    assert!(tree.children.iter().all(PlanNode::is_leaf));
    assert_eq!(branches(&tree).len(), 3);
}

#[test]
fn cap_of_one_is_a_greedy_chain() {
    let d = bundled::domain();
    let tree = expand(&robot_turn(&d), &d, &FirstN(10), &cfg(2, Some(1))).unwrap();
    let b = branches(&tree);
    assert_eq!(b.len(), 1);
    assert_eq!(b[0].0.len(), 2);
    assert_eq!(b[0].0[0].agent, Agent::Robot);
    assert_eq!(b[0].0[1].agent, Agent::Human);
}

#[test]
fn expansion_matches_brute_force() {
    let d = bundled::domain();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..20 {
        let root = common::random_state(&d, &mut rng, seed as usize % 9);
        let scorer = common::RandomScorer { seed, max_candidates: 5 };
        let tree = expand(&root, &d, &scorer, &cfg(2, Some(3))).unwrap();
        let mut got = branches(&tree);
        let mut want = common::all_branches(&d, &scorer, &root, 2, Some(3), true);
        got.sort_by(|a, b| a.0.cmp(&b.0));
        want.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(got, want);
    }
}

fn leaf_with(path_score: f64) -> PlanNode {
    let d = bundled::domain();
    PlanNode {
        state: d.initial_state(),
        incoming: None,
        depth: 2,
        agent: Agent::Robot,
        node_score: 0.0,
        path_score,
        children: vec![],
    }
}

#[test]
fn branch_cost_negates_the_path_sum() {
    assert_eq!(branch_cost(&leaf_with(1.3 + 0.7)), -2.0);
    let zero = branch_cost(&leaf_with(0.0));
    assert_eq!(zero.to_bits(), 0.0f64.to_bits());
}

fn hand_tree(costs: &[f64]) -> (PlanNode, Vec<ActionInstance>) {
    let d = bundled::domain();
    let root = robot_turn(&d);
    let acts: Vec<ActionInstance> = d.legal_actions(&root, Agent::Robot).into_iter().take(costs.len()).collect();
    let children = acts
        .iter()
        .zip(costs)
        .map(|(a, c)| PlanNode {
            state: d.step(&root, a).unwrap(),
            incoming: Some(a.clone()),
            depth: 1,
            agent: Agent::Human,
            node_score: -c,
            path_score: -c,
            children: vec![],
        })
        .collect();
    let tree = PlanNode {
        agent: root.turn,
        state: root,
        incoming: None,
        depth: 0,
        node_score: 0.0,
        path_score: 0.0,
        children,
    };
    (tree, acts)
}

#[test]
fn select_takes_the_cheapest_branch() {
    let (tree, acts) = hand_tree(&[-1.0, -2.0]);
    assert_eq!(select_action(&tree).unwrap(), acts[1]);
    let (tree, acts) = hand_tree(&[-0.5]);
    assert_eq!(select_action(&tree).unwrap(), acts[0]);
    // Equal costs go to the smaller action.
    let (tree, acts) = hand_tree(&[-1.0, -1.0]);
    assert_eq!(select_action(&tree).unwrap(), acts[0].clone().min(acts[1].clone()));
    let (tree, _) = hand_tree(&[]);
    assert_eq!(select_action(&tree), Err(PlanError::NoAction));
}

#[test]
fn random_trees_match_the_oracle() {
    let d = bundled::domain();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for i in 0..50 {
        let steps = rng.gen_range(0..15);
        let root = common::random_state(&d, &mut rng, steps);
        let scorer = common::RandomScorer { seed: 1000 + i, max_candidates: rng.gen_range(1..=5) };
        let c = PlannerConfig {
            horizon: rng.gen_range(1..=3),
            branch_cap: [None, Some(1), Some(2), Some(3)].choose(&mut rng).copied().unwrap(),
            include_human_terms: rng.gen_bool(0.5),
            ..PlannerConfig::default()
        };
        let tree = expand(&root, &d, &scorer, &c).unwrap();
        let oracle = common::exhaustive_best(&d, &scorer, &root, c.horizon, c.branch_cap, c.include_human_terms);
        match oracle {
            Some((path, _)) => assert_eq!(select_action(&tree).unwrap(), path[0]),
            None => assert!(select_action(&tree).is_err()),
        }
    }
}

#[test]
fn pruning_never_beats_the_full_tree() {
    let d = bundled::domain();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for i in 0..30 {
        let root = common::random_state(&d, &mut rng, i % 7);
        let scorer = common::RandomScorer { seed: i as u64, max_candidates: 4 };
        let best = |cap| {
            let t = expand(&root, &d, &scorer, &cfg(3, cap)).unwrap();
            branches(&t).into_iter().map(|(_, c)| c).fold(f64::INFINITY, f64::min)
        };
        let full = best(None);
        for k in 1..=3 {
            assert!(full <= best(Some(k)));
        }
    }
}

#[test]
fn bad_configs_are_rejected() {
    let d = bundled::domain();
    let root = d.initial_state();
    assert_eq!(expand(&root, &d, &FirstN(2), &cfg(0, None)), Err(PlanError::BadConfig));
    assert_eq!(expand(&root, &d, &FirstN(2), &cfg(2, Some(0))), Err(PlanError::BadConfig));
}
