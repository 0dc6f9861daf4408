use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BankError;
use crate::domain::Action;

/// Upper bound on network size; downsets are tracked as `u64` masks.
pub const MAX_NODES: usize = 64;

/// Above this many orderings an uncapped enumeration is refused.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Partial order over the steps of one recipe.
///
/// Built from clique/chain stages: stages run in series, lanes inside a
/// stage are mutually unordered, and steps inside a lane form a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskNetwork {
    nodes: Vec<Action>,
    edges: Vec<(usize, usize)>,
    cliques: Vec<Vec<Vec<usize>>>,
}

impl TaskNetwork {
    pub fn new(nodes: Vec<Action>, edges: Vec<(usize, usize)>) -> Result<TaskNetwork, BankError> {
        let net = TaskNetwork { nodes, edges, cliques: Vec::new() };
        net.check()?;
        Ok(net)
    }

    pub fn from_stages(stages: Vec<Vec<Vec<Action>>>) -> Result<TaskNetwork, BankError> {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut cliques = Vec::new();
        let mut prev_sinks: Vec<usize> = Vec::new();
        for stage in stages {
            let mut lanes = Vec::new();
            let mut sinks = Vec::new();
            for lane in stage {
                let mut idx = Vec::new();
                for (k, a) in lane.into_iter().enumerate() {
                    let n = nodes.len();
                    nodes.push(a);
                    if k == 0 {
                        edges.extend(prev_sinks.iter().map(|&s| (s, n)));
                    } else {
                        edges.push((n - 1, n));
                    }
                    idx.push(n);
                }
                if let Some(&last) = idx.last() {
                    sinks.push(last);
                    lanes.push(idx);
                }
            }
            if !lanes.is_empty() {
                cliques.push(lanes);
                prev_sinks = sinks;
            }
        }
        let net = TaskNetwork { nodes, edges, cliques };
        net.check()?;
        Ok(net)
    }

    pub fn chain(steps: Vec<Action>) -> Result<TaskNetwork, BankError> {
        TaskNetwork::from_stages(vec![vec![steps]])
    }

    pub fn clique(steps: Vec<Action>) -> Result<TaskNetwork, BankError> {
        TaskNetwork::from_stages(vec![steps.into_iter().map(|a| vec![a]).collect()])
    }

    fn check(&self) -> Result<(), BankError> {
        if self.nodes.len() > MAX_NODES {
            return Err(BankError::TooLarge(self.nodes.len()));
        }
        let mut seen = HashSet::new();
        for a in &self.nodes {
            if !seen.insert(a) {
                return Err(BankError::DuplicateStep(a.to_string()));
            }
        }
        if let Some(&(u, v)) = self.edges.iter().find(|(u, v)| *u >= self.nodes.len() || *v >= self.nodes.len()) {
            return Err(BankError::BadEdge(u, v));
        }
        // Kahn's algorithm.
        let preds = self.predecessor_masks();
        let mut done = 0u64;
        for _ in 0..self.nodes.len() {
            match (0..self.nodes.len()).find(|&v| done >> v & 1 == 0 && preds[v] & !done == 0) {
                Some(v) => done |= 1 << v,
                None => return Err(BankError::Cyclic),
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Action] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Stages as lists of lanes of node indices (empty for raw networks).
    pub fn stages(&self) -> &[Vec<Vec<usize>>] {
        &self.cliques
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, action: &Action) -> Option<usize> {
        self.nodes.iter().position(|a| a == action)
    }

    /// Direct predecessors of each node as bit masks.
    pub fn predecessor_masks(&self) -> Vec<u64> {
        let mut preds = vec![0u64; self.nodes.len()];
        for &(u, v) in &self.edges {
            preds[v] |= 1 << u;
        }
        preds
    }

    fn full(&self) -> u64 {
        if self.nodes.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.nodes.len()) - 1
        }
    }

    fn extensions(&self, preds: &[u64], done: u64, memo: &mut HashMap<u64, u128>) -> u128 {
        if done == self.full() {
            return 1;
        }
        if let Some(&c) = memo.get(&done) {
            return c;
        }
        let mut total = 0u128;
        for v in 0..self.nodes.len() {
            if done >> v & 1 == 0 && preds[v] & !done == 0 {
                total += self.extensions(preds, done | 1 << v, memo);
            }
        }
        memo.insert(done, total);
        total
    }

    /// Number of linear extensions, by dynamic programming over downsets.
    pub fn count_linearizations(&self) -> u128 {
        let preds = self.predecessor_masks();
        self.extensions(&preds, 0, &mut HashMap::new())
    }

    /// All linearizations when there are at most `cap` of them, otherwise
    /// `cap` distinct ones drawn uniformly at random. `None` asks for all.
    pub fn linearizations(&self, cap: Option<usize>, seed: u64) -> Result<Vec<Vec<Action>>, BankError> {
        let preds = self.predecessor_masks();
        let mut memo = HashMap::new();
        let total = self.extensions(&preds, 0, &mut memo);
        let enumerate = match cap {
            None if total > ENUMERATION_LIMIT => return Err(BankError::TooMany(total)),
            None => true,
            Some(c) => total <= c as u128,
        };
        let orders = if enumerate {
            let mut out = Vec::new();
            let mut path = Vec::with_capacity(self.nodes.len());
            self.enumerate(&preds, 0, &mut path, &mut out);
            out
        } else {
            let cap = cap.unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seen = HashSet::new();
            let mut out = Vec::new();
            let mut attempts = 0;
            while out.len() < cap && attempts < cap * 50 {
                attempts += 1;
                let order = self.sample(&preds, &mut memo, &mut rng);
                if seen.insert(order.clone()) {
                    out.push(order);
                }
            }
            out
        };
        Ok(orders.into_iter().map(|o| o.into_iter().map(|i| self.nodes[i].clone()).collect()).collect())
    }

    fn enumerate(&self, preds: &[u64], done: u64, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if done == self.full() {
            out.push(path.clone());
            return;
        }
        for v in 0..self.nodes.len() {
            if done >> v & 1 == 0 && preds[v] & !done == 0 {
                path.push(v);
                self.enumerate(preds, done | 1 << v, path, out);
                path.pop();
            }
        }
    }

    /// One uniformly random linear extension: each available node is
    /// chosen with probability proportional to its number of completions.
    fn sample(&self, preds: &[u64], memo: &mut HashMap<u64, u128>, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut done = 0u64;
        let mut order = Vec::with_capacity(self.nodes.len());
        while done != self.full() {
            let here = self.extensions(preds, done, memo);
            let mut r = rng.gen_range(0..here);
            for v in 0..self.nodes.len() {
                if done >> v & 1 == 0 && preds[v] & !done == 0 {
                    let c = self.extensions(preds, done | 1 << v, memo);
                    if r < c {
                        order.push(v);
                        done |= 1 << v;
                        break;
                    }
                    r -= c;
                }
            }
        }
        order
    }

    /// True if `order` is a permutation of the nodes that respects every edge.
    pub fn is_linearization(&self, order: &[Action]) -> bool {
        if order.len() != self.nodes.len() {
            return false;
        }
        let mut pos = vec![usize::MAX; self.nodes.len()];
        for (k, a) in order.iter().enumerate() {
            match self.position(a) {
                Some(i) if pos[i] == usize::MAX => pos[i] = k,
                _ => return false,
            }
        }
        self.edges.iter().all(|&(u, v)| pos[u] < pos[v])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Verb;

    fn a(i: &str) -> Action {
        Action::new(Verb::Gather, Some(i), None)
    }

    #[test]
    fn chain_and_clique_counts() {
        let names = ["a", "b", "c", "d"];
        let chain = TaskNetwork::chain(names.iter().map(|n| a(n)).collect()).unwrap();
        assert_eq!(chain.count_linearizations(), 1);
        let clique = TaskNetwork::clique(names.iter().map(|n| a(n)).collect()).unwrap();
        assert_eq!(clique.count_linearizations(), 24);
    }

    #[test]
    fn cycle_and_duplicate_rejected() {
        assert!(matches!(TaskNetwork::new(vec![a("x"), a("y")], vec![(0, 1), (1, 0)]), Err(BankError::Cyclic)));
        assert!(matches!(TaskNetwork::clique(vec![a("x"), a("x")]), Err(BankError::DuplicateStep(_))));
    }

    #[test]
    fn capped_sampling_is_distinct_and_valid() {
        let net = TaskNetwork::clique((0..7).map(|i| a(&i.to_string())).collect()).unwrap();
        let s = net.linearizations(Some(30), 9).unwrap();
        assert_eq!(s.len(), 30);
        let set: HashSet<_> = s.iter().collect();
        assert_eq!(set.len(), 30);
        assert!(s.iter().all(|o| net.is_linearization(o)));
        assert_eq!(s, net.linearizations(Some(30), 9).unwrap());
    }
}
