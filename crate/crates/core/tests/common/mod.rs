//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use goalplan::bank::{Goal, RecipeType};
use goalplan::belief::GoalBelief;
use goalplan::domain::{ActionInstance, Agent, DomainSpec, WorldState};
use goalplan::inquiry::{Question, QuestionCategory};
use goalplan::planner::ActionScorer;
use goalplan::trace::{EpisodeTrace, EventKind};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn goals(n: usize) -> Vec<Goal> {
    (0..n).map(|i| Goal::named(&format!("dish {i}"), RecipeType::Stew)).collect()
}

pub fn entropy(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &x in p {
        if x > 0.0 {
            h -= x * x.log2();
        }
    }
    h
}

/// Bayes with a plain loop; a zero marginal leaves the prior alone.
pub fn bayes(prior: &[f64], lik: &[f64]) -> Vec<f64> {
    let z: f64 = prior.iter().zip(lik).map(|(p, l)| p * l).sum();
    if z <= 0.0 {
        return prior.to_vec();
    }
    prior.iter().zip(lik).map(|(p, l)| p * l / z).collect()
}

/// Expected entropy drop with every answer equally likely.
pub fn question_value(prior: &[f64], rows: &[Vec<f64>]) -> f64 {
    let m = rows[0].len();
    let mut expected = 0.0;
    for a in 0..m {
        let lik: Vec<f64> = rows.iter().map(|r| r[a]).collect();
        expected += entropy(&bayes(prior, &lik)) / m as f64;
    }
    entropy(prior) - expected
}

/// A random question problem in plain vectors.
#[derive(Debug, Clone)]
pub struct Instance {
    pub goals: Vec<Goal>,
    pub prior: Vec<f64>,
    /// Per question: one row per goal.
    pub questions: Vec<Vec<Vec<f64>>>,
}

fn random_row(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..m)
        .map(|_| match rng.gen_range(0..5) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.01..1.0),
        })
        .collect();
    if w.iter().all(|x| *x == 0.0) {
        w[rng.gen_range(0..m)] = 1.0;
    }
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(1..=6);
    let goals = goals(n);
    let mut prior: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.01..1.0) }).collect();
    if prior.iter().all(|x| *x == 0.0) {
        prior[0] = 1.0;
    }
    let z: f64 = prior.iter().sum();
    prior.iter_mut().for_each(|x| *x /= z);
    let mut questions = Vec::new();
    for _ in 0..rng.gen_range(1..=5) {
        let m = rng.gen_range(2..=4);
        let rows: Vec<Vec<f64>> = if rng.gen_bool(0.1) {
            let r = random_row(rng, m);
            vec![r; n]
        } else {
            (0..n).map(|_| random_row(rng, m)).collect()
        };
        questions.push(rows);
    }
    // An exact duplicate exercises the id tie-break.
    if rng.gen_bool(0.3) {
        let q = questions.choose(rng).unwrap().clone();
        questions.push(q);
    }
    Instance { goals, prior, questions }
}

impl Instance {
    pub fn belief(&self) -> GoalBelief {
        GoalBelief::from_weights(self.goals.clone(), self.prior.clone()).unwrap()
    }

    pub fn question(&self, i: usize) -> Question {
        let rows = &self.questions[i];
        let answers = (0..rows[0].len()).map(|a| format!("answer {a}")).collect();
        let lik = self.goals.iter().zip(rows).map(|(g, r)| (g.id.clone(), r.clone())).collect();
        Question::new(&format!("q{i:02}"), "which?", QuestionCategory::Generated, answers, lik).unwrap()
    }

    pub fn all_questions(&self) -> Vec<Question> {
        (0..self.questions.len()).map(|i| self.question(i)).collect()
    }

    /// Index of the best question; values within 1e-12 tie and the
    /// lowest index wins.
    pub fn best(&self) -> (usize, f64) {
        let v: Vec<f64> = self.questions.iter().map(|r| question_value(&self.prior, r)).collect();
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let i = v.iter().position(|x| *x >= max - 1e-12).unwrap();
        (i, v[i])
    }
}

/// Scores and candidate subsets drawn from a hash of the state, so ties
/// and pruning are common but everything is reproducible.
pub struct RandomScorer {
    pub seed: u64,
    pub max_candidates: usize,
}

impl RandomScorer {
    fn hash(&self, state: &WorldState, extra: &str) -> u64 {
        let mut h = DefaultHasher::new();
        self.seed.hash(&mut h);
        state.hash(&mut h);
        extra.hash(&mut h);
        h.finish()
    }
}

impl ActionScorer for RandomScorer {
    fn candidates(&self, domain: &DomainSpec, state: &WorldState, agent: Agent) -> Vec<ActionInstance> {
        let mut legal = domain.legal_actions(state, agent);
        legal.sort_by_key(|a| self.hash(state, &format!("pick {a:?}")));
        legal.truncate(self.max_candidates);
        legal
    }

    fn score(&self, state: &WorldState, action: &ActionInstance) -> f64 {
        // Five levels, zero included, so equal scores are frequent.
        (self.hash(state, &format!("score {action:?}")) % 5) as f64 * 0.25
    }
}

/// Plain depth-first enumeration of every kept branch with its cost.
pub fn all_branches(
    domain: &DomainSpec,
    scorer: &dyn ActionScorer,
    root: &WorldState,
    horizon: usize,
    cap: Option<usize>,
    include_human: bool,
) -> Vec<(Vec<ActionInstance>, f64)> {
    let mut all = Vec::new();
    enumerate(domain, scorer, root, 0, horizon, cap, include_human, 0.0, &mut Vec::new(), &mut all);
    all
}

/// The cheapest enumerated branch by cost, then path order.
pub fn exhaustive_best(
    domain: &DomainSpec,
    scorer: &dyn ActionScorer,
    root: &WorldState,
    horizon: usize,
    cap: Option<usize>,
    include_human: bool,
) -> Option<(Vec<ActionInstance>, f64)> {
    let all = all_branches(domain, scorer, root, horizon, cap, include_human);
    let mut best: Option<(Vec<ActionInstance>, f64)> = None;
    for (path, cost) in all {
        let better = match &best {
            None => true,
            Some((bp, bc)) => cost < *bc || (cost == *bc && path < *bp),
        };
        if better {
            best = Some((path, cost));
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    domain: &DomainSpec,
    scorer: &dyn ActionScorer,
    state: &WorldState,
    depth: usize,
    horizon: usize,
    cap: Option<usize>,
    include_human: bool,
    total: f64,
    path: &mut Vec<ActionInstance>,
    out: &mut Vec<(Vec<ActionInstance>, f64)>,
) {
    let leaf = |path: &Vec<ActionInstance>, out: &mut Vec<(Vec<ActionInstance>, f64)>| {
        if !path.is_empty() {
            out.push((path.clone(), 0.0 - total));
        }
    };
    if depth == horizon {
        leaf(path, out);
        return;
    }
    let agent = state.turn;
    let mut scored: Vec<(ActionInstance, f64)> = Vec::new();
    for a in scorer.candidates(domain, state, agent) {
        if a.agent == agent && domain.is_legal(state, &a.action) {
            let s = scorer.score(state, &a);
            scored.push((a, s));
        }
    }
    // Insertion into a list ordered by score descending, then action.
    let mut ordered: Vec<(ActionInstance, f64)> = Vec::new();
    for (a, s) in scored {
        let at = ordered.iter().position(|(b, t)| s > *t || (s == *t && a < *b)).unwrap_or(ordered.len());
        ordered.insert(at, (a, s));
    }
    if let Some(k) = cap {
        ordered.truncate(k);
    }
    if ordered.is_empty() {
        leaf(path, out);
        return;
    }
    for (a, s) in ordered {
        let next = domain.step(state, &a).unwrap();
        let add = if include_human || a.agent == Agent::Robot { s } else { 0.0 };
        path.push(a);
        enumerate(domain, scorer, &next, depth + 1, horizon, cap, include_human, total + add, path, out);
        path.pop();
    }
}

/// A state reached by a short random walk from the start.
pub fn random_state(domain: &DomainSpec, rng: &mut ChaCha8Rng, steps: usize) -> WorldState {
    let mut s = domain.initial_state();
    for _ in 0..steps {
        if domain.is_terminal(&s) {
            break;
        }
        let legal = domain.legal_actions(&s, s.turn);
        s = match legal.choose(rng) {
            Some(a) => domain.step(&s, a).unwrap(),
            None => s.pass_turn(),
        };
    }
    s
}

/// Whether the top-1 guess is right at every timestep from the first
/// informative question on: the first one whose answer leaves a single
/// most likely goal. `None` when there is no such question.
pub fn converged_after_question(trace: &EpisodeTrace) -> Option<bool> {
    let truth = &trace.true_goal.as_ref()?.id;
    let first = trace.events.iter().position(|e| {
        matches!(e.kind, EventKind::Question { .. }) && (e.belief.len() < 2 || e.belief[0].p > e.belief[1].p + 1e-9)
    })?;
    Some(trace.events[first..].iter().all(|e| e.belief.first().is_some_and(|b| &b.goal == truth)))
}
