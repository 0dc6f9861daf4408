//! Symbolic kitchen world: declared objects, STRIPS-style rules with
//! negative preconditions, and a compact fact-set state.

mod parser;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parser::parse_domain;

pub type Id = String;

/// Predicate used for item locations. Every item holds exactly one.
pub const LOCATION_PREDICATE: &str = "at";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undeclared identifier `{name}`")]
    Undeclared { name: String, line: usize, col: usize },
    #[error("{line}:{col}: unknown section `{name}`")]
    UnknownSection { name: String, line: usize, col: usize },
    #[error("line {line}: duplicate rule for `{verb}`")]
    DuplicateRule { verb: String, line: usize },
    #[error("no rule for verb `{0}`")]
    MissingRule(String),
    #[error("empty domain file")]
    Empty,
    #[error("invalid initial state: {0}")]
    InvalidInit(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("action `{action}` is not legal: {reason}")]
    Illegal { action: String, reason: String },
    #[error("it is the {expected}'s turn, not the {got}'s")]
    WrongTurn { expected: Agent, got: Agent },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Blend,
    CollectWater,
    Cook,
    Gather,
    Mix,
    Pour,
    ReduceHeat,
    Serve,
    TurnOn,
}

impl Verb {
    pub const ALL: [Verb; 9] = [
        Verb::Blend,
        Verb::CollectWater,
        Verb::Cook,
        Verb::Gather,
        Verb::Mix,
        Verb::Pour,
        Verb::ReduceHeat,
        Verb::Serve,
        Verb::TurnOn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verb::Blend => "blend",
            Verb::CollectWater => "collect_water",
            Verb::Cook => "cook",
            Verb::Gather => "gather",
            Verb::Mix => "mix",
            Verb::Pour => "pour",
            Verb::ReduceHeat => "reduce_heat",
            Verb::Serve => "serve",
            Verb::TurnOn => "turn_on",
        }
    }

    pub fn from_name(s: &str) -> Option<Verb> {
        Verb::ALL.iter().copied().find(|v| v.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Verb::CollectWater => 0,
            Verb::Pour => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agent {
    Human,
    Robot,
}

impl Agent {
    pub fn other(self) -> Agent {
        match self {
            Agent::Human => Agent::Robot,
            Agent::Robot => Agent::Human,
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agent::Human => "human",
            Agent::Robot => "robot",
        })
    }
}

/// A ground action without an agent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub verb: Verb,
    pub item: Option<Id>,
    pub destination: Option<Id>,
}

impl Action {
    pub fn new(verb: Verb, item: Option<&str>, destination: Option<&str>) -> Action {
        Action { verb, item: item.map(str::to_string), destination: destination.map(str::to_string) }
    }

    pub fn args(&self) -> Vec<&str> {
        self.item.iter().chain(self.destination.iter()).map(String::as_str).collect()
    }

    /// Plain-language rendering, e.g. `pour oats into pot`.
    pub fn describe(&self) -> String {
        let item = self.item.as_deref().unwrap_or("").replace('_', " ");
        let dest = self.destination.as_deref().unwrap_or("").replace('_', " ");
        match self.verb {
            Verb::CollectWater => "collect water".to_string(),
            Verb::Pour => format!("pour {item} into {dest}"),
            Verb::TurnOn => format!("turn on {item}"),
            Verb::ReduceHeat => format!("reduce heat for {item}"),
            v => format!("{} {item}", v.name()),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = self.args();
        if args.is_empty() {
            f.write_str(self.verb.name())
        } else {
            write!(f, "{}({})", self.verb, args.join(", "))
        }
    }
}

impl FromStr for Action {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| DomainError::Parse { line: 1, col: 1, msg: format!("{msg}: `{s}`") };
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(|| bad("missing `)`"))?;
                let args: Vec<&str> = inner.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
                (s[..open].trim(), args)
            }
            None => (s, Vec::new()),
        };
        let verb = Verb::from_name(head).ok_or_else(|| bad("unknown verb"))?;
        if args.len() != verb.arity() {
            return Err(bad("wrong number of arguments"));
        }
        Ok(Action::new(verb, args.first().copied(), args.get(1).copied()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionInstance {
    pub action: Action,
    pub agent: Agent,
}

impl ActionInstance {
    pub fn new(action: Action, agent: Agent) -> Self {
        ActionInstance { action, agent }
    }
}

impl fmt::Display for ActionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.action, self.agent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub pred: String,
    pub args: Vec<Id>,
}

impl Literal {
    pub fn new(pred: &str, args: &[&str]) -> Literal {
        Literal { pred: pred.to_string(), args: args.iter().map(|a| a.to_string()).collect() }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.pred, self.args.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Item,
    Container,
    Appliance,
    Location,
}

impl Kind {
    pub fn from_name(s: &str) -> Option<Kind> {
        match s {
            "item" => Some(Kind::Item),
            "container" => Some(Kind::Container),
            "appliance" => Some(Kind::Appliance),
            "location" => Some(Kind::Location),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(usize),
    Const(Id),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub positive: bool,
    pub pred: String,
    pub args: Vec<Term>,
}

impl Condition {
    fn ground(&self, binding: &[&str]) -> Literal {
        Literal {
            pred: self.pred.clone(),
            args: self
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(i) => binding[*i].to_string(),
                    Term::Const(c) => c.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub verb: Verb,
    pub params: Vec<(String, Kind)>,
    pub pre: Vec<Condition>,
    pub eff: Vec<Condition>,
}

/// Ground preconditions and effects of one action, split by sign.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundRule {
    pub pre_pos: Vec<Literal>,
    pub pre_neg: Vec<Literal>,
    pub add: Vec<Literal>,
    pub del: Vec<Literal>,
}

#[derive(Debug, Clone)]
struct Compiled {
    action: Action,
    pre_pos: Vec<usize>,
    pre_neg: Vec<usize>,
    add: Vec<usize>,
    del: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub name: String,
    pub items: Vec<Id>,
    pub containers: Vec<Id>,
    pub appliances: Vec<Id>,
    pub locations: Vec<Id>,
    pub terminal: Vec<String>,
    rules: Vec<Rule>,
    init: BTreeSet<Literal>,
    facts: Vec<Literal>,
    fact_index: HashMap<Literal, usize>,
    ground: Vec<Compiled>,
    ground_index: HashMap<Action, usize>,
    terminal_facts: Vec<usize>,
}

/// Set of true facts, indexed against the owning [`DomainSpec`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    bits: Vec<u64>,
    pub turn: Agent,
    pub step_index: usize,
}

impl WorldState {
    pub fn has_fact(&self, fact: usize) -> bool {
        self.bits[fact / 64] >> (fact % 64) & 1 == 1
    }

    fn set(&mut self, fact: usize, on: bool) {
        let mask = 1u64 << (fact % 64);
        if on {
            self.bits[fact / 64] |= mask;
        } else {
            self.bits[fact / 64] &= !mask;
        }
    }

    pub fn holds(&self, spec: &DomainSpec, lit: &Literal) -> bool {
        spec.fact_index.get(lit).is_some_and(|&f| self.has_fact(f))
    }

    pub fn literals(&self, spec: &DomainSpec) -> BTreeSet<Literal> {
        (0..spec.facts.len()).filter(|&f| self.has_fact(f)).map(|f| spec.facts[f].clone()).collect()
    }

    /// Hands the turn to the other agent without acting.
    pub fn pass_turn(&self) -> WorldState {
        let mut next = self.clone();
        next.turn = self.turn.other();
        next
    }
}

impl DomainSpec {
    pub(crate) fn build(
        name: String,
        objects: [Vec<Id>; 4],
        rules: Vec<Rule>,
        init: BTreeSet<Literal>,
        terminal: Vec<String>,
    ) -> Result<DomainSpec, DomainError> {
        let [items, containers, appliances, locations] = objects;
        let mut spec = DomainSpec {
            name,
            items,
            containers,
            appliances,
            locations,
            terminal,
            rules,
            init,
            facts: Vec::new(),
            fact_index: HashMap::new(),
            ground: Vec::new(),
            ground_index: HashMap::new(),
            terminal_facts: Vec::new(),
        };
        spec.rules.sort_by_key(|r| r.verb);
        for v in Verb::ALL {
            if !spec.rules.iter().any(|r| r.verb == v) {
                return Err(DomainError::MissingRule(v.name().to_string()));
            }
        }
        spec.check_init()?;
        for lit in spec.init.clone() {
            spec.intern(lit);
        }
        let mut ground = Vec::new();
        for rule in spec.rules.clone() {
            let domains: Vec<Vec<Id>> = rule.params.iter().map(|(_, k)| spec.objects_of(*k).to_vec()).collect();
            for binding in cartesian(&domains) {
                let refs: Vec<&str> = binding.iter().map(String::as_str).collect();
                let action = Action::new(rule.verb, refs.first().copied(), refs.get(1).copied());
                let mut c = Compiled { action, pre_pos: vec![], pre_neg: vec![], add: vec![], del: vec![] };
                for cond in &rule.pre {
                    let f = spec.intern(cond.ground(&refs));
                    if cond.positive {
                        c.pre_pos.push(f)
                    } else {
                        c.pre_neg.push(f)
                    }
                }
                for cond in &rule.eff {
                    let f = spec.intern(cond.ground(&refs));
                    if cond.positive {
                        c.add.push(f)
                    } else {
                        c.del.push(f)
                    }
                }
                ground.push(c);
            }
        }
        ground.sort_by(|a, b| a.action.cmp(&b.action));
        spec.ground_index = ground.iter().enumerate().map(|(i, c)| (c.action.clone(), i)).collect();
        spec.ground = ground;
        spec.terminal_facts = (0..spec.facts.len()).filter(|&f| spec.terminal.contains(&spec.facts[f].pred)).collect();
        Ok(spec)
    }

    fn intern(&mut self, lit: Literal) -> usize {
        if let Some(&f) = self.fact_index.get(&lit) {
            return f;
        }
        let f = self.facts.len();
        self.fact_index.insert(lit.clone(), f);
        self.facts.push(lit);
        f
    }

    fn check_init(&self) -> Result<(), DomainError> {
        for item in &self.items {
            let locs: Vec<&Literal> =
                self.init.iter().filter(|l| l.pred == LOCATION_PREDICATE && l.args.first() == Some(item)).collect();
            if locs.len() != 1 {
                return Err(DomainError::InvalidInit(format!("item `{item}` has {} locations", locs.len())));
            }
            if !locs[0].args.get(1).is_some_and(|l| self.locations.contains(l)) {
                return Err(DomainError::InvalidInit(format!("item `{item}` is not at a location")));
            }
        }
        Ok(())
    }

    pub fn objects_of(&self, kind: Kind) -> &[Id] {
        match kind {
            Kind::Item => &self.items,
            Kind::Container => &self.containers,
            Kind::Appliance => &self.appliances,
            Kind::Location => &self.locations,
        }
    }

    pub fn is_declared(&self, name: &str) -> bool {
        [&self.items, &self.containers, &self.appliances, &self.locations].iter().any(|v| v.iter().any(|x| x == name))
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, verb: Verb) -> &Rule {
        self.rules.iter().find(|r| r.verb == verb).expect("every verb has a rule")
    }

    pub fn initial_state(&self) -> WorldState {
        let mut s =
            WorldState { bits: vec![0; self.facts.len().div_ceil(64).max(1)], turn: Agent::Human, step_index: 0 };
        for lit in &self.init {
            s.set(self.fact_index[lit], true);
        }
        s
    }

    /// Builds a state from an explicit set of literals.
    pub fn state_from_literals<'a>(
        &self,
        lits: impl IntoIterator<Item = &'a Literal>,
        turn: Agent,
    ) -> Result<WorldState, DomainError> {
        let mut s = WorldState { bits: vec![0; self.facts.len().div_ceil(64).max(1)], turn, step_index: 0 };
        for lit in lits {
            let f = self
                .fact_index
                .get(lit)
                .ok_or_else(|| DomainError::InvalidInit(format!("literal `{lit}` is never mentioned")))?;
            s.set(*f, true);
        }
        Ok(s)
    }

    /// Every ground action, sorted.
    pub fn actions(&self) -> impl Iterator<Item = &Action> {
        self.ground.iter().map(|c| &c.action)
    }

    pub fn contains_action(&self, action: &Action) -> bool {
        self.ground_index.contains_key(action)
    }

    pub fn ground_rule(&self, action: &Action) -> Option<GroundRule> {
        let c = &self.ground[*self.ground_index.get(action)?];
        let lits = |v: &[usize]| v.iter().map(|&f| self.facts[f].clone()).collect();
        Some(GroundRule { pre_pos: lits(&c.pre_pos), pre_neg: lits(&c.pre_neg), add: lits(&c.add), del: lits(&c.del) })
    }

    /// Indices of the facts an action adds.
    pub fn add_facts(&self, action: &Action) -> Option<&[usize]> {
        self.ground_index.get(action).map(|&i| self.ground[i].add.as_slice())
    }

    /// True when every positive effect of the action already holds.
    pub fn effects_hold(&self, state: &WorldState, action: &Action) -> bool {
        match self.ground_index.get(action) {
            Some(&i) => self.ground[i].add.iter().all(|&f| state.has_fact(f)),
            None => false,
        }
    }

    pub fn is_terminal(&self, state: &WorldState) -> bool {
        self.terminal_facts.iter().any(|&f| state.has_fact(f))
    }

    fn applicable(&self, c: &Compiled, state: &WorldState) -> bool {
        c.pre_pos.iter().all(|&f| state.has_fact(f)) && c.pre_neg.iter().all(|&f| !state.has_fact(f))
    }

    pub fn is_legal(&self, state: &WorldState, action: &Action) -> bool {
        !self.is_terminal(state)
            && self.ground_index.get(action).is_some_and(|&i| self.applicable(&self.ground[i], state))
    }

    /// Legal actions for `agent`, ordered by verb, item, destination.
    /// Empty once the state is terminal.
    pub fn legal_actions(&self, state: &WorldState, agent: Agent) -> Vec<ActionInstance> {
        if self.is_terminal(state) {
            return Vec::new();
        }
        self.ground
            .iter()
            .filter(|c| self.applicable(c, state))
            .map(|c| ActionInstance::new(c.action.clone(), agent))
            .collect()
    }

    pub fn step(&self, state: &WorldState, act: &ActionInstance) -> Result<WorldState, DomainError> {
        if act.agent != state.turn {
            return Err(DomainError::WrongTurn { expected: state.turn, got: act.agent });
        }
        self.apply(state, &act.action)
    }

    /// Applies an action regardless of whose turn it is, then hands the
    /// turn over.
    pub fn apply(&self, state: &WorldState, action: &Action) -> Result<WorldState, DomainError> {
        let &i = self.ground_index.get(action).ok_or_else(|| DomainError::UnknownAction(action.to_string()))?;
        let c = &self.ground[i];
        if self.is_terminal(state) {
            return Err(DomainError::Illegal { action: action.to_string(), reason: "the episode has ended".into() });
        }
        if let Some(&f) = c.pre_pos.iter().find(|&&f| !state.has_fact(f)) {
            return Err(DomainError::Illegal {
                action: action.to_string(),
                reason: format!("requires {}", self.facts[f]),
            });
        }
        if let Some(&f) = c.pre_neg.iter().find(|&&f| state.has_fact(f)) {
            return Err(DomainError::Illegal {
                action: action.to_string(),
                reason: format!("requires not {}", self.facts[f]),
            });
        }
        let mut next = state.clone();
        for &f in &c.del {
            next.set(f, false);
        }
        for &f in &c.add {
            next.set(f, true);
        }
        next.turn = state.turn.other();
        next.step_index = state.step_index + 1;
        Ok(next)
    }

    /// Checks the location invariant: each item sits at exactly one location.
    pub fn validate_state(&self, state: &WorldState) -> Result<(), DomainError> {
        let lits = state.literals(self);
        for item in &self.items {
            let n = lits.iter().filter(|l| l.pred == LOCATION_PREDICATE && l.args.first() == Some(item)).count();
            if n != 1 {
                return Err(DomainError::InvalidInit(format!("item `{item}` has {n} locations")));
            }
        }
        Ok(())
    }
}

fn cartesian(domains: &[Vec<Id>]) -> Vec<Vec<Id>> {
    let mut out: Vec<Vec<Id>> = vec![Vec::new()];
    for d in domains {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                d.iter().map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x.clone());
                    p
                })
            })
            .collect();
    }
    out
}
