//! Data files shipped with the crate.

use crate::bank::{parse_goal_bank, GoalBank};
use crate::domain::{parse_domain, DomainSpec};

pub const DOMAIN: &str = include_str!("../data/cooking.domain");
pub const GOAL_BANK: &str = include_str!("../data/goal_bank.txt");
pub const LEXICON: &str = include_str!("../data/lexicon.txt");
pub const QUESTIONS: &str = include_str!("../data/questions.txt");

pub fn domain() -> DomainSpec {
    parse_domain(DOMAIN).expect("bundled domain parses")
}

pub fn goal_bank() -> GoalBank {
    parse_goal_bank(GOAL_BANK).expect("bundled goal bank parses")
}
