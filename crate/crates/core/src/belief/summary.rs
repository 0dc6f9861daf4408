use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::GoalBelief;
use crate::bank::GoalId;
use crate::domain::{Action, ActionInstance, Id, Verb};
use crate::trace::EpisodeTrace;

/// How many of the latest actions a summary keeps.
pub const RECENT_ACTIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Gathering,
    Assembling,
    Cooking,
    Finishing,
}

impl Phase {
    /// Mixing or serving means finishing; any cook, blend or simmer means
    /// cooking; once at least half the gathered items went into a
    /// container the dish is being assembled.
    pub fn of<'a>(actions: impl IntoIterator<Item = &'a Action>) -> Phase {
        let mut gathered = BTreeSet::new();
        let mut poured = BTreeSet::new();
        let mut processed = false;
        let mut closing = false;
        for a in actions {
            match a.verb {
                Verb::Gather => {
                    gathered.insert(a.item.clone());
                }
                Verb::CollectWater => {
                    gathered.insert(Some("water".to_string()));
                }
                Verb::Pour => {
                    poured.insert(a.item.clone());
                }
                Verb::Cook | Verb::Blend | Verb::ReduceHeat => processed = true,
                Verb::Mix | Verb::Serve => closing = true,
                Verb::TurnOn => {}
            }
        }
        if closing {
            Phase::Finishing
        } else if processed {
            Phase::Cooking
        } else if !poured.is_empty() && 2 * poured.len() >= gathered.len() {
            Phase::Assembling
        } else {
            Phase::Gathering
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Gathering => "gathering",
            Phase::Assembling => "assembling",
            Phase::Cooking => "cooking",
            Phase::Finishing => "finishing",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSummary {
    pub likely_dish: Option<GoalId>,
    pub phase: Phase,
    pub items_in_play: BTreeSet<Id>,
    pub stated_prefs: Vec<String>,
    pub answers: Vec<(String, String)>,
    pub recent_actions: Vec<ActionInstance>,
}

fn touched_item(a: &Action) -> Option<Id> {
    match a.verb {
        Verb::CollectWater => Some("water".to_string()),
        Verb::Gather | Verb::Pour | Verb::Cook | Verb::Blend | Verb::ReduceHeat => a.item.clone(),
        Verb::Mix | Verb::Serve | Verb::TurnOn => None,
    }
}

impl InteractionSummary {
    pub fn new(stated_prefs: Vec<String>) -> Self {
        InteractionSummary {
            likely_dish: None,
            phase: Phase::Gathering,
            items_in_play: BTreeSet::new(),
            stated_prefs,
            answers: Vec::new(),
            recent_actions: Vec::new(),
        }
    }

    /// Builds a summary from raw parts; `actions` is the shared history.
    pub fn from_parts(
        stated_prefs: Vec<String>,
        answers: Vec<(String, String)>,
        actions: &[ActionInstance],
        belief: Option<&GoalBelief>,
    ) -> Self {
        let mut prefs = stated_prefs;
        prefs.extend(answers.iter().map(|(_, a)| a.clone()));
        let start = actions.len().saturating_sub(RECENT_ACTIONS);
        InteractionSummary {
            likely_dish: belief.and_then(|b| b.argmax_unique()).map(|g| g.id.clone()),
            phase: Phase::of(actions.iter().map(|a| &a.action)),
            items_in_play: actions.iter().filter_map(|a| touched_item(&a.action)).collect(),
            stated_prefs: prefs,
            answers,
            recent_actions: actions[start..].to_vec(),
        }
    }

    /// Adds an answer, which also joins the stated preferences.
    pub fn record_answer(&mut self, question: &str, answer: &str) {
        self.answers.push((question.to_string(), answer.to_string()));
        self.stated_prefs.push(answer.to_string());
    }

    pub fn render(&self) -> String {
        let recent: Vec<String> = self.recent_actions.iter().map(|a| a.to_string()).collect();
        let answers: Vec<String> = self.answers.iter().map(|(q, a)| format!("{q} {a}")).collect();
        format!(
            "dish: {} | phase: {} | items: {} | prefs: {} | answers: {} | recent: {}",
            self.likely_dish.as_deref().unwrap_or("unknown"),
            self.phase,
            self.items_in_play.iter().cloned().collect::<Vec<_>>().join(", "),
            self.stated_prefs.join(", "),
            answers.join("; "),
            recent.join(", "),
        )
    }

    /// Source text for goal proposals: preferences, answers and items.
    pub fn judge_text(&self) -> String {
        let items: Vec<String> = self.items_in_play.iter().map(|i| i.replace('_', " ")).collect();
        format!("{} {}", self.stated_prefs.join(", "), items.join(", "))
    }

    pub fn phase_context(&self) -> String {
        format!("phase: {}", self.phase)
    }
}

/// Deterministic summary of an episode so far.
pub fn summarize(trace: &EpisodeTrace, belief: &GoalBelief) -> InteractionSummary {
    let actions: Vec<ActionInstance> = trace.actions().cloned().collect();
    let answers = trace.questions().map(|(_, t, a)| (t.to_string(), a.to_string())).collect();
    InteractionSummary::from_parts(trace.stated_prefs.clone(), answers, &actions, Some(belief))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Agent;

    fn acts(s: &[&str]) -> Vec<ActionInstance> {
        s.iter().map(|a| ActionInstance::new(a.parse().unwrap(), Agent::Human)).collect()
    }

    #[test]
    fn phases_follow_progress() {
        let s = InteractionSummary::from_parts(vec![], vec![], &[], None);
        assert_eq!(s.phase, Phase::Gathering);
        assert_eq!(s.likely_dish, None);
        let s = InteractionSummary::from_parts(vec![], vec![], &acts(&["gather(oats)", "gather(milk)"]), None);
        assert_eq!(s.phase, Phase::Gathering);
        let s = InteractionSummary::from_parts(vec![], vec![], &acts(&["gather(oats)", "pour(oats, pot)"]), None);
        assert_eq!(s.phase, Phase::Assembling);
        let s = InteractionSummary::from_parts(
            vec![],
            vec![],
            &acts(&["pour(honey, glass)", "mix(glass)", "serve(glass)"]),
            None,
        );
        assert_eq!(s.phase, Phase::Finishing);
    }

    #[test]
    fn answers_join_preferences() {
        let mut s = InteractionSummary::new(vec!["sweet".into()]);
        s.record_answer("warm or chilled?", "warm");
        assert_eq!(s.stated_prefs, ["sweet", "warm"]);
        assert!(s.render().contains("phase: gathering"));
        let items = acts(&["gather(oats)", "collect_water", "mix(pot)"]);
        let s = InteractionSummary::from_parts(vec![], vec![], &items, None);
        assert_eq!(s.items_in_play.iter().collect::<Vec<_>>(), ["oats", "water"]);
    }
}
