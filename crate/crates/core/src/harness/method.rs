use serde::{Deserialize, Serialize};

use crate::inquiry::CostSchedule;
use crate::planner::PlannerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotKind {
    /// Never acts.
    Passive,
    /// Greedy judge pick over legal actions, no goal model.
    JudgeOnly,
    /// Belief, questions and tree search.
    Planner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSource {
    /// The goal bank is the candidate set.
    Bank,
    /// Candidates are proposed from the dish vocabulary by the judge.
    Proposed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Step frequencies in the policy bank.
    Policy,
    /// Judge relevance scores.
    Judge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inference {
    /// Bigram sequence classifier over human actions.
    Classifier,
    /// Sequential Bayes on the action fields.
    Fields,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: String,
    pub robot: RobotKind,
    #[serde(default = "bank")]
    pub goals: GoalSource,
    #[serde(default = "policy")]
    pub fields: FieldKind,
    #[serde(default = "classifier")]
    pub inference: Inference,
    /// Stated preferences shape the prior and add score terms.
    #[serde(default = "yes")]
    pub use_preferences: bool,
    #[serde(default)]
    pub questions: bool,
    /// Restrict candidates to pending steps of the plausible goals.
    #[serde(default = "yes")]
    pub progress_filter: bool,
    /// Weight of the bonus for actions that split the plausible goals.
    #[serde(default)]
    pub divergence_bonus: f64,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub schedule: CostSchedule,
    /// Smoothing added to answer affinities.
    #[serde(default = "answer_eps")]
    pub answer_eps: f64,
    /// Probability that the simulated human answers at random.
    #[serde(default)]
    pub answer_noise: f64,
    /// Weight kept on unmatched preferences in the prior.
    #[serde(default = "pref_floor")]
    pub preference_floor: f64,
}

fn bank() -> GoalSource {
    GoalSource::Bank
}
fn policy() -> FieldKind {
    FieldKind::Policy
}
fn classifier() -> Inference {
    Inference::Classifier
}
fn yes() -> bool {
    true
}
fn answer_eps() -> f64 {
    0.05
}
fn pref_floor() -> f64 {
    0.05
}

pub const PRESETS: [&str; 7] = ["passive", "actions-only", "kg", "kg-pb", "kg-pb-q", "open", "judge-only"];

impl MethodConfig {
    fn base(name: &str, robot: RobotKind) -> MethodConfig {
        MethodConfig {
            name: name.to_string(),
            robot,
            goals: GoalSource::Bank,
            fields: FieldKind::Policy,
            inference: Inference::Classifier,
            use_preferences: true,
            questions: false,
            progress_filter: true,
            divergence_bonus: 0.0,
            planner: PlannerConfig::default(),
            schedule: CostSchedule::default(),
            answer_eps: answer_eps(),
            answer_noise: 0.0,
            preference_floor: pref_floor(),
        }
    }

    pub fn preset(name: &str) -> Option<MethodConfig> {
        let m = match name {
            "passive" => MethodConfig::base(name, RobotKind::Passive),
            "judge-only" => MethodConfig {
                progress_filter: false,
                fields: FieldKind::Judge,
                ..MethodConfig::base(name, RobotKind::JudgeOnly)
            },
            "actions-only" => MethodConfig {
                fields: FieldKind::Judge,
                inference: Inference::Fields,
                use_preferences: false,
                divergence_bonus: 1.0,
                ..MethodConfig::base(name, RobotKind::Planner)
            },
            "kg" => MethodConfig {
                fields: FieldKind::Judge,
                inference: Inference::Fields,
                ..MethodConfig::base(name, RobotKind::Planner)
            },
            "kg-pb" => MethodConfig::base(name, RobotKind::Planner),
            "kg-pb-q" => MethodConfig { questions: true, ..MethodConfig::base(name, RobotKind::Planner) },
            "open" => MethodConfig {
                goals: GoalSource::Proposed,
                fields: FieldKind::Judge,
                inference: Inference::Fields,
                questions: true,
                progress_filter: false,
                ..MethodConfig::base(name, RobotKind::Planner)
            },
            _ => return None,
        };
        Some(m)
    }

    pub fn from_toml(src: &str) -> Result<MethodConfig, String> {
        let m: MethodConfig = toml::from_str(src).map_err(|e| e.to_string())?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("method config serializes")
    }

    pub fn validate(&self) -> Result<(), String> {
        self.planner.validate().map_err(|e| e.to_string())?;
        let s = &self.schedule;
        CostSchedule::new(s.c_min, s.c_max, s.t_q).map_err(|e| e.to_string())?;
        if self.progress_filter && self.goals == GoalSource::Proposed {
            return Err("the progress filter needs bank goals".into());
        }
        if self.goals == GoalSource::Proposed && self.fields == FieldKind::Policy {
            return Err("proposed goals have no policy fields".into());
        }
        if self.inference == Inference::Classifier && self.goals == GoalSource::Proposed {
            return Err("the classifier needs bank goals".into());
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.answer_noise)
            || !unit(self.preference_floor)
            || self.answer_eps.is_nan()
            || self.answer_eps <= 0.0
        {
            return Err("answer_noise and preference_floor must lie in [0, 1] and answer_eps above 0".into());
        }
        if self.divergence_bonus.is_nan() || self.divergence_bonus < 0.0 {
            return Err("divergence_bonus must be nonnegative".into());
        }
        Ok(())
    }
}
