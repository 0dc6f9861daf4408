//! Episodes, method presets, metrics and suite output.

mod assets;
mod episode;
mod method;
mod metrics;
mod repl;
mod robot;
mod suite;

use thiserror::Error;

pub use assets::{AssetConfig, Assets, SharedJudge};
pub use episode::{run_episode, STEP_CAP_FACTOR};
pub use method::{FieldKind, GoalSource, Inference, MethodConfig, RobotKind, PRESETS};
pub use metrics::{compute_metrics, guesses, MetricsReport};
pub use repl::{run_repl, ReplOutcome};
pub use robot::{Robot, RobotMove, PRED_MASS, PRED_MAX, PRED_MIN_P};
pub use suite::{
    csv_record, csv_string, run_suite, summary_json, sweep, table, write_csv, Stat, SuiteReport, SuiteSummary,
    SweepPoint, CSV_HEADER,
};

use crate::attractor::{AttractorError, JudgeError};
use crate::bank::BankError;
use crate::belief::BeliefError;
use crate::domain::DomainError;
use crate::human::HumanError;
use crate::inquiry::InquiryError;
use crate::planner::PlanError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    Attractor(#[from] AttractorError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Inquiry(#[from] InquiryError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Human(#[from] HumanError),
    #[error("{0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}
