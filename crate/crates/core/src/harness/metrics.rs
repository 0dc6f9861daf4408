use serde::{Deserialize, Serialize};

use crate::trace::{EpisodeTrace, EventKind, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub index: Option<usize>,
    pub method: String,
    pub true_goal: String,
    pub preferences: String,
    pub first_correct_pct: f64,
    pub last_incorrect_pct: f64,
    pub top1_pct: f64,
    pub top3_pct: f64,
    pub n_questions: usize,
    pub steps: usize,
    pub ground_truth_len: usize,
    pub extra_steps: usize,
    pub robot_mistakes: usize,
    pub outcome: Outcome,
}

/// Per-action-step guesses: (top guess is right, truth in the top 3).
pub fn guesses(trace: &EpisodeTrace) -> Vec<(bool, bool)> {
    let truth = trace.true_goal.as_ref().map(|g| g.id.as_str());
    trace
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Action { .. }))
        .map(|e| {
            let top1 = e.belief.first().map(|b| b.goal.as_str()) == truth && truth.is_some();
            let top3 = truth.is_some() && e.belief.iter().take(3).any(|b| Some(b.goal.as_str()) == truth);
            (top1, top3)
        })
        .collect()
}

/// Pure function of the trace. Percentages are over action steps; a robot
/// that is never right reports a first correct guess at 100%.
pub fn compute_metrics(trace: &EpisodeTrace) -> MetricsReport {
    let g = guesses(trace);
    let n = g.len();
    let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    let first_correct_pct = match g.iter().position(|(t, _)| *t) {
        Some(i) => pct(i + 1),
        None => 100.0,
    };
    let last_incorrect_pct = match g.iter().rposition(|(t, _)| !*t) {
        Some(i) => pct(i + 1),
        None => 0.0,
    };
    let steps = trace.action_count();
    let mut extra = steps.saturating_sub(trace.ground_truth_len);
    if trace.outcome.is_failure() {
        extra += trace.remaining_steps;
    }
    MetricsReport {
        index: trace.experiment.as_ref().map(|e| e.index),
        method: trace.method.clone(),
        true_goal: trace.true_goal.as_ref().map(|g| g.id.clone()).unwrap_or_default(),
        preferences: trace.stated_prefs.join("+"),
        first_correct_pct,
        last_incorrect_pct,
        top1_pct: pct(g.iter().filter(|(t, _)| *t).count()),
        top3_pct: pct(g.iter().filter(|(_, t)| *t).count()),
        n_questions: trace.question_count(),
        steps,
        ground_truth_len: trace.ground_truth_len,
        extra_steps: extra,
        robot_mistakes: trace.robot_mistakes,
        outcome: trace.outcome,
    }
}
