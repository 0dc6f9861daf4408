use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::run_episode;
use super::metrics::{compute_metrics, MetricsReport};
use super::{Assets, HarnessError, MethodConfig};
use crate::bank::ExperimentSpec;
use crate::trace::EpisodeTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    /// Mean and sample standard deviation.
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Stat {
        let xs: Vec<f64> = xs.into_iter().collect();
        if xs.is_empty() {
            return Stat { mean: 0.0, sd: 0.0 };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Stat { mean, sd: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub method: String,
    pub episodes: usize,
    pub failures: usize,
    pub first_correct_pct: Stat,
    pub last_incorrect_pct: Stat,
    pub top1_pct: Stat,
    pub top3_pct: Stat,
    pub questions: Stat,
    pub extra_steps: Stat,
    pub robot_mistakes: Stat,
}

impl SuiteSummary {
    pub fn of(method: &str, rows: &[MetricsReport]) -> SuiteSummary {
        let s = |f: fn(&MetricsReport) -> f64| Stat::of(rows.iter().map(f));
        SuiteSummary {
            method: method.to_string(),
            episodes: rows.len(),
            failures: rows.iter().filter(|r| r.outcome.is_failure()).count(),
            first_correct_pct: s(|r| r.first_correct_pct),
            last_incorrect_pct: s(|r| r.last_incorrect_pct),
            top1_pct: s(|r| r.top1_pct),
            top3_pct: s(|r| r.top3_pct),
            questions: s(|r| r.n_questions as f64),
            extra_steps: s(|r| r.extra_steps as f64),
            robot_mistakes: s(|r| r.robot_mistakes as f64),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub rows: Vec<MetricsReport>,
    pub traces: Vec<EpisodeTrace>,
    pub summary: SuiteSummary,
}

/// Runs every experiment, `threads` at a time (0 picks the machine's
/// default). Results keep experiment order.
pub fn run_suite(
    assets: &Assets,
    method: &MethodConfig,
    experiments: &[ExperimentSpec],
    threads: usize,
) -> Result<SuiteReport, HarnessError> {
    if experiments.is_empty() {
        return Err(HarnessError::Config("no experiments to run".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let traces: Vec<EpisodeTrace> =
        pool.install(|| experiments.par_iter().map(|e| run_episode(assets, method, e)).collect::<Result<Vec<_>, _>>())?;
    let rows: Vec<MetricsReport> = traces.iter().map(compute_metrics).collect();
    let summary = SuiteSummary::of(&method.name, &rows);
    Ok(SuiteReport { rows, traces, summary })
}

pub const CSV_HEADER: [&str; 14] = [
    "index",
    "method",
    "true_goal",
    "preferences",
    "first_correct_pct",
    "last_incorrect_pct",
    "top1_pct",
    "top3_pct",
    "n_questions",
    "steps",
    "ground_truth_len",
    "extra_steps",
    "robot_mistakes",
    "outcome",
];

pub fn csv_record(r: &MetricsReport) -> Vec<String> {
    let outcome = serde_json::to_value(r.outcome).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    vec![
        r.index.map(|i| i.to_string()).unwrap_or_default(),
        r.method.clone(),
        r.true_goal.clone(),
        r.preferences.clone(),
        format!("{:.4}", r.first_correct_pct),
        format!("{:.4}", r.last_incorrect_pct),
        format!("{:.4}", r.top1_pct),
        format!("{:.4}", r.top3_pct),
        r.n_questions.to_string(),
        r.steps.to_string(),
        r.ground_truth_len.to_string(),
        r.extra_steps.to_string(),
        r.robot_mistakes.to_string(),
        outcome,
    ]
}

pub fn write_csv<W: Write>(out: W, rows: &[MetricsReport]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(csv_record(r)).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn csv_string(rows: &[MetricsReport]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn summary_json(summaries: &[SuiteSummary]) -> String {
    serde_json::to_string_pretty(summaries).expect("summaries serialize")
}

/// Plain-text table with one row per method.
pub fn table(summaries: &[SuiteSummary]) -> String {
    let mut s = format!(
        "{:<14} {:>5} {:>14} {:>14} {:>14} {:>14} {:>12} {:>12} {:>5}\n",
        "method", "n", "first ok %", "last wrong %", "top-1 %", "top-3 %", "questions", "extra steps", "fail"
    );
    let cell = |x: &Stat, d: usize| format!("{:.d$} ± {:.d$}", x.mean, x.sd, d = d);
    for m in summaries {
        s.push_str(&format!(
            "{:<14} {:>5} {:>14} {:>14} {:>14} {:>14} {:>12} {:>12} {:>5}\n",
            m.method,
            m.episodes,
            cell(&m.first_correct_pct, 1),
            cell(&m.last_incorrect_pct, 1),
            cell(&m.top1_pct, 1),
            cell(&m.top3_pct, 1),
            cell(&m.questions, 2),
            cell(&m.extra_steps, 2),
            m.failures
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub c_max: f64,
    pub questions: f64,
    pub extra_steps: f64,
    pub top1_pct: f64,
}

/// Reruns the suite for each `c_max`.
pub fn sweep(
    assets: &Assets,
    method: &MethodConfig,
    experiments: &[ExperimentSpec],
    c_max: &[f64],
    threads: usize,
) -> Result<Vec<SweepPoint>, HarnessError> {
    c_max
        .iter()
        .map(|&c| {
            let mut m = method.clone();
            m.schedule.c_max = c;
            m.schedule.c_min = m.schedule.c_min.min(c);
            let r = run_suite(assets, &m, experiments, threads)?;
            Ok(SweepPoint {
                c_max: c,
                questions: r.summary.questions.mean,
                extra_steps: r.summary.extra_steps.mean,
                top1_pct: r.summary.top1_pct.mean,
            })
        })
        .collect()
}
