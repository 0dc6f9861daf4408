mod common;

use std::cell::RefCell;
use std::io::{BufReader, Cursor, Read, Write};
use std::rc::Rc;

use goalplan::attractor::MockJudge;
use goalplan::bank::{generate_experiments, ExperimentSpec, PreferenceMap};
use goalplan::bundled;
use goalplan::domain::Action;
use goalplan::harness::{
    compute_metrics, csv_string, run_episode, run_repl, run_suite, summary_json, write_csv, AssetConfig, Assets,
    MethodConfig, CSV_HEADER,
};
use goalplan::inquiry::parse_templates;
use goalplan::trace::{EventKind, Outcome};

fn preset(name: &str) -> MethodConfig {
    MethodConfig::preset(name).unwrap()
}

#[test]
fn passive_robot_leaves_the_human_alone() {
    let assets = Assets::bundled().unwrap();
    let exps = generate_experiments(&assets.bank.preferences, 7);
    let report = run_suite(&assets, &preset("passive"), &exps, 0).unwrap();
    assert_eq!(report.rows.len(), 967);
    assert_eq!(report.summary.extra_steps.mean, 0.0);
    assert_eq!(report.summary.failures, 0);
    for (t, r) in report.traces.iter().zip(&report.rows) {
        assert_eq!(t.outcome, Outcome::Completed);
        assert_eq!(t.action_count(), t.ground_truth_len);
        assert!((9..=31).contains(&r.steps), "{} steps", r.steps);
        assert!(t.actions().all(|a| a.agent == goalplan::domain::Agent::Human));
    }
}

#[test]
fn episodes_are_deterministic() {
    let assets = Assets::bundled().unwrap();
    let exps = generate_experiments(&assets.bank.preferences, 3);
    for name in ["kg-pb-q", "open"] {
        let m = preset(name);
        for e in exps.iter().step_by(97) {
            let a = run_episode(&assets, &m, e).unwrap();
            let b = run_episode(&assets, &m, e).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        }
    }
}

fn two_oatmeals() -> Assets {
    let mut bank = bundled::goal_bank();
    bank.entries.retain(|e| e.goal.id == "berry_oatmeal" || e.goal.id == "banana_oatmeal");
    let mut prefs = PreferenceMap::new();
    prefs.insert("warm", vec!["berry_oatmeal".into(), "banana_oatmeal".into()]).unwrap();
    prefs.insert("sweet", vec!["berry_oatmeal".into(), "banana_oatmeal".into()]).unwrap();
    bank.preferences = prefs;
    let templates = parse_templates(bundled::QUESTIONS).unwrap();
    Assets::build(bundled::domain(), bank, templates, vec![], Box::new(MockJudge::bundled()), AssetConfig::default())
        .unwrap()
}

#[test]
fn toy_bank_needs_one_question() {
    let assets = two_oatmeals();
    for goal in ["berry_oatmeal", "banana_oatmeal"] {
        let exp =
            ExperimentSpec { index: 0, preferences: ("warm".into(), "sweet".into()), true_goal: goal.into(), seed: 11 };
        let t = run_episode(&assets, &preset("kg-pb-q"), &exp).unwrap();
        assert_eq!(t.question_count(), 1, "{goal}");
        assert_eq!(t.outcome, Outcome::Completed);
        assert_eq!(common::converged_after_question(&t), Some(true));
        let m = compute_metrics(&t);
        assert_eq!(m.extra_steps, 0);
    }
}

#[test]
fn csv_and_summary_outputs() {
    let assets = Assets::bundled().unwrap();
    let exps: Vec<_> = generate_experiments(&assets.bank.preferences, 7).into_iter().take(12).collect();
    let report = run_suite(&assets, &preset("kg-pb"), &exps, 2).unwrap();
    let text = csv_string(&report.rows);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.count(), 12);
    let mut buf = Vec::new();
    write_csv(&mut buf, &report.rows).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), text);
    let again = run_suite(&assets, &preset("kg-pb"), &exps, 1).unwrap();
    assert_eq!(csv_string(&again.rows), text);

    let json: serde_json::Value = serde_json::from_str(&summary_json(std::slice::from_ref(&report.summary))).unwrap();
    assert_eq!(json[0]["method"], "kg-pb");
    assert_eq!(json[0]["episodes"], 12);
    assert!(run_suite(&assets, &preset("kg-pb"), &[], 0).is_err());
}

#[test]
fn unknown_goal_is_a_config_error() {
    let assets = Assets::bundled().unwrap();
    let exp =
        ExperimentSpec { index: 0, preferences: ("warm".into(), "sweet".into()), true_goal: "pie".into(), seed: 0 };
    assert!(run_episode(&assets, &preset("kg-pb"), &exp).is_err());
}

fn repl(assets: &Assets, method: &str, input: &str) -> (goalplan::trace::EpisodeTrace, String) {
    let goal = assets.goal("berry_oatmeal");
    let mut out = Vec::new();
    let prefs = vec!["warm".to_string(), "sweet".to_string()];
    let r = run_repl(assets, &preset(method), prefs, goal, Cursor::new(input.to_string()), &mut out).unwrap();
    (r.trace, String::from_utf8(out).unwrap())
}

/// Stands in for a person at the terminal: reads what the session printed
/// and types the next step of `script` that is on offer, or the first
/// answer to a question.
struct Player {
    shown: Rc<RefCell<Vec<u8>>>,
    script: Vec<Action>,
    typed: Vec<Action>,
    questions: usize,
    pending: Vec<u8>,
}

impl Read for Player {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        if self.pending.is_empty() {
            let shown = String::from_utf8_lossy(&self.shown.borrow()).to_string();
            let line = if shown.ends_with("answer> ") {
                self.questions += 1;
                "1".to_string()
            } else {
                let menu =
                    shown.rsplit("your move: ").next().unwrap_or("").lines().next().unwrap_or("").to_string() + "  ";
                match self.script.iter().find(|a| !self.typed.contains(a) && menu.contains(&format!(") {a}  "))) {
                    Some(a) => {
                        self.typed.push(a.clone());
                        a.to_string()
                    }
                    None => "quit".to_string(),
                }
            };
            self.pending = format!("{line}\n").into_bytes();
        }
        let n = self.pending.len().min(buf.len());
        buf[..n].copy_from_slice(&self.pending[..n]);
        self.pending.drain(..n);
        Ok(n)
    }
}

struct Screen(Rc<RefCell<Vec<u8>>>);

impl Write for Screen {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.borrow_mut().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[test]
fn repl_plays_a_whole_oatmeal() {
    let assets = Assets::bundled().unwrap();
    let shown = Rc::new(RefCell::new(Vec::new()));
    let script = assets.policy.sequences("berry_oatmeal").unwrap()[0].clone();
    let player = Player { shown: shown.clone(), script, typed: vec![], questions: 0, pending: vec![] };
    let mut player = BufReader::new(player);
    let prefs = vec!["warm".to_string(), "sweet".to_string()];
    let goal = assets.goal("berry_oatmeal");
    let r = run_repl(&assets, &preset("kg-pb-q"), prefs, goal, &mut player, Screen(shown.clone())).unwrap();
    let trace = r.trace;
    let out = String::from_utf8(shown.borrow().clone()).unwrap();
    assert_eq!(trace.outcome, Outcome::Completed, "{out}");
    assert_eq!(player.get_ref().questions, trace.question_count());
    assert!(trace.question_count() >= 1);
    assert!(out.contains("robot asks:"));
    assert!(out.contains("served."));
    assert!(out.contains("robot thinks:"));
    assert!(trace.events.iter().any(|e| matches!(e.kind, EventKind::Action { .. })));
}

#[test]
fn repl_reprompts_on_illegal_input_and_quits() {
    let assets = Assets::bundled().unwrap();
    let (trace, out) = repl(&assets, "passive", "pour(oats, pot)\nbanana\n999\nquit\n");
    assert_eq!(out.matches("not a legal action").count(), 3);
    assert_eq!(trace.outcome, Outcome::Quit);
    assert!(trace.events.is_empty());

    let (trace, out) = repl(&assets, "passive", "collect_water\n");
    assert_eq!(trace.outcome, Outcome::Quit);
    assert_eq!(trace.action_count(), 1);
    assert!(out.contains("robot waits"));
}
