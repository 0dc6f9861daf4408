//! End-to-end acceptance checks. Each criterion prints one line; the test
//! fails if any of them fails.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use goalplan::attractor::{AttractorField, FieldSource, MockJudge};
use goalplan::bank::{build_policy_bank, generate_experiments, ExperimentSpec, Goal};
use goalplan::belief::{
    classify_sequence, entropy, update_from_action, BigramClassifier, GoalBelief, GoalProposer, InteractionSummary,
    ProposerConfig,
};
use goalplan::domain::Action;
use goalplan::harness::{csv_string, run_suite, sweep, Assets, Inference, MethodConfig, SuiteReport};
use goalplan::inquiry::{apply_answer, question_value, select_question};
use goalplan::planner::{branches, expand, select_action, PlannerConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;

const MAX_EXTRA_STEPS: f64 = 0.5;
const MIN_TOP1_PCT: f64 = 85.0;
const MAX_RUNTIME_SECS: f64 = 600.0;
const QUESTION_BAND: (f64, f64) = (0.5, 2.5);
const SWEEP_C_MAX: [f64; 3] = [0.5, 2.0, 8.0];
const ORACLE_TOL: f64 = 1e-9;
const INQUIRY_INSTANCES: usize = 500;
const PLANNER_TREES: usize = 200;
const BELIEF_OPS: usize = 10_000;
const MIN_CLASSIFIER_ACC: f64 = 0.85;
const MIN_CONVERGED: f64 = 0.95;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn preset(name: &str) -> MethodConfig {
    MethodConfig::preset(name).unwrap()
}

fn suite(assets: &Assets, m: &MethodConfig, exps: &[ExperimentSpec], threads: usize) -> SuiteReport {
    run_suite(assets, m, exps, threads).unwrap()
}

fn closed_case(report: &SuiteReport, secs: f64) -> Verdict {
    let s = &report.summary;
    let pass = s.extra_steps.mean <= MAX_EXTRA_STEPS && s.top1_pct.mean >= MIN_TOP1_PCT && secs <= MAX_RUNTIME_SECS;
    verdict(
        pass,
        format!(
            "{} episodes, extra steps {:.3} (<= {MAX_EXTRA_STEPS}), top-1 {:.2}% (>= {MIN_TOP1_PCT}), {secs:.1}s on one thread",
            s.episodes, s.extra_steps.mean, s.top1_pct.mean
        ),
    )
}

fn question_economy(assets: &Assets, report: &SuiteReport, exps: &[ExperimentSpec]) -> Verdict {
    let q = report.summary.questions;
    let points = sweep(assets, &preset("kg-pb-q"), exps, &SWEEP_C_MAX, 0).unwrap();
    let counts: Vec<f64> = points.iter().map(|p| p.questions).collect();
    let monotone = counts.windows(2).all(|w| w[1] <= w[0]);
    let in_band = q.mean >= QUESTION_BAND.0 && q.mean <= QUESTION_BAND.1;
    let sweep: Vec<String> = points.iter().map(|p| format!("{}:{:.3}", p.c_max, p.questions)).collect();
    verdict(
        in_band && monotone,
        format!("mean questions {:.3} +/- {:.3} in {QUESTION_BAND:?}, sweep {}", q.mean, q.sd, sweep.join(" ")),
    )
}

fn ordering(assets: &Assets, with_q: &SuiteReport, exps: &[ExperimentSpec]) -> Verdict {
    let mut extra = vec![("kg-pb-q", with_q.summary.extra_steps.mean)];
    for name in ["kg-pb", "kg", "actions-only"] {
        extra.push((name, suite(assets, &preset(name), exps, 0).summary.extra_steps.mean));
    }
    let pass = extra.windows(2).all(|w| w[0].1 <= w[1].1);
    let shown: Vec<String> = extra.iter().map(|(n, e)| format!("{n} {e:.3}")).collect();
    verdict(pass, shown.join(" <= "))
}

fn inquiry_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut wrong_pick = 0;
    let summary = InteractionSummary::new(Vec::new());
    for _ in 0..INQUIRY_INSTANCES {
        let inst = common::random_instance(&mut rng);
        let belief = inst.belief();
        let qs = inst.all_questions();
        for (q, rows) in qs.iter().zip(&inst.questions) {
            let v = question_value(q, &belief).unwrap();
            worst = worst.max((v - common::question_value(&inst.prior, rows)).abs());
            let a = rng.gen_range(0..q.answers.len());
            let (post, _) = apply_answer(&belief, &summary, q, &q.answers[a]).unwrap();
            let lik: Vec<f64> = rows.iter().map(|r| r[a]).collect();
            for (x, y) in post.probs().iter().zip(common::bayes(&inst.prior, &lik)) {
                worst = worst.max((x - y).abs());
            }
        }
        let (best, value) = inst.best();
        let (q, v) = select_question(&qs, &belief).unwrap().unwrap();
        worst = worst.max((v - value).abs());
        if q.id != qs[best].id {
            wrong_pick += 1;
        }
    }
    verdict(
        worst <= ORACLE_TOL && wrong_pick == 0,
        format!("{INQUIRY_INSTANCES} instances, max deviation {worst:.2e}, {wrong_pick} differing picks"),
    )
}

fn planner_oracle(assets: &Assets) -> Verdict {
    let domain = &assets.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut nodes = 0;
    for i in 0..PLANNER_TREES {
        let steps = rng.gen_range(0..12);
        let root = common::random_state(domain, &mut rng, steps);
        let scorer = common::RandomScorer { seed: i as u64, max_candidates: rng.gen_range(1..=5) };
        let cfg = PlannerConfig {
            horizon: rng.gen_range(1..=3),
            branch_cap: [None, Some(1), Some(2), Some(3), Some(4)].choose(&mut rng).copied().unwrap(),
            include_human_terms: rng.gen_bool(0.5),
            ..PlannerConfig::default()
        };
        let tree = expand(&root, domain, &scorer, &cfg).unwrap();
        nodes += tree.size();
        let oracle =
            common::exhaustive_best(domain, &scorer, &root, cfg.horizon, cfg.branch_cap, cfg.include_human_terms);
        let ok = match (select_action(&tree), oracle) {
            (Ok(a), Some((path, cost))) => {
                let best = branches(&tree).into_iter().map(|(_, c)| c).fold(f64::INFINITY, f64::min);
                a == path[0] && best == cost
            }
            (Err(_), None) => true,
            _ => false,
        };
        if !ok {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("{PLANNER_TREES} trees ({nodes} nodes), {mismatches} mismatches"))
}

fn check_belief(b: &GoalBelief) -> bool {
    let sum: f64 = b.probs().iter().sum();
    let h = entropy(b);
    (sum - 1.0).abs() <= ORACLE_TOL
        && b.probs().iter().all(|p| *p >= 0.0 && p.is_finite())
        && h >= 0.0
        && h <= (b.len() as f64).log2() + ORACLE_TOL
}

fn belief_hygiene(assets: &Assets) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let judge = MockJudge::bundled();
    let actions: Vec<Action> = assets.domain.actions().cloned().collect();
    let prefs = assets.bank.preferences.preferences().to_vec();
    let bank_goals = assets.bank.goals();
    let mut proposer = GoalProposer::new(assets.vocabulary.clone(), ProposerConfig::default());
    let mut belief = GoalBelief::uniform(bank_goals.clone()).unwrap();
    let mut summary = InteractionSummary::new(vec![prefs[0].clone()]);
    let mut broken = 0;
    let mut counts = [0usize; 4];
    for _ in 0..BELIEF_OPS {
        let op = rng.gen_range(0..4);
        counts[op] += 1;
        belief = match op {
            0 => {
                let a = actions.choose(&mut rng).unwrap().clone();
                let fields: BTreeMap<_, _> = belief
                    .goals()
                    .iter()
                    .map(|g| {
                        let mut scores = BTreeMap::new();
                        if rng.gen_bool(0.7) {
                            scores.insert(a.clone(), if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) });
                        }
                        (g.id.clone(), AttractorField::new(FieldSource::Goal(g.id.clone()), scores).unwrap())
                    })
                    .collect();
                let eps = *[1e-3, 1e-2, 0.1].choose(&mut rng).unwrap();
                update_from_action(&belief, &a, &fields, eps).unwrap()
            }
            1 => {
                if rng.gen_bool(0.3) {
                    summary = InteractionSummary::new(prefs.choose_multiple(&mut rng, 2).cloned().collect());
                }
                let fresh = rng.gen_bool(0.1);
                proposer.propose(&summary, &judge, (!fresh).then_some(&belief)).unwrap()
            }
            2 => {
                let inst = common::random_instance(&mut rng);
                let rows = &inst.questions[0];
                let m = rows[0].len();
                let lik: BTreeMap<_, _> =
                    belief.goals().iter().map(|g| (g.id.clone(), rows[rng.gen_range(0..rows.len())].clone())).collect();
                let answers = (0..m).map(|i| format!("answer {i}")).collect();
                let q = goalplan::inquiry::Question::new(
                    "q",
                    "which?",
                    goalplan::inquiry::QuestionCategory::Generated,
                    answers,
                    lik,
                )
                .unwrap();
                let a = format!("answer {}", rng.gen_range(0..m));
                let (b, s) = apply_answer(&belief, &summary, &q, &a).unwrap();
                summary = s;
                b
            }
            _ => {
                let goals: Vec<Goal> = if rng.gen_bool(0.5) { bank_goals.clone() } else { belief.goals().to_vec() };
                let logw: Vec<f64> = goals.iter().map(|_| rng.gen_range(-800.0..800.0)).collect();
                GoalBelief::from_log_weights(goals, &logw).unwrap()
            }
        };
        if !check_belief(&belief) {
            broken += 1;
        }
    }
    verdict(
        broken == 0,
        format!(
            "{BELIEF_OPS} operations ({} updates, {} proposals, {} answers, {} log resets), {broken} broken",
            counts[0], counts[1], counts[2], counts[3]
        ),
    )
}

fn classifier_band(assets: &Assets) -> Verdict {
    let fresh = build_policy_bank(&assets.bank, &assets.domain, Some(250), 1234).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for g in assets.bank.goals() {
        let mut seqs = fresh.sequences(&g.id).unwrap().to_vec();
        seqs.shuffle(&mut rng);
        let held = seqs.len() / 5;
        test.extend(seqs.drain(..held).map(|s| (g.id.clone(), s)));
        train.push((g, seqs));
    }
    let clf = BigramClassifier::train_on(train).unwrap();
    let right = test.iter().filter(|(g, s)| classify_sequence(s, &clf).unwrap().argmax().id == *g).count();
    let acc = right as f64 / test.len() as f64;
    verdict(acc >= MIN_CLASSIFIER_ACC, format!("{right}/{} held-out linearizations, {:.2}%", test.len(), acc * 100.0))
}

fn convergence(assets: &Assets, exps: &[ExperimentSpec]) -> Verdict {
    let mut m = preset("kg-pb-q");
    m.name = "kg-pb-q-exact".into();
    m.inference = Inference::Fields;
    let report = suite(assets, &m, exps, 0);
    let flags: Vec<bool> = report.traces.iter().filter_map(common::converged_after_question).collect();
    let good = flags.iter().filter(|f| **f).count();
    let frac = good as f64 / flags.len().max(1) as f64;
    let asked = report.traces.iter().filter(|t| t.question_count() > 0).count();
    verdict(
        !flags.is_empty() && frac >= MIN_CONVERGED,
        format!(
            "{good}/{} episodes keep the right top-1 after the first informative answer, {:.2}% ({asked} asked at all)",
            flags.len(),
            frac * 100.0
        ),
    )
}

#[test]
fn acceptance() {
    let assets = Assets::bundled().unwrap();
    let exps = generate_experiments(&assets.bank.preferences, SEED);
    let method = preset("kg-pb-q");

    let start = Instant::now();
    let first = suite(&assets, &method, &exps, 1);
    let secs = start.elapsed().as_secs_f64();
    let second = suite(&assets, &method, &exps, 0);
    let (a, b) = (csv_string(&first.rows), csv_string(&second.rows));

    let results = [
        closed_case(&first, secs),
        question_economy(&assets, &first, &exps),
        ordering(&assets, &first, &exps),
        inquiry_oracle(),
        planner_oracle(&assets),
        belief_hygiene(&assets),
        classifier_band(&assets),
        convergence(&assets, &exps),
        verdict(a == b, format!("{} csv bytes, one thread vs pool, identical: {}", a.len(), a == b)),
    ];

    let mut out = std::io::stdout().lock();
    for (i, r) in results.iter().enumerate() {
        writeln!(out, "criterion {}: {} {}", i + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail).unwrap();
    }
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.pass).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
