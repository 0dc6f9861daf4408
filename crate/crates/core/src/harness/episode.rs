use std::collections::BTreeSet;

use super::robot::{Robot, RobotMove};
use super::{Assets, HarnessError, MethodConfig};
use crate::bank::ExperimentSpec;
use crate::domain::{Action, Agent};
use crate::human::{HumanError, HumanMove, SimHuman};
use crate::trace::{EpisodeTrace, EventKind, Outcome};

/// Episodes stop after this many action steps per ground-truth step.
pub const STEP_CAP_FACTOR: usize = 3;

/// Runs one experiment to completion. Failures end the episode and are
/// recorded in the trace; only setup problems are errors.
pub fn run_episode(assets: &Assets, method: &MethodConfig, exp: &ExperimentSpec) -> Result<EpisodeTrace, HarnessError> {
    let goal =
        assets.goal(&exp.true_goal).ok_or_else(|| HarnessError::Config(format!("unknown goal `{}`", exp.true_goal)))?;
    let prefs = vec![exp.preferences.0.clone(), exp.preferences.1.clone()];
    let mut human = SimHuman::from_policy_bank(goal.clone(), &assets.policy, prefs.clone(), exp.seed)?;
    if method.answer_noise > 0.0 {
        human = human.with_answer_noise(method.answer_noise, exp.seed.rotate_left(17));
    }
    let mut robot = Robot::new(assets, method, prefs.clone())?;
    let mut trace = EpisodeTrace::new(&method.name, prefs);
    trace.experiment = Some(exp.clone());
    trace.true_goal = Some(goal.clone());
    trace.ground_truth_len = human.script().len();

    let domain = &assets.domain;
    let cap = STEP_CAP_FACTOR * trace.ground_truth_len;
    let turn_guard = 4 * cap + 8;
    let mut state = domain.initial_state();
    let mut performed: BTreeSet<Action> = BTreeSet::new();
    let mut turns = 0;

    trace.outcome = loop {
        if domain.is_terminal(&state) {
            break if assets.remaining(&goal.id, &state, &performed) == 0 {
                Outcome::Completed
            } else {
                Outcome::Incomplete
            };
        }
        if trace.action_count() >= cap || turns >= turn_guard {
            break Outcome::StepCap;
        }
        turns += 1;
        match state.turn {
            Agent::Human => match human.next_action(domain, &state) {
                Ok(HumanMove::Act(a)) => {
                    state = domain.step(&state, &a)?;
                    human.observe(&a.action);
                    robot.observe(&a)?;
                    performed.insert(a.action.clone());
                    let s = robot.summary().render();
                    trace.push(Agent::Human, EventKind::Action { action: a }, robot.snapshot(), s);
                }
                Ok(HumanMove::Done) => {
                    trace.note = Some("script finished before serving".into());
                    break Outcome::Stuck;
                }
                Err(HumanError::Stuck { step, reason }) => {
                    trace.note = Some(format!("human stuck at {step}: {reason}"));
                    break Outcome::Stuck;
                }
                Err(e) => return Err(e.into()),
            },
            Agent::Robot => {
                robot.begin_turn()?;
                if let Some(q) = robot.consider_question(trace.events.len())? {
                    let q = robot.answerable(&q, &goal)?;
                    let answer = human.answer(&q)?;
                    robot.receive_answer(&q, &answer)?;
                    let s = robot.summary().render();
                    let kind = EventKind::Question { id: q.id.clone(), text: q.text.clone(), answer };
                    trace.push(Agent::Robot, kind, robot.snapshot(), s);
                }
                match robot.choose(&state)? {
                    RobotMove::Act(a) => {
                        let pending = assets.pending(&goal.id, &state, &performed);
                        if !pending.contains(&a.action) {
                            trace.robot_mistakes += 1;
                        }
                        state = domain.step(&state, &a)?;
                        human.observe(&a.action);
                        robot.observe(&a)?;
                        performed.insert(a.action.clone());
                        let s = robot.summary().render();
                        trace.push(Agent::Robot, EventKind::Action { action: a }, robot.snapshot(), s);
                    }
                    RobotMove::Wait => {
                        state = state.pass_turn();
                        let s = robot.summary().render();
                        trace.push(Agent::Robot, EventKind::Wait, robot.snapshot(), s);
                    }
                }
            }
        }
    };
    trace.remaining_steps = assets.remaining(&goal.id, &state, &performed);
    Ok(trace)
}
