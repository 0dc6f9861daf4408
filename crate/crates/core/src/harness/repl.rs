use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use super::robot::{Robot, RobotMove};
use super::{Assets, HarnessError, MethodConfig};
use crate::bank::Goal;
use crate::domain::{Action, ActionInstance, Agent};
use crate::inquiry::Question;
use crate::trace::{EpisodeTrace, EventKind, Outcome};

#[derive(Debug, Clone)]
pub struct ReplOutcome {
    pub trace: EpisodeTrace,
}

enum Input {
    Line(String),
    Quit,
}

fn read<R: BufRead, W: Write>(input: &mut R, out: &mut W, prompt: &str) -> Result<Input, HarnessError> {
    write!(out, "{prompt}").map_err(io)?;
    out.flush().map_err(io)?;
    let mut line = String::new();
    if input.read_line(&mut line).map_err(io)? == 0 {
        return Ok(Input::Quit);
    }
    let line = line.trim().to_string();
    if line == "quit" || line == "q" {
        Ok(Input::Quit)
    } else {
        Ok(Input::Line(line))
    }
}

fn io(e: std::io::Error) -> HarnessError {
    HarnessError::Io(e.to_string())
}

fn show_belief<W: Write>(out: &mut W, robot: &Robot) -> Result<(), HarnessError> {
    let top: Vec<String> = robot.snapshot().iter().map(|b| format!("{} {:.2}", b.name, b.p)).collect();
    if !top.is_empty() {
        writeln!(out, "  robot thinks: {}", top.join(", ")).map_err(io)?;
    }
    Ok(())
}

fn ask<R: BufRead, W: Write>(input: &mut R, out: &mut W, q: &Question) -> Result<Option<String>, HarnessError> {
    writeln!(out, "robot asks: {}", q.text).map_err(io)?;
    for (i, a) in q.answers.iter().enumerate() {
        writeln!(out, "  {}) {a}", i + 1).map_err(io)?;
    }
    loop {
        let Input::Line(l) = read(input, out, "answer> ")? else {
            return Ok(None);
        };
        let pick = l.parse::<usize>().ok().and_then(|i| i.checked_sub(1)).and_then(|i| q.answers.get(i));
        match pick.or_else(|| q.answers.iter().find(|a| a.eq_ignore_ascii_case(&l))) {
            Some(a) => return Ok(Some(a.clone())),
            None => writeln!(out, "pick one of the listed answers").map_err(io)?,
        }
    }
}

/// Interactive session: the user plays the human, typing an action by
/// number or as `verb(args)`. `quit` or end of input stops early.
pub fn run_repl<R: BufRead, W: Write>(
    assets: &Assets,
    method: &MethodConfig,
    prefs: Vec<String>,
    goal: Option<Goal>,
    mut input: R,
    mut out: W,
) -> Result<ReplOutcome, HarnessError> {
    let domain = &assets.domain;
    let mut robot = Robot::new(assets, method, prefs.clone())?;
    let mut trace = EpisodeTrace::new(&method.name, prefs.clone());
    trace.true_goal = goal.clone();
    trace.ground_truth_len = goal.as_ref().and_then(|g| assets.steps(&g.id)).map_or(0, <[Action]>::len);
    let mut state = domain.initial_state();
    let mut performed: BTreeSet<Action> = BTreeSet::new();
    writeln!(out, "preferences: {}", prefs.join(", ")).map_err(io)?;

    trace.outcome = loop {
        if domain.is_terminal(&state) {
            writeln!(out, "served.").map_err(io)?;
            break match &goal {
                Some(g) if assets.remaining(&g.id, &state, &performed) > 0 => Outcome::Incomplete,
                _ => Outcome::Completed,
            };
        }
        match state.turn {
            Agent::Human => {
                let legal = domain.legal_actions(&state, Agent::Human);
                let listing: Vec<String> =
                    legal.iter().enumerate().map(|(i, a)| format!("{}) {}", i + 1, a.action)).collect();
                writeln!(out, "your move: {}", listing.join("  ")).map_err(io)?;
                let act = loop {
                    let Input::Line(l) = read(&mut input, &mut out, "> ")? else {
                        break None;
                    };
                    let by_index =
                        l.parse::<usize>().ok().and_then(|i| i.checked_sub(1)).and_then(|i| legal.get(i)).cloned();
                    let by_text = l.parse::<Action>().ok().map(|a| ActionInstance::new(a, Agent::Human));
                    match by_index.or(by_text) {
                        Some(a) if domain.is_legal(&state, &a.action) => break Some(a),
                        _ => writeln!(out, "not a legal action: {l}").map_err(io)?,
                    }
                };
                let Some(a) = act else {
                    break Outcome::Quit;
                };
                state = domain.step(&state, &a)?;
                robot.observe(&a)?;
                performed.insert(a.action.clone());
                trace.push(Agent::Human, EventKind::Action { action: a }, robot.snapshot(), robot.summary().render());
                show_belief(&mut out, &robot)?;
            }
            Agent::Robot => {
                robot.begin_turn()?;
                if let Some(q) = robot.consider_question(trace.events.len())? {
                    let Some(answer) = ask(&mut input, &mut out, &q)? else {
                        break Outcome::Quit;
                    };
                    robot.receive_answer(&q, &answer)?;
                    let kind = EventKind::Question { id: q.id.clone(), text: q.text.clone(), answer };
                    trace.push(Agent::Robot, kind, robot.snapshot(), robot.summary().render());
                }
                match robot.choose(&state)? {
                    RobotMove::Act(a) => {
                        writeln!(out, "robot: {}", a.action.describe()).map_err(io)?;
                        state = domain.step(&state, &a)?;
                        robot.observe(&a)?;
                        performed.insert(a.action.clone());
                        trace.push(
                            Agent::Robot,
                            EventKind::Action { action: a },
                            robot.snapshot(),
                            robot.summary().render(),
                        );
                    }
                    RobotMove::Wait => {
                        writeln!(out, "robot waits").map_err(io)?;
                        state = state.pass_turn();
                        trace.push(Agent::Robot, EventKind::Wait, robot.snapshot(), robot.summary().render());
                    }
                }
                show_belief(&mut out, &robot)?;
            }
        }
    };
    if let Some(g) = &goal {
        trace.remaining_steps = assets.remaining(&g.id, &state, &performed);
    }
    Ok(ReplOutcome { trace })
}
