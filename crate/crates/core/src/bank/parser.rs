use super::{BankError, Goal, GoalBank, GoalEntry, PreferenceMap, RecipeType, TaskNetwork};
use crate::domain::Action;

const HEADER: &str = "goalbank v1";

struct Draft {
    line: usize,
    id: String,
    name: Option<String>,
    recipe_type: Option<RecipeType>,
    main: Option<String>,
    stages: Vec<Vec<Vec<Action>>>,
}

fn err(line: usize, msg: impl Into<String>) -> BankError {
    BankError::Parse { line, msg: msg.into() }
}

fn parse_stage(line: usize, text: &str) -> Result<Vec<Vec<Action>>, BankError> {
    text.split('|')
        .map(|lane| {
            lane.split('>').map(|step| step.trim().parse::<Action>().map_err(|e| err(line, e.to_string()))).collect()
        })
        .collect()
}

fn finish(d: Draft) -> Result<GoalEntry, BankError> {
    let missing = |f: &str| err(d.line, format!("goal `{}` has no `{f}`", d.id));
    let name = d.name.clone().ok_or_else(|| missing("name"))?;
    let recipe_type = d.recipe_type.ok_or_else(|| missing("type"))?;
    let main = d.main.clone().ok_or_else(|| missing("main"))?;
    if d.stages.is_empty() {
        return Err(missing("stage"));
    }
    let network = TaskNetwork::from_stages(d.stages).map_err(|e| match e {
        BankError::DuplicateStep(s) => {
            BankError::InvalidGoal { goal: d.id.clone(), msg: format!("step `{s}` appears twice") }
        }
        other => other,
    })?;
    Ok(GoalEntry { goal: Goal { id: d.id, name, recipe_type }, main_ingredient: main, network })
}

/// Parses the line-oriented goal bank format: `goal <id>` blocks with
/// `name:`, `type:`, `main:` and `stage:` fields closed by `end`, followed
/// by `preference <name>: goal, goal, ...` lines.
pub fn parse_goal_bank(src: &str) -> Result<GoalBank, BankError> {
    let mut lines = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, other)) => return Err(err(n, format!("expected `{HEADER}`, found `{other}`"))),
        None => return Err(err(1, "empty goal bank")),
    }
    let mut entries: Vec<GoalEntry> = Vec::new();
    let mut prefs = PreferenceMap::new();
    let mut draft: Option<Draft> = None;
    for (n, line) in lines {
        if let Some(d) = draft.as_mut() {
            if line == "end" {
                let entry = finish(draft.take().unwrap())?;
                if entries.iter().any(|e| e.goal.id == entry.goal.id) {
                    return Err(BankError::DuplicateGoal(entry.goal.id));
                }
                entries.push(entry);
                continue;
            }
            let (key, value) =
                line.split_once(':').ok_or_else(|| err(n, format!("expected `key: value`, found `{line}`")))?;
            let value = value.trim();
            match key.trim() {
                "name" => d.name = Some(value.to_string()),
                "type" => d.recipe_type = Some(value.parse().map_err(|m: String| err(n, m))?),
                "main" => d.main = Some(value.to_string()),
                "stage" => d.stages.push(parse_stage(n, value)?),
                other => return Err(err(n, format!("unknown field `{other}`"))),
            }
        } else if let Some(id) = line.strip_prefix("goal ") {
            draft = Some(Draft {
                line: n,
                id: id.trim().to_string(),
                name: None,
                recipe_type: None,
                main: None,
                stages: Vec::new(),
            });
        } else if let Some(rest) = line.strip_prefix("preference ") {
            let (name, goals) = rest.split_once(':').ok_or_else(|| err(n, "expected `preference <name>: goals`"))?;
            let goals: Vec<String> =
                goals.split(',').map(str::trim).filter(|g| !g.is_empty()).map(str::to_string).collect();
            for g in &goals {
                if !entries.iter().any(|e| &e.goal.id == g) {
                    return Err(err(n, format!("preference `{}` names unknown goal `{g}`", name.trim())));
                }
            }
            prefs.insert(name.trim(), goals).map_err(|e| err(n, e.to_string()))?;
        } else {
            return Err(err(n, format!("unexpected line `{line}`")));
        }
    }
    if let Some(d) = draft {
        return Err(err(d.line, format!("goal `{}` is missing `end`", d.id)));
    }
    Ok(GoalBank { entries, preferences: prefs })
}
