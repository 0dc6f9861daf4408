use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{InquiryError, Question, QuestionCategory};
use crate::attractor::{Judge, JudgeError};
use crate::bank::{Goal, GoalBank, GoalId, RecipeType};
use crate::belief::GoalBelief;
use crate::domain::Id;

/// Catch-all answer for the main-ingredient question.
pub const SOMETHING_ELSE: &str = "something else";

/// Goals below this probability do not shape dynamic questions.
pub const PLAUSIBLE_P: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Attribute {
    RecipeType,
    Temperature,
    Appliance,
    Main,
    Ingredient,
}

impl Attribute {
    fn from_name(s: &str) -> Option<Attribute> {
        Some(match s {
            "recipe_type" => Attribute::RecipeType,
            "temperature" => Attribute::Temperature,
            "appliance" => Attribute::Appliance,
            "main" => Attribute::Main,
            "ingredient" => Attribute::Ingredient,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::RecipeType => "recipe_type",
            Attribute::Temperature => "temperature",
            Attribute::Appliance => "appliance",
            Attribute::Main => "main",
            Attribute::Ingredient => "ingredient",
        }
    }

    fn category(self) -> QuestionCategory {
        match self {
            Attribute::RecipeType | Attribute::Temperature => QuestionCategory::Preference,
            Attribute::Appliance => QuestionCategory::Appliance,
            Attribute::Main | Attribute::Ingredient => QuestionCategory::Ingredient,
        }
    }

    /// Whether the answer set is fixed by the template.
    pub fn is_static(self) -> bool {
        !matches!(self, Attribute::Main)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub attribute: Attribute,
    pub text: String,
    pub answers: Vec<String>,
}

/// Parses a `questions v1` file: `attribute NAME | phrasing | a, b, ...`.
pub fn parse_templates(src: &str) -> Result<Vec<Template>, InquiryError> {
    let err = |line: usize, msg: &str| InquiryError::Template { line, msg: msg.to_string() };
    let mut lines =
        src.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, "questions v1")) => {}
        Some((n, _)) => return Err(err(n, "expected header `questions v1`")),
        None => return Err(err(1, "empty file")),
    }
    let mut out: Vec<Template> = Vec::new();
    for (n, line) in lines {
        let rest = line.strip_prefix("attribute ").ok_or_else(|| err(n, "expected `attribute`"))?;
        let parts: Vec<&str> = rest.split('|').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(err(n, "expected `name | phrasing | answers`"));
        }
        let attribute =
            Attribute::from_name(parts[0]).ok_or_else(|| err(n, &format!("unknown attribute `{}`", parts[0])))?;
        if out.iter().any(|t| t.attribute == attribute) {
            return Err(err(n, "attribute listed twice"));
        }
        if parts[1].is_empty() {
            return Err(err(n, "missing phrasing"));
        }
        let answers: Vec<String> =
            parts[2].split(',').map(str::trim).filter(|a| !a.is_empty()).map(String::from).collect();
        if attribute.is_static() && answers.len() < 2 {
            return Err(err(n, "needs at least two answers"));
        }
        if !attribute.is_static() && !answers.is_empty() {
            return Err(err(n, "answers are generated for this attribute"));
        }
        if attribute == Attribute::Ingredient && !parts[1].contains("{item}") {
            return Err(err(n, "phrasing needs an {item} slot"));
        }
        out.push(Template { attribute, text: parts[1].to_string(), answers });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct Profile {
    recipe_type: RecipeType,
    temperature: &'static str,
    appliance: &'static str,
    main: Id,
    ingredients: BTreeSet<Id>,
}

fn display_item(id: &str) -> String {
    id.replace('_', " ")
}

/// Closed-case questions built from goal-bank attributes. Affinity is 1
/// for the goal's own answer; rows are `affinity + eps`, normalized.
#[derive(Debug, Clone)]
pub struct BankQuestionGenerator {
    templates: Vec<Template>,
    profiles: BTreeMap<GoalId, Profile>,
    eps: f64,
}

impl BankQuestionGenerator {
    pub const DEFAULT_EPS: f64 = 0.05;

    pub fn new(templates: Vec<Template>, bank: &GoalBank, eps: f64) -> Self {
        let profiles = bank
            .goals()
            .into_iter()
            .map(|g| {
                let e = bank.get(&g.id).expect("goal from bank");
                let app = e.appliances();
                let profile = Profile {
                    recipe_type: g.recipe_type,
                    temperature: if app.contains("stove") { "warm" } else { "chilled" },
                    appliance: if app.contains("blender") {
                        "blender"
                    } else if app.contains("stove") {
                        "stove"
                    } else {
                        "none"
                    },
                    main: e.main_ingredient.clone(),
                    ingredients: e.ingredients(),
                };
                (g.id, profile)
            })
            .collect();
        BankQuestionGenerator { templates, profiles, eps }
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    fn indicator(&self, answers: &[String], pick: impl Fn(&Profile) -> String) -> BTreeMap<GoalId, Vec<f64>> {
        self.profiles
            .iter()
            .map(|(g, p)| {
                let own = pick(p);
                let row = answers.iter().map(|a| if a.eq_ignore_ascii_case(&own) { 1.0 } else { 0.0 }).collect();
                (g.clone(), row)
            })
            .collect()
    }

    /// Candidate questions for the current belief.
    pub fn generate(&self, belief: &GoalBelief) -> Result<Vec<Question>, InquiryError> {
        let plausible: Vec<&Profile> =
            belief.iter().filter(|(_, p)| *p >= PLAUSIBLE_P).filter_map(|(g, _)| self.profiles.get(&g.id)).collect();
        let mut out = Vec::new();
        for t in &self.templates {
            let id = t.attribute.name();
            let cat = t.attribute.category();
            match t.attribute {
                Attribute::RecipeType => {
                    let aff = self.indicator(&t.answers, |p| p.recipe_type.to_string());
                    out.push(Question::from_affinity(id, &t.text, cat, t.answers.clone(), aff, self.eps)?);
                }
                Attribute::Temperature => {
                    let aff = self.indicator(&t.answers, |p| p.temperature.to_string());
                    out.push(Question::from_affinity(id, &t.text, cat, t.answers.clone(), aff, self.eps)?);
                }
                Attribute::Appliance => {
                    let aff = self.indicator(&t.answers, |p| p.appliance.to_string());
                    out.push(Question::from_affinity(id, &t.text, cat, t.answers.clone(), aff, self.eps)?);
                }
                Attribute::Main => {
                    let mains: BTreeSet<String> = plausible.iter().map(|p| display_item(&p.main)).collect();
                    if mains.len() < 2 {
                        continue;
                    }
                    let mut answers: Vec<String> = mains.into_iter().collect();
                    answers.push(SOMETHING_ELSE.to_string());
                    let aff = self.indicator(&answers, |p| {
                        let m = display_item(&p.main);
                        if answers.contains(&m) {
                            m
                        } else {
                            SOMETHING_ELSE.to_string()
                        }
                    });
                    out.push(Question::from_affinity(id, &t.text, cat, answers, aff, self.eps)?);
                }
                Attribute::Ingredient => {
                    let all: BTreeSet<&Id> = plausible.iter().flat_map(|p| p.ingredients.iter()).collect();
                    for item in all {
                        let users = plausible.iter().filter(|p| p.ingredients.contains(item)).count();
                        if users == plausible.len() {
                            continue;
                        }
                        let (yes, no) = (&t.answers[0], &t.answers[1]);
                        let aff = self.indicator(&t.answers, |p| {
                            if p.ingredients.contains(item) {
                                yes.clone()
                            } else {
                                no.clone()
                            }
                        });
                        let text = t.text.replace("{item}", &display_item(item));
                        out.push(Question::from_affinity(
                            &format!("{id}:{item}"),
                            &text,
                            cat,
                            t.answers.clone(),
                            aff,
                            self.eps,
                        )?);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Open-case questions: the judge scores each (goal, answer) pair and rows
/// are normalized. Only templates with fixed answers are used.
#[derive(Clone)]
pub struct JudgeQuestionGenerator {
    templates: Vec<Template>,
    judge: Arc<dyn Judge>,
    eps: f64,
}

impl JudgeQuestionGenerator {
    pub fn new(templates: Vec<Template>, judge: Arc<dyn Judge>, eps: f64) -> Self {
        let templates =
            templates.into_iter().filter(|t| t.attribute.is_static() && t.attribute != Attribute::Ingredient).collect();
        JudgeQuestionGenerator { templates, judge, eps }
    }

    fn affinity(&self, t: &Template, goal: &Goal) -> Result<Vec<f64>, InquiryError> {
        let scores = self.judge.score(&goal.name, &t.answers, &t.text)?;
        let row = t
            .answers
            .iter()
            .map(|a| match scores.get(a) {
                Some(s) if s.is_finite() => Ok(s.clamp(0.0, 1.0)),
                _ => Err(JudgeError::Malformed(format!("no score for answer `{a}`"))),
            })
            .collect::<Result<Vec<f64>, JudgeError>>()?;
        Ok(row)
    }

    pub fn generate(&self, belief: &GoalBelief) -> Result<Vec<Question>, InquiryError> {
        let mut out = Vec::new();
        for t in &self.templates {
            let mut aff = BTreeMap::new();
            for g in belief.goals() {
                aff.insert(g.id.clone(), self.affinity(t, g)?);
            }
            out.push(Question::from_affinity(
                t.attribute.name(),
                &t.text,
                t.attribute.category(),
                t.answers.clone(),
                aff,
                self.eps,
            )?);
        }
        Ok(out)
    }

    /// Adds a likelihood row for `goal` when the question lacks one.
    pub fn cover(&self, q: &Question, goal: &Goal) -> Result<Question, InquiryError> {
        if q.covers(&goal.id) {
            return Ok(q.clone());
        }
        let t = self.templates.iter().find(|t| t.attribute.name() == q.id).ok_or_else(|| {
            InquiryError::BadQuestion { id: q.id.clone(), msg: "no template for this question".into() }
        })?;
        let mut aff = BTreeMap::new();
        aff.insert(goal.id.clone(), self.affinity(t, goal)?);
        let extra = Question::from_affinity(&q.id, &q.text, q.category, q.answers.clone(), aff, self.eps)?;
        let mut rows = q.likelihoods.clone();
        rows.extend(extra.likelihoods);
        Question::new(&q.id, &q.text, q.category, q.answers.clone(), rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractor::MockJudge;
    use crate::bundled;
    use crate::inquiry::question_value;

    #[test]
    fn bundled_templates_parse() {
        let t = parse_templates(bundled::QUESTIONS).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t[0].answers.len(), 6);
        assert!(parse_templates("questions v1\nattribute color | Which? | red, blue").is_err());
        assert!(parse_templates("questions v1\nattribute temperature | Warm? | warm").is_err());
        let e = parse_templates("questions v2").unwrap_err();
        assert_eq!(e, InquiryError::Template { line: 1, msg: "expected header `questions v1`".into() });
    }

    #[test]
    fn bank_questions_cover_every_goal() {
        let bank = bundled::goal_bank();
        let gen = BankQuestionGenerator::new(parse_templates(bundled::QUESTIONS).unwrap(), &bank, 0.05);
        let belief = GoalBelief::uniform(bank.goals()).unwrap();
        let qs = gen.generate(&belief).unwrap();
        assert!(qs.iter().any(|q| q.id == "main"));
        assert!(qs.iter().any(|q| q.id.starts_with("ingredient:")));
        for q in &qs {
            assert!(bank.goals().iter().all(|g| q.covers(&g.id)));
            assert!(question_value(q, &belief).unwrap() >= 0.0);
        }
        let rt = qs.iter().find(|q| q.id == "recipe_type").unwrap();
        let oat = bank.goals().into_iter().find(|g| g.recipe_type == RecipeType::Oatmeal).unwrap();
        let row = rt.likelihood_row(&oat.id).unwrap();
        assert!((row[3] - 1.05 / 1.3).abs() < 1e-12);
    }

    #[test]
    fn judge_questions_prefer_warm_oatmeal() {
        let judge: Arc<dyn Judge> = Arc::new(MockJudge::bundled());
        let gen = JudgeQuestionGenerator::new(parse_templates(bundled::QUESTIONS).unwrap(), judge, 0.05);
        let b = GoalBelief::uniform(vec![Goal::named("Berry Oatmeal", RecipeType::Oatmeal)]).unwrap();
        let qs = gen.generate(&b).unwrap();
        let t = qs.iter().find(|q| q.id == "temperature").unwrap();
        assert!(t.likelihood("berry_oatmeal", 0).unwrap() > t.likelihood("berry_oatmeal", 1).unwrap());
    }
}
