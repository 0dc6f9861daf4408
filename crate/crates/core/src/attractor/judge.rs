use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::bank::RecipeType;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JudgeError {
    #[error("judge unavailable: {0}")]
    Unavailable(String),
    #[error("malformed judge output: {0}")]
    Malformed(String),
    #[error("judge configuration: {0}")]
    Config(String),
}

/// Relevance scorer: how strongly `source` relates to each target, given a
/// free-text context. Scores are expected in [0, 1].
pub trait Judge: Send + Sync {
    fn score(&self, source: &str, targets: &[String], context: &str) -> Result<BTreeMap<String, f64>, JudgeError>;
}

impl<J: Judge + ?Sized> Judge for Box<J> {
    fn score(&self, source: &str, targets: &[String], context: &str) -> Result<BTreeMap<String, f64>, JudgeError> {
        (**self).score(source, targets, context)
    }
}

impl<J: Judge + ?Sized> Judge for Arc<J> {
    fn score(&self, source: &str, targets: &[String], context: &str) -> Result<BTreeMap<String, f64>, JudgeError> {
        (**self).score(source, targets, context)
    }
}

const STOPWORDS: &[&str] = &[
    "a",
    "an",
    "the",
    "and",
    "or",
    "with",
    "of",
    "in",
    "into",
    "on",
    "to",
    "for",
    "from",
    "some",
    "something",
    "i",
    "we",
    "my",
    "it",
    "is",
    "are",
    "be",
    "want",
    "like",
    "make",
    "making",
    "dish",
    "recipe",
    "food",
    "friendly",
    "high",
    "low",
    "rich",
    "free",
    "post",
    "based",
    "style",
    "else",
    "phase",
    "item",
    "pref",
    "answer",
    "recent",
    "human",
    "robot",
    "likely",
    "unknown",
    "what",
    "which",
    "will",
    "you",
    "your",
    "kind",
    "main",
    "ingredient",
    "use",
    "does",
    "need",
    "served",
    "appliance",
    "none",
];

/// Action verbs. They never count as content; closing verbs are gated by
/// the phase named in the context.
const VERBS: &[&str] = &["gather", "pour", "mix", "cook", "turn", "collect", "blend", "reduce", "heat", "serve"];
const CLOSING_VERBS: &[&str] = &["mix", "serve"];

fn singular(w: &str) -> String {
    if w.len() > 4 && w.ends_with("ies") {
        return format!("{}y", &w[..w.len() - 3]);
    }
    if w.len() > 4 && (w.ends_with("oes") || w.ends_with("ches") || w.ends_with("shes")) {
        return w[..w.len() - 2].to_string();
    }
    if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        return w[..w.len() - 1].to_string();
    }
    w.to_string()
}

/// Lowercases, splits on anything but letters and digits, singularizes and
/// drops stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(singular)
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    relations: BTreeMap<String, BTreeSet<String>>,
    dishes: Vec<(String, RecipeType)>,
}

impl Lexicon {
    pub fn parse(src: &str) -> Result<Lexicon, JudgeError> {
        let mut lines = src
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        if !matches!(lines.next(), Some((_, "lexicon v1"))) {
            return Err(JudgeError::Config("lexicon must start with `lexicon v1`".into()));
        }
        let mut lex = Lexicon::default();
        for (n, line) in lines {
            let (head, rest) = line
                .split_once(':')
                .ok_or_else(|| JudgeError::Config(format!("lexicon line {n}: expected `word: related...`")))?;
            if head.trim() == "dish" {
                let (name, ty) = rest
                    .split_once('|')
                    .ok_or_else(|| JudgeError::Config(format!("lexicon line {n}: expected `dish: Name | Type`")))?;
                let ty = ty.parse().map_err(|e: String| JudgeError::Config(format!("lexicon line {n}: {e}")))?;
                lex.dishes.push((name.trim().to_string(), ty));
                continue;
            }
            let heads = tokenize(head);
            let [h] = heads.as_slice() else {
                return Err(JudgeError::Config(format!("lexicon line {n}: head must be one word")));
            };
            for t in tokenize(rest) {
                lex.link(h, &t);
            }
        }
        Ok(lex)
    }

    fn link(&mut self, a: &str, b: &str) {
        if a == b {
            return;
        }
        self.relations.entry(a.to_string()).or_default().insert(b.to_string());
        self.relations.entry(b.to_string()).or_default().insert(a.to_string());
    }

    pub fn related(&self, word: &str) -> impl Iterator<Item = &String> {
        self.relations.get(word).into_iter().flatten()
    }

    /// Source tokens plus everything one association away.
    pub fn expand(&self, tokens: &[String]) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = tokens.iter().cloned().collect();
        for t in tokens {
            out.extend(self.related(t).cloned());
        }
        out
    }

    /// Dish names available for open-ended goal proposals.
    pub fn dishes(&self) -> &[(String, RecipeType)] {
        &self.dishes
    }
}

/// Offline judge: share of a target's content words found among the
/// source's words and their lexicon associations.
#[derive(Debug, Clone)]
pub struct MockJudge {
    lexicon: Lexicon,
}

impl MockJudge {
    pub fn new(lexicon: Lexicon) -> Self {
        MockJudge { lexicon }
    }

    pub fn bundled() -> Self {
        MockJudge::new(Lexicon::parse(crate::bundled::LEXICON).expect("bundled lexicon parses"))
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn phase(context: &str) -> Option<String> {
        let rest = &context[context.find("phase:")? + 6..];
        rest.split(|c: char| !c.is_ascii_alphabetic()).find(|w| !w.is_empty()).map(str::to_string)
    }

    pub fn score_one(&self, expanded: &BTreeSet<String>, target: &str, phase: Option<&str>) -> f64 {
        let toks = tokenize(target);
        let closing = toks.iter().any(|t| CLOSING_VERBS.contains(&t.as_str()));
        if closing && phase.is_some_and(|p| p != "finishing") {
            return 0.0;
        }
        let content: BTreeSet<&String> = toks.iter().filter(|t| !VERBS.contains(&t.as_str())).collect();
        if content.is_empty() {
            return 0.0;
        }
        content.iter().filter(|t| expanded.contains(**t)).count() as f64 / content.len() as f64
    }
}

impl Judge for MockJudge {
    fn score(&self, source: &str, targets: &[String], context: &str) -> Result<BTreeMap<String, f64>, JudgeError> {
        let expanded = self.lexicon.expand(&tokenize(source));
        let phase = MockJudge::phase(context);
        Ok(targets.iter().map(|t| (t.clone(), self.score_one(&expanded, t, phase.as_deref()))).collect())
    }
}
