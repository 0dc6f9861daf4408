use std::collections::{BTreeSet, HashMap};

use super::{Condition, DomainError, DomainSpec, Id, Kind, Literal, Rule, Term, Verb};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, DomainError> {
    let mut out = Vec::new();
    for (ln, text) in src.lines().enumerate() {
        let line = ln + 1;
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let ident_char = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '-';
            if c == '?' || c.is_ascii_alphabetic() || c == '_' {
                let start = if c == '?' { i + 1 } else { i };
                let mut j = start;
                while j < chars.len() && ident_char(chars[j]) {
                    j += 1;
                }
                if j == start {
                    return Err(DomainError::Parse { line, col, msg: "expected a variable name after `?`".into() });
                }
                let word: String = chars[start..j].iter().collect();
                let tok = if c == '?' { Tok::Var(word) } else { Tok::Ident(word) };
                out.push(Token { tok, line, col });
                i = j;
                continue;
            }
            if "(){},:!".contains(c) {
                out.push(Token { tok: Tok::Sym(c), line, col });
                i += 1;
                continue;
            }
            return Err(DomainError::Parse { line, col, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const SECTIONS: [&str; 6] = ["items", "containers", "appliances", "locations", "init", "terminal"];

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek2(&self) -> Option<&Token> {
        self.toks.get(self.pos + 1)
    }

    fn here(&self) -> (usize, usize) {
        match self.peek().or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, DomainError> {
        let (line, col) = self.here();
        Err(DomainError::Parse { line, col, msg: msg.into() })
    }

    fn next(&mut self) -> Result<Token, DomainError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.err("unexpected end of file"),
        }
    }

    fn is_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == c)
    }

    fn expect_sym(&mut self, c: char) -> Result<(), DomainError> {
        if self.is_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), DomainError> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.line, t.col)),
            _ => Err(DomainError::Parse { line: t.line, col: t.col, msg: "expected an identifier".into() }),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DomainError> {
        let (line, col) = self.here();
        let (w, _, _) = self.ident()?;
        if w == kw {
            Ok(())
        } else {
            Err(DomainError::Parse { line, col, msg: format!("expected `{kw}`, found `{w}`") })
        }
    }

    /// A `name:` section header starts here.
    fn at_section(&self) -> bool {
        matches!(
            (self.peek(), self.peek2()),
            (Some(Token { tok: Tok::Ident(_), .. }), Some(Token { tok: Tok::Sym(':'), .. }))
        ) || matches!(self.peek(), Some(Token { tok: Tok::Ident(w), .. }) if w == "rule")
    }

    fn ident_list(&mut self) -> Result<Vec<(String, usize, usize)>, DomainError> {
        let mut out = vec![self.ident()?];
        while self.is_sym(',') {
            self.pos += 1;
            out.push(self.ident()?);
        }
        Ok(out)
    }
}

struct RawTerm {
    term: RawTermKind,
    line: usize,
    col: usize,
}

enum RawTermKind {
    Var(String),
    Const(String),
}

struct RawCond {
    positive: bool,
    pred: String,
    args: Vec<RawTerm>,
}

fn parse_atom(p: &mut Parser, allow_neg: bool) -> Result<RawCond, DomainError> {
    let positive = if allow_neg && p.is_sym('!') {
        p.pos += 1;
        false
    } else {
        true
    };
    let (pred, _, _) = p.ident()?;
    let mut args = Vec::new();
    if p.is_sym('(') {
        p.pos += 1;
        if !p.is_sym(')') {
            loop {
                let t = p.next()?;
                let term = match t.tok {
                    Tok::Var(v) => RawTermKind::Var(v),
                    Tok::Ident(c) => RawTermKind::Const(c),
                    Tok::Sym(_) => {
                        return Err(DomainError::Parse { line: t.line, col: t.col, msg: "expected a term".into() })
                    }
                };
                args.push(RawTerm { term, line: t.line, col: t.col });
                if p.is_sym(',') {
                    p.pos += 1;
                } else {
                    break;
                }
            }
        }
        p.expect_sym(')')?;
    }
    Ok(RawCond { positive, pred, args })
}

fn parse_conds(p: &mut Parser) -> Result<Vec<RawCond>, DomainError> {
    p.expect_sym('{')?;
    let mut out = Vec::new();
    if !p.is_sym('}') {
        loop {
            out.push(parse_atom(p, true)?);
            if p.is_sym(',') {
                p.pos += 1;
            } else {
                break;
            }
        }
    }
    p.expect_sym('}')?;
    Ok(out)
}

struct RawRule {
    verb: Verb,
    line: usize,
    params: Vec<(String, Kind)>,
    pre: Vec<RawCond>,
    eff: Vec<RawCond>,
}

fn parse_rule(p: &mut Parser) -> Result<RawRule, DomainError> {
    p.keyword("rule")?;
    let (name, line, col) = p.ident()?;
    let verb = Verb::from_name(&name).ok_or(DomainError::Parse { line, col, msg: format!("unknown verb `{name}`") })?;
    p.expect_sym('(')?;
    let mut params = Vec::new();
    if !p.is_sym(')') {
        loop {
            let t = p.next()?;
            let Tok::Var(v) = t.tok else {
                return Err(DomainError::Parse { line: t.line, col: t.col, msg: "expected a `?variable`".into() });
            };
            p.expect_sym(':')?;
            let (k, kl, kc) = p.ident()?;
            let kind = Kind::from_name(&k).ok_or(DomainError::Parse {
                line: kl,
                col: kc,
                msg: format!("unknown kind `{k}`"),
            })?;
            params.push((v, kind));
            if p.is_sym(',') {
                p.pos += 1;
            } else {
                break;
            }
        }
    }
    p.expect_sym(')')?;
    if params.len() != verb.arity() {
        return Err(DomainError::Parse {
            line,
            col,
            msg: format!("`{name}` takes {} parameters, found {}", verb.arity(), params.len()),
        });
    }
    p.expect_sym(':')?;
    p.keyword("pre")?;
    let pre = parse_conds(p)?;
    p.keyword("eff")?;
    let eff = parse_conds(p)?;
    Ok(RawRule { verb, line, params, pre, eff })
}

/// Parses the text domain format.
///
/// ```text
/// domain cooking
/// items: oats, milk
/// containers: pot
/// appliances: stove
/// locations: shelf, counter
/// init: at(oats, shelf), at(milk, shelf)
/// terminal: served
/// rule gather(?i: item):
///   pre { at(?i, shelf) }
///   eff { !at(?i, shelf), at(?i, counter) }
/// ```
pub fn parse_domain(src: &str) -> Result<DomainSpec, DomainError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(DomainError::Empty);
    }
    let mut p = Parser { toks, pos: 0 };
    let mut name = String::from("domain");
    if matches!(p.peek(), Some(Token { tok: Tok::Ident(w), .. }) if w == "domain")
        && !matches!(p.peek2(), Some(Token { tok: Tok::Sym(':'), .. }))
    {
        p.pos += 1;
        name = p.ident()?.0;
    }

    let mut lists: HashMap<&'static str, Vec<(String, usize, usize)>> = HashMap::new();
    let mut init_raw: Vec<RawCond> = Vec::new();
    let mut rules: Vec<RawRule> = Vec::new();
    while p.peek().is_some() {
        if !p.at_section() {
            return p.err("expected a section header");
        }
        let (word, line, col) = match &p.peek().unwrap().tok {
            Tok::Ident(w) => (w.clone(), p.peek().unwrap().line, p.peek().unwrap().col),
            _ => unreachable!(),
        };
        if word == "rule" {
            let r = parse_rule(&mut p)?;
            if rules.iter().any(|x| x.verb == r.verb) {
                return Err(DomainError::DuplicateRule { verb: r.verb.name().into(), line: r.line });
            }
            rules.push(r);
            continue;
        }
        let Some(&key) = SECTIONS.iter().find(|s| **s == word) else {
            return Err(DomainError::UnknownSection { name: word, line, col });
        };
        p.pos += 2;
        if key == "init" {
            loop {
                init_raw.push(parse_atom(&mut p, false)?);
                if p.is_sym(',') {
                    p.pos += 1;
                } else {
                    break;
                }
            }
        } else {
            let ids = p.ident_list()?;
            lists.entry(key).or_default().extend(ids);
        }
    }

    let mut declared: HashMap<String, Kind> = HashMap::new();
    let mut objects: [Vec<Id>; 4] = Default::default();
    for (slot, (key, kind)) in [
        ("items", Kind::Item),
        ("containers", Kind::Container),
        ("appliances", Kind::Appliance),
        ("locations", Kind::Location),
    ]
    .into_iter()
    .enumerate()
    {
        for (id, line, col) in lists.remove(key).unwrap_or_default() {
            if declared.insert(id.clone(), kind).is_some() {
                return Err(DomainError::Parse { line, col, msg: format!("`{id}` is declared twice") });
            }
            objects[slot].push(id);
        }
    }
    let terminal: Vec<String> = lists.remove("terminal").unwrap_or_default().into_iter().map(|(t, _, _)| t).collect();

    let mut init = BTreeSet::new();
    for c in init_raw {
        let mut args = Vec::new();
        for t in c.args {
            match t.term {
                RawTermKind::Const(name) if declared.contains_key(&name) => args.push(name),
                RawTermKind::Const(name) | RawTermKind::Var(name) => {
                    return Err(DomainError::Undeclared { name, line: t.line, col: t.col })
                }
            }
        }
        init.insert(Literal { pred: c.pred, args });
    }

    let mut out_rules = Vec::new();
    for r in rules {
        let resolve = |conds: Vec<RawCond>| -> Result<Vec<Condition>, DomainError> {
            conds
                .into_iter()
                .map(|c| {
                    let args = c
                        .args
                        .into_iter()
                        .map(|t| match t.term {
                            RawTermKind::Var(v) => r
                                .params
                                .iter()
                                .position(|(n, _)| *n == v)
                                .map(Term::Var)
                                .ok_or(DomainError::Undeclared { name: format!("?{v}"), line: t.line, col: t.col }),
                            RawTermKind::Const(k) if declared.contains_key(&k) => Ok(Term::Const(k)),
                            RawTermKind::Const(k) => Err(DomainError::Undeclared { name: k, line: t.line, col: t.col }),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Condition { positive: c.positive, pred: c.pred, args })
                })
                .collect()
        };
        let pre = resolve(r.pre)?;
        let eff = resolve(r.eff)?;
        out_rules.push(Rule { verb: r.verb, params: r.params, pre, eff });
    }

    DomainSpec::build(name, objects, out_rules, init, terminal)
}
