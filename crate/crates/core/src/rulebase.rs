//! Rule files: action, matching, reformulation and expansion rules in one
//! S-expression document.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use thiserror::Error;

use crate::kb::{ActionRule, GeomKind};
use crate::rules::{Guard, MatchRule, ReformRule};
use crate::term::{sexp_to_term, ParseError, Reader, Sexp, Term};

/// Text of the shipped rule file.
pub const BUILTIN_RULES: &str = include_str!("../rules/default.rules");

#[derive(Debug, Error)]
pub enum RuleFileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{line}:{col}: {msg}")]
    Invalid { line: usize, col: usize, msg: String },
}

impl From<(&Sexp, String)> for RuleFileError {
    fn from((s, msg): (&Sexp, String)) -> Self {
        let (line, col) = s.pos();
        RuleFileError::Invalid { line, col, msg }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RuleBase {
    pub action_rules: Vec<ActionRule>,
    pub match_rules: Vec<MatchRule>,
    pub reform_rules: Vec<ReformRule>,
    /// Applied once to a planning root, after reformulation.
    pub expand_rules: Vec<ReformRule>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Action,
    Match,
    Reform,
}

impl RuleBase {
    /// The rule base shipped with the crate.
    pub fn builtin() -> &'static RuleBase {
        static RB: OnceLock<RuleBase> = OnceLock::new();
        RB.get_or_init(|| RuleBase::parse(BUILTIN_RULES).expect("shipped rule file parses"))
    }

    pub fn action_rules_for(&self, kind: GeomKind) -> impl Iterator<Item = &ActionRule> {
        self.action_rules.iter().filter(move |r| r.kind == kind)
    }

    pub fn reform_rules_for(&self, kind: GeomKind) -> impl Iterator<Item = &ReformRule> {
        self.reform_rules.iter().filter(move |r| r.kind == kind)
    }

    pub fn expand_rules_for(&self, kind: GeomKind) -> impl Iterator<Item = &ReformRule> {
        self.expand_rules.iter().filter(move |r| r.kind == kind)
    }

    pub fn parse(src: &str) -> Result<RuleBase, RuleFileError> {
        let mut rb = RuleBase::default();
        let mut section = None;
        let mut names = BTreeSet::new();
        let mut r = Reader::new(src);
        while !r.at_end() {
            if let Some(a) = r.peek_atom() {
                let a = a.to_string();
                let s = r.next_sexp()?;
                section = Some(match a.as_str() {
                    "ACTION-RULES" => Section::Action,
                    "MATCH-RULES" => Section::Match,
                    "REFORM-RULES" => Section::Reform,
                    other => return Err((&s, format!("unknown section '{other}'")).into()),
                });
                continue;
            }
            let s = r.next_sexp()?;
            let Sexp::List(items, ..) = &s else { unreachable!("atoms handled above") };
            let form = items.first().and_then(Sexp::as_atom).unwrap_or("");
            let expected = match form {
                "action" => Section::Action,
                "match" => Section::Match,
                "reform" | "expand" => Section::Reform,
                _ => return Err((&s, format!("unknown form '{form}'")).into()),
            };
            if section != Some(expected) {
                return Err((&s, format!("'{form}' outside its section")).into());
            }
            let name = items.get(1).and_then(Sexp::as_atom).ok_or_else(|| err(&s, "missing rule name"))?;
            match form {
                "action" => {
                    let rule = parse_action(&s, items, name)?;
                    if !names.insert(("action", rule.kind, name.to_string())) {
                        return Err(err(&s, &format!("duplicate rule '{name}'")));
                    }
                    rb.action_rules.push(rule);
                }
                "match" => {
                    let rule = parse_match(&s, items, name)?;
                    if !names.insert(("match", GeomKind::Circle, name.to_string())) {
                        return Err(err(&s, &format!("duplicate rule '{name}'")));
                    }
                    rb.match_rules.push(rule);
                }
                _ => {
                    let rule = parse_reform(&s, items, name)?;
                    let tag = if form == "expand" { "expand" } else { "reform" };
                    if !names.insert((tag, rule.kind, name.to_string())) {
                        return Err(err(&s, &format!("duplicate rule '{name}'")));
                    }
                    if form == "expand" {
                        rb.expand_rules.push(rule);
                    } else {
                        rb.reform_rules.push(rule);
                    }
                }
            }
        }
        Ok(rb)
    }
}

fn err(s: &Sexp, msg: &str) -> RuleFileError {
    (s, msg.to_string()).into()
}

fn kind_of(s: &Sexp, items: &[Sexp]) -> Result<GeomKind, RuleFileError> {
    let k = items.get(2).and_then(Sexp::as_atom).ok_or_else(|| err(s, "missing geom kind"))?;
    k.parse().map_err(|_| err(&items[2], &format!("unknown geom kind '{k}'")))
}

/// The `(tag item...)` clause of a rule, or an error if absent.
fn clause<'a>(s: &Sexp, items: &'a [Sexp], tag: &str) -> Result<&'a [Sexp], RuleFileError> {
    optional_clause(items, tag).ok_or_else(|| err(s, &format!("missing ({tag} ...) clause")))
}

fn optional_clause<'a>(items: &'a [Sexp], tag: &str) -> Option<&'a [Sexp]> {
    items.iter().find_map(|i| match i {
        Sexp::List(v, ..) if v.first().and_then(Sexp::as_atom) == Some(tag) => Some(&v[1..]),
        _ => None,
    })
}

fn terms(items: &[Sexp]) -> Result<Vec<Term>, RuleFileError> {
    Ok(items.iter().map(sexp_to_term).collect::<Result<_, _>>()?)
}

fn vars_of(ts: &[Term]) -> BTreeSet<String> {
    ts.iter().flat_map(Term::vars).collect()
}

/// Invariant head, with the accessor slot allowed to be a variable.
fn invariant_shaped(t: &Term) -> bool {
    t.head().and_then(crate::kb::InvariantKind::from_head).is_some_and(|k| {
        !k.has_accessor() || t.args()[1].is_var() || t.args()[1].head() == Some(">>")
    })
}

fn parse_action(s: &Sexp, items: &[Sexp], name: &str) -> Result<ActionRule, RuleFileError> {
    let kind = kind_of(s, items)?;
    let pattern = clause(s, items, "pattern")?;
    let [pattern] = pattern else { return Err(err(s, "pattern takes one invariant")) };
    let pattern = sexp_to_term(pattern)?;
    if !invariant_shaped(&pattern) {
        return Err(err(s, "pattern is not an invariant"));
    }
    let to_preserve = terms(clause(s, items, "preserve")?)?;
    let to_achieve = terms(clause(s, items, "achieve")?)?;
    for a in to_preserve.iter().chain(&to_achieve) {
        if a.head().and_then(crate::kb::ActionKind::from_head).is_none() {
            return Err(err(s, &format!("'{a}' is not an action")));
        }
    }
    Ok(ActionRule { name: name.to_string(), kind, pattern, to_preserve, to_achieve })
}

fn parse_match(s: &Sexp, items: &[Sexp], name: &str) -> Result<MatchRule, RuleFileError> {
    let lhs = terms(clause(s, items, "lhs")?)?;
    let [a, b] = <[Term; 2]>::try_from(lhs).map_err(|_| err(s, "match lhs takes two terms"))?;
    let rhs = terms(clause(s, items, "rhs")?)?;
    let [rhs] = <[Term; 1]>::try_from(rhs).map_err(|_| err(s, "match rhs takes one term"))?;
    let bound = vars_of(&[a.clone(), b.clone()]);
    if !rhs.vars().is_subset(&bound) {
        return Err(err(s, "rhs uses a variable not bound by lhs"));
    }
    let mut guards = Vec::new();
    for g in optional_clause(items, "guard").unwrap_or(&[]) {
        let Sexp::List(parts, ..) = g else { return Err(err(g, "guard must be a list")) };
        match parts.first().and_then(Sexp::as_atom) {
            Some("distinct") if parts.len() == 3 => {
                guards.push(Guard::Distinct(sexp_to_term(&parts[1])?, sexp_to_term(&parts[2])?));
            }
            _ => return Err(err(g, "unknown guard")),
        }
    }
    Ok(MatchRule { name: name.to_string(), lhs: (a, b), rhs, guards })
}

fn parse_reform(s: &Sexp, items: &[Sexp], name: &str) -> Result<ReformRule, RuleFileError> {
    let kind = kind_of(s, items)?;
    let lhs = terms(clause(s, items, "lhs")?)?;
    let rhs = terms(clause(s, items, "rhs")?)?;
    if lhs.is_empty() {
        return Err(err(s, "empty lhs"));
    }
    if !vars_of(&rhs).is_subset(&vars_of(&lhs)) {
        return Err(err(s, "rhs uses a variable not bound by lhs"));
    }
    for x in lhs.iter().chain(&rhs) {
        if !invariant_shaped(x) {
            return Err(err(s, &format!("'{x}' is not an invariant")));
        }
    }
    Ok(ReformRule { name: name.to_string(), kind, lhs, rhs })
}
