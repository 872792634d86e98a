//! The symbolic term language: `?var`, `$const` and bare atoms, numbers,
//! and applications `(head arg ...)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// Stored without the leading `?`.
    Var(String),
    /// `$`-prefixed constants keep their prefix; bare atoms such as
    /// `center` or `BIAS_LEFT` are constants too.
    Const(String),
    Num(f64),
    App(String, Vec<Term>),
}

pub type Substitution = BTreeMap<String, Term>;

/// Known heads and their arities.
pub const HEADS: &[(&str, usize)] = &[
    ("translate", 2),
    ("rotate", 4),
    ("scale", 3),
    ("v-", 2),
    ("v+", 2),
    ("v*", 2),
    ("plus", 2),
    ("minus", 2),
    ("times", 2),
    ("neg", 1),
    ("magnitude", 1),
    (">>", 2),
    ("pt", 2),
    ("vec", 2),
    ("interval", 2),
    ("make-line-locus", 2),
    ("make-ray-locus", 2),
    ("make-circle-locus", 2),
    ("make-displaced-line", 3),
    ("make-parabola-locus", 2),
    ("make-hyperbola-locus", 4),
    ("translate-locus", 2),
    ("angular-bisector", 4),
    ("0d-intersection", 2),
    ("bias-distance", 3),
    ("fdp-locus-radius", 3),
    ("fdp-radius", 3),
    ("angle-between", 2),
    ("reverse", 1),
    ("invariant-point", 3),
    ("1d-constrained-point", 3),
    ("2d-constrained-point", 3),
    ("fixed-distance-point", 5),
    ("fixed-distance-line", 4),
    ("invariant-direction", 2),
    ("invariant-dimension", 2),
];

pub fn arity(head: &str) -> Option<usize> {
    HEADS.iter().find(|(h, _)| *h == head).map(|(_, a)| *a)
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.trim_start_matches('?').to_string())
    }

    pub fn atom(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    pub fn app(head: &str, args: Vec<Term>) -> Term {
        Term::App(head.to_string(), args)
    }

    pub fn access(of: Term, field: &str) -> Term {
        Term::app(">>", vec![of, Term::atom(field)])
    }

    pub fn head(&self) -> Option<&str> {
        match self {
            Term::App(h, _) => Some(h),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App(_, a) => a,
            _ => &[],
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_const(&self) -> Option<&str> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, a) => a.iter().all(Term::is_ground),
            _ => true,
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, a) => a.iter().for_each(|t| t.collect_vars(out)),
            _ => {}
        }
    }

    /// Variables in order of first appearance.
    pub fn vars_ordered(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, a) => a.iter().for_each(|t| t.vars_ordered(out)),
            _ => {}
        }
    }

    pub fn occurs(&self, var: &str) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::App(_, a) => a.iter().any(|t| t.occurs(var)),
            _ => false,
        }
    }

    pub fn contains(&self, sub: &Term) -> bool {
        self == sub || self.args().iter().any(|a| a.contains(sub))
    }

    pub fn depth(&self) -> usize {
        1 + self.args().iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn apply(&self, s: &Substitution) -> Term {
        match self {
            Term::Var(v) => match s.get(v) {
                Some(t) => t.apply(s),
                None => self.clone(),
            },
            Term::App(h, a) => Term::App(h.clone(), a.iter().map(|t| t.apply(s)).collect()),
            _ => self.clone(),
        }
    }

    /// Replace every occurrence of `from` by `to`.
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::App(h, a) => Term::App(h.clone(), a.iter().map(|t| t.replace(from, to)).collect()),
            _ => self.clone(),
        }
    }

    /// Bottom-up rewrite.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let t = match self {
            Term::App(h, a) => Term::App(h.clone(), a.iter().map(|x| x.map_bottom_up(f)).collect()),
            _ => self.clone(),
        };
        f(t)
    }

    /// Rename every variable `v` to `v#n`.
    pub fn rename_apart(&self, n: usize) -> Term {
        match self {
            Term::Var(v) => Term::Var(format!("{}#{n}", base_name(v))),
            Term::App(h, a) => Term::App(h.clone(), a.iter().map(|t| t.rename_apart(n)).collect()),
            _ => self.clone(),
        }
    }

    /// Printed form with variables renumbered by first appearance, so that
    /// alpha-equivalent terms share a key.
    pub fn canonical_key(&self) -> String {
        let mut order = Vec::new();
        self.vars_ordered(&mut order);
        let s: Substitution = order
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), Term::Var(format!("_{i}"))))
            .collect();
        self.apply_once(&s).to_string()
    }

    fn apply_once(&self, s: &Substitution) -> Term {
        match self {
            Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(h, a) => Term::App(h.clone(), a.iter().map(|t| t.apply_once(s)).collect()),
            _ => self.clone(),
        }
    }
}

fn base_name(v: &str) -> &str {
    v.split('#').next().unwrap_or(v)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => f.write_str(c),
            Term::Num(x) => write!(f, "{x}"),
            Term::App(h, a) => {
                write!(f, "({h}")?;
                for t in a {
                    write!(f, " {t}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        parse_term(&src).map_err(serde::de::Error::custom)
    }
}

fn walk<'a>(t: &'a Term, s: &'a Substitution) -> &'a Term {
    let mut cur = t;
    while let Term::Var(v) = cur {
        match s.get(v) {
            Some(next) => cur = next,
            None => break,
        }
    }
    cur
}

fn occurs_in(var: &str, t: &Term, s: &Substitution) -> bool {
    match walk(t, s) {
        Term::Var(v) => v == var,
        Term::App(_, a) => a.iter().any(|x| occurs_in(var, x, s)),
        _ => false,
    }
}

fn resolve(s: &Substitution) -> Substitution {
    s.iter().map(|(k, v)| (k.clone(), v.apply(s))).collect()
}

/// Most general unifier with occurs check.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    unify_with(a, b, Substitution::new())
}

pub fn unify_with(a: &Term, b: &Term, start: Substitution) -> Option<Substitution> {
    let mut s = start;
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let x = walk(&x, &s).clone();
        let y = walk(&y, &s).clone();
        match (&x, &y) {
            (Term::Var(v), Term::Var(w)) if v == w => {}
            (Term::Var(v), other) | (other, Term::Var(v)) => {
                if occurs_in(v, other, &s) {
                    return None;
                }
                s.insert(v.clone(), other.clone());
            }
            (Term::Const(p), Term::Const(q)) if p == q => {}
            (Term::Num(p), Term::Num(q)) if p == q => {}
            (Term::App(h1, a1), Term::App(h2, a2)) if h1 == h2 && a1.len() == a2.len() => {
                stack.extend(a1.iter().cloned().zip(a2.iter().cloned()));
            }
            _ => return None,
        }
    }
    Some(resolve(&s))
}

/// One-way matching: only variables of `pat` may be bound; variables in
/// `t` behave as constants.
pub fn match_term(pat: &Term, t: &Term, s: &mut Substitution) -> bool {
    match pat {
        Term::Var(v) => match s.get(v) {
            Some(bound) => bound == t,
            None => {
                s.insert(v.clone(), t.clone());
                true
            }
        },
        Term::App(h, a) => match t {
            Term::App(h2, a2) if h == h2 && a.len() == a2.len() => {
                a.iter().zip(a2).all(|(p, x)| match_term(p, x, s))
            }
            _ => false,
        },
        _ => pat == t,
    }
}

/// Equal up to a bijective renaming of variables.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    fn go(a: &Term, b: &Term, fwd: &mut BTreeMap<String, String>, back: &mut BTreeMap<String, String>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => match (fwd.get(x), back.get(y)) {
                (None, None) => {
                    fwd.insert(x.clone(), y.clone());
                    back.insert(y.clone(), x.clone());
                    true
                }
                (Some(y2), Some(x2)) => y2 == y && x2 == x,
                _ => false,
            },
            (Term::App(h1, a1), Term::App(h2, a2)) => {
                h1 == h2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(p, q)| go(p, q, fwd, back))
            }
            _ => a == b,
        }
    }
    go(a, b, &mut BTreeMap::new(), &mut BTreeMap::new())
}

/// Whether `t` is an instance of `general`.
pub fn is_instance(t: &Term, general: &Term) -> bool {
    match_term(general, t, &mut Substitution::new())
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

/// Tokens with their 1-based line and column.
fn tokenize(src: &str) -> Vec<(Tok, usize, usize)> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '(' | ')' => {
                chars.next();
                out.push((if c == '(' { Tok::Open } else { Tok::Close }, line, col));
                col += 1;
            }
            _ => {
                let start = col;
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                    col += 1;
                }
                out.push((Tok::Atom(s), line, start));
            }
        }
    }
    out
}

/// Reader over a token stream; used by the term and rule-file parsers.
pub struct Reader {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    eof: (usize, usize),
}

/// Raw S-expression, before head validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

impl Sexp {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom(_, l, c) | Sexp::List(_, l, c) => (*l, *c),
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.pos();
        ParseError { line, col, msg: msg.into() }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, ..) => Some(a),
            _ => None,
        }
    }
}

impl Reader {
    pub fn new(src: &str) -> Self {
        let line_count = src.lines().count().max(1);
        let last_col = src.lines().last().map_or(1, |l| l.chars().count() + 1);
        Reader { toks: tokenize(src), pos: 0, eof: (line_count, last_col) }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn peek_atom(&self) -> Option<&str> {
        match self.toks.get(self.pos) {
            Some((Tok::Atom(a), ..)) => Some(a),
            _ => None,
        }
    }

    pub fn next_sexp(&mut self) -> Result<Sexp, ParseError> {
        let Some((tok, line, col)) = self.toks.get(self.pos).cloned() else {
            return Err(ParseError { line: self.eof.0, col: self.eof.1, msg: "unexpected end of input".into() });
        };
        self.pos += 1;
        match tok {
            Tok::Atom(a) => Ok(Sexp::Atom(a, line, col)),
            Tok::Close => Err(ParseError { line, col, msg: "unexpected ')'".into() }),
            Tok::Open => {
                let mut items = Vec::new();
                loop {
                    match self.toks.get(self.pos) {
                        Some((Tok::Close, ..)) => {
                            self.pos += 1;
                            return Ok(Sexp::List(items, line, col));
                        }
                        Some(_) => items.push(self.next_sexp()?),
                        None => {
                            return Err(ParseError { line, col, msg: "unclosed '('".into() });
                        }
                    }
                }
            }
        }
    }
}

fn atom_term(a: &str) -> Term {
    if let Some(v) = a.strip_prefix('?') {
        return Term::Var(v.to_string());
    }
    match a.parse::<f64>() {
        Ok(x) if x.is_finite() && a.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+' || c == '.') => {
            Term::Num(x)
        }
        _ => Term::Const(a.to_string()),
    }
}

/// Convert an S-expression to a term, checking heads and arities.
pub fn sexp_to_term(s: &Sexp) -> Result<Term, ParseError> {
    match s {
        Sexp::Atom(a, ..) => Ok(atom_term(a)),
        Sexp::List(items, ..) => {
            let Some((head, rest)) = items.split_first() else {
                return Err(s.error("empty application"));
            };
            let Some(h) = head.as_atom() else {
                return Err(head.error("application head must be a symbol"));
            };
            let Some(n) = arity(h) else {
                return Err(head.error(format!("unknown head '{h}'")));
            };
            if rest.len() != n {
                return Err(s.error(format!("'{h}' takes {n} arguments, got {}", rest.len())));
            }
            Ok(Term::App(h.to_string(), rest.iter().map(sexp_to_term).collect::<Result<_, _>>()?))
        }
    }
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut r = Reader::new(src);
    let s = r.next_sexp()?;
    if let Some((_, line, col)) = r.toks.get(r.pos) {
        return Err(ParseError { line: *line, col: *col, msg: "trailing input".into() });
    }
    sexp_to_term(&s)
}

/// Parse a term that is known to be well formed.
pub fn t(src: &str) -> Term {
    parse_term(src).unwrap_or_else(|e| panic!("bad built-in term {src:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unify_binds_variables() {
        let s = unify(&t("(translate ?g ?v)"), &t("(translate $c (v- $p $q))")).unwrap();
        assert_eq!(s["g"], t("$c"));
        assert_eq!(s["v"], t("(v- $p $q)"));
    }

    #[test]
    fn occurs_check_fails() {
        assert!(unify(&t("?x"), &t("(neg ?x)")).is_none());
    }

    #[test]
    fn distinct_constants_fail() {
        assert!(unify(&t("(rotate $g $pt1 ?vec1 ?amt1)"), &t("(rotate $g $pt2 ?vec2 ?amt2)")).is_none());
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = parse_term("(translate ?g)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
        let e = parse_term("(plus 1\n  (frob 2))").unwrap_err();
        assert_eq!((e.line, e.col), (2, 4));
        assert!(parse_term("(plus 1 2").is_err());
    }

    #[test]
    fn print_parse_round_trip() {
        let src = "(scale ?circle (>> ?circle center) (minus (magnitude (v- (>> ?circle center) ?pt)) -2.5))";
        assert_eq!(t(src).to_string(), src);
    }

    #[test]
    fn alpha_equivalence() {
        assert!(alpha_eq(&t("(plus ?a ?b)"), &t("(plus ?x ?y)")));
        assert!(!alpha_eq(&t("(plus ?a ?a)"), &t("(plus ?x ?y)")));
        assert_eq!(t("(plus ?a ?b)").canonical_key(), t("(plus ?q ?r)").canonical_key());
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::var),
            prop::sample::select(vec!["$p", "$q"]).prop_map(Term::atom),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Term::app("plus", vec![x, y])),
                inner.prop_map(|x| Term::app("neg", vec![x])),
            ]
        })
    }

    proptest! {
        #[test]
        fn unifier_equalizes_and_is_idempotent(a in arb_term(), b in arb_term()) {
            if let Some(s) = unify(&a, &b) {
                prop_assert_eq!(a.apply(&s), b.apply(&s));
                for v in s.values() {
                    prop_assert_eq!(v.apply(&s), v.clone());
                }
            }
        }

        #[test]
        fn unifier_is_most_general(a in arb_term(), b in arb_term(), pick in prop::collection::vec(0usize..2, 3)) {
            // Any ground unifier built from a small alphabet factors through the mgu.
            let consts = [t("$p"), t("$q")];
            let names = ["a", "b", "c"];
            let sigma: Substitution = names.iter().zip(&pick).map(|(n, i)| (n.to_string(), consts[*i].clone())).collect();
            if a.apply(&sigma) == b.apply(&sigma) {
                let mgu = unify(&a, &b);
                prop_assert!(mgu.is_some());
                let mgu = mgu.unwrap();
                for n in names {
                    let via = Term::var(n).apply(&mgu).apply(&sigma);
                    prop_assert_eq!(via, Term::var(n).apply(&sigma));
                }
            }
        }
    }
}
