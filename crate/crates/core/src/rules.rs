//! Geometric matching of actions and reformulation of invariant sets into
//! canonical form.

use thiserror::Error;

use crate::kb::{raw_signatures, representative, signature_of, BiasMode, GeomKind, Invariant, InvariantKind, KbError, Signature};
use crate::rulebase::RuleBase;
use crate::term::{match_term, unify_with, Substitution, Term};

#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    /// The two sides must differ syntactically once instantiated.
    Distinct(Term, Term),
}

impl Guard {
    fn holds(&self, s: &Substitution) -> bool {
        match self {
            Guard::Distinct(a, b) => a.apply(s) != b.apply(s),
        }
    }
}

/// Merges two actions (or action fragments) into one that does the work
/// of both.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRule {
    pub name: String,
    pub lhs: (Term, Term),
    pub rhs: Term,
    pub guards: Vec<Guard>,
}

/// Rewrites a set of invariants into an equivalent, simpler set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReformRule {
    pub name: String,
    pub kind: GeomKind,
    pub lhs: Vec<Term>,
    pub rhs: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReformError {
    #[error("rule {0} does not decrease the reformulation measure")]
    NotDecreasing(String),
    #[error("rule {rule} produced a malformed invariant: {source}")]
    Malformed { rule: String, source: KbError },
    #[error(transparent)]
    Signature(#[from] KbError),
}

/// One rewrite in a reformulation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ReformStep {
    pub rule: String,
    pub consumed: Vec<Term>,
    pub produced: Vec<Term>,
}

/// Fresh-name source for renaming rules apart.
#[derive(Debug, Default)]
pub struct Fresh(usize);

impl Fresh {
    pub fn bump(&mut self) -> usize {
        self.0 += 1;
        self.0
    }
}

/// Find a single action term that achieves both `a` and `b`.
///
/// Match rules are tried on the outermost expressions first, in both
/// argument orders; otherwise equal heads recurse argument-wise, and
/// anything else falls back to unification.
pub fn geo_match(a: &Term, b: &Term, rules: &[MatchRule], fresh: &mut Fresh) -> Option<Term> {
    let mut s = Substitution::new();
    let t = gm(a, b, rules, &mut s, fresh)?;
    Some(t.apply(&s))
}

fn gm(a: &Term, b: &Term, rules: &[MatchRule], s: &mut Substitution, fresh: &mut Fresh) -> Option<Term> {
    let a = a.apply(s);
    let b = b.apply(s);
    if let (Term::App(..), Term::App(..)) = (&a, &b) {
        for rule in rules {
            for (x, y) in [(&a, &b), (&b, &a)] {
                let n = fresh.bump();
                let (l0, l1) = (rule.lhs.0.rename_apart(n), rule.lhs.1.rename_apart(n));
                let mut sigma = Substitution::new();
                if !(match_term(&l0, x, &mut sigma) && match_term(&l1, y, &mut sigma)) {
                    continue;
                }
                let renamed: Vec<Guard> = rule
                    .guards
                    .iter()
                    .map(|Guard::Distinct(p, q)| Guard::Distinct(p.rename_apart(n), q.rename_apart(n)))
                    .collect();
                if renamed.iter().all(|g| g.holds(&sigma)) {
                    return Some(rule.rhs.rename_apart(n).apply(&sigma));
                }
            }
        }
    }
    match (&a, &b) {
        (Term::App(h1, x), Term::App(h2, y)) if h1 == h2 && x.len() == y.len() => {
            let mut out = Vec::with_capacity(x.len());
            for (p, q) in x.iter().zip(y) {
                out.push(gm(p, q, rules, s, fresh)?);
            }
            Some(Term::App(h1.clone(), out))
        }
        _ => {
            *s = unify_with(&a, &b, std::mem::take(s))?;
            Some(a.apply(s))
        }
    }
}

fn rank(inv: &Invariant) -> usize {
    match inv.kind() {
        InvariantKind::InvariantPoint => 0,
        InvariantKind::OneDConstrainedPoint if inv.accessor() == Some("end2") => 2,
        InvariantKind::OneDConstrainedPoint => 1,
        InvariantKind::InvariantDirection | InvariantKind::InvariantDimension => 3,
        InvariantKind::TwoDConstrainedPoint => 4,
        InvariantKind::FixedDistancePoint | InvariantKind::FixedDistanceLine => 5,
    }
}

/// Well-founded measure every reformulation step must decrease:
/// distance invariants, then invariant count, then summed rank.
pub fn measure(invs: &[Invariant]) -> (usize, usize, usize) {
    let distances = invs
        .iter()
        .filter(|i| matches!(i.kind(), InvariantKind::FixedDistancePoint | InvariantKind::FixedDistanceLine))
        .count();
    (distances, invs.len(), invs.iter().map(rank).sum())
}

/// Lexicographically smallest tuple of distinct indices matching `lhs`.
fn find_match(lhs: &[Term], invs: &[Invariant]) -> Option<(Vec<usize>, Substitution)> {
    fn go(lhs: &[Term], invs: &[Invariant], used: &mut Vec<usize>, s: &Substitution) -> Option<Substitution> {
        let Some((p, rest)) = lhs.split_first() else { return Some(s.clone()) };
        for i in 0..invs.len() {
            if used.contains(&i) {
                continue;
            }
            let mut s2 = s.clone();
            if match_term(p, invs[i].term(), &mut s2) {
                used.push(i);
                if let Some(done) = go(rest, invs, used, &s2) {
                    return Some(done);
                }
                used.pop();
            }
        }
        None
    }
    let mut used = Vec::new();
    go(lhs, invs, &mut used, &Substitution::new()).map(|s| (used, s))
}

fn rewrite_once<'r>(
    rules: impl Iterator<Item = &'r ReformRule>,
    cur: &[Invariant],
    fresh: &mut Fresh,
) -> Result<Option<(Vec<Invariant>, ReformStep)>, ReformError> {
    for rule in rules {
        let n = fresh.bump();
        let lhs: Vec<Term> = rule.lhs.iter().map(|t| t.rename_apart(n)).collect();
        let Some((idx, s)) = find_match(&lhs, cur) else { continue };
        let produced = rule
            .rhs
            .iter()
            .map(|t| Invariant::new(t.rename_apart(n).apply(&s)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| ReformError::Malformed { rule: rule.name.clone(), source })?;
        let consumed: Vec<Term> = idx.iter().map(|&i| cur[i].term().clone()).collect();
        let mut next: Vec<Invariant> =
            cur.iter().enumerate().filter(|(i, _)| !idx.contains(i)).map(|(_, v)| v.clone()).collect();
        next.extend(produced.iter().cloned());
        let step = ReformStep {
            rule: rule.name.clone(),
            consumed,
            produced: produced.into_iter().map(Invariant::into_term).collect(),
        };
        return Ok(Some((next, step)));
    }
    Ok(None)
}

/// Rewrite `invs` to canonical form, returning it with the rewrite trace.
pub fn reformulate(
    kind: GeomKind,
    invs: &[Invariant],
    rb: &RuleBase,
) -> Result<(Vec<Invariant>, Vec<ReformStep>), ReformError> {
    let mut cur = invs.to_vec();
    let mut trace = Vec::new();
    let mut fresh = Fresh::default();
    while let Some((next, step)) = rewrite_once(rb.reform_rules_for(kind), &cur, &mut fresh)? {
        if measure(&next) >= measure(&cur) {
            return Err(ReformError::NotDecreasing(step.rule));
        }
        cur = next;
        trace.push(step);
    }
    Ok((cur, trace))
}

/// Apply each expansion rule at most once, in declaration order.
pub fn expand(kind: GeomKind, invs: &[Invariant], rb: &RuleBase) -> Result<Vec<Invariant>, ReformError> {
    let mut cur = invs.to_vec();
    let mut fresh = Fresh::default();
    for rule in rb.expand_rules_for(kind) {
        if let Some((next, _)) = rewrite_once(std::iter::once(rule), &cur, &mut fresh)? {
            cur = next;
        }
    }
    Ok(cur)
}

/// The canonical signatures: signatures of the reformulated
/// representatives of every raw signature, sorted.
pub fn derive_signature_scheme(kind: GeomKind, rb: &RuleBase) -> Result<Vec<Signature>, ReformError> {
    let geom = Term::atom("$g");
    let mut out = Vec::new();
    for raw in raw_signatures(kind) {
        let (canon, _) = reformulate(kind, &representative(&raw, &geom, BiasMode::Literal), rb)?;
        let sig = signature_of(kind, &canon)?;
        if !out.contains(&sig) {
            out.push(sig);
        }
    }
    out.sort();
    Ok(out)
}
