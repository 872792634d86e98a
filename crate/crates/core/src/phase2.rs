//! From skeletal plans to executable plan fragments: redundancy
//! elimination, preference ordering, and elaboration of symbolic choice
//! points into least-motion searches and case splits.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{GeomKind, Invariant};
use crate::phase1::SkeletalPlan;
use crate::rulebase::RuleBase;
use crate::rules::Fresh;
use crate::term::{match_term, Substitution, Term};

/// Weights of the motion objective: squared displacement of the reference
/// point, squared arc length swept at the characteristic length, and
/// squared change of dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSpec {
    pub translate: f64,
    pub rotate: f64,
    pub scale: f64,
}

impl Default for MotionSpec {
    fn default() -> Self {
        MotionSpec { translate: 1.0, rotate: 1.0, scale: 1.0 }
    }
}

/// Discretization used by least-motion searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub samples: usize,
    pub bbox_inflation: f64,
    /// Extra passes that rescan around the incumbent at finer spacing.
    pub refine_passes: usize,
    pub max_sweeps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { samples: 64, bbox_inflation: 2.0, refine_passes: 2, max_sweeps: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    /// Points of a locus value; `seed` names the point being moved, whose
    /// nearest locus point is tried first.
    Locus { locus: Term, seed: Option<Term> },
    /// A finite list of points held by a local.
    Points { local: String },
    Interval { lo: Term, hi: Term },
}

/// Plan-fragment instructions. Locals are `@`-prefixed constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Step {
    Bind { local: String, expr: Term },
    Apply { action: Term },
    /// Choose `local` from `domain` to minimize the motion of `body`.
    ForMin { local: String, domain: Domain, body: Vec<Step> },
    Case { on: String, points: Arm, coincident: Arm, empty: Vec<Step> },
    Abort { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub local: String,
    pub body: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFragment {
    pub kind: GeomKind,
    pub geom: Term,
    /// Constants bound at run time.
    pub params: Vec<String>,
    pub preserved: Vec<Term>,
    pub achieves: Vec<Term>,
    pub skeleton: Vec<Term>,
    pub body: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElabError {
    #[error("free parameter {0} has no search domain")]
    UnboundParameter(String),
}

fn positional(kind: GeomKind) -> &'static [&'static str] {
    kind.point_accessors()
}

fn dimension_field(kind: GeomKind) -> &'static str {
    match kind {
        GeomKind::Circle => "radius",
        GeomKind::LineSegment => "length",
    }
}

fn is_access(t: &Term, geom: &Term, fields: &[&str]) -> bool {
    t.head() == Some(">>") && &t.args()[0] == geom && t.args()[1].as_const().is_some_and(|f| fields.contains(&f))
}

/// `(v- target (>> geom acc))` split into target and accessor.
fn translate_target<'a>(vec: &'a Term, geom: &Term, kind: GeomKind) -> Option<(&'a Term, &'a Term)> {
    (vec.head() == Some("v-") && is_access(&vec.args()[1], geom, positional(kind))).then(|| (&vec.args()[0], &vec.args()[1]))
}

/// Direction of a line-valued term, when it can be read off symbolically.
fn direction_term(l: &Term) -> Option<Term> {
    match l.head() {
        Some("make-line-locus") => Some(l.args()[1].clone()),
        Some("make-displaced-line") => direction_term(&l.args()[0]),
        _ if l.as_const().is_some() => Some(Term::access(l.clone(), "direction")),
        _ => None,
    }
}

fn simplify(t: &Term) -> Term {
    t.map_bottom_up(&mut |x| {
        if x.head() == Some("make-line-locus") {
            let (p, d) = (&x.args()[0], &x.args()[1]);
            if p.head() == Some(">>") && p.args()[1].as_const() == Some("arbitrary-point") {
                let l = &p.args()[0];
                if direction_term(l).as_ref() == Some(d) {
                    return l.clone();
                }
            }
        }
        if x.head() == Some("0d-intersection") {
            let (a, b) = (&x.args()[0], &x.args()[1]);
            if b.to_string() < a.to_string() {
                return Term::app("0d-intersection", vec![b.clone(), a.clone()]);
            }
        }
        x
    })
}

/// Locus rewrites valid while the preserved invariants hold: the locus a
/// preserving translation moves along equals the locus that achieves the
/// invariant.
fn preserved_equivalences(plan: &SkeletalPlan, kind: GeomKind, geom: &Term, rb: &RuleBase) -> Vec<(Term, Term)> {
    let mut out = Vec::new();
    let mut fresh = Fresh::default();
    let arb = |t: &Term| {
        let (target, acc) = translate_target(t.args().get(1)?, geom, kind)?;
        (target.head() == Some(">>") && target.args()[1].as_const() == Some("arbitrary-point"))
            .then(|| (target.args()[0].clone(), acc.clone()))
    };
    for q in &plan.preserved {
        for rule in rb.action_rules_for(kind) {
            let n = fresh.bump();
            let mut s = Substitution::new();
            if !match_term(&rule.pattern.rename_apart(n), q.term(), &mut s) {
                continue;
            }
            for p in &rule.to_preserve {
                let Some((pl, pa)) = arb(&p.rename_apart(n).apply(&s)) else { continue };
                for a in &rule.to_achieve {
                    if let Some((al, aa)) = arb(&a.rename_apart(n).apply(&s)) {
                        if pa == aa && pl != al && pl.is_ground() && al.is_ground() {
                            out.push((pl.clone(), al));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Merge consecutive translations, simplify loci and normalize them under
/// the preserved invariants.
pub fn eliminate_redundant(plan: &SkeletalPlan, kind: GeomKind, geom: &Term, rb: &RuleBase) -> SkeletalPlan {
    let mut steps: Vec<Term> = Vec::new();
    for s in &plan.steps {
        let merged = steps.last().and_then(|prev| merge_translates(prev, s, kind, geom));
        match merged {
            Some(m) => {
                steps.pop();
                steps.push(m);
            }
            None => steps.push(s.clone()),
        }
    }
    let eqs = preserved_equivalences(plan, kind, geom, rb);
    let steps = steps
        .iter()
        .map(|s| {
            let mut t = simplify(s);
            for (from, to) in &eqs {
                t = t.replace(from, to);
            }
            simplify(&t)
        })
        .collect();
    SkeletalPlan { steps, preserved: plan.preserved.clone(), achieved: plan.achieved.clone() }
}

/// Two translations of the same geom as one: the second target is
/// re-expressed in terms of the state before the first.
fn merge_translates(a: &Term, b: &Term, kind: GeomKind, geom: &Term) -> Option<Term> {
    if a.head() != Some("translate") || b.head() != Some("translate") || &a.args()[0] != geom || &b.args()[0] != geom {
        return None;
    }
    let (t1, acc1) = translate_target(&a.args()[1], geom, kind)?;
    let (t2, acc2) = translate_target(&b.args()[1], geom, kind)?;
    let shift = Term::app("v-", vec![t1.clone(), acc1.clone()]);
    let t2 = t2.map_bottom_up(&mut |x| {
        if &x == acc1 {
            t1.clone()
        } else if is_access(&x, geom, positional(kind)) {
            Term::app("v+", vec![x, shift.clone()])
        } else {
            x
        }
    });
    Some(Term::app("translate", vec![geom.clone(), Term::app("v-", vec![t2, acc2.clone()])]))
}

/// `t` is an instance of `g`, where an arbitrary point of a locus also
/// covers any intersection of that locus with another.
fn geo_instance(t: &Term, g: &Term, s: &mut Substitution) -> bool {
    match g {
        Term::Var(v) => match s.get(v) {
            Some(b) => b == t,
            None => {
                s.insert(v.clone(), t.clone());
                true
            }
        },
        Term::App(h, ga) => {
            if h == ">>" && ga[1].as_const() == Some("arbitrary-point") && t.head() == Some("0d-intersection") {
                for side in t.args() {
                    let mut s2 = s.clone();
                    if geo_instance(side, &ga[0], &mut s2) {
                        *s = s2;
                        return true;
                    }
                }
            }
            match t {
                Term::App(h2, ta) if h == h2 && ga.len() == ta.len() => {
                    ga.iter().zip(ta).all(|(x, y)| geo_instance(y, x, s))
                }
                _ => false,
            }
        }
        _ => g == t,
    }
}

/// Whether every step of `b` specializes a distinct step of `a`, in order.
pub fn subsumes(a: &SkeletalPlan, b: &SkeletalPlan) -> bool {
    if a.steps.len() <= b.steps.len() && a.key() == b.key() {
        return false;
    }
    let mut s = Substitution::new();
    let mut i = 0;
    for step in &b.steps {
        loop {
            let Some(g) = a.steps.get(i) else { return false };
            i += 1;
            let mut s2 = s.clone();
            if geo_instance(step, g, &mut s2) {
                s = s2;
                break;
            }
        }
    }
    true
}

/// Preference weight: more distinct action kinds, then fewer steps, then
/// fewer steps that can fail on a bad dimension.
pub fn weight(plan: &SkeletalPlan) -> (usize, i64, i64) {
    let kinds: BTreeSet<&str> = plan.steps.iter().filter_map(Term::head).collect();
    let fragile = plan.steps.iter().filter(|s| s.head() == Some("scale") && !s.args()[2].is_var()).count();
    (kinds.len(), -(plan.steps.len() as i64), -(fragile as i64))
}

/// Deduplicate and order plans: maximal under subsumption first, then by
/// descending weight, then by printed form.
pub fn prioritize(plans: &[SkeletalPlan]) -> Vec<SkeletalPlan> {
    let mut uniq: Vec<SkeletalPlan> = Vec::new();
    for p in plans {
        if !uniq.iter().any(|q| q.key() == p.key()) {
            uniq.push(p.clone());
        }
    }
    let dominated: Vec<bool> =
        uniq.iter().map(|p| uniq.iter().any(|q| q.key() != p.key() && subsumes(q, p))).collect();
    let mut order: Vec<usize> = (0..uniq.len()).collect();
    order.sort_by(|&i, &j| {
        dominated[i]
            .cmp(&dominated[j])
            .then_with(|| weight(&uniq[j]).cmp(&weight(&uniq[i])))
            .then_with(|| uniq[i].key().cmp(&uniq[j].key()))
    });
    order.into_iter().map(|i| uniq[i].clone()).collect()
}

enum Service {
    Intersection(Term),
    Arbitrary(Term),
    Free(Term),
}

/// Innermost subterm that needs run-time choice, in post-order.
fn find_service(t: &Term, in_axis: bool) -> Option<Service> {
    match t {
        Term::Var(_) if !in_axis => Some(Service::Free(t.clone())),
        Term::App(h, a) => {
            for (i, x) in a.iter().enumerate() {
                if let Some(s) = find_service(x, h == "rotate" && i == 2) {
                    return Some(s);
                }
            }
            if h == "0d-intersection" {
                Some(Service::Intersection(t.clone()))
            } else if h == ">>" && a[1].as_const() == Some("arbitrary-point") {
                Some(Service::Arbitrary(t.clone()))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// The point a chosen target replaces: `(v- @q X)` gives `X`.
fn seed_for(step: &Term, local: &Term) -> Option<Term> {
    if step.head() == Some("v-") && &step.args()[0] == local {
        return Some(step.args()[1].clone());
    }
    step.args().iter().find_map(|a| seed_for(a, local))
}

/// Search interval for a free scalar in an action.
fn free_interval(step: &Term, var: &Term, kind: GeomKind, geom: &Term) -> Option<(Term, Term)> {
    let dim = Term::access(geom.clone(), dimension_field(kind));
    match step.head() {
        Some("rotate") if &step.args()[3] == var => {
            Some((Term::Num(-std::f64::consts::PI), Term::Num(std::f64::consts::PI)))
        }
        Some("scale") if &step.args()[2] == var => Some((Term::app("neg", vec![dim.clone()]), dim)),
        _ => None,
    }
}

struct Elab<'a> {
    kind: GeomKind,
    geom: &'a Term,
    counter: usize,
}

impl Elab<'_> {
    fn steps(&mut self, steps: &[Term]) -> Result<Vec<Step>, ElabError> {
        let Some((first, rest)) = steps.split_first() else { return Ok(Vec::new()) };
        let Some(service) = find_service(first, false) else {
            let action = first.map_bottom_up(&mut |x| if x.is_var() { Term::atom("normal") } else { x });
            let mut out = vec![Step::Apply { action }];
            out.extend(self.steps(rest)?);
            return Ok(out);
        };
        self.counter += 1;
        let k = self.counter;
        let q = format!("@q{k}");
        let qt = Term::atom(&q);
        let cont = |this: &mut Self, sub: &Term| -> Result<Vec<Step>, ElabError> {
            let mut next = vec![first.replace(sub, &qt)];
            next.extend(rest.iter().cloned());
            this.steps(&next)
        };
        match service {
            Service::Intersection(sub) => {
                let seed = seed_for(&first.replace(&sub, &qt), &qt);
                let body = cont(self, &sub)?;
                let (i, pts, loc) = (format!("@i{k}"), format!("@pts{k}"), format!("@loc{k}"));
                Ok(vec![
                    Step::Bind { local: i.clone(), expr: sub.clone() },
                    Step::Case {
                        on: i,
                        points: Arm {
                            local: pts.clone(),
                            body: vec![Step::ForMin {
                                local: q.clone(),
                                domain: Domain::Points { local: pts },
                                body: body.clone(),
                            }],
                        },
                        coincident: Arm {
                            local: loc.clone(),
                            body: vec![Step::ForMin {
                                local: q,
                                domain: Domain::Locus { locus: Term::atom(&loc), seed },
                                body,
                            }],
                        },
                        empty: vec![Step::Abort {
                            reason: format!("loci do not intersect: {} and {}", sub.args()[0], sub.args()[1]),
                        }],
                    },
                ])
            }
            Service::Arbitrary(sub) => {
                let seed = seed_for(&first.replace(&sub, &qt), &qt);
                let body = cont(self, &sub)?;
                let l = format!("@l{k}");
                Ok(vec![
                    Step::Bind { local: l.clone(), expr: sub.args()[0].clone() },
                    Step::ForMin { local: q, domain: Domain::Locus { locus: Term::atom(&l), seed }, body },
                ])
            }
            Service::Free(var) => {
                let (lo, hi) = free_interval(first, &var, self.kind, self.geom)
                    .ok_or_else(|| ElabError::UnboundParameter(var.to_string()))?;
                let body = cont(self, &var)?;
                Ok(vec![Step::ForMin { local: q, domain: Domain::Interval { lo, hi }, body }])
            }
        }
    }
}

fn constants(ts: &[Term], out: &mut Vec<String>) {
    for t in ts {
        match t {
            Term::Const(c) if c.starts_with('$') => {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
            Term::App(_, a) => constants(a, out),
            _ => {}
        }
    }
}

/// Turn a skeletal plan into an executable fragment.
pub fn elaborate(
    plan: &SkeletalPlan,
    kind: GeomKind,
    geom: &Term,
    achieves: &[Invariant],
) -> Result<PlanFragment, ElabError> {
    let body = Elab { kind, geom, counter: 0 }.steps(&plan.steps)?;
    let preserved: Vec<Term> = plan.preserved.iter().map(|i| i.term().clone()).collect();
    let achieves: Vec<Term> = achieves.iter().map(|i| i.term().clone()).collect();
    let mut params = Vec::new();
    constants(std::slice::from_ref(geom), &mut params);
    constants(&preserved, &mut params);
    constants(&achieves, &mut params);
    constants(&plan.steps, &mut params);
    Ok(PlanFragment { kind, geom: geom.clone(), params, preserved, achieves, skeleton: plan.steps.clone(), body })
}
