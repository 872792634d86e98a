//! Breadth-first search for skeletal plans: sequences of symbolic actions
//! that achieve a set of invariants while preserving another.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::kb::{GeomKind, Invariant};
use crate::rulebase::RuleBase;
use crate::rules::{expand, geo_match, reformulate, Fresh, ReformError, ReformStep};
use crate::term::{alpha_eq, is_instance, match_term, Substitution, Term};

/// Invariants already holding (and to be kept), and invariants to reach.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningSpec {
    pub kind: GeomKind,
    pub geom: Term,
    pub preserved: Vec<Invariant>,
    pub tba: Vec<Invariant>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletalPlan {
    pub steps: Vec<Term>,
    /// Invariants that hold before the first step and throughout.
    pub preserved: Vec<Invariant>,
    /// Everything that holds after the last step.
    pub achieved: Vec<Invariant>,
}

impl SkeletalPlan {
    /// Steps printed with variables renumbered; equal for plans that are
    /// identical up to renaming.
    pub fn key(&self) -> String {
        let seq = Term::App("seq".into(), self.steps.clone());
        seq.canonical_key()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase1Config {
    pub max_depth: usize,
    /// Safety valve on the number of expanded nodes.
    pub max_nodes: usize,
}

impl Default for Phase1Config {
    fn default() -> Self {
        Phase1Config { max_depth: 6, max_nodes: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Phase1Error {
    #[error("no plan within depth {0}")]
    DepthExceeded(usize),
    #[error("search space exhausted without a plan")]
    NoPlan,
    #[error(transparent)]
    Reform(#[from] ReformError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase1Result {
    pub plans: Vec<SkeletalPlan>,
    pub root_preserved: Vec<Invariant>,
    pub root_tba: Vec<Invariant>,
    pub reformulation: Vec<ReformStep>,
    pub nodes_expanded: usize,
}

#[derive(Debug, Clone)]
struct Node {
    preserved: Vec<Invariant>,
    tba: Vec<Invariant>,
    steps: Vec<Term>,
    depth: usize,
}

struct Actions {
    preserve: Vec<Term>,
    achieve: Vec<Term>,
}

fn state_key(p: &[Invariant], t: &[Invariant]) -> (Vec<String>, Vec<String>) {
    let keys = |v: &[Invariant]| {
        let mut k: Vec<String> = v.iter().map(|i| i.term().canonical_key()).collect();
        k.sort();
        k
    };
    (keys(p), keys(t))
}

fn instantiate(inv: &Invariant, kind: GeomKind, rb: &RuleBase, fresh: &mut Fresh) -> Actions {
    let mut out = Actions { preserve: Vec::new(), achieve: Vec::new() };
    for rule in rb.action_rules_for(kind) {
        let n = fresh.bump();
        let mut s = Substitution::new();
        if !match_term(&rule.pattern.rename_apart(n), inv.term(), &mut s) {
            continue;
        }
        let inst = |ts: &[Term]| ts.iter().map(|a| a.rename_apart(n).apply(&s)).collect::<Vec<_>>();
        for a in inst(&rule.to_preserve) {
            if !out.preserve.iter().any(|x| alpha_eq(x, &a)) {
                out.preserve.push(a);
            }
        }
        for a in inst(&rule.to_achieve) {
            if !out.achieve.iter().any(|x| alpha_eq(x, &a)) {
                out.achieve.push(a);
            }
        }
    }
    out
}

/// Rotations must keep the plane normal as axis; matching two pivots
/// yields an in-plane axis, which is meaningless in 2D.
fn admissible(action: &Term) -> bool {
    action.head() != Some("rotate") || action.args()[2].is_var()
}

fn has_free_parameter(t: &Term) -> bool {
    t.head() == Some(">>") && t.args()[1].as_const() == Some("arbitrary-point") || t.args().iter().any(has_free_parameter)
}

/// Every merge of `action` with one preserve action of each of `keep`.
fn fold_preserving(action: &Term, keep: &[&Actions], rb: &RuleBase, fresh: &mut Fresh) -> Vec<Term> {
    let mut cands = vec![action.clone()];
    for q in keep {
        let mut next: Vec<Term> = Vec::new();
        for c in &cands {
            for p in &q.preserve {
                if let Some(m) = geo_match(c, p, &rb.match_rules, fresh) {
                    if admissible(&m) && !next.iter().any(|x| alpha_eq(x, &m)) {
                        next.push(m);
                    }
                }
            }
        }
        cands = next;
        if cands.is_empty() {
            break;
        }
    }
    cands
}

/// Preserved invariants, invariants to achieve, and the rewrites applied.
pub type Root = (Vec<Invariant>, Vec<Invariant>, Vec<ReformStep>);

/// Reformulated root: invariants of the original preserved set stay
/// preserved, everything else must be achieved.
pub fn plan_root(spec: &PlanningSpec, rb: &RuleBase) -> Result<Root, ReformError> {
    let mut all = spec.preserved.clone();
    all.extend(spec.tba.iter().cloned());
    let (canon, trace) = reformulate(spec.kind, &all, rb)?;
    let canon = expand(spec.kind, &canon, rb)?;
    let (p, t): (Vec<_>, Vec<_>) = canon.into_iter().partition(|i| spec.preserved.contains(i));
    Ok((p, t, trace))
}

/// Breadth-first search for skeletal plans. A depth bound of zero disables
/// the search outright.
pub fn synthesize_skeletal(spec: &PlanningSpec, rb: &RuleBase, config: &Phase1Config) -> Result<Phase1Result, Phase1Error> {
    if config.max_depth == 0 {
        return Err(Phase1Error::DepthExceeded(0));
    }
    let (root_p, root_t, reformulation) = plan_root(spec, rb)?;
    let mut fresh = Fresh::default();
    let mut plans: Vec<SkeletalPlan> = Vec::new();
    let mut seen_plans = BTreeSet::new();
    let mut visited = BTreeSet::new();
    let mut cut = false;
    let mut expanded = 0;
    let mut queue = VecDeque::new();

    let mut record = |n: &Node, plans: &mut Vec<SkeletalPlan>| {
        let plan = SkeletalPlan { steps: n.steps.clone(), preserved: root_p.clone(), achieved: n.preserved.clone() };
        if seen_plans.insert(plan.key()) {
            plans.push(plan);
        }
    };

    let root = Node { preserved: root_p.clone(), tba: root_t.clone(), steps: Vec::new(), depth: 0 };
    visited.insert(state_key(&root.preserved, &root.tba));
    if root.tba.is_empty() {
        record(&root, &mut plans);
    } else {
        queue.push_back((root, true));
    }

    while let Some((node, is_root)) = queue.pop_front() {
        if node.depth >= config.max_depth || expanded >= config.max_nodes {
            cut = true;
            continue;
        }
        expanded += 1;
        let p_actions: Vec<Actions> = node.preserved.iter().map(|q| instantiate(q, spec.kind, rb, &mut fresh)).collect();
        let mut children: Vec<Node> = Vec::new();

        for (xi, x) in node.tba.iter().enumerate() {
            let x_actions = instantiate(x, spec.kind, rb, &mut fresh);
            let rest_t: Vec<Invariant> = node.tba.iter().enumerate().filter(|(i, _)| *i != xi).map(|(_, v)| v.clone()).collect();
            for a in &x_actions.achieve {
                if !admissible(a) {
                    continue;
                }
                let keep: Vec<&Actions> = p_actions.iter().collect();
                for m in fold_preserving(a, &keep, rb, &mut fresh) {
                    let mut p = node.preserved.clone();
                    p.push(x.clone());
                    children.push(Node { preserved: p, tba: rest_t.clone(), steps: push(&node.steps, m), depth: node.depth + 1 });
                }
                let clobbered: Vec<usize> = (0..node.preserved.len())
                    .filter(|&qi| !p_actions[qi].preserve.iter().any(|p| is_instance(a, p)))
                    .collect();
                if !clobbered.is_empty() {
                    let mut p: Vec<Invariant> = node
                        .preserved
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !clobbered.contains(i))
                        .map(|(_, v)| v.clone())
                        .collect();
                    p.push(x.clone());
                    let mut t = rest_t.clone();
                    t.extend(clobbered.iter().map(|&i| node.preserved[i].clone()));
                    children.push(Node { preserved: p, tba: t, steps: push(&node.steps, a.clone()), depth: node.depth + 1 });
                }
            }
        }

        for child in children {
            if child.tba.is_empty() {
                record(&child, &mut plans);
                continue;
            }
            if visited.insert(state_key(&child.preserved, &child.tba)) {
                queue.push_back((child, false));
            }
        }

        // Alternative configurations: move within the preserved invariants
        // to a different starting point, once per action kind.
        if is_root {
            let mut kinds = BTreeSet::new();
            for (qi, q) in p_actions.iter().enumerate() {
                for a in q.preserve.iter().filter(|a| has_free_parameter(a)) {
                    if !kinds.insert(a.head().unwrap_or_default().to_string()) {
                        continue;
                    }
                    let others: Vec<&Actions> = p_actions.iter().enumerate().filter(|(i, _)| *i != qi).map(|(_, v)| v).collect();
                    if let Some(m) = fold_preserving(a, &others, rb, &mut fresh).into_iter().next() {
                        queue.push_back((
                            Node { preserved: node.preserved.clone(), tba: node.tba.clone(), steps: vec![m], depth: 1 },
                            false,
                        ));
                    }
                }
            }
        }
    }

    if plans.is_empty() {
        return Err(if cut { Phase1Error::DepthExceeded(config.max_depth) } else { Phase1Error::NoPlan });
    }
    Ok(Phase1Result { plans, root_preserved: root_p, root_tba: root_t, reformulation, nodes_expanded: expanded })
}

fn push(steps: &[Term], s: Term) -> Vec<Term> {
    let mut v = steps.to_vec();
    v.push(s);
    v
}
