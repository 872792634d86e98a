//! Offline synthesis of one plan fragment per canonical signature.

use rayon::prelude::*;
use thiserror::Error;

use crate::kb::{representative, BiasMode, GeomKind, Signature};
use crate::phase1::{synthesize_skeletal, Phase1Config, Phase1Error, PlanningSpec};
use crate::phase2::{elaborate, eliminate_redundant, prioritize, ElabError, PlanFragment};
use crate::rulebase::RuleBase;
use crate::rules::{derive_signature_scheme, ReformError};
use crate::runtime::PlanLibrary;
use crate::term::Term;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error(transparent)]
    Phase1(#[from] Phase1Error),
    #[error(transparent)]
    Elaboration(#[from] ElabError),
    #[error(transparent)]
    Reform(#[from] ReformError),
}

/// How synthesis for one signature ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved { plans: usize, nodes: usize },
    /// The invariants remove more degrees of freedom than the geom has.
    Overconstrained,
    /// Solvable in principle; a rule is probably missing.
    MissingRule(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignatureReport {
    pub signature: Signature,
    pub outcome: Outcome,
    /// The search was cut off by its depth or node bound.
    pub depth_exceeded: bool,
}

/// The geom constant used in library fragments.
pub fn library_geom() -> Term {
    Term::atom("$g")
}

/// Every elaborated fragment for a signature, best first, along with the
/// number of skeletal plans and expanded nodes.
pub fn ranked_fragments(
    sig: &Signature,
    rb: &RuleBase,
    cfg: &Phase1Config,
) -> Result<(Vec<PlanFragment>, usize, usize), SynthError> {
    let kind = sig.kind();
    let geom = library_geom();
    let tba = representative(sig, &geom, BiasMode::Parametric);
    let spec = PlanningSpec { kind, geom: geom.clone(), preserved: vec![], tba: tba.clone() };
    let found = synthesize_skeletal(&spec, rb, cfg)?;
    let cleaned: Vec<_> = found.plans.iter().map(|p| eliminate_redundant(p, kind, &geom, rb)).collect();
    let mut out = Vec::new();
    let mut last = None;
    for plan in prioritize(&cleaned) {
        match elaborate(&plan, kind, &geom, &tba) {
            Ok(f) => out.push(f),
            Err(e) => last = Some(e),
        }
    }
    match (out.is_empty(), last) {
        (true, Some(e)) => Err(e.into()),
        (true, None) => Err(Phase1Error::NoPlan.into()),
        _ => Ok((out, found.plans.len(), found.nodes_expanded)),
    }
}

/// Best fragment for a signature.
pub fn synthesize_fragment(
    sig: &Signature,
    rb: &RuleBase,
    cfg: &Phase1Config,
) -> Result<(PlanFragment, usize, usize), SynthError> {
    let (mut all, plans, nodes) = ranked_fragments(sig, rb, cfg)?;
    Ok((all.swap_remove(0), plans, nodes))
}

/// Synthesize fragments for every canonical signature of `kind`, spread
/// over `jobs` threads (0 lets rayon decide).
pub fn synthesize_library(
    kind: GeomKind,
    rb: &RuleBase,
    cfg: &Phase1Config,
    jobs: usize,
) -> Result<(PlanLibrary, Vec<SignatureReport>), SynthError> {
    let sigs = derive_signature_scheme(kind, rb)?;
    let run = || {
        sigs.par_iter()
            .map(|s| (*s, synthesize_fragment(s, rb, cfg)))
            .collect::<Vec<_>>()
    };
    let results = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let mut lib = PlanLibrary::default();
    let mut reports = Vec::new();
    for (signature, r) in results {
        let depth_exceeded = matches!(r, Err(SynthError::Phase1(Phase1Error::DepthExceeded(_))));
        let outcome = match r {
            Ok((f, plans, nodes)) => {
                lib.fragments.insert(signature, f);
                Outcome::Solved { plans, nodes }
            }
            Err(_) if signature.dof_demand() > kind.dof() => Outcome::Overconstrained,
            Err(e) => Outcome::MissingRule(e.to_string()),
        };
        reports.push(SignatureReport { signature, outcome, depth_exceeded });
    }
    Ok((lib, reports))
}
