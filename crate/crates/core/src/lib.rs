//! Synthesis and execution of plan fragments for 2D geometric constraint
//! problems.

pub mod geometry;
pub mod io;
pub mod kb;
pub mod library;
pub mod phase1;
pub mod phase2;
pub mod rulebase;
pub mod rules;
pub mod runtime;
pub mod svg;
pub mod term;

pub use geometry::{Direction2, IntersectionResult, Locus1d, Point2, Tolerance, Vec2, Vector2};
pub use kb::{Bias, GeomKind, GeomState, Invariant, Shape, Signature};
pub use library::{synthesize_library, Outcome, SignatureReport};
pub use phase1::{Phase1Config, Phase1Error, SkeletalPlan};
pub use phase2::{MotionSpec, PlanFragment, SearchConfig};
pub use rulebase::RuleBase;
pub use runtime::{solve_scene, verify_scene, Diagnostic, ExecConfig, ExecutionTrace, PlanLibrary, Scene, SolveError};
pub use term::Term;
