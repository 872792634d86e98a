//! `dof-forge`: synthesize plan-fragment libraries, solve scenes, verify
//! solutions and list signatures.
//!
//! Exit codes: 0 success, 1 unreadable or invalid input, 2 a signature hit
//! the search depth bound, 3 no plan fragment for a signature, 4 a plan
//! fragment could not be executed, 5 a residual exceeds the tolerance.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dof_forge::io::{parse_library, print_library, print_scene, read_scene, write_atomic, PlanLibraryFile};
use dof_forge::kb::raw_signatures;
use dof_forge::rulebase::BUILTIN_RULES;
use dof_forge::rules::derive_signature_scheme;
use dof_forge::runtime::{Chosen, TraceRecord};
use dof_forge::svg::render_svg;
use dof_forge::{
    solve_scene, synthesize_library, verify_scene, ExecConfig, ExecutionTrace, GeomKind, Outcome, Phase1Config,
    PlanLibrary, RuleBase, SolveError,
};

const EXIT_INPUT: u8 = 1;
const EXIT_DEPTH: u8 = 2;
const EXIT_MISSING: u8 = 3;
const EXIT_DIAGNOSTIC: u8 = 4;
const EXIT_VERIFY: u8 = 5;

#[derive(Parser)]
#[command(name = "dof-forge", version, about = "Plan-fragment synthesis and incremental solving of 2D geometric constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Circle,
    LineSegment,
}

impl From<Kind> for GeomKind {
    fn from(k: Kind) -> GeomKind {
        match k {
            Kind::Circle => GeomKind::Circle,
            Kind::LineSegment => GeomKind::LineSegment,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a plan-fragment library for every canonical signature of a geom kind.
    Synthesize {
        #[arg(long, value_enum)]
        geom: Kind,
        /// Rule file; the shipped rules when omitted.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = Phase1Config::default().max_depth)]
        depth: usize,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Satisfy a scene's constraints in order using plan-fragment libraries.
    Solve {
        scene: PathBuf,
        /// Library file; repeat for several geom kinds.
        #[arg(long = "plans", required = true)]
        plans: Vec<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write a step-by-step account of every search and action.
        #[arg(long)]
        explain: Option<PathBuf>,
    },
    /// Print the residual of every constraint of a scene.
    Verify {
        scene: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// List the canonical (or raw) signatures of a geom kind.
    Signatures {
        #[arg(long, value_enum)]
        geom: Kind,
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        rules: Option<PathBuf>,
    },
}

/// Failure with its exit code; the message goes to stderr.
struct Fail(u8, String);

type CmdResult = Result<ExitCode, Fail>;

fn input<E: std::fmt::Display>(what: &Path) -> impl FnOnce(E) -> Fail + '_ {
    move |e| Fail(EXIT_INPUT, format!("{}: {e}", what.display()))
}

fn load_rules(path: Option<&Path>) -> Result<(RuleBase, String), Fail> {
    match path {
        None => Ok((RuleBase::builtin().clone(), BUILTIN_RULES.to_string())),
        Some(p) => {
            let src = std::fs::read_to_string(p).map_err(input(p))?;
            let rb = RuleBase::parse(&src).map_err(input(p))?;
            Ok((rb, src))
        }
    }
}

fn synthesize(kind: GeomKind, rules: Option<&Path>, out: &Path, depth: usize, jobs: usize) -> CmdResult {
    let (rb, src) = load_rules(rules)?;
    let cfg = Phase1Config { max_depth: depth, ..Phase1Config::default() };
    let (lib, reports) =
        synthesize_library(kind, &rb, &cfg, jobs).map_err(|e| Fail(EXIT_INPUT, format!("rule base: {e}")))?;
    let file = PlanLibraryFile::new(kind, &src, cfg, &lib);
    write_atomic(out, &print_library(&file)).map_err(input(out))?;

    let (mut solved, mut nosol, mut missing) = (0, 0, 0);
    println!("{:<52} {:<16} detail", "signature", "outcome");
    for r in &reports {
        let (label, detail) = match &r.outcome {
            Outcome::Solved { plans, nodes } => {
                solved += 1;
                ("solved", format!("{plans} skeletal plans, {nodes} nodes"))
            }
            Outcome::Overconstrained => {
                nosol += 1;
                ("no-solution", "over-constrained".to_string())
            }
            Outcome::MissingRule(m) => {
                missing += 1;
                ("missing-rule", m.clone())
            }
        };
        println!("{:<52} {label:<16} {detail}", r.signature.to_string());
    }
    println!("specs {}  solved {solved}  no-solution {nosol}  missing-rule {missing}", reports.len());
    if reports.iter().any(|r| r.depth_exceeded) {
        eprintln!("some signatures exceeded search depth {depth}");
        return Ok(ExitCode::from(EXIT_DEPTH));
    }
    Ok(ExitCode::SUCCESS)
}

fn explain(traces: &[ExecutionTrace]) -> String {
    let mut out = String::new();
    for (i, t) in traces.iter().enumerate() {
        let _ = writeln!(out, "constraint {i}: geom {} via {}", t.geom, t.signature);
        for r in &t.records {
            let _ = match r {
                TraceRecord::Bind { local, value } => writeln!(out, "  bind {local} = {value}"),
                TraceRecord::Case { on, arm } => writeln!(out, "  case {on}: {arm}"),
                TraceRecord::ForMin { local, chosen, objective, evaluated } => {
                    let v = match chosen {
                        Chosen::Point([x, y]) => format!("({x}, {y})"),
                        Chosen::Scalar(x) => x.to_string(),
                    };
                    writeln!(out, "  for-min {local} = {v}  motion {objective}  over {evaluated} candidates")
                }
                TraceRecord::Apply { action, ground, residual } => {
                    writeln!(out, "  apply {action}\n    -> {ground}  residual {residual:e}")
                }
            };
        }
    }
    out
}

fn solve(
    scene_path: &Path,
    plans: &[PathBuf],
    rules: Option<&Path>,
    out: &Path,
    svg: Option<&Path>,
    explain_path: Option<&Path>,
) -> CmdResult {
    let (rb, src) = load_rules(rules)?;
    let scene = read_scene(scene_path).map_err(input(scene_path))?;
    let mut lib = PlanLibrary::default();
    let hash = dof_forge::io::rulebase_hash(&src);
    for p in plans {
        let text = std::fs::read_to_string(p).map_err(input(p))?;
        let file = parse_library(&text).map_err(input(p))?;
        if file.rulebase_hash != hash {
            eprintln!("warning: {} was synthesized from a different rule base", p.display());
        }
        lib.merge(file.to_library().map_err(input(p))?);
    }
    let (solved, traces) = match solve_scene(&scene, &lib, &rb, &ExecConfig::default()) {
        Ok(r) => r,
        Err(e @ SolveError::MissingPlanFragment { .. }) => return Err(Fail(EXIT_MISSING, e.to_string())),
        Err(e @ SolveError::Diagnostic(_)) => return Err(Fail(EXIT_DIAGNOSTIC, e.to_string())),
        Err(e @ SolveError::Invalid { .. }) => return Err(Fail(EXIT_INPUT, e.to_string())),
    };
    write_atomic(out, &print_scene(&solved)).map_err(input(out))?;
    if let Some(p) = svg {
        write_atomic(p, &render_svg(&scene, &solved, &traces)).map_err(input(p))?;
    }
    if let Some(p) = explain_path {
        write_atomic(p, &explain(&traces)).map_err(input(p))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(scene_path: &Path, tol: f64) -> CmdResult {
    let scene = read_scene(scene_path).map_err(input(scene_path))?;
    let report = verify_scene(&scene);
    println!("{:<4} {:<8} {:<12} {:<5} invariant", "#", "geom", "residual", "ok");
    for r in &report.rows {
        let ok = if r.residual <= tol { "yes" } else { "NO" };
        println!("{:<4} {:<8} {:<12.3e} {ok:<5} {}", r.constraint, r.geom, r.residual, r.invariant);
    }
    println!("max residual {:e}", report.max_residual());
    if report.passes(tol) {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("residual above tolerance {tol:e}");
        Ok(ExitCode::from(EXIT_VERIFY))
    }
}

fn signatures(kind: GeomKind, raw: bool, rules: Option<&Path>) -> CmdResult {
    let sigs = if raw {
        raw_signatures(kind)
    } else {
        let (rb, _) = load_rules(rules)?;
        derive_signature_scheme(kind, &rb).map_err(|e| Fail(EXIT_INPUT, e.to_string()))?
    };
    for s in &sigs {
        println!("{s}");
    }
    println!("{} {} signatures", sigs.len(), if raw { "raw" } else { "canonical" });
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Synthesize { geom, rules, out, depth, jobs } => {
            synthesize((*geom).into(), rules.as_deref(), out, *depth, *jobs)
        }
        Command::Solve { scene, plans, rules, out, svg, explain } => {
            solve(scene, plans, rules.as_deref(), out, svg.as_deref(), explain.as_deref())
        }
        Command::Verify { scene, tol } => verify(scene, *tol),
        Command::Signatures { geom, raw, rules } => signatures((*geom).into(), *raw, rules.as_deref()),
    };
    match r {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
