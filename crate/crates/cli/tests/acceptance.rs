//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dof_forge::geometry::{intersect_0d, make_line_locus};
use dof_forge::kb::{signature_of, Bias};
use dof_forge::library::ranked_fragments;
use dof_forge::phase1::{synthesize_skeletal, PlanningSpec};
use dof_forge::phase2::{eliminate_redundant, prioritize};
use dof_forge::rulebase::BUILTIN_RULES;
use dof_forge::rules::reformulate;
use dof_forge::runtime::{Constraint, Entity, TraceRecord};
use dof_forge::term::{match_term, t, Substitution, Term};
use dof_forge::{
    solve_scene, synthesize_library, verify_scene, Direction2, ExecConfig, GeomKind, GeomState, IntersectionResult,
    Invariant, Locus1d, Phase1Config, PlanLibrary, RuleBase, Scene, Shape, Signature, SolveError, Tolerance, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Number, name, time budget in seconds, check.
type Criterion = (u8, &'static str, u64, fn() -> Outcome);

const EXPECTED_CIRCLE_SIGNATURES: [&str; 10] = [
    "<Center-Free,Radius-Free, FixedPts-0,FixedLines-0>",
    "<Center-Free,Radius-Free, FixedPts-0,FixedLines-1>",
    "<Center-Free,Radius-Free, FixedPts-1,FixedLines-0>",
    "<Center-Free,Radius-Fixed, FixedPts-0,FixedLines-0>",
    "<Center-L1,Radius-Free, FixedPts-0,FixedLines-0>",
    "<Center-L1,Radius-Free, FixedPts-0,FixedLines-1>",
    "<Center-L1,Radius-Free, FixedPts-1,FixedLines-0>",
    "<Center-L1,Radius-Fixed, FixedPts-0,FixedLines-0>",
    "<Center-Fixed,Radius-Free, FixedPts-0,FixedLines-0>",
    "<Center-Fixed,Radius-Fixed, FixedPts-0,FixedLines-0>",
];

const BISECTOR: &str = "(angular-bisector (make-displaced-line $L1 BIAS_LEFT $dist1) \
                        (make-displaced-line $L2 BIAS_RIGHT $dist2) BIAS_COUNTERCLOCKWISE BIAS_CLOCKWISE)";

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dof-forge")).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn signature_rows(out: &str) -> Vec<String> {
    out.lines().filter(|l| l.starts_with('<')).map(str::to_string).collect()
}

fn library() -> &'static PlanLibrary {
    static LIB: OnceLock<PlanLibrary> = OnceLock::new();
    LIB.get_or_init(|| {
        let mut lib = PlanLibrary::default();
        for kind in GeomKind::ALL {
            lib.merge(synthesize_library(kind, RuleBase::builtin(), &Phase1Config::default(), 0).unwrap().0);
        }
        lib
    })
}

fn center_on_locus_one_line() -> Signature {
    "<Center-L1,Radius-Free, FixedPts-0,FixedLines-1>".parse().unwrap()
}

/// The library with the translate-only fragment in place of the preferred
/// one for a center on a locus plus one line distance.
fn translate_only_library() -> &'static PlanLibrary {
    static LIB: OnceLock<PlanLibrary> = OnceLock::new();
    LIB.get_or_init(|| {
        let sig = center_on_locus_one_line();
        let (frags, _, _) = ranked_fragments(&sig, RuleBase::builtin(), &Phase1Config::default()).unwrap();
        let only = frags
            .into_iter()
            .find(|f| f.skeleton.iter().all(|s| s.head() == Some("translate")))
            .expect("a translate-only fragment exists");
        let mut lib = library().clone();
        lib.fragments.insert(sig, only);
        lib
    })
}

fn inv(src: &str) -> Invariant {
    Invariant::new(t(src)).unwrap()
}

fn dir(angle: f64) -> Direction2 {
    Direction2::from_angle(angle)
}

fn line_entity(through: Vec2, d: Direction2) -> Entity {
    Entity::Line(make_line_locus(through, d))
}

fn bias_atom(s: f64) -> &'static str {
    if s > 0.0 {
        Bias::Ccw.atom()
    } else {
        Bias::Cw.atom()
    }
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

fn pt(rng: &mut ChaCha8Rng, r: f64) -> Vec2 {
    Vec2::new(rng.random_range(-r..r), rng.random_range(-r..r))
}

fn circle_scene(entities: BTreeMap<String, Entity>, center: Vec2, radius: f64, constraints: Vec<Constraint>) -> Scene {
    Scene {
        tolerance: Tolerance::default(),
        entities,
        geoms: vec![GeomState::new("c", Shape::Circle { center, radius })],
        constraints,
    }
}

fn fdl(line: &str, d: f64, s: f64) -> Constraint {
    Constraint { geom: "c".into(), invariant: inv(&format!("(fixed-distance-line $c ${line} {d} {})", bias_atom(s))) }
}

/// Two crossing lines, a circle anywhere, and a distance from each line.
fn two_line_scene(rng: &mut ChaCha8Rng) -> Scene {
    let apex = pt(rng, 3.0);
    let a1 = rng.random_range(0.0..TAU);
    let a2 = a1 + sign(rng) * rng.random_range(30f64..150.0).to_radians();
    let mut entities = BTreeMap::new();
    entities.insert("L1".to_string(), line_entity(apex, dir(a1)));
    entities.insert("L2".to_string(), line_entity(apex, dir(a2)));
    let s1 = sign(rng);
    let constraints = vec![
        fdl("L1", rng.random_range(0.2..1.5), s1),
        fdl("L2", rng.random_range(0.2..1.5), -s1),
    ];
    circle_scene(entities, pt(rng, 4.0), rng.random_range(0.3..2.0), constraints)
}

/// Distinct parallel lines with a tangency solution on opposite sides.
fn parallel_scene(rng: &mut ChaCha8Rng) -> Scene {
    let u = dir(rng.random_range(0.0..TAU));
    let n = u.left_normal();
    let target = pt(rng, 3.0);
    let r = rng.random_range(0.3..2.0);
    let (d1, d2) = (rng.random_range(0.2..1.5), rng.random_range(0.2..1.5));
    let s1 = sign(rng);
    let mut entities = BTreeMap::new();
    entities.insert("L1".to_string(), line_entity(target - n * (s1 * (d1 + r)), u));
    entities.insert("L2".to_string(), line_entity(target + n * (s1 * (d2 + r)), u));
    circle_scene(entities, pt(rng, 4.0), rng.random_range(0.3..2.0), vec![fdl("L1", d1, s1), fdl("L2", d2, -s1)])
}

fn c1() -> Outcome {
    let (code, out) = cli(&["signatures", "--geom", "circle"])?;
    ensure(code == 0, || format!("exit {code}"))?;
    let got: BTreeSet<String> = signature_rows(&out).into_iter().collect();
    let want: BTreeSet<String> = EXPECTED_CIRCLE_SIGNATURES.iter().map(|s| s.to_string()).collect();
    ensure(got == want, || format!("mismatch: extra {:?}, missing {:?}", &got - &want, &want - &got))?;
    let (_, raw) = cli(&["signatures", "--geom", "circle", "--raw"])?;
    let n = signature_rows(&raw).len();
    ensure(n == 54, || format!("{n} raw signatures"))?;
    Ok(format!("{} canonical set-equal to the expected list, 54 raw", got.len()))
}

fn c2() -> Outcome {
    let (_, raw) = cli(&["signatures", "--geom", "line-segment", "--raw"])?;
    let (_, canon) = cli(&["signatures", "--geom", "line-segment"])?;
    let (r, c) = (signature_rows(&raw).len(), signature_rows(&canon).len());
    ensure(r == 108 && c == 19, || format!("{r} raw, {c} canonical"))?;
    Ok("108 raw -> 19 canonical".into())
}

fn c3() -> Outcome {
    let pair = [
        inv("(fixed-distance-line $c $L1 $dist1 BIAS_COUNTERCLOCKWISE)"),
        inv("(fixed-distance-line $c $L2 $dist2 BIAS_CLOCKWISE)"),
    ];
    let (out, steps) = reformulate(GeomKind::Circle, &pair, RuleBase::builtin()).map_err(|e| e.to_string())?;
    let want = t(&format!("(1d-constrained-point $c (>> $c center) {BISECTOR})"));
    ensure(out.iter().any(|i| i.term() == &want), || format!("got {out:?}"))?;
    ensure(out.contains(&pair[0]), || "first line distance not kept".into())?;
    ensure(steps.iter().map(|s| s.rule.as_str()).eq(["RR-1"]), || format!("steps {steps:?}"))?;
    Ok("RR-1 yields the bisector locus term".into())
}

fn c4() -> Outcome {
    let spec = PlanningSpec {
        kind: GeomKind::Circle,
        geom: t("$c"),
        preserved: vec![inv("(fixed-distance-line $c $L1 $dist1 BIAS_COUNTERCLOCKWISE)")],
        tba: vec![inv("(fixed-distance-line $c $L2 $dist2 BIAS_CLOCKWISE)")],
    };
    let r = synthesize_skeletal(&spec, RuleBase::builtin(), &Phase1Config::default()).map_err(|e| e.to_string())?;
    let to = |target: &str| format!("(translate $c (v- {target} (>> $c center)))");
    let parallel = "(make-line-locus (>> $c center) (>> $L1 direction))";
    let bis_arb = to(&format!("(>> {BISECTOR} arbitrary-point)"));
    let any_meet = to("(0d-intersection ?a ?b)");
    // The four solutions as described: meet the bisector moving parallel to
    // L1; bisector then intersection; parallel line then intersection;
    // bisector then scale.
    let described = [
        vec![to(&format!("(0d-intersection {BISECTOR} {parallel})"))],
        vec![bis_arb.clone(), any_meet.clone()],
        vec![to(&format!("(>> {parallel} arbitrary-point)")), any_meet],
        vec![bis_arb, "(scale $c ?p ?k)".to_string()],
    ];
    let seq = |steps: Vec<Term>| Term::app("seq", steps);
    let patterns: Vec<Term> = described.iter().map(|d| seq(d.iter().map(|s| t(s)).collect())).collect();
    ensure(r.plans.len() == 4, || format!("{} plans", r.plans.len()))?;
    let mut hit = [0usize; 4];
    for p in &r.plans {
        let seq = seq(p.steps.clone());
        let m: Vec<usize> = (0..4).filter(|&i| match_term(&patterns[i], &seq, &mut Substitution::new())).collect();
        ensure(m.len() == 1, || format!("plan {seq} matches {m:?}"))?;
        hit[m[0]] += 1;
    }
    ensure(hit == [1, 1, 1, 1], || format!("pattern hits {hit:?}"))?;

    let cleaned: Vec<_> = r.plans.iter().map(|p| eliminate_redundant(p, GeomKind::Circle, &t("$c"), RuleBase::builtin())).collect();
    let distinct: BTreeSet<String> = cleaned.iter().map(|p| p.key()).collect();
    ensure(distinct.len() == 2, || format!("{} distinct after redundancy elimination", distinct.len()))?;
    let ranked = prioritize(&cleaned);
    let heads: Vec<&str> = ranked[0].steps.iter().filter_map(Term::head).collect();
    ensure(heads == ["translate", "scale"], || format!("first ranked {heads:?}"))?;
    Ok("4 skeletal plans, 2 after redundancy elimination, translate+scale first".into())
}

fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let scene = two_line_scene(&mut rng);
        let (solved, _) = solve_scene(&scene, library(), RuleBase::builtin(), &ExecConfig::default())
            .map_err(|e| format!("scene {i}: {e}"))?;
        let m = verify_scene(&solved).max_residual();
        ensure(m <= 1e-9, || format!("scene {i}: residual {m:e}"))?;
        worst = worst.max(m);
    }
    Ok(format!("200 scenes, max residual {worst:.1e}"))
}

fn c6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let scene = parallel_scene(&mut rng);
        let (solved, _) = solve_scene(&scene, library(), RuleBase::builtin(), &ExecConfig::default())
            .map_err(|e| format!("scene {i}, preferred fragment: {e}"))?;
        let m = verify_scene(&solved).max_residual();
        ensure(m <= 1e-9, || format!("scene {i}: residual {m:e}"))?;
        worst = worst.max(m);
        match solve_scene(&scene, translate_only_library(), RuleBase::builtin(), &ExecConfig::default()) {
            Err(SolveError::Diagnostic(d)) if d.routine == "abort" && d.cause.contains("do not intersect") => {}
            other => return Err(format!("scene {i}, translate-only fragment: {other:?}")),
        }
    }
    Ok(format!("100 scenes: translate-only aborts, preferred solves (max residual {worst:.1e})"))
}

fn c7() -> Outcome {
    let tol = Tolerance::default();
    let a = make_line_locus(Vec2::new(0.0, 1.0), dir(0.0));
    let b = make_line_locus(Vec2::new(-7.5, 1.0), Direction2::new(Vec2::new(-1.0, 0.0)).unwrap());
    ensure(matches!(intersect_0d(&a, &b, &tol), IntersectionResult::Coincident(_)), || "lines".into())?;
    let c = Locus1d::circle(Vec2::new(1.0, 2.0), 3.0).unwrap();
    ensure(matches!(intersect_0d(&c, &c, &tol), IntersectionResult::Coincident(_)), || "circles".into())?;

    // Lines y=0 and y=4; after the first constraint the center sits on the
    // bisector midline, so moving parallel to L1 meets it everywhere.
    let mut entities = BTreeMap::new();
    entities.insert("L1".to_string(), line_entity(Vec2::new(0.0, 0.0), dir(0.0)));
    entities.insert("L2".to_string(), line_entity(Vec2::new(0.0, 4.0), dir(0.0)));
    let scene = circle_scene(entities, Vec2::new(5.0, 7.0), 1.0, vec![fdl("L1", 1.0, 1.0), fdl("L2", 1.0, -1.0)]);
    let (solved, traces) = solve_scene(&scene, translate_only_library(), RuleBase::builtin(), &ExecConfig::default())
        .map_err(|e| e.to_string())?;
    let arm = traces[1].records.iter().find_map(|r| match r {
        TraceRecord::Case { arm, .. } => Some(arm.clone()),
        _ => None,
    });
    ensure(arm.as_deref() == Some("coincident"), || format!("case arm {arm:?}"))?;
    let m = verify_scene(&solved).max_residual();
    ensure(m <= 1e-9, || format!("residual {m:e}"))?;
    Ok("Coincident returned and executed through its arm".into())
}

/// Center of the circle of radius `r` at the required distances from both
/// lines, straight from the line equations.
fn tangent_center(lines: [(Vec2, Direction2, f64, f64); 2], r: f64) -> Option<Vec2> {
    let [(p1, u1, d1, s1), (p2, u2, d2, s2)] = lines;
    let (n1, n2) = (u1.left_normal(), u2.left_normal());
    let (k1, k2) = (n1.dot(p1) + s1 * (d1 + r), n2.dot(p2) + s2 * (d2 + r));
    let det = n1.x * n2.y - n1.y * n2.x;
    (det.abs() > 1e-12).then(|| Vec2::new((k1 * n2.y - k2 * n1.y) / det, (n1.x * k2 - n2.x * k1) / det))
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut margin = f64::INFINITY;
    for i in 0..100 {
        let apex = pt(&mut rng, 3.0);
        let a1 = rng.random_range(0.0..TAU);
        let (u1, u2) = (dir(a1), dir(a1 + sign(&mut rng) * rng.random_range(30f64..150.0).to_radians()));
        let (c0, r0) = (pt(&mut rng, 4.0), rng.random_range(0.3..2.0));
        let (d1, d2) = (rng.random_range(0.2..1.5), rng.random_range(0.2..1.5));
        let (s1, s2) = (sign(&mut rng), sign(&mut rng));
        // L1 already at the right distance from the starting circle.
        let p1 = c0 - u1.left_normal() * (s1 * (d1 + r0));
        let mut entities = BTreeMap::new();
        entities.insert("L1".to_string(), line_entity(p1, u1));
        entities.insert("L2".to_string(), line_entity(apex, u2));
        let mut scene = circle_scene(entities, c0, r0, vec![fdl("L2", d2, s2)]);
        scene.geoms[0].preserved = vec![fdl("L1", d1, s1).invariant];
        let (solved, _) = solve_scene(&scene, library(), RuleBase::builtin(), &ExecConfig::default())
            .map_err(|e| format!("scene {i}: {e}"))?;
        let m = verify_scene(&solved).max_residual();
        ensure(m <= 1e-9, || format!("scene {i}: residual {m:e}"))?;
        let Shape::Circle { center, radius } = solved.geoms[0].shape else { unreachable!() };
        let motion = (center - c0).norm_sq() + (radius - r0).powi(2);

        let mut best = f64::INFINITY;
        let mut feasible = 0;
        for _ in 0..1000 {
            let r = rng.random_range(1e-6..40.0);
            let Some(q) = tangent_center([(p1, u1, d1, s1), (apex, u2, d2, s2)], r) else { continue };
            feasible += 1;
            best = best.min((q - c0).norm_sq() + (r - r0).powi(2));
        }
        ensure(feasible > 0, || format!("scene {i}: no feasible samples"))?;
        ensure(motion <= best + 1e-3, || format!("scene {i}: motion {motion} vs sampled {best}"))?;
        margin = margin.min(best - motion);
    }
    Ok(format!("100 scenes, least sampled-minus-found motion {margin:.2e}"))
}

/// A constraint of the given type that the target circle satisfies.
fn satisfied_by(kind: u8, target: Vec2, r: f64, rng: &mut ChaCha8Rng, entities: &mut BTreeMap<String, Entity>) -> String {
    let tag = entities.len();
    match kind {
        0 => {
            let u = dir(rng.random_range(0.0..TAU));
            let (d, s) = (rng.random_range(0.2..1.5), sign(rng));
            let name = format!("L{tag}");
            entities.insert(name.clone(), line_entity(target - u.left_normal() * (s * (d + r)), u));
            format!("(fixed-distance-line $c ${name} {d} {})", bias_atom(s))
        }
        1 => {
            entities.insert(format!("P{tag}"), Entity::Point(target));
            format!("(invariant-point $c (>> $c center) $P{tag})")
        }
        2 => {
            let name = format!("M{tag}");
            entities.insert(name.clone(), line_entity(target, dir(rng.random_range(0.0..TAU))));
            format!("(1d-constrained-point $c (>> $c center) ${name})")
        }
        3 => format!("(invariant-dimension $c {r})"),
        _ => {
            let gap = r + rng.random_range(0.3..2.0);
            let anchor = target + dir(rng.random_range(0.0..TAU)).vec() * gap;
            entities.insert(format!("A{tag}"), Entity::Point(anchor));
            format!("(fixed-distance-point $c (>> $c center) $A{tag} {} BIAS_OUTSIDE)", gap - r)
        }
    }
}

fn c9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    // Pairs whose reformulation needs a conic locus are outside the kernel.
    let pairs: Vec<(u8, u8)> = (0..5u8)
        .flat_map(|a| (a..5).map(move |b| (a, b)))
        .filter(|&(a, b)| !matches!((a, b), (0, 4) | (4, 4) | (1, 1) | (3, 3)))
        .collect();
    let mut kinds = BTreeSet::new();
    for i in 0..100 {
        let (a, b) = pairs[i % pairs.len()];
        let (target, r) = (pt(&mut rng, 3.0), rng.random_range(0.3..2.0));
        let mut entities = BTreeMap::new();
        let ca = satisfied_by(a, target, r, &mut rng, &mut entities);
        let cb = satisfied_by(b, target, r, &mut rng, &mut entities);
        let c = |s: &str| Constraint { geom: "c".into(), invariant: inv(s) };
        let (c0, r0) = (pt(&mut rng, 4.0), rng.random_range(0.3..2.0));
        let mut sigs = Vec::new();
        for order in [[&ca, &cb], [&cb, &ca]] {
            let scene = circle_scene(entities.clone(), c0, r0, order.iter().map(|s| c(s)).collect());
            let (solved, _) = solve_scene(&scene, library(), RuleBase::builtin(), &ExecConfig::default())
                .map_err(|e| format!("scene {i} ({ca} then {cb}): {e}"))?;
            let g = &solved.geoms[0];
            sigs.push(signature_of(g.kind(), &g.preserved).map_err(|e| e.to_string())?);
        }
        ensure(sigs[0] == sigs[1], || format!("scene {i}: {} vs {}", sigs[0], sigs[1]))?;
        kinds.insert(sigs[0].to_string());
    }
    Ok(format!("100 scenes over {} pair types, {} distinct final signatures", pairs.len(), kinds.len()))
}

fn without_rule(src: &str, name: &str) -> String {
    let start = src.find(&format!("(reform {name} ")).expect("rule present");
    let mut depth = 0;
    for (i, ch) in src[start..].char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return format!("{}{}", &src[..start], &src[start + i + 1..]);
                }
            }
            _ => {}
        }
    }
    unreachable!("balanced rule")
}

fn summary(out: &str) -> Vec<(String, String)> {
    out.lines()
        .filter(|l| l.starts_with('<'))
        .map(|l| {
            let end = l.find('>').unwrap() + 1;
            (l[..end].to_string(), l[end..].split_whitespace().next().unwrap_or("").to_string())
        })
        .collect()
}

fn c10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
    let mut solved = 0;
    let mut total = 0;
    for geom in ["circle", "line-segment"] {
        let (code, out) = cli(&["synthesize", "--geom", geom, "--out", &path(&format!("{geom}.json"))])?;
        ensure(code == 0, || format!("{geom}: exit {code}"))?;
        let rows = summary(&out);
        total += rows.len();
        solved += rows.iter().filter(|(_, o)| o == "solved").count();
    }
    ensure(total == 29 && solved == 29, || format!("{solved}/{total} solved"))?;

    std::fs::write(path("no-rr1.rules"), without_rule(BUILTIN_RULES, "RR-1")).map_err(|e| e.to_string())?;
    let (_, out) = cli(&["synthesize", "--geom", "circle", "--rules", &path("no-rr1.rules"), "--out", &path("x.json")])?;
    let rows = summary(&out);
    let missing: Vec<&String> = rows.iter().filter(|(_, o)| o == "missing-rule").map(|(s, _)| s).collect();
    ensure(!missing.is_empty(), || "no missing-rule class without RR-1".into())?;
    let affected = missing.iter().all(|s| !EXPECTED_CIRCLE_SIGNATURES.contains(&s.as_str()));
    ensure(affected, || format!("unaffected signature reported missing: {missing:?}"))?;
    let ok = rows.iter().filter(|(_, o)| o == "solved").count();
    Ok(format!("29/29 solved; without RR-1: {ok}/{} solved, missing-rule {missing:?}", rows.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "circle signature scheme", 1, c1),
        (2, "line-segment reduction", 5, c2),
        (3, "RR-1 walkthrough", 1, c3),
        (4, "phase I enumeration", 5, c4),
        (5, "end-to-end solve", 30, c5),
        (6, "parallel-line degeneracy", 10, c6),
        (7, "singular intersection", 5, c7),
        (8, "least-motion quality", 60, c8),
        (9, "order canonicality", 30, c9),
        (10, "synthesis classification", 60, c10),
    ];
    // Warm the shared library so its cost is not charged to one criterion.
    library();
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let result = match result {
            Ok(d) if took > Duration::from_secs(budget) => Err(format!("{d}; took {took:.2?}, budget {budget} s")),
            r => r,
        };
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
