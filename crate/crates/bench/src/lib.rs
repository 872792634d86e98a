//! Fixtures shared by the benchmarks.

use std::collections::BTreeMap;

use dof_forge::geometry::make_line_locus;
use dof_forge::phase1::PlanningSpec;
use dof_forge::runtime::{Constraint, Entity};
use dof_forge::term::t;
use dof_forge::{Direction2, GeomKind, GeomState, Invariant, Scene, Shape, Tolerance, Vec2};

/// A circle between two crossing lines, with one side chosen on each.
pub fn two_line_spec() -> PlanningSpec {
    PlanningSpec {
        kind: GeomKind::Circle,
        geom: t("$c"),
        preserved: vec![Invariant::new(t("(fixed-distance-line $c $L1 $dist1 BIAS_COUNTERCLOCKWISE)")).unwrap()],
        tba: vec![Invariant::new(t("(fixed-distance-line $c $L2 $dist2 BIAS_CLOCKWISE)")).unwrap()],
    }
}

/// `n` circles, each held at fixed distances from the two lines.
pub fn tangent_scene(n: usize) -> Scene {
    let line = |d: (f64, f64)| Entity::Line(make_line_locus(Vec2::default(), Direction2::new(Vec2::new(d.0, d.1)).unwrap()));
    let mut entities = BTreeMap::new();
    entities.insert("L1".to_string(), line((1.0, 0.0)));
    entities.insert("L2".to_string(), line((1.0, 1.0)));
    let mut geoms = Vec::new();
    let mut constraints = Vec::new();
    for i in 0..n {
        let name = format!("c{i}");
        geoms.push(GeomState::new(&name, Shape::Circle { center: Vec2::new(3.0 + i as f64, 4.0), radius: 1.0 }));
        for src in [
            format!("(fixed-distance-line ${name} $L1 2 BIAS_COUNTERCLOCKWISE)"),
            format!("(fixed-distance-line ${name} $L2 0.5 BIAS_CLOCKWISE)"),
        ] {
            constraints.push(Constraint { geom: name.clone(), invariant: Invariant::new(t(&src)).unwrap() });
        }
    }
    Scene { tolerance: Tolerance::default(), entities, geoms, constraints }
}
