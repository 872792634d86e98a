use std::collections::BTreeMap;

use dof_forge::geometry::{
    angular_bisector, intersect_0d, make_line_locus, signed_distance, Direction2, IntersectionResult, Locus1d, Rotation,
    Tolerance, Vec2,
};
use dof_forge::kb::{apply_action, invariant_residual, signature_of, Action, GeomKind, Invariant, Shape};
use dof_forge::rulebase::RuleBase;
use dof_forge::rules::reformulate;
use dof_forge::runtime::{ground_invariant, Entity, Env, Scene};
use dof_forge::term::{t, Substitution};
use proptest::prelude::*;

fn v() -> impl Strategy<Value = Vec2> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

fn line() -> impl Strategy<Value = Locus1d> {
    (v(), 0.0..std::f64::consts::TAU).prop_map(|(p, a)| make_line_locus(p, Direction2::from_angle(a)))
}

fn locus() -> impl Strategy<Value = Locus1d> {
    prop_oneof![line(), (v(), 0.1..4.0f64).prop_map(|(c, r)| Locus1d::circle(c, r).unwrap())]
}

fn rotation() -> impl Strategy<Value = Rotation> {
    prop_oneof![Just(Rotation::Ccw), Just(Rotation::Cw)]
}

fn points(r: IntersectionResult) -> Vec<Vec2> {
    match r {
        IntersectionResult::Points(p) => p,
        _ => vec![],
    }
}

proptest! {
    #[test]
    fn intersections_are_symmetric_and_on_both_loci(a in locus(), b in locus()) {
        let tol = Tolerance::default();
        let ab = points(intersect_0d(&a, &b, &tol));
        let ba = points(intersect_0d(&b, &a, &tol));
        prop_assert_eq!(ab.len(), ba.len());
        for (p, q) in ab.iter().zip(&ba) {
            prop_assert!((*p - *q).norm() <= 1e-9, "{:?} vs {:?}", p, q);
            prop_assert!(a.distance_to(*p) <= 1e-8 && b.distance_to(*p) <= 1e-8);
        }
    }

    #[test]
    fn bisector_points_are_equidistant_on_the_chosen_sides(
        l1 in line(),
        turn in 0.2..(std::f64::consts::PI - 0.2),
        through in v(),
        b1 in rotation(),
        b2 in rotation(),
        ts in prop::collection::vec(0.0..20.0f64, 8),
    ) {
        let Locus1d::Line { dir, .. } = l1 else { unreachable!() };
        let l2 = make_line_locus(through, Direction2::from_angle(dir.angle() + turn));
        let ray = angular_bisector(&l1, &l2, b1, b2, &Tolerance::default()).unwrap();
        for t in ts {
            let q = ray.point_at(t);
            let (a, b) = (b1.sign() * signed_distance(&l1, q).unwrap(), b2.sign() * signed_distance(&l2, q).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} vs {}", a, b);
            prop_assert!(a >= -1e-9);
        }
    }

    #[test]
    fn rigid_motions_keep_the_radius(c in v(), r in 0.1..3.0f64, by in v(), pivot in v(), angle in -7.0..7.0f64) {
        let shape = Shape::Circle { center: c, radius: r };
        for a in [Action::Translate { vec: by }, Action::Rotate { pt: pivot, amt: angle }] {
            prop_assert_eq!(apply_action(&shape, &a).unwrap().dimension(), r);
        }
    }

    #[test]
    fn signatures_ignore_invariant_order(d in 0.1..2.0f64, k in 0.1..2.0f64, rev in any::<bool>()) {
        let mut invs = vec![
            Invariant::new(t(&format!("(fixed-distance-line $c $L1 {d} BIAS_CLOCKWISE)"))).unwrap(),
            Invariant::new(t(&format!("(invariant-dimension $c {k})"))).unwrap(),
            Invariant::new(t("(fixed-distance-line $c $L2 1 BIAS_COUNTERCLOCKWISE)")).unwrap(),
        ];
        let before = signature_of(GeomKind::Circle, &invs).unwrap();
        if rev { invs.reverse() } else { invs.rotate_left(1) }
        prop_assert_eq!(signature_of(GeomKind::Circle, &invs).unwrap(), before);
    }

    #[test]
    fn reformulation_keeps_the_solution_set(
        apex in v(),
        a1 in 0.0..std::f64::consts::TAU,
        turn in 0.5..2.6f64,
        d1 in 0.1..2.0f64,
        d2 in 0.1..2.0f64,
        center in v(),
        radius in 0.1..3.0f64,
    ) {
        let pair = [
            Invariant::new(t(&format!("(fixed-distance-line $c $L1 {d1} BIAS_COUNTERCLOCKWISE)"))).unwrap(),
            Invariant::new(t(&format!("(fixed-distance-line $c $L2 {d2} BIAS_CLOCKWISE)"))).unwrap(),
        ];
        let (out, _) = reformulate(GeomKind::Circle, &pair, RuleBase::builtin()).unwrap();
        let mut entities = BTreeMap::new();
        entities.insert("L1".to_string(), Entity::Line(make_line_locus(apex, Direction2::from_angle(a1))));
        entities.insert("L2".to_string(), Entity::Line(make_line_locus(apex, Direction2::from_angle(a1 + turn))));
        let scene = Scene { tolerance: Tolerance::default(), entities, geoms: vec![], constraints: vec![] };
        let args = Substitution::new();
        let holds = |shape: Shape, invs: &[Invariant]| {
            let env = Env { scene: &scene, geom: "c", shape, args: &args, locals: BTreeMap::new() };
            invs.iter().all(|i| invariant_residual(&shape, &ground_invariant(i, &env).unwrap()) <= 1e-7)
        };
        // Any circle meets both sets of constraints equally well or badly.
        let any = Shape::Circle { center, radius };
        prop_assert_eq!(holds(any, &pair), holds(any, &out));
        // A circle built to satisfy the pair satisfies the rewrite.
        let (l1, l2) = (make_line_locus(apex, Direction2::from_angle(a1)), make_line_locus(apex, Direction2::from_angle(a1 + turn)));
        let Locus1d::Line { dir: u1, .. } = l1 else { unreachable!() };
        let Locus1d::Line { dir: u2, .. } = l2 else { unreachable!() };
        let (n1, n2) = (u1.left_normal(), -u2.left_normal());
        let (k1, k2) = (n1.dot(apex) + d1 + radius, n2.dot(apex) + d2 + radius);
        let det = n1.x * n2.y - n1.y * n2.x;
        let q = Vec2::new((k1 * n2.y - k2 * n1.y) / det, (n1.x * k2 - n2.x * k1) / det);
        let fit = Shape::Circle { center: q, radius };
        prop_assert!(holds(fit, &pair));
        prop_assert!(holds(fit, &out));
    }
}
