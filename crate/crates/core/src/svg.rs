//! Deterministic SVG rendering of a solve: references in black, starting
//! geoms dashed gray, solved geoms solid, searched points as dots.

use std::fmt::Write;

use crate::geometry::{clip_interval, BBox, Point2, Vec2};
use crate::kb::Shape;
use crate::runtime::{Chosen, Entity, ExecutionTrace, Scene, TraceRecord};

const PAD: f64 = 10.0;
const SIZE: f64 = 480.0;

fn num(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn shape_svg(out: &mut String, shape: &Shape, style: &str) {
    match *shape {
        Shape::Circle { center, radius } => {
            let _ = writeln!(out, r#"  <circle cx="{}" cy="{}" r="{}" {style}/>"#, num(center.x), num(center.y), num(radius));
        }
        Shape::Segment { end1, end2 } => {
            let _ = writeln!(
                out,
                r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" {style}/>"#,
                num(end1.x),
                num(end1.y),
                num(end2.x),
                num(end2.y)
            );
        }
    }
}

fn chosen_points(traces: &[ExecutionTrace]) -> Vec<Point2> {
    traces
        .iter()
        .flat_map(|t| &t.records)
        .filter_map(|r| match r {
            TraceRecord::ForMin { chosen: Chosen::Point([x, y]), .. } => Some(Vec2::new(*x, *y)),
            _ => None,
        })
        .collect()
}

pub fn render_svg(initial: &Scene, solved: &Scene, traces: &[ExecutionTrace]) -> String {
    let dots = chosen_points(traces);
    let mut bbox = initial.bbox();
    let other = solved.bbox();
    bbox.include(other.min);
    bbox.include(other.max);
    for p in &dots {
        bbox.include(*p);
    }
    let extent = (bbox.max - bbox.min).x.max((bbox.max - bbox.min).y).max(1e-9);
    let s = SIZE / extent;
    let (w, h) = ((bbox.max.x - bbox.min.x) * s + 2.0 * PAD, (bbox.max.y - bbox.min.y) * s + 2.0 * PAD);
    let unit = 1.0 / s;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(w),
        num(h),
        num(w),
        num(h)
    );
    let _ = writeln!(
        out,
        r#"<g transform="matrix({} 0 0 {} {} {})" fill="none" stroke-width="{}">"#,
        num(s),
        num(-s),
        num(PAD - s * bbox.min.x),
        num(PAD + s * bbox.max.y),
        num(1.5 * unit)
    );
    let view = BBox::new(bbox.min, bbox.max);
    for (name, e) in &initial.entities {
        match e {
            Entity::Point(p) => {
                let _ = writeln!(
                    out,
                    r#"  <circle id="{name}" cx="{}" cy="{}" r="{}" fill="black" stroke="none"/>"#,
                    num(p.x),
                    num(p.y),
                    num(2.0 * unit)
                );
            }
            Entity::Line(l) => {
                if let Some((a, b)) = clip_interval(l, &view) {
                    let (p, q) = (l.point_at(a), l.point_at(b));
                    let _ = writeln!(
                        out,
                        r#"  <line id="{name}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
                        num(p.x),
                        num(p.y),
                        num(q.x),
                        num(q.y)
                    );
                }
            }
        }
    }
    let dash = format!(r#"stroke="gray" stroke-dasharray="{} {}""#, num(6.0 * unit), num(4.0 * unit));
    for g in &initial.geoms {
        shape_svg(&mut out, &g.shape, &dash);
    }
    for g in &solved.geoms {
        shape_svg(&mut out, &g.shape, r##"stroke="#1f4e9c""##);
    }
    for p in &dots {
        let _ = writeln!(
            out,
            r##"  <circle cx="{}" cy="{}" r="{}" fill="#c0392b" stroke="none"/>"##,
            num(p.x),
            num(p.y),
            num(3.0 * unit)
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Tolerance;
    use crate::kb::GeomState;

    #[test]
    fn empty_scene_renders_a_frame() {
        let s = Scene {
            tolerance: Tolerance::default(),
            entities: Default::default(),
            geoms: vec![GeomState::new("c", Shape::Circle { center: Vec2::new(0.0, 0.0), radius: 1.0 })],
            constraints: vec![],
        };
        let svg = render_svg(&s, &s, &[]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg, render_svg(&s, &s, &[]));
    }

    #[test]
    fn numbers_print_compactly() {
        assert_eq!(num(-0.00001), "0");
        assert_eq!(num(2.5), "2.5");
        assert_eq!(num(3.0), "3");
    }
}
