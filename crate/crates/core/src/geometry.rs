//! Exact-semantics 2D primitives: points, directions, 1d loci and the
//! measurement routines built on them.
//!
//! Every coincidence and parallelism test goes through [`Tolerance::eq`].

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("zero-length direction vector")]
    ZeroDirection,
    #[error("expected a line locus, got {0}")]
    NotALine(&'static str),
    #[error("{0} loci are reserved and cannot be constructed")]
    ReservedConic(ConicKind),
    #[error("circle radius must be positive, got {0}")]
    BadRadius(f64),
}

pub type GeomResult<T> = Result<T, GeomError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConicKind {
    Parabola,
    Hyperbola,
    Ellipse,
}

impl fmt::Display for ConicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConicKind::Parabola => "parabola",
            ConicKind::Hyperbola => "hyperbola",
            ConicKind::Ellipse => "ellipse",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_eps: f64,
    pub rel_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs_eps: 1e-9, rel_eps: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(abs_eps: f64, rel_eps: f64) -> Option<Self> {
        (abs_eps > 0.0 && rel_eps > 0.0).then_some(Tolerance { abs_eps, rel_eps })
    }

    /// Geometric equality of two scalars.
    pub fn eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs_eps + self.rel_eps * a.abs().max(b.abs())
    }

    pub fn is_zero(&self, a: f64) -> bool {
        self.eq(a, 0.0)
    }

    pub fn points_eq(&self, a: Vec2, b: Vec2) -> bool {
        self.eq(a.x, b.x) && self.eq(a.y, b.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub type Point2 = Vec2;
pub type Vector2 = Vec2;

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lex_cmp(&self, o: &Vec2) -> std::cmp::Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction2 {
    dx: f64,
    dy: f64,
}

impl Direction2 {
    pub fn new(v: Vec2) -> GeomResult<Self> {
        if !v.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let n = v.norm();
        if n < 1e-300 {
            return Err(GeomError::ZeroDirection);
        }
        // Already unit within rounding: keep it, so printing and re-reading
        // a direction is exact.
        if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Direction2 { dx: v.x, dy: v.y });
        }
        Ok(Direction2 { dx: v.x / n, dy: v.y / n })
    }

    pub fn from_angle(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Direction2 { dx: c, dy: s }
    }

    pub fn vec(self) -> Vec2 {
        Vec2::new(self.dx, self.dy)
    }

    pub fn dx(self) -> f64 {
        self.dx
    }

    pub fn dy(self) -> f64 {
        self.dy
    }

    pub fn angle(self) -> f64 {
        self.dy.atan2(self.dx)
    }

    pub fn reversed(self) -> Self {
        Direction2 { dx: -self.dx, dy: -self.dy }
    }

    /// +90 degree rotation.
    pub fn left_normal(self) -> Vec2 {
        Vec2::new(-self.dy, self.dx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    Ccw,
    Cw,
}

impl Rotation {
    pub fn sign(self) -> f64 {
        match self {
            Rotation::Ccw => 1.0,
            Rotation::Cw => -1.0,
        }
    }

    pub fn side(self) -> Side {
        match self {
            Rotation::Ccw => Side::Left,
            Rotation::Cw => Side::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Locus1d {
    Line { through: Point2, dir: Direction2 },
    Ray { origin: Point2, dir: Direction2 },
    Circle { center: Point2, radius: f64 },
}

impl Locus1d {
    pub fn circle(center: Point2, radius: f64) -> GeomResult<Self> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if radius <= 0.0 {
            return Err(GeomError::BadRadius(radius));
        }
        Ok(Locus1d::Circle { center, radius })
    }

    pub fn ray(origin: Point2, dir: Direction2) -> Self {
        Locus1d::Ray { origin, dir }
    }

    pub fn conic(kind: ConicKind) -> GeomResult<Self> {
        Err(GeomError::ReservedConic(kind))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Locus1d::Line { .. } => "line",
            Locus1d::Ray { .. } => "ray",
            Locus1d::Circle { .. } => "circle",
        }
    }

    pub fn point_at(&self, t: f64) -> Point2 {
        match *self {
            Locus1d::Line { through, dir } => through + dir.vec() * t,
            Locus1d::Ray { origin, dir } => origin + dir.vec() * t.max(0.0),
            Locus1d::Circle { center, radius } => center + Vec2::new(t.cos(), t.sin()) * radius,
        }
    }

    /// A representative point, used where a locus stands for "some point on it".
    pub fn anchor(&self) -> Point2 {
        self.point_at(0.0)
    }

    pub fn direction(&self) -> Option<Direction2> {
        match *self {
            Locus1d::Line { dir, .. } | Locus1d::Ray { dir, .. } => Some(dir),
            Locus1d::Circle { .. } => None,
        }
    }

    /// Euclidean distance from `p` to the locus.
    pub fn distance_to(&self, p: Point2) -> f64 {
        let (_, q) = closest_point(self, p);
        (q - p).norm()
    }

    /// Rigidly shift the locus.
    pub fn translated(&self, v: Vector2) -> Locus1d {
        match *self {
            Locus1d::Line { through, dir } => Locus1d::Line { through: through + v, dir },
            Locus1d::Ray { origin, dir } => Locus1d::Ray { origin: origin + v, dir },
            Locus1d::Circle { center, radius } => Locus1d::Circle { center: center + v, radius },
        }
    }

    /// Geometric equality of the point sets.
    pub fn same_as(&self, other: &Locus1d, tol: &Tolerance) -> bool {
        match (*self, *other) {
            (Locus1d::Line { dir: d1, .. }, Locus1d::Line { through, dir: d2 }) => {
                tol.is_zero(d1.vec().cross(d2.vec())) && tol.is_zero(signed_distance_unchecked(self, through))
            }
            (Locus1d::Ray { origin: o1, dir: d1 }, Locus1d::Ray { origin: o2, dir: d2 }) => {
                tol.points_eq(o1, o2) && tol.points_eq(d1.vec(), d2.vec())
            }
            (Locus1d::Circle { center: c1, radius: r1 }, Locus1d::Circle { center: c2, radius: r2 }) => {
                tol.points_eq(c1, c2) && tol.eq(r1, r2)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntersectionResult {
    Points(Vec<Point2>),
    Coincident(Locus1d),
    Empty,
}

impl IntersectionResult {
    pub fn tag(&self) -> &'static str {
        match self {
            IntersectionResult::Points(_) => "points",
            IntersectionResult::Coincident(_) => "coincident",
            IntersectionResult::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn new(a: Point2, b: Point2) -> Self {
        BBox {
            min: Vec2::new(a.x.min(b.x), a.y.min(b.y)),
            max: Vec2::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn around(points: &[Point2]) -> Option<Self> {
        let (first, rest) = points.split_first()?;
        let mut b = BBox { min: *first, max: *first };
        for p in rest {
            b.include(*p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Point2) {
        self.min = Vec2::new(self.min.x.min(p.x), self.min.y.min(p.y));
        self.max = Vec2::new(self.max.x.max(p.x), self.max.y.max(p.y));
    }

    pub fn center(&self) -> Point2 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    /// Scale about the center; degenerate extents get a unit margin first.
    pub fn inflated(&self, factor: f64) -> BBox {
        let c = self.center();
        let half = (self.max - self.min) * 0.5;
        let half = Vec2::new(half.x.max(0.5), half.y.max(0.5)) * factor;
        BBox { min: c - half, max: c + half }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

pub fn v_sub(a: Point2, b: Point2) -> Vector2 {
    a - b
}

pub fn magnitude(v: Vector2) -> f64 {
    v.norm()
}

pub fn make_line_locus(through: Point2, dir: Direction2) -> Locus1d {
    Locus1d::Line { through, dir }
}

pub fn make_displaced_line(line: &Locus1d, side: Side, dist: f64) -> GeomResult<Locus1d> {
    match *line {
        Locus1d::Line { through, dir } => Ok(Locus1d::Line {
            through: through + dir.left_normal() * (side.sign() * dist),
            dir,
        }),
        other => Err(GeomError::NotALine(other.kind_name())),
    }
}

fn signed_distance_unchecked(line: &Locus1d, p: Point2) -> f64 {
    match *line {
        Locus1d::Line { through, dir } | Locus1d::Ray { origin: through, dir } => dir.vec().cross(p - through),
        Locus1d::Circle { .. } => f64::NAN,
    }
}

/// Positive on the left of the directed line.
pub fn signed_distance(line: &Locus1d, p: Point2) -> GeomResult<f64> {
    match line {
        Locus1d::Line { .. } => Ok(signed_distance_unchecked(line, p)),
        other => Err(GeomError::NotALine(other.kind_name())),
    }
}

/// Bisector of the quadrant selected by the two biases: every point `q` of the
/// result has `s1 * sd(l1, q) == s2 * sd(l2, q) >= 0`.
pub fn angular_bisector(
    l1: &Locus1d,
    l2: &Locus1d,
    b1: Rotation,
    b2: Rotation,
    tol: &Tolerance,
) -> GeomResult<Locus1d> {
    let (Locus1d::Line { through: p1, dir: d1 }, Locus1d::Line { through: p2, dir: d2 }) = (*l1, *l2) else {
        let bad = if matches!(l1, Locus1d::Line { .. }) { l2 } else { l1 };
        return Err(GeomError::NotALine(bad.kind_name()));
    };
    let denom = d1.vec().cross(d2.vec());
    if tol.is_zero(denom) {
        let off = signed_distance_unchecked(l1, p2);
        if tol.is_zero(off) {
            return Ok(*l1);
        }
        return Ok(Locus1d::Line { through: p1 + d1.left_normal() * (off * 0.5), dir: d1 });
    }
    let t = (p2 - p1).cross(d2.vec()) / denom;
    let apex = p1 + d1.vec() * t;
    let u = d1.left_normal() * b1.sign() + d2.left_normal() * b2.sign();
    Ok(Locus1d::Ray { origin: apex, dir: Direction2::new(u)? })
}

fn sort_dedup(mut pts: Vec<Point2>, tol: &Tolerance) -> IntersectionResult {
    pts.sort_by(|a, b| a.lex_cmp(b));
    let mut out: Vec<Point2> = Vec::with_capacity(pts.len());
    for p in pts {
        if !out.iter().any(|q| tol.points_eq(*q, p)) {
            out.push(p);
        }
    }
    if out.is_empty() {
        IntersectionResult::Empty
    } else {
        IntersectionResult::Points(out)
    }
}

/// Parameter of `p` along a line-like locus.
fn param_on(locus: &Locus1d, p: Point2) -> f64 {
    match *locus {
        Locus1d::Line { through, dir } => (p - through).dot(dir.vec()),
        Locus1d::Ray { origin, dir } => (p - origin).dot(dir.vec()),
        Locus1d::Circle { center, .. } => (p.y - center.y).atan2(p.x - center.x),
    }
}

fn admits(locus: &Locus1d, p: Point2, tol: &Tolerance) -> bool {
    match locus {
        Locus1d::Ray { .. } => {
            let t = param_on(locus, p);
            t >= 0.0 || tol.is_zero(t)
        }
        _ => true,
    }
}

fn as_line(locus: &Locus1d) -> Option<(Point2, Direction2)> {
    match *locus {
        Locus1d::Line { through, dir } => Some((through, dir)),
        Locus1d::Ray { origin, dir } => Some((origin, dir)),
        Locus1d::Circle { .. } => None,
    }
}

fn line_line(a: &Locus1d, b: &Locus1d, tol: &Tolerance) -> IntersectionResult {
    let (p1, d1) = as_line(a).expect("line-like");
    let (p2, d2) = as_line(b).expect("line-like");
    let denom = d1.vec().cross(d2.vec());
    if tol.is_zero(denom) {
        if !tol.is_zero(d1.vec().cross(p2 - p1)) {
            return IntersectionResult::Empty;
        }
        return colinear_overlap(a, b, tol);
    }
    let t = (p2 - p1).cross(d2.vec()) / denom;
    let p = p1 + d1.vec() * t;
    if admits(a, p, tol) && admits(b, p, tol) {
        IntersectionResult::Points(vec![p])
    } else {
        IntersectionResult::Empty
    }
}

/// Overlap of two colinear line-like loci.
fn colinear_overlap(a: &Locus1d, b: &Locus1d, tol: &Tolerance) -> IntersectionResult {
    match (*a, *b) {
        (Locus1d::Line { .. }, _) => IntersectionResult::Coincident(*b),
        (_, Locus1d::Line { .. }) => IntersectionResult::Coincident(*a),
        (Locus1d::Ray { origin: o1, dir: d1 }, Locus1d::Ray { origin: o2, dir: d2 }) => {
            if d1.vec().dot(d2.vec()) > 0.0 {
                // Same orientation: the ray that starts further along.
                if param_on(a, o2) >= 0.0 {
                    IntersectionResult::Coincident(*b)
                } else {
                    IntersectionResult::Coincident(*a)
                }
            } else {
                let gap = param_on(a, o2);
                if tol.is_zero(gap) {
                    IntersectionResult::Points(vec![o1])
                } else if gap > 0.0 {
                    // Opposite rays overlapping on a segment: report its end points.
                    sort_dedup(vec![o1, o2], tol)
                } else {
                    IntersectionResult::Empty
                }
            }
        }
        _ => unreachable!("circle passed to colinear_overlap"),
    }
}

fn line_circle(l: &Locus1d, center: Point2, radius: f64, tol: &Tolerance) -> IntersectionResult {
    let (p, d) = as_line(l).expect("line-like");
    let t0 = (center - p).dot(d.vec());
    let foot = p + d.vec() * t0;
    let h = (center - foot).norm();
    if h > radius && !tol.eq(h, radius) {
        return IntersectionResult::Empty;
    }
    let pts = if tol.eq(h, radius) {
        vec![foot]
    } else {
        let w = (radius * radius - h * h).max(0.0).sqrt();
        vec![foot - d.vec() * w, foot + d.vec() * w]
    };
    sort_dedup(pts.into_iter().filter(|q| admits(l, *q, tol)).collect(), tol)
}

fn circle_circle(c1: Point2, r1: f64, c2: Point2, r2: f64, tol: &Tolerance) -> IntersectionResult {
    let v = c2 - c1;
    let d = v.norm();
    if tol.is_zero(d) {
        return if tol.eq(r1, r2) {
            IntersectionResult::Coincident(Locus1d::Circle { center: c1, radius: r1 })
        } else {
            IntersectionResult::Empty
        };
    }
    let outer = r1 + r2;
    let inner = (r1 - r2).abs();
    if (d > outer && !tol.eq(d, outer)) || (d < inner && !tol.eq(d, inner)) {
        return IntersectionResult::Empty;
    }
    let u = v * (1.0 / d);
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let base = c1 + u * a;
    if tol.eq(d, outer) || tol.eq(d, inner) {
        return IntersectionResult::Points(vec![base]);
    }
    let h = (r1 * r1 - a * a).max(0.0).sqrt();
    sort_dedup(vec![base + u.perp() * h, base - u.perp() * h], tol)
}

pub fn intersect_0d(a: &Locus1d, b: &Locus1d, tol: &Tolerance) -> IntersectionResult {
    if a.same_as(b, tol) {
        return IntersectionResult::Coincident(*a);
    }
    match (*a, *b) {
        (Locus1d::Circle { center: c1, radius: r1 }, Locus1d::Circle { center: c2, radius: r2 }) => {
            circle_circle(c1, r1, c2, r2, tol)
        }
        (Locus1d::Circle { center, radius }, l) | (l, Locus1d::Circle { center, radius }) => {
            line_circle(&l, center, radius, tol)
        }
        _ => line_line(a, b, tol),
    }
}

/// Parameter and point of the locus nearest to `p`.
pub fn closest_point(locus: &Locus1d, p: Point2) -> (f64, Point2) {
    match *locus {
        Locus1d::Line { through, dir } => {
            let t = (p - through).dot(dir.vec());
            (t, through + dir.vec() * t)
        }
        Locus1d::Ray { origin, dir } => {
            let t = (p - origin).dot(dir.vec()).max(0.0);
            (t, origin + dir.vec() * t)
        }
        Locus1d::Circle { center, .. } => {
            let v = p - center;
            let t = if v.norm() == 0.0 { 0.0 } else { v.y.atan2(v.x).rem_euclid(2.0 * PI) };
            (t, locus.point_at(t))
        }
    }
}

/// Parameter interval of a line-like locus inside `bbox` (Liang-Barsky clip).
pub fn clip_interval(locus: &Locus1d, bbox: &BBox) -> Option<(f64, f64)> {
    let (p, d, ray) = match *locus {
        Locus1d::Line { through, dir } => (through, dir.vec(), false),
        Locus1d::Ray { origin, dir } => (origin, dir.vec(), true),
        Locus1d::Circle { .. } => return None,
    };
    let mut lo = if ray { 0.0 } else { f64::NEG_INFINITY };
    let mut hi = f64::INFINITY;
    for (pc, dc, mn, mx) in [(p.x, d.x, bbox.min.x, bbox.max.x), (p.y, d.y, bbox.min.y, bbox.max.y)] {
        if dc.abs() < 1e-15 {
            if pc < mn || pc > mx {
                return None;
            }
        } else {
            let (a, b) = ((mn - pc) / dc, (mx - pc) / dc);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// `n` evenly spaced parameters over the part of the locus inside `bbox`.
pub fn discretize(locus: &Locus1d, bbox: &BBox, n: usize) -> Vec<f64> {
    let n = n.max(2);
    match locus {
        Locus1d::Circle { .. } => (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect(),
        _ => match clip_interval(locus, bbox) {
            Some((lo, hi)) => linspace(lo, hi, n),
            None => Vec::new(),
        },
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect()
}

/// Signed rotation taking direction `from` onto direction `to`, in (-pi, pi].
pub fn angle_between(from: Vector2, to: Vector2) -> f64 {
    from.cross(to).atan2(from.dot(to))
}
