//! Geom kinds, invariants, actions, action rules and signatures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_between, signed_distance, Direction2, Locus1d, Point2, Vector2};
use crate::term::Term;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbError {
    #[error("scale would leave a non-positive dimension ({0})")]
    NonPositiveDimension(f64),
    #[error("over-constrained: {0}")]
    OverConstrained(String),
    #[error("malformed invariant {0}")]
    MalformedInvariant(String),
    #[error("unknown geom kind '{0}'")]
    UnknownKind(String),
    #[error("bad signature '{0}'")]
    BadSignature(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeomKind {
    #[serde(rename = "circle")]
    Circle,
    #[serde(rename = "line-segment")]
    LineSegment,
}

impl GeomKind {
    pub const ALL: [GeomKind; 2] = [GeomKind::Circle, GeomKind::LineSegment];

    pub fn dof(self) -> usize {
        match self {
            GeomKind::Circle => 3,
            GeomKind::LineSegment => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GeomKind::Circle => "circle",
            GeomKind::LineSegment => "line-segment",
        }
    }

    pub fn point_accessors(self) -> &'static [&'static str] {
        match self {
            GeomKind::Circle => &["center"],
            GeomKind::LineSegment => &["end1", "end2"],
        }
    }
}

impl fmt::Display for GeomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeomKind {
    type Err = KbError;
    fn from_str(s: &str) -> Result<Self, KbError> {
        match s {
            "circle" => Ok(GeomKind::Circle),
            "line-segment" => Ok(GeomKind::LineSegment),
            other => Err(KbError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bias {
    #[serde(rename = "CCW")]
    Ccw,
    #[serde(rename = "CW")]
    Cw,
    #[serde(rename = "LEFT")]
    Left,
    #[serde(rename = "RIGHT")]
    Right,
    #[serde(rename = "INSIDE")]
    Inside,
    #[serde(rename = "OUTSIDE")]
    Outside,
}

impl Bias {
    pub fn atom(self) -> &'static str {
        match self {
            Bias::Ccw => "BIAS_COUNTERCLOCKWISE",
            Bias::Cw => "BIAS_CLOCKWISE",
            Bias::Left => "BIAS_LEFT",
            Bias::Right => "BIAS_RIGHT",
            Bias::Inside => "BIAS_INSIDE",
            Bias::Outside => "BIAS_OUTSIDE",
        }
    }

    pub fn from_atom(a: &str) -> Option<Bias> {
        [Bias::Ccw, Bias::Cw, Bias::Left, Bias::Right, Bias::Inside, Bias::Outside]
            .into_iter()
            .find(|b| b.atom() == a)
    }

    /// +1 for the left/counter-clockwise side of a directed line, -1 for the
    /// other; `None` for point-relative biases.
    pub fn line_sign(self) -> Option<f64> {
        match self {
            Bias::Ccw | Bias::Left => Some(1.0),
            Bias::Cw | Bias::Right => Some(-1.0),
            Bias::Inside | Bias::Outside => None,
        }
    }

    pub fn term(self) -> Term {
        Term::atom(self.atom())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Circle { center: Point2, radius: f64 },
    Segment { end1: Point2, end2: Point2 },
}

impl Shape {
    pub fn kind(&self) -> GeomKind {
        match self {
            Shape::Circle { .. } => GeomKind::Circle,
            Shape::Segment { .. } => GeomKind::LineSegment,
        }
    }

    pub fn point(&self, acc: &str) -> Option<Point2> {
        match (*self, acc) {
            (Shape::Circle { center, .. }, "center") => Some(center),
            (Shape::Segment { end1, .. }, "end1") => Some(end1),
            (Shape::Segment { end2, .. }, "end2") => Some(end2),
            _ => None,
        }
    }

    /// Radius or length.
    pub fn dimension(&self) -> f64 {
        match *self {
            Shape::Circle { radius, .. } => radius,
            Shape::Segment { end1, end2 } => (end2 - end1).norm(),
        }
    }

    /// Characteristic length used to turn angles into distances.
    pub fn scale_length(&self) -> f64 {
        self.dimension()
    }

    pub fn direction(&self) -> Option<Direction2> {
        match *self {
            Shape::Circle { .. } => None,
            Shape::Segment { end1, end2 } => Direction2::new(end2 - end1).ok(),
        }
    }

    /// Midpoint of the positional variables: center or segment midpoint.
    pub fn reference_point(&self) -> Point2 {
        match *self {
            Shape::Circle { center, .. } => center,
            Shape::Segment { end1, end2 } => (end1 + end2) * 0.5,
        }
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            Shape::Circle { center, radius } => center.is_finite() && radius.is_finite(),
            Shape::Segment { end1, end2 } => end1.is_finite() && end2.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomState {
    pub name: String,
    pub shape: Shape,
    pub preserved: Vec<Invariant>,
    pub tba: Vec<Invariant>,
}

impl GeomState {
    pub fn new(name: &str, shape: Shape) -> Self {
        GeomState { name: name.to_string(), shape, preserved: Vec::new(), tba: Vec::new() }
    }

    pub fn kind(&self) -> GeomKind {
        self.shape.kind()
    }

    pub fn term(&self) -> Term {
        Term::atom(&format!("${}", self.name))
    }
}

/// A ground action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Translate { vec: Vector2 },
    Rotate { pt: Point2, amt: f64 },
    Scale { pt: Point2, amt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Translate,
    Rotate,
    Scale,
}

impl ActionKind {
    pub fn from_head(h: &str) -> Option<ActionKind> {
        match h {
            "translate" => Some(ActionKind::Translate),
            "rotate" => Some(ActionKind::Rotate),
            "scale" => Some(ActionKind::Scale),
            _ => None,
        }
    }

    pub fn head(self) -> &'static str {
        match self {
            ActionKind::Translate => "translate",
            ActionKind::Rotate => "rotate",
            ActionKind::Scale => "scale",
        }
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Translate { .. } => ActionKind::Translate,
            Action::Rotate { .. } => ActionKind::Rotate,
            Action::Scale { .. } => ActionKind::Scale,
        }
    }
}

/// Smallest admissible radius or length.
pub const MIN_DIMENSION: f64 = 1e-9;

pub fn apply_action(shape: &Shape, action: &Action) -> Result<Shape, KbError> {
    let moved = |f: &dyn Fn(Point2) -> Point2| match *shape {
        Shape::Circle { center, radius } => Shape::Circle { center: f(center), radius },
        Shape::Segment { end1, end2 } => Shape::Segment { end1: f(end1), end2: f(end2) },
    };
    match *action {
        Action::Translate { vec } => Ok(moved(&|p| p + vec)),
        Action::Rotate { pt, amt } => Ok(moved(&|p| pt + (p - pt).rotated(amt))),
        Action::Scale { pt, amt } => {
            let dim = shape.dimension();
            let new_dim = dim + amt;
            if new_dim.is_nan() || new_dim <= MIN_DIMENSION {
                return Err(KbError::NonPositiveDimension(new_dim));
            }
            let k = new_dim / dim;
            Ok(match *shape {
                Shape::Circle { center, .. } => Shape::Circle { center: pt + (center - pt) * k, radius: new_dim },
                Shape::Segment { end1, end2 } => Shape::Segment { end1: pt + (end1 - pt) * k, end2: pt + (end2 - pt) * k },
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InvariantKind {
    InvariantPoint,
    OneDConstrainedPoint,
    TwoDConstrainedPoint,
    FixedDistancePoint,
    FixedDistanceLine,
    InvariantDirection,
    InvariantDimension,
}

impl InvariantKind {
    pub const ALL: [InvariantKind; 7] = [
        InvariantKind::InvariantPoint,
        InvariantKind::OneDConstrainedPoint,
        InvariantKind::TwoDConstrainedPoint,
        InvariantKind::FixedDistancePoint,
        InvariantKind::FixedDistanceLine,
        InvariantKind::InvariantDirection,
        InvariantKind::InvariantDimension,
    ];

    pub fn head(self) -> &'static str {
        match self {
            InvariantKind::InvariantPoint => "invariant-point",
            InvariantKind::OneDConstrainedPoint => "1d-constrained-point",
            InvariantKind::TwoDConstrainedPoint => "2d-constrained-point",
            InvariantKind::FixedDistancePoint => "fixed-distance-point",
            InvariantKind::FixedDistanceLine => "fixed-distance-line",
            InvariantKind::InvariantDirection => "invariant-direction",
            InvariantKind::InvariantDimension => "invariant-dimension",
        }
    }

    pub fn from_head(h: &str) -> Option<InvariantKind> {
        InvariantKind::ALL.into_iter().find(|k| k.head() == h)
    }

    /// Whether the second argument is a point accessor.
    pub fn has_accessor(self) -> bool {
        matches!(
            self,
            InvariantKind::InvariantPoint
                | InvariantKind::OneDConstrainedPoint
                | InvariantKind::TwoDConstrainedPoint
                | InvariantKind::FixedDistancePoint
        )
    }
}

/// An invariant in term form, e.g.
/// `(fixed-distance-line $c $L1 $dist1 BIAS_COUNTERCLOCKWISE)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Invariant(Term);

impl Invariant {
    pub fn new(term: Term) -> Result<Self, KbError> {
        let ok = term.head().and_then(InvariantKind::from_head).is_some_and(|k| {
            !k.has_accessor() || term.args()[1].head() == Some(">>")
        });
        if ok {
            Ok(Invariant(term))
        } else {
            Err(KbError::MalformedInvariant(term.to_string()))
        }
    }

    pub fn term(&self) -> &Term {
        &self.0
    }

    pub fn into_term(self) -> Term {
        self.0
    }

    pub fn kind(&self) -> InvariantKind {
        InvariantKind::from_head(self.0.head().expect("validated")).expect("validated")
    }

    pub fn geom(&self) -> &Term {
        &self.0.args()[0]
    }

    /// Field name of the constrained point, e.g. `center` or `end2`.
    pub fn accessor(&self) -> Option<&str> {
        if !self.kind().has_accessor() {
            return None;
        }
        self.0.args()[1].args().get(1).and_then(Term::as_const)
    }

    pub fn arg(&self, i: usize) -> &Term {
        &self.0.args()[i]
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An invariant with every argument evaluated to a concrete value.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundInvariant {
    Point { acc: String, at: Point2 },
    OnLocus { acc: String, locus: Locus1d },
    InRegion { acc: String },
    DistancePoint { acc: String, anchor: Point2, dist: f64, bias: Bias },
    DistanceLine { line: Locus1d, dist: f64, bias: Bias },
    Direction { dir: Direction2 },
    Dimension { value: f64 },
}

/// Zero iff the invariant holds. Missing accessors yield infinity.
pub fn invariant_residual(shape: &Shape, inv: &GroundInvariant) -> f64 {
    let pt = |acc: &str| shape.point(acc);
    match inv {
        GroundInvariant::Point { acc, at } => pt(acc).map_or(f64::INFINITY, |p| (p - *at).norm()),
        GroundInvariant::OnLocus { acc, locus } => pt(acc).map_or(f64::INFINITY, |p| locus.distance_to(p)),
        GroundInvariant::InRegion { acc } => pt(acc).map_or(f64::INFINITY, |_| 0.0),
        GroundInvariant::DistancePoint { acc, anchor, dist, bias } => {
            let Some(p) = pt(acc) else { return f64::INFINITY };
            let gap = (p - *anchor).norm();
            match shape {
                Shape::Circle { radius, .. } => match bias {
                    Bias::Inside => ((radius - gap) - dist).abs(),
                    _ => ((gap - radius) - dist).abs(),
                },
                Shape::Segment { .. } => (gap - dist).abs(),
            }
        }
        GroundInvariant::DistanceLine { line, dist, bias } => {
            let s = bias.line_sign().unwrap_or(1.0);
            match *shape {
                Shape::Circle { center, radius } => match signed_distance(line, center) {
                    Ok(sd) => (sd - s * (dist + radius)).abs(),
                    Err(_) => f64::INFINITY,
                },
                Shape::Segment { end1, end2 } => {
                    let (Ok(a), Ok(b)) = (signed_distance(line, end1), signed_distance(line, end2)) else {
                        return f64::INFINITY;
                    };
                    let along = line.direction().map_or(f64::INFINITY, |d| angle_between(end2 - end1, d.vec()).abs());
                    (a - s * dist).abs().max((b - s * dist).abs()).max(along)
                }
            }
        }
        GroundInvariant::Direction { dir } => match shape.direction() {
            Some(d) => angle_between(d.vec(), dir.vec()).abs(),
            None => 0.0,
        },
        GroundInvariant::Dimension { value } => (shape.dimension() - value).abs(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionRule {
    pub name: String,
    pub kind: GeomKind,
    pub pattern: Term,
    pub to_preserve: Vec<Term>,
    pub to_achieve: Vec<Term>,
}

/// The action rules shipped with the library.
pub fn builtin_action_rules(kind: GeomKind) -> Vec<ActionRule> {
    crate::rulebase::RuleBase::builtin().action_rules_for(kind).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointStatus {
    Free,
    L1,
    Fixed,
}

impl PointStatus {
    const ALL: [PointStatus; 3] = [PointStatus::Free, PointStatus::L1, PointStatus::Fixed];

    fn label(self) -> &'static str {
        match self {
            PointStatus::Free => "Free",
            PointStatus::L1 => "L1",
            PointStatus::Fixed => "Fixed",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        PointStatus::ALL.into_iter().find(|p| p.label() == s)
    }
}

fn fixed_label(b: bool) -> &'static str {
    if b {
        "Fixed"
    } else {
        "Free"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signature {
    Circle { center: PointStatus, radius: bool, fixed_pts: u8, fixed_lines: u8 },
    Segment { end1: PointStatus, end2: PointStatus, direction: bool, length: bool, fixed_lines: u8 },
}

impl Signature {
    pub fn kind(&self) -> GeomKind {
        match self {
            Signature::Circle { .. } => GeomKind::Circle,
            Signature::Segment { .. } => GeomKind::LineSegment,
        }
    }

    /// Constraint counts per point accessor, for DOF bookkeeping.
    pub fn dof_demand(&self) -> usize {
        let p = |s: PointStatus| match s {
            PointStatus::Free => 0,
            PointStatus::L1 => 1,
            PointStatus::Fixed => 2,
        };
        match *self {
            Signature::Circle { center, radius, fixed_pts, fixed_lines } => {
                p(center) + radius as usize + fixed_pts as usize + fixed_lines as usize
            }
            Signature::Segment { end1, end2, direction, length, fixed_lines } => {
                p(end1) + p(end2) + direction as usize + length as usize + 2 * fixed_lines as usize
            }
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Signature::Circle { center, radius, fixed_pts, fixed_lines } => write!(
                f,
                "<Center-{},Radius-{}, FixedPts-{fixed_pts},FixedLines-{fixed_lines}>",
                center.label(),
                fixed_label(radius)
            ),
            Signature::Segment { end1, end2, direction, length, fixed_lines } => write!(
                f,
                "<End1-{},End2-{},Direction-{},Length-{}, FixedLines-{fixed_lines}>",
                end1.label(),
                end2.label(),
                fixed_label(direction),
                fixed_label(length)
            ),
        }
    }
}

impl FromStr for Signature {
    type Err = KbError;
    fn from_str(s: &str) -> Result<Self, KbError> {
        let bad = || KbError::BadSignature(s.to_string());
        let body = s.trim().strip_prefix('<').and_then(|b| b.strip_suffix('>')).ok_or_else(bad)?;
        let fields: Vec<(&str, &str)> = body
            .split(',')
            .map(|f| f.trim().split_once('-').ok_or_else(bad))
            .collect::<Result<_, _>>()?;
        let get = |name: &str| fields.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).ok_or_else(bad);
        let fixed = |v: &str| match v {
            "Fixed" => Ok(true),
            "Free" => Ok(false),
            _ => Err(bad()),
        };
        let count = |v: &str| v.parse::<u8>().ok().filter(|n| *n <= 2).ok_or_else(bad);
        let point = |v: &str| PointStatus::parse(v).ok_or_else(bad);
        match fields.len() {
            4 => Ok(Signature::Circle {
                center: point(get("Center")?)?,
                radius: fixed(get("Radius")?)?,
                fixed_pts: count(get("FixedPts")?)?,
                fixed_lines: count(get("FixedLines")?)?,
            }),
            5 => Ok(Signature::Segment {
                end1: point(get("End1")?)?,
                end2: point(get("End2")?)?,
                direction: fixed(get("Direction")?)?,
                length: fixed(get("Length")?)?,
                fixed_lines: count(get("FixedLines")?)?,
            }),
            _ => Err(bad()),
        }
    }
}

pub fn signature_of(kind: GeomKind, invs: &[Invariant]) -> Result<Signature, KbError> {
    let status = |acc: &str| {
        let on = |k: InvariantKind| invs.iter().any(|i| i.kind() == k && i.accessor() == Some(acc));
        if on(InvariantKind::InvariantPoint) {
            PointStatus::Fixed
        } else if on(InvariantKind::OneDConstrainedPoint)
            || (kind == GeomKind::LineSegment && on(InvariantKind::FixedDistancePoint))
        {
            PointStatus::L1
        } else {
            PointStatus::Free
        }
    };
    let count = |k: InvariantKind| -> Result<u8, KbError> {
        let n = invs.iter().filter(|i| i.kind() == k).count();
        u8::try_from(n)
            .ok()
            .filter(|n| *n <= 2)
            .ok_or_else(|| KbError::OverConstrained(format!("{n} {} invariants", k.head())))
    };
    let has = |k: InvariantKind| invs.iter().any(|i| i.kind() == k);
    Ok(match kind {
        GeomKind::Circle => Signature::Circle {
            center: status("center"),
            radius: has(InvariantKind::InvariantDimension),
            fixed_pts: count(InvariantKind::FixedDistancePoint)?,
            fixed_lines: count(InvariantKind::FixedDistanceLine)?,
        },
        GeomKind::LineSegment => Signature::Segment {
            end1: status("end1"),
            end2: status("end2"),
            direction: has(InvariantKind::InvariantDirection),
            length: has(InvariantKind::InvariantDimension),
            fixed_lines: count(InvariantKind::FixedDistanceLine)?,
        },
    })
}

/// Every combination of signature field values.
pub fn raw_signatures(kind: GeomKind) -> Vec<Signature> {
    let mut out = Vec::new();
    match kind {
        GeomKind::Circle => {
            for center in PointStatus::ALL {
                for radius in [false, true] {
                    for fixed_pts in 0..3 {
                        for fixed_lines in 0..3 {
                            out.push(Signature::Circle { center, radius, fixed_pts, fixed_lines });
                        }
                    }
                }
            }
        }
        GeomKind::LineSegment => {
            for end1 in PointStatus::ALL {
                for end2 in PointStatus::ALL {
                    for direction in [false, true] {
                        for length in [false, true] {
                            for fixed_lines in 0..3 {
                                out.push(Signature::Segment { end1, end2, direction, length, fixed_lines });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// How biases appear in a representative invariant set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    /// Concrete biases (first line CCW, second CW; points OUTSIDE).
    Literal,
    /// Bias parameters `$lbias1`, `$pbias1`, ... bound at run time.
    Parametric,
}

/// A representative invariant multiset for a signature, over constants
/// such as `$pt1`, `$locus1`, `$line1`.
pub fn representative(sig: &Signature, geom: &Term, mode: BiasMode) -> Vec<Invariant> {
    let inv = |head: &str, args: Vec<Term>| {
        let mut all = vec![geom.clone()];
        all.extend(args);
        Invariant::new(Term::app(head, all)).expect("well-formed representative")
    };
    let c = |s: &str| Term::atom(s);
    let acc = |f: &str| Term::access(geom.clone(), f);
    let mut out = Vec::new();
    let point = |out: &mut Vec<Invariant>, status: PointStatus, field: &str, i: usize| match status {
        PointStatus::Free => {}
        PointStatus::L1 => out.push(inv("1d-constrained-point", vec![acc(field), c(&format!("$locus{i}"))])),
        PointStatus::Fixed => out.push(inv("invariant-point", vec![acc(field), c(&format!("$pt{i}"))])),
    };
    let line_bias = |i: u8| match mode {
        BiasMode::Literal if i == 1 => Bias::Ccw.term(),
        BiasMode::Literal => Bias::Cw.term(),
        BiasMode::Parametric => c(&format!("$lbias{i}")),
    };
    let lines = |out: &mut Vec<Invariant>, n: u8| {
        for i in 1..=n {
            out.push(inv(
                "fixed-distance-line",
                vec![c(&format!("$line{i}")), c(&format!("$ldist{i}")), line_bias(i)],
            ));
        }
    };
    match *sig {
        Signature::Circle { center, radius, fixed_pts, fixed_lines } => {
            point(&mut out, center, "center", 1);
            if radius {
                out.push(inv("invariant-dimension", vec![c("$dim1")]));
            }
            for i in 1..=fixed_pts {
                let bias = match mode {
                    BiasMode::Literal => Bias::Outside.term(),
                    BiasMode::Parametric => c(&format!("$pbias{i}")),
                };
                out.push(inv(
                    "fixed-distance-point",
                    vec![acc("center"), c(&format!("$anchor{i}")), c(&format!("$pdist{i}")), bias],
                ));
            }
            lines(&mut out, fixed_lines);
        }
        Signature::Segment { end1, end2, direction, length, fixed_lines } => {
            point(&mut out, end1, "end1", 1);
            point(&mut out, end2, "end2", 2);
            if direction {
                out.push(inv("invariant-direction", vec![c("$dir1")]));
            }
            if length {
                out.push(inv("invariant-dimension", vec![c("$dim1")]));
            }
            lines(&mut out, fixed_lines);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::t;
    use crate::geometry::Vec2;

    fn inv(s: &str) -> Invariant {
        Invariant::new(t(s)).unwrap()
    }

    fn x_axis() -> Locus1d {
        crate::geometry::make_line_locus(Vec2::default(), Direction2::new(Vec2::new(1.0, 0.0)).unwrap())
    }

    #[test]
    fn raw_counts() {
        assert_eq!(raw_signatures(GeomKind::Circle).len(), 54);
        assert_eq!(raw_signatures(GeomKind::LineSegment).len(), 108);
    }

    #[test]
    fn signature_examples() {
        let empty = signature_of(GeomKind::Circle, &[]).unwrap();
        assert_eq!(empty.to_string(), "<Center-Free,Radius-Free, FixedPts-0,FixedLines-0>");
        let two = [
            inv("(fixed-distance-line $c $L1 $d1 BIAS_COUNTERCLOCKWISE)"),
            inv("(fixed-distance-line $c $L2 $d2 BIAS_CLOCKWISE)"),
        ];
        assert_eq!(
            signature_of(GeomKind::Circle, &two).unwrap().to_string(),
            "<Center-Free,Radius-Free, FixedPts-0,FixedLines-2>"
        );
        let on = [inv("(1d-constrained-point $c (>> $c center) $m)")];
        assert_eq!(
            signature_of(GeomKind::Circle, &on).unwrap().to_string(),
            "<Center-L1,Radius-Free, FixedPts-0,FixedLines-0>"
        );
        let three: Vec<_> = (0..3).map(|i| inv(&format!("(fixed-distance-line $c $L{i} 1 BIAS_CLOCKWISE)"))).collect();
        assert!(matches!(signature_of(GeomKind::Circle, &three), Err(KbError::OverConstrained(_))));
    }

    #[test]
    fn signature_text_round_trips() {
        for kind in GeomKind::ALL {
            for s in raw_signatures(kind) {
                assert_eq!(s.to_string().parse::<Signature>().unwrap(), s);
            }
        }
    }

    #[test]
    fn representatives_reproduce_their_signature() {
        for kind in GeomKind::ALL {
            for s in raw_signatures(kind) {
                let reps = representative(&s, &t("$g"), BiasMode::Literal);
                assert_eq!(signature_of(kind, &reps).unwrap(), s);
            }
        }
    }

    #[test]
    fn line_distance_residuals() {
        let fdl = GroundInvariant::DistanceLine { line: x_axis(), dist: 1.0, bias: Bias::Ccw };
        let above = Shape::Circle { center: Vec2::new(0.0, 2.0), radius: 1.0 };
        assert!(invariant_residual(&above, &fdl) < 1e-12);
        let below = Shape::Circle { center: Vec2::new(0.0, -2.0), radius: 1.0 };
        assert!((invariant_residual(&below, &fdl) - 4.0).abs() < 1e-12);
        let dim = GroundInvariant::Dimension { value: 1.0 };
        assert_eq!(invariant_residual(&Shape::Circle { center: Vec2::default(), radius: 1.0 }, &dim), 0.0);
    }

    #[test]
    fn actions() {
        let c = Shape::Circle { center: Vec2::default(), radius: 1.0 };
        let moved = apply_action(&c, &Action::Translate { vec: Vec2::new(2.0, 3.0) }).unwrap();
        assert_eq!(moved, Shape::Circle { center: Vec2::new(2.0, 3.0), radius: 1.0 });
        assert_eq!(apply_action(&c, &Action::Scale { pt: Vec2::default(), amt: 0.0 }).unwrap(), c);
        assert!(matches!(
            apply_action(&c, &Action::Scale { pt: Vec2::default(), amt: -1.5 }),
            Err(KbError::NonPositiveDimension(_))
        ));
        let seg = Shape::Segment { end1: Vec2::default(), end2: Vec2::new(2.0, 0.0) };
        let longer = apply_action(&seg, &Action::Scale { pt: Vec2::new(2.0, 0.0), amt: 1.0 }).unwrap();
        assert_eq!(longer, Shape::Segment { end1: Vec2::new(-1.0, 0.0), end2: Vec2::new(2.0, 0.0) });
    }

    #[test]
    fn rule_counts() {
        assert_eq!(builtin_action_rules(GeomKind::Circle).len(), 8);
        assert_eq!(builtin_action_rules(GeomKind::LineSegment).len(), 12);
    }
}
