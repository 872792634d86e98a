//! JSON scene and library files, and atomic file output.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{Direction2, Locus1d, Tolerance, Vec2};
use crate::kb::{Bias, GeomKind, GeomState, Invariant, InvariantKind, Shape, Signature};
use crate::phase1::Phase1Config;
use crate::phase2::PlanFragment;
use crate::runtime::{Constraint, Entity, PlanLibrary, Scene};
use crate::term::{parse_term, Term};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> IoError {
    IoError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BiasJson {
    Ccw,
    Cw,
    Left,
    Right,
    Inside,
    Outside,
}

impl From<BiasJson> for Bias {
    fn from(b: BiasJson) -> Bias {
        match b {
            BiasJson::Ccw => Bias::Ccw,
            BiasJson::Cw => Bias::Cw,
            BiasJson::Left => Bias::Left,
            BiasJson::Right => Bias::Right,
            BiasJson::Inside => Bias::Inside,
            BiasJson::Outside => Bias::Outside,
        }
    }
}

impl From<Bias> for BiasJson {
    fn from(b: Bias) -> BiasJson {
        match b {
            Bias::Ccw => BiasJson::Ccw,
            Bias::Cw => BiasJson::Cw,
            Bias::Left => BiasJson::Left,
            Bias::Right => BiasJson::Right,
            Bias::Inside => BiasJson::Inside,
            Bias::Outside => BiasJson::Outside,
        }
    }
}

/// A point or vector given inline or by entity name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRef {
    Name(String),
    Xy([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineJson {
    pub through: [f64; 2],
    pub dir: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayJson {
    pub origin: [f64; 2],
    pub dir: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleJson {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LocusRef {
    Name(String),
    Line(LineJson),
    Ray(RayJson),
    Circle(CircleJson),
}

/// One invariant. `term` carries derived invariants (such as bisector
/// loci) that have no flat form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum InvariantJson {
    #[serde(rename = "invariant-point")]
    InvariantPoint { geom: String, point: String, at: PointRef },
    #[serde(rename = "1d-constrained-point")]
    OneDConstrainedPoint { geom: String, point: String, locus: LocusRef },
    #[serde(rename = "2d-constrained-point")]
    TwoDConstrainedPoint { geom: String, point: String },
    #[serde(rename = "fixed-distance-point")]
    FixedDistancePoint { geom: String, point: String, anchor: PointRef, dist: f64, bias: BiasJson },
    #[serde(rename = "fixed-distance-line")]
    FixedDistanceLine { geom: String, line: LocusRef, dist: f64, bias: BiasJson },
    #[serde(rename = "invariant-direction")]
    InvariantDirection { geom: String, dir: PointRef },
    #[serde(rename = "invariant-dimension")]
    InvariantDimension { geom: String, value: f64 },
    #[serde(rename = "term")]
    Term { term: String },
}

fn name_term(n: &str) -> Term {
    Term::atom(&format!("${n}"))
}

fn xy_term(head: &str, [x, y]: [f64; 2]) -> Term {
    Term::app(head, vec![Term::Num(x), Term::Num(y)])
}

fn point_term(head: &str, r: &PointRef) -> Term {
    match r {
        PointRef::Name(n) => name_term(n),
        PointRef::Xy(v) => xy_term(head, *v),
    }
}

fn locus_term(r: &LocusRef) -> Term {
    match r {
        LocusRef::Name(n) => name_term(n),
        LocusRef::Line(l) => Term::app("make-line-locus", vec![xy_term("pt", l.through), xy_term("vec", l.dir)]),
        LocusRef::Ray(l) => Term::app("make-ray-locus", vec![xy_term("pt", l.origin), xy_term("vec", l.dir)]),
        LocusRef::Circle(c) => Term::app("make-circle-locus", vec![xy_term("pt", c.center), Term::Num(c.radius)]),
    }
}

impl InvariantJson {
    pub fn to_invariant(&self) -> Result<Invariant, IoError> {
        let acc = |g: &str, p: &str| Term::access(name_term(g), p);
        let bias = |b: &BiasJson| Bias::from(*b).term();
        let t = match self {
            InvariantJson::InvariantPoint { geom, point, at } => {
                Term::app("invariant-point", vec![name_term(geom), acc(geom, point), point_term("pt", at)])
            }
            InvariantJson::OneDConstrainedPoint { geom, point, locus } => {
                Term::app("1d-constrained-point", vec![name_term(geom), acc(geom, point), locus_term(locus)])
            }
            InvariantJson::TwoDConstrainedPoint { geom, point } => {
                Term::app("2d-constrained-point", vec![name_term(geom), acc(geom, point), Term::atom("plane")])
            }
            InvariantJson::FixedDistancePoint { geom, point, anchor, dist, bias: b } => Term::app(
                "fixed-distance-point",
                vec![name_term(geom), acc(geom, point), point_term("pt", anchor), Term::Num(*dist), bias(b)],
            ),
            InvariantJson::FixedDistanceLine { geom, line, dist, bias: b } => Term::app(
                "fixed-distance-line",
                vec![name_term(geom), locus_term(line), Term::Num(*dist), bias(b)],
            ),
            InvariantJson::InvariantDirection { geom, dir } => {
                Term::app("invariant-direction", vec![name_term(geom), point_term("vec", dir)])
            }
            InvariantJson::InvariantDimension { geom, value } => {
                Term::app("invariant-dimension", vec![name_term(geom), Term::Num(*value)])
            }
            InvariantJson::Term { term } => parse_term(term).map_err(|e| invalid(format!("invariant term: {e}")))?,
        };
        Invariant::new(t).map_err(|e| invalid(e.to_string()))
    }

    /// Flat form where one exists, otherwise the printed term.
    pub fn from_invariant(inv: &Invariant) -> InvariantJson {
        Self::flat(inv).unwrap_or_else(|| InvariantJson::Term { term: inv.to_string() })
    }

    fn flat(inv: &Invariant) -> Option<InvariantJson> {
        let name = |t: &Term| t.as_const()?.strip_prefix('$').map(str::to_string);
        let num = |t: &Term| match t {
            Term::Num(x) => Some(*x),
            _ => None,
        };
        let xy = |head: &str, t: &Term| match (t.head(), t.args()) {
            (Some(h), [x, y]) if h == head => Some([num(x)?, num(y)?]),
            _ => None,
        };
        let point = |head: &str, t: &Term| name(t).map(PointRef::Name).or_else(|| xy(head, t).map(PointRef::Xy));
        let locus = |t: &Term| {
            if let Some(n) = name(t) {
                return Some(LocusRef::Name(n));
            }
            let a = t.args();
            match t.head()? {
                "make-line-locus" => Some(LocusRef::Line(LineJson { through: xy("pt", &a[0])?, dir: xy("vec", &a[1])? })),
                "make-ray-locus" => Some(LocusRef::Ray(RayJson { origin: xy("pt", &a[0])?, dir: xy("vec", &a[1])? })),
                "make-circle-locus" => {
                    Some(LocusRef::Circle(CircleJson { center: xy("pt", &a[0])?, radius: num(&a[1])? }))
                }
                _ => None,
            }
        };
        let bias = |t: &Term| Bias::from_atom(t.as_const()?).map(BiasJson::from);
        let geom = name(inv.geom())?;
        // Accessors must read the invariant's own geom.
        if inv.kind().has_accessor() && name(&inv.arg(1).args()[0]).as_deref() != Some(geom.as_str()) {
            return None;
        }
        let point_name = || inv.accessor().map(str::to_string);
        Some(match inv.kind() {
            InvariantKind::InvariantPoint => {
                InvariantJson::InvariantPoint { geom, point: point_name()?, at: point("pt", inv.arg(2))? }
            }
            InvariantKind::OneDConstrainedPoint => {
                InvariantJson::OneDConstrainedPoint { geom, point: point_name()?, locus: locus(inv.arg(2))? }
            }
            InvariantKind::TwoDConstrainedPoint if inv.arg(2).as_const() == Some("plane") => {
                InvariantJson::TwoDConstrainedPoint { geom, point: point_name()? }
            }
            InvariantKind::TwoDConstrainedPoint => return None,
            InvariantKind::FixedDistancePoint => InvariantJson::FixedDistancePoint {
                geom,
                point: point_name()?,
                anchor: point("pt", inv.arg(2))?,
                dist: num(inv.arg(3))?,
                bias: bias(inv.arg(4))?,
            },
            InvariantKind::FixedDistanceLine => InvariantJson::FixedDistanceLine {
                geom,
                line: locus(inv.arg(1))?,
                dist: num(inv.arg(2))?,
                bias: bias(inv.arg(3))?,
            },
            InvariantKind::InvariantDirection => InvariantJson::InvariantDirection { geom, dir: point("vec", inv.arg(1))? },
            InvariantKind::InvariantDimension => InvariantJson::InvariantDimension { geom, value: num(inv.arg(1))? },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceJson {
    pub abs: f64,
    pub rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase", deny_unknown_fields)]
pub enum EntityData {
    Point([f64; 2]),
    Line(LineJson),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityJson {
    pub name: String,
    #[serde(flatten)]
    pub data: EntityData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeJson {
    Circle(CircleJson),
    Segment(SegmentJson),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentJson {
    pub end1: [f64; 2],
    pub end2: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeomJson {
    pub name: String,
    pub kind: GeomKind,
    pub state: ShapeJson,
    #[serde(default)]
    pub preserved: Vec<InvariantJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintJson {
    pub geom: String,
    pub invariant: InvariantJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default = "default_tolerance")]
    pub tolerance: ToleranceJson,
    #[serde(default)]
    pub entities: Vec<EntityJson>,
    #[serde(default)]
    pub geoms: Vec<GeomJson>,
    #[serde(default)]
    pub constraints: Vec<ConstraintJson>,
}

fn default_tolerance() -> ToleranceJson {
    let t = Tolerance::default();
    ToleranceJson { abs: t.abs_eps, rel: t.rel_eps }
}

fn vec2([x, y]: [f64; 2]) -> Vec2 {
    Vec2::new(x, y)
}

fn arr(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn direction(d: [f64; 2], what: &str) -> Result<Direction2, IoError> {
    Direction2::new(vec2(d)).map_err(|e| invalid(format!("{what}: {e}")))
}

/// Every `$name` constant inside a term.
fn referenced_names(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Const(c) => {
            if let Some(n) = c.strip_prefix('$') {
                out.insert(n.to_string());
            }
        }
        Term::App(_, a) => a.iter().for_each(|x| referenced_names(x, out)),
        _ => {}
    }
}

impl SceneFile {
    pub fn to_scene(&self) -> Result<Scene, IoError> {
        let mut names = BTreeSet::new();
        let mut entities = BTreeMap::new();
        for e in &self.entities {
            if !names.insert(e.name.clone()) {
                return Err(invalid(format!("duplicate name {}", e.name)));
            }
            let v = match &e.data {
                EntityData::Point(p) => Entity::Point(vec2(*p)),
                EntityData::Line(l) => Entity::Line(Locus1d::Line { through: vec2(l.through), dir: direction(l.dir, &e.name)? }),
            };
            entities.insert(e.name.clone(), v);
        }
        let mut geoms = Vec::new();
        for g in &self.geoms {
            if !names.insert(g.name.clone()) {
                return Err(invalid(format!("duplicate name {}", g.name)));
            }
            let shape = match (&g.state, g.kind) {
                (ShapeJson::Circle(c), GeomKind::Circle) if c.radius > 0.0 => {
                    Shape::Circle { center: vec2(c.center), radius: c.radius }
                }
                (ShapeJson::Segment(s), GeomKind::LineSegment) if s.end1 != s.end2 => {
                    Shape::Segment { end1: vec2(s.end1), end2: vec2(s.end2) }
                }
                _ => return Err(invalid(format!("geom {}: state does not describe a valid {}", g.name, g.kind.name()))),
            };
            let mut state = GeomState::new(&g.name, shape);
            state.preserved = g.preserved.iter().map(InvariantJson::to_invariant).collect::<Result<_, _>>()?;
            geoms.push(state);
        }
        let mut constraints = Vec::new();
        for c in &self.constraints {
            constraints.push(Constraint { geom: c.geom.clone(), invariant: c.invariant.to_invariant()? });
        }
        let scene = Scene {
            tolerance: Tolerance { abs_eps: self.tolerance.abs, rel_eps: self.tolerance.rel },
            entities,
            geoms,
            constraints,
        };
        validate(&scene, &names)?;
        Ok(scene)
    }

    pub fn from_scene(scene: &Scene) -> SceneFile {
        let entities = scene
            .entities
            .iter()
            .map(|(name, e)| EntityJson {
                name: name.clone(),
                data: match *e {
                    Entity::Point(p) => EntityData::Point(arr(p)),
                    Entity::Line(l) => EntityData::Line(LineJson { through: arr(l.anchor()), dir: arr(l.direction().map_or(Vec2::new(1.0, 0.0), |d| d.vec())) }),
                },
            })
            .collect();
        let geoms = scene
            .geoms
            .iter()
            .map(|g| GeomJson {
                name: g.name.clone(),
                kind: g.kind(),
                state: match g.shape {
                    Shape::Circle { center, radius } => ShapeJson::Circle(CircleJson { center: arr(center), radius }),
                    Shape::Segment { end1, end2 } => ShapeJson::Segment(SegmentJson { end1: arr(end1), end2: arr(end2) }),
                },
                preserved: g.preserved.iter().map(InvariantJson::from_invariant).collect(),
            })
            .collect();
        let constraints = scene
            .constraints
            .iter()
            .map(|c| ConstraintJson { geom: c.geom.clone(), invariant: InvariantJson::from_invariant(&c.invariant) })
            .collect();
        SceneFile {
            tolerance: ToleranceJson { abs: scene.tolerance.abs_eps, rel: scene.tolerance.rel_eps },
            entities,
            geoms,
            constraints,
        }
    }
}

fn validate(scene: &Scene, names: &BTreeSet<String>) -> Result<(), IoError> {
    let check = |owner: &str, kind: GeomKind, inv: &Invariant| -> Result<(), IoError> {
        if inv.geom().as_const().and_then(|c| c.strip_prefix('$')) != Some(owner) {
            return Err(invalid(format!("{inv} does not constrain {owner}")));
        }
        if let Some(acc) = inv.accessor() {
            if !kind.point_accessors().contains(&acc) {
                return Err(invalid(format!("{inv}: a {} has no point '{acc}'", kind.name())));
            }
        }
        let mut refs = BTreeSet::new();
        referenced_names(inv.term(), &mut refs);
        if let Some(missing) = refs.iter().find(|n| !names.contains(*n)) {
            return Err(invalid(format!("{inv}: unknown name {missing}")));
        }
        Ok(())
    };
    for g in &scene.geoms {
        for inv in &g.preserved {
            check(&g.name, g.kind(), inv)?;
        }
    }
    for c in &scene.constraints {
        let g = scene.geom(&c.geom).ok_or_else(|| invalid(format!("constraint on unknown geom {}", c.geom)))?;
        check(&g.name, g.kind(), &c.invariant)?;
    }
    Ok(())
}

pub fn parse_scene(src: &str) -> Result<Scene, IoError> {
    serde_json::from_str::<SceneFile>(src)?.to_scene()
}

pub fn print_scene(scene: &Scene) -> String {
    let mut s = serde_json::to_string_pretty(&SceneFile::from_scene(scene)).expect("scene serializes");
    s.push('\n');
    s
}

pub fn read_scene(path: &Path) -> Result<Scene, IoError> {
    parse_scene(&std::fs::read_to_string(path)?)
}

/// SHA-256 of a rule file, in hex.
pub fn rulebase_hash(src: &str) -> String {
    Sha256::digest(src.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    pub max_depth: usize,
    pub max_nodes: usize,
}

impl From<Phase1Config> for SynthesisConfig {
    fn from(c: Phase1Config) -> Self {
        SynthesisConfig { max_depth: c.max_depth, max_nodes: c.max_nodes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentEntry {
    pub signature: String,
    #[serde(flatten)]
    pub fragment: PlanFragment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanLibraryFile {
    pub geom_kind: GeomKind,
    pub rulebase_hash: String,
    pub config: SynthesisConfig,
    pub fragments: Vec<FragmentEntry>,
}

impl PlanLibraryFile {
    pub fn new(kind: GeomKind, rule_src: &str, config: Phase1Config, lib: &PlanLibrary) -> Self {
        PlanLibraryFile {
            geom_kind: kind,
            rulebase_hash: rulebase_hash(rule_src),
            config: config.into(),
            fragments: lib
                .fragments
                .iter()
                .map(|(s, f)| FragmentEntry { signature: s.to_string(), fragment: f.clone() })
                .collect(),
        }
    }

    pub fn to_library(&self) -> Result<PlanLibrary, IoError> {
        let mut lib = PlanLibrary::default();
        for e in &self.fragments {
            let sig: Signature = e.signature.parse().map_err(|e: crate::kb::KbError| invalid(e.to_string()))?;
            if sig.kind() != self.geom_kind || e.fragment.kind != self.geom_kind {
                return Err(invalid(format!("{} does not belong to a {} library", e.signature, self.geom_kind.name())));
            }
            lib.fragments.insert(sig, e.fragment.clone());
        }
        Ok(lib)
    }
}

pub fn parse_library(src: &str) -> Result<PlanLibraryFile, IoError> {
    Ok(serde_json::from_str(src)?)
}

pub fn print_library(lib: &PlanLibraryFile) -> String {
    let mut s = serde_json::to_string_pretty(lib).expect("library serializes");
    s.push('\n');
    s
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::t;

    const FIG2: &str = r#"{
      "tolerance": {"abs": 1e-9, "rel": 1e-9},
      "entities": [
        {"name": "L1", "kind": "line", "data": {"through": [0, 0], "dir": [1, 0]}},
        {"name": "L2", "kind": "line", "data": {"through": [0, 0], "dir": [1, 1]}}
      ],
      "geoms": [{"name": "c", "kind": "circle", "state": {"center": [3, 4], "radius": 1}}],
      "constraints": [
        {"geom": "c", "invariant": {"type": "fixed-distance-line", "geom": "c", "line": "L1", "dist": 2, "bias": "CCW"}},
        {"geom": "c", "invariant": {"type": "fixed-distance-line", "geom": "c", "line": "L2", "dist": 0.5, "bias": "CW"}}
      ]
    }"#;

    #[test]
    fn scene_file_reads_and_reprints() {
        let s = parse_scene(FIG2).unwrap();
        assert_eq!(s.constraints[0].invariant.term(), &t("(fixed-distance-line $c $L1 2 BIAS_COUNTERCLOCKWISE)"));
        assert_eq!(parse_scene(&print_scene(&s)).unwrap(), s);
    }

    #[test]
    fn unknown_fields_and_names_are_rejected() {
        let extra = FIG2.replace(r#""radius": 1}"#, r#""radius": 1, "colour": "red"}"#);
        assert!(matches!(parse_scene(&extra), Err(IoError::Json(_))));
        let dangling = FIG2.replace(r#""line": "L2""#, r#""line": "L9""#);
        assert!(matches!(parse_scene(&dangling), Err(IoError::Invalid(m)) if m.contains("L9")));
    }

    #[test]
    fn derived_invariants_fall_back_to_terms() {
        let inv = Invariant::new(t("(1d-constrained-point $c (>> $c center) (angular-bisector $L1 $L2 BIAS_CLOCKWISE BIAS_COUNTERCLOCKWISE))")).unwrap();
        let j = InvariantJson::from_invariant(&inv);
        assert!(matches!(j, InvariantJson::Term { .. }));
        assert_eq!(j.to_invariant().unwrap(), inv);
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(rulebase_hash(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b");
    }
}
