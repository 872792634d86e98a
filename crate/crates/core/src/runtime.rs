//! Scenes, measurement evaluation, fragment execution and the incremental
//! constraint engine.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    angle_between, angular_bisector, clip_interval, closest_point, intersect_0d, linspace, make_displaced_line,
    make_line_locus, signed_distance, BBox, ConicKind, Direction2, GeomError, IntersectionResult, Locus1d, Point2,
    Rotation, Side, Tolerance, Vec2,
};
use crate::kb::{
    apply_action, invariant_residual, signature_of, Action, Bias, GeomKind, GeomState, GroundInvariant, Invariant,
    InvariantKind, KbError, Shape, Signature,
};
use crate::phase2::{Domain, MotionSpec, PlanFragment, SearchConfig, Step};
use crate::rulebase::RuleBase;
use crate::rules::{reformulate, ReformError};
use crate::term::{match_term, Substitution, Term};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entity {
    Point(Point2),
    Line(Locus1d),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub geom: String,
    pub invariant: Invariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub tolerance: Tolerance,
    pub entities: BTreeMap<String, Entity>,
    pub geoms: Vec<GeomState>,
    pub constraints: Vec<Constraint>,
}

impl Scene {
    pub fn geom(&self, name: &str) -> Option<&GeomState> {
        self.geoms.iter().find(|g| g.name == name)
    }

    /// Bounds of entity anchor points and geom positions.
    pub fn bbox(&self) -> BBox {
        let mut pts = Vec::new();
        for e in self.entities.values() {
            match e {
                Entity::Point(p) => pts.push(*p),
                Entity::Line(l) => pts.push(l.anchor()),
            }
        }
        for g in &self.geoms {
            match g.shape {
                Shape::Circle { center, radius } => {
                    pts.push(center - Vec2::new(radius, radius));
                    pts.push(center + Vec2::new(radius, radius));
                }
                Shape::Segment { end1, end2 } => pts.extend([end1, end2]),
            }
        }
        BBox::around(&pts).unwrap_or(BBox::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)))
    }
}

/// Run-time values of measurement terms.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec2),
    Locus(Locus1d),
    Intersection(IntersectionResult),
    Points(Vec<Point2>),
    Bias(Bias),
    Shape(Shape),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Vector(_) => "vector",
            Value::Locus(_) => "locus",
            Value::Intersection(_) => "intersection",
            Value::Points(_) => "points",
            Value::Bias(_) => "bias",
            Value::Shape(_) => "geom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound name {0}")]
    UnboundName(String),
    #[error("type mismatch in {expr}: expected {expected}, got {got}")]
    TypeMismatch { expr: String, expected: &'static str, got: &'static str },
    #[error("{routine}: {source}")]
    Geometry { routine: String, source: GeomError },
    #[error("{0} must be elaborated before evaluation")]
    Unelaborated(String),
    #[error("cannot evaluate {0}")]
    NotEvaluable(String),
}

/// Bindings for evaluation: fragment arguments, locals, and the current
/// shape of the geom being moved.
pub struct Env<'a> {
    pub scene: &'a Scene,
    pub geom: &'a str,
    pub shape: Shape,
    pub args: &'a Substitution,
    pub locals: BTreeMap<String, Value>,
}

impl Env<'_> {
    pub fn eval(&self, t: &Term) -> Result<Value, EvalError> {
        match t {
            Term::Num(x) => Ok(Value::Scalar(*x)),
            Term::Var(v) => Err(EvalError::UnboundName(format!("?{v}"))),
            Term::Const(c) => self.lookup(c),
            Term::App(h, a) => self.apply(t, h, a),
        }
    }

    fn lookup(&self, c: &str) -> Result<Value, EvalError> {
        if c.starts_with('@') {
            return self.locals.get(c).cloned().ok_or_else(|| EvalError::UnboundName(c.into()));
        }
        if let Some(bound) = self.args.get(c) {
            // A parameter bound to an intersection of fixed loci stands for
            // the intersection point nearest the geom.
            return match self.eval(bound)? {
                Value::Intersection(IntersectionResult::Points(ps)) if !ps.is_empty() => {
                    let here = self.shape.reference_point();
                    let near = ps.into_iter().min_by(|a, b| (*a - here).norm().total_cmp(&(*b - here).norm()));
                    Ok(Value::Vector(near.unwrap_or(here)))
                }
                v => Ok(v),
            };
        }
        if let Some(b) = Bias::from_atom(c) {
            return Ok(Value::Bias(b));
        }
        let name = c.strip_prefix('$').ok_or_else(|| EvalError::UnboundName(c.into()))?;
        if name == self.geom {
            return Ok(Value::Shape(self.shape));
        }
        if let Some(e) = self.scene.entities.get(name) {
            return Ok(match *e {
                Entity::Point(p) => Value::Vector(p),
                Entity::Line(l) => Value::Locus(l),
            });
        }
        if let Some(g) = self.scene.geom(name) {
            return Ok(Value::Shape(g.shape));
        }
        Err(EvalError::UnboundName(c.into()))
    }

    fn apply(&self, t: &Term, h: &str, a: &[Term]) -> Result<Value, EvalError> {
        let mismatch = |expected, v: &Value| EvalError::TypeMismatch { expr: t.to_string(), expected, got: v.type_name() };
        let geo = |e: GeomError| EvalError::Geometry { routine: h.to_string(), source: e };
        let scalar = |i: usize| match self.eval(&a[i])? {
            Value::Scalar(x) => Ok(x),
            v => Err(mismatch("scalar", &v)),
        };
        let vector = |i: usize| match self.eval(&a[i])? {
            Value::Vector(x) => Ok(x),
            v => Err(mismatch("vector", &v)),
        };
        let locus = |i: usize| match self.eval(&a[i])? {
            Value::Locus(x) => Ok(x),
            v => Err(mismatch("locus", &v)),
        };
        let bias = |i: usize| match self.eval(&a[i])? {
            Value::Bias(b) => Ok(b),
            v => Err(mismatch("bias", &v)),
        };
        let dir = |i: usize| vector(i).and_then(|v| Direction2::new(v).map_err(geo));
        Ok(match h {
            "pt" | "vec" => Value::Vector(Vec2::new(scalar(0)?, scalar(1)?)),
            ">>" => return self.access(t, a),
            "v-" => Value::Vector(vector(0)? - vector(1)?),
            "v+" => Value::Vector(vector(0)? + vector(1)?),
            "v*" => match (self.eval(&a[0])?, self.eval(&a[1])?) {
                (Value::Vector(v), Value::Scalar(k)) | (Value::Scalar(k), Value::Vector(v)) => Value::Vector(v * k),
                (v, _) => return Err(mismatch("vector and scalar", &v)),
            },
            "plus" => Value::Scalar(scalar(0)? + scalar(1)?),
            "minus" => Value::Scalar(scalar(0)? - scalar(1)?),
            "times" => Value::Scalar(scalar(0)? * scalar(1)?),
            "neg" => Value::Scalar(-scalar(0)?),
            "magnitude" => Value::Scalar(vector(0)?.norm()),
            "reverse" => Value::Vector(-vector(0)?),
            "make-line-locus" => Value::Locus(make_line_locus(vector(0)?, dir(1)?)),
            "make-ray-locus" => Value::Locus(Locus1d::ray(vector(0)?, dir(1)?)),
            "make-circle-locus" => Value::Locus(Locus1d::circle(vector(0)?, scalar(1)?).map_err(geo)?),
            "make-parabola-locus" => return Err(geo(GeomError::ReservedConic(ConicKind::Parabola))),
            "make-hyperbola-locus" => return Err(geo(GeomError::ReservedConic(ConicKind::Hyperbola))),
            "make-displaced-line" => {
                let side = side_of(bias(1)?).ok_or_else(|| mismatch("line bias", &Value::Bias(Bias::Inside)))?;
                Value::Locus(make_displaced_line(&locus(0)?, side, scalar(2)?).map_err(geo)?)
            }
            "translate-locus" => Value::Locus(locus(0)?.translated(vector(1)?)),
            "angular-bisector" => {
                let r1 = rotation_of(bias(2)?).ok_or_else(|| mismatch("line bias", &Value::Bias(Bias::Inside)))?;
                let r2 = rotation_of(bias(3)?).ok_or_else(|| mismatch("line bias", &Value::Bias(Bias::Inside)))?;
                Value::Locus(angular_bisector(&locus(0)?, &locus(1)?, r1, r2, &self.scene.tolerance).map_err(geo)?)
            }
            "0d-intersection" => Value::Intersection(intersect_0d(&locus(0)?, &locus(1)?, &self.scene.tolerance)),
            "bias-distance" => {
                let s = bias(1)?.line_sign().ok_or_else(|| mismatch("line bias", &Value::Bias(Bias::Inside)))?;
                Value::Scalar(s * signed_distance(&locus(0)?, vector(2)?).map_err(geo)?)
            }
            "fdp-locus-radius" => Value::Scalar(match bias(0)? {
                Bias::Inside => scalar(2)? - scalar(1)?,
                _ => scalar(2)? + scalar(1)?,
            }),
            "fdp-radius" => Value::Scalar(match bias(0)? {
                Bias::Inside => scalar(1)? + scalar(2)?,
                _ => scalar(1)? - scalar(2)?,
            }),
            "angle-between" => Value::Scalar(angle_between(vector(0)?, vector(1)?)),
            _ => return Err(EvalError::NotEvaluable(t.to_string())),
        })
    }

    fn access(&self, t: &Term, a: &[Term]) -> Result<Value, EvalError> {
        let field = a[1].as_const().ok_or_else(|| EvalError::NotEvaluable(t.to_string()))?;
        if field == "arbitrary-point" {
            return Err(EvalError::Unelaborated(t.to_string()));
        }
        let obj = self.eval(&a[0])?;
        let bad = || EvalError::TypeMismatch { expr: t.to_string(), expected: "accessor target", got: obj.type_name() };
        match (&obj, field) {
            (Value::Shape(s), "radius" | "length") => Ok(Value::Scalar(s.dimension())),
            (Value::Shape(s), "direction") => s.direction().map(|d| Value::Vector(d.vec())).ok_or_else(bad),
            (Value::Shape(s), f) => s.point(f).map(Value::Vector).ok_or_else(bad),
            (Value::Locus(l), "direction") => l.direction().map(|d| Value::Vector(d.vec())).ok_or_else(bad),
            (Value::Vector(v), "magnitude") => Ok(Value::Scalar(v.norm())),
            _ => Err(bad()),
        }
    }
}

fn side_of(b: Bias) -> Option<Side> {
    match b {
        Bias::Ccw | Bias::Left => Some(Side::Left),
        Bias::Cw | Bias::Right => Some(Side::Right),
        _ => None,
    }
}

fn rotation_of(b: Bias) -> Option<Rotation> {
    match b {
        Bias::Ccw | Bias::Left => Some(Rotation::Ccw),
        Bias::Cw | Bias::Right => Some(Rotation::Cw),
        _ => None,
    }
}

/// Why a constraint could not be solved.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("constraint {constraint}: {routine}: {cause}")]
pub struct Diagnostic {
    pub constraint: usize,
    pub routine: String,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error(transparent)]
    Diagnostic(#[from] Diagnostic),
    #[error("malformed fragment: {0}")]
    Config(String),
}

/// A value chosen by a least-motion search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Chosen {
    Point([f64; 2]),
    Scalar(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum TraceRecord {
    Bind { local: String, value: String },
    Case { on: String, arm: String },
    ForMin { local: String, chosen: Chosen, objective: f64, evaluated: usize },
    Apply { action: String, ground: String, residual: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub geom: String,
    /// Library key of the executed fragment; empty for direct execution.
    #[serde(default)]
    pub signature: String,
    pub records: Vec<TraceRecord>,
}

impl ExecutionTrace {
    pub fn choices(&self) -> Vec<Chosen> {
        self.records
            .iter()
            .filter_map(|r| match r {
                TraceRecord::ForMin { chosen, .. } => Some(*chosen),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecConfig {
    pub search: SearchConfig,
    pub motion: MotionSpec,
    /// Residual bound checked after execution, relative to the scene size.
    pub check_tol: f64,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig { search: SearchConfig::default(), motion: MotionSpec::default(), check_tol: 1e-9 }
    }
}

/// Minimize `objective` over a box by coordinate descent: each sweep scans
/// every coordinate on a grid and rescans around the incumbent at finer
/// spacing. `None` when no candidate is feasible.
pub fn least_motion_search(
    bounds: &[(f64, f64)],
    seeds: &[Vec<f64>],
    cfg: &SearchConfig,
    mut objective: impl FnMut(&[f64]) -> Option<f64>,
) -> Option<(Vec<f64>, f64)> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    let consider = |x: Vec<f64>, best: &mut Option<(Vec<f64>, f64)>, f: &mut dyn FnMut(&[f64]) -> Option<f64>| {
        if let Some(v) = f(&x) {
            if v.is_finite() && best.as_ref().is_none_or(|(_, b)| v < *b) {
                *best = Some((x, v));
                return true;
            }
        }
        false
    };
    for s in seeds {
        consider(s.clone(), &mut best, &mut objective);
    }
    let start: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let sweeps = if bounds.len() == 1 { 1 } else { cfg.max_sweeps.max(1) };
    let n = cfg.samples.max(2);
    for _ in 0..sweeps {
        let mut improved = false;
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            let base = best.as_ref().map_or(start.clone(), |(x, _)| x.clone());
            let at = |v: f64| {
                let mut x = base.clone();
                x[d] = v;
                x
            };
            for g in linspace(lo, hi, n) {
                improved |= consider(at(g), &mut best, &mut objective);
            }
            let mut step = (hi - lo) / (n - 1) as f64;
            for _ in 0..cfg.refine_passes {
                let Some((x, _)) = best.clone() else { break };
                let c = x[d];
                let (a, b) = ((c - step).max(lo), (c + step).min(hi));
                for g in linspace(a, b, n) {
                    let mut y = x.clone();
                    y[d] = g;
                    improved |= consider(y, &mut best, &mut objective);
                }
                step = (b - a) / (n - 1) as f64;
            }
        }
        if !improved {
            break;
        }
    }
    best
}

fn motion_of(action: &Action, shape: &Shape, m: &MotionSpec) -> f64 {
    match *action {
        Action::Translate { vec } => m.translate * vec.norm_sq(),
        Action::Rotate { amt, .. } => m.rotate * (amt * shape.scale_length()).powi(2),
        Action::Scale { amt, .. } => m.scale * amt * amt,
    }
}

#[derive(Clone)]
struct State {
    shape: Shape,
    locals: BTreeMap<String, Value>,
    motion: f64,
}

struct Exec<'a> {
    scene: &'a Scene,
    geom: &'a str,
    args: &'a Substitution,
    cfg: &'a ExecConfig,
    bounds: BBox,
    constraint: usize,
}

enum Fail {
    Diag(Diagnostic),
    Config(String),
}

impl Exec<'_> {
    fn env(&self, st: &State) -> Env<'_> {
        Env { scene: self.scene, geom: self.geom, shape: st.shape, args: self.args, locals: st.locals.clone() }
    }

    fn diag(&self, routine: &str, cause: impl ToString) -> Fail {
        Fail::Diag(Diagnostic { constraint: self.constraint, routine: routine.into(), cause: cause.to_string() })
    }

    fn eval(&self, st: &State, t: &Term) -> Result<Value, Fail> {
        self.env(st).eval(t).map_err(|e| match e {
            EvalError::Geometry { routine, source } => self.diag(&routine, source),
            other => self.diag("eval", other),
        })
    }

    fn point(&self, st: &State, t: &Term) -> Result<Point2, Fail> {
        match self.eval(st, t)? {
            Value::Vector(p) => Ok(p),
            v => Err(Fail::Config(format!("{t} is a {}, expected a point", v.type_name()))),
        }
    }

    fn scalar(&self, st: &State, t: &Term) -> Result<f64, Fail> {
        match self.eval(st, t)? {
            Value::Scalar(x) => Ok(x),
            v => Err(Fail::Config(format!("{t} is a {}, expected a scalar", v.type_name()))),
        }
    }

    fn ground_action(&self, st: &State, t: &Term) -> Result<Action, Fail> {
        let a = t.args();
        match t.head() {
            Some("translate") => Ok(Action::Translate { vec: self.point(st, &a[1])? }),
            Some("rotate") => Ok(Action::Rotate { pt: self.point(st, &a[1])?, amt: self.scalar(st, &a[3])? }),
            Some("scale") => Ok(Action::Scale { pt: self.point(st, &a[1])?, amt: self.scalar(st, &a[2])? }),
            _ => Err(Fail::Config(format!("{t} is not an action"))),
        }
    }

    fn run(
        &self,
        steps: &[Step],
        st: &mut State,
        mut trace: Option<&mut Vec<TraceRecord>>,
        replay: &mut std::slice::Iter<'_, Chosen>,
    ) -> Result<(), Fail> {
        for (i, step) in steps.iter().enumerate() {
            match step {
                Step::Bind { local, expr } => {
                    let v = self.eval(st, expr)?;
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.push(TraceRecord::Bind { local: local.clone(), value: format!("{v:?}") });
                    }
                    st.locals.insert(local.clone(), v);
                }
                Step::Apply { action } => {
                    let g = self.ground_action(st, action)?;
                    let next = apply_action(&st.shape, &g).map_err(|e| self.diag(action.head().unwrap_or("action"), e))?;
                    if !next.is_finite() {
                        return Err(self.diag("action", "non-finite configuration"));
                    }
                    st.motion += motion_of(&g, &st.shape, &self.cfg.motion);
                    st.shape = next;
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.push(TraceRecord::Apply { action: action.to_string(), ground: format!("{g:?}"), residual: 0.0 });
                    }
                }
                Step::Abort { reason } => return Err(self.diag("abort", reason)),
                Step::Case { on, points, coincident, empty } => {
                    let v = st.locals.get(on).cloned().ok_or_else(|| Fail::Config(format!("unbound {on}")))?;
                    let Value::Intersection(r) = v else {
                        return Err(Fail::Config(format!("{on} is not an intersection")));
                    };
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.push(TraceRecord::Case { on: on.clone(), arm: r.tag().into() });
                    }
                    let (arm, value) = match r {
                        IntersectionResult::Points(p) => (&points.body, Some((&points.local, Value::Points(p)))),
                        IntersectionResult::Coincident(l) => (&coincident.body, Some((&coincident.local, Value::Locus(l)))),
                        IntersectionResult::Empty => (empty, None),
                    };
                    if let Some((name, v)) = value {
                        st.locals.insert(name.clone(), v);
                    }
                    self.run(arm, st, trace.as_deref_mut(), replay)?;
                    // Case arms hold the rest of the plan.
                    return self.run(&steps[i + 1..], st, trace, replay);
                }
                Step::ForMin { local, domain, body } => {
                    self.for_min(local, domain, body, st, trace.as_deref_mut(), replay)?;
                    return self.run(&steps[i + 1..], st, trace, replay);
                }
            }
        }
        Ok(())
    }

    /// Pick the domain value whose completed body moves the geom least.
    fn for_min(
        &self,
        local: &str,
        domain: &Domain,
        body: &[Step],
        st: &mut State,
        trace: Option<&mut Vec<TraceRecord>>,
        replay: &mut std::slice::Iter<'_, Chosen>,
    ) -> Result<(), Fail> {
        let value_of = |c: Chosen| match c {
            Chosen::Point([x, y]) => Value::Vector(Vec2::new(x, y)),
            Chosen::Scalar(x) => Value::Scalar(x),
        };
        let mut evaluated = 0;
        let chosen: Chosen;
        let objective: f64;
        if let Some(c) = replay.next() {
            chosen = *c;
            objective = f64::NAN;
        } else {
            let mut try_value = |v: Value| -> Option<f64> {
                evaluated += 1;
                let mut s = st.clone();
                s.locals.insert(local.to_string(), v);
                self.run(body, &mut s, None, &mut [].iter()).ok().map(|_| s.motion)
            };
            let best = match domain {
                Domain::Points { local: pts } => {
                    let Some(Value::Points(ps)) = st.locals.get(pts).cloned() else {
                        return Err(Fail::Config(format!("{pts} does not hold points")));
                    };
                    let mut best: Option<(Chosen, f64)> = None;
                    for p in ps {
                        if let Some(m) = try_value(Value::Vector(p)) {
                            if best.is_none_or(|(_, b)| m < b) {
                                best = Some((Chosen::Point([p.x, p.y]), m));
                            }
                        }
                    }
                    best
                }
                Domain::Locus { locus, seed } => {
                    let l = match self.eval(st, locus)? {
                        Value::Locus(l) => l,
                        v => return Err(Fail::Config(format!("{locus} is a {}, expected a locus", v.type_name()))),
                    };
                    let nearest = match seed.as_ref().map(|s| self.env(st).eval(s)) {
                        Some(Ok(Value::Vector(p))) => Some(closest_point(&l, p)),
                        _ => None,
                    };
                    // The scene bounds are widened to the locus point nearest
                    // the geom before inflation, so a locus lying just outside
                    // the scene is still searched around its closest approach.
                    let mut region = self.bounds;
                    if let Some((_, q)) = nearest {
                        region.include(q);
                    }
                    let region = region.inflated(self.cfg.search.bbox_inflation);
                    let bounds = match l {
                        Locus1d::Circle { .. } => Some((0.0, 2.0 * std::f64::consts::PI)),
                        _ => clip_interval(&l, &region),
                    };
                    let Some(bounds) = bounds else {
                        return Err(self.diag("for-min", format!("{} locus misses the search region", l.kind_name())));
                    };
                    let mut seeds = Vec::new();
                    if let Some((t, _)) = nearest {
                        if t >= bounds.0 && t <= bounds.1 {
                            seeds.push(vec![t]);
                        }
                    }
                    least_motion_search(&[bounds], &seeds, &self.cfg.search, |x| try_value(Value::Vector(l.point_at(x[0]))))
                        .map(|(x, m)| {
                            let p = l.point_at(x[0]);
                            (Chosen::Point([p.x, p.y]), m)
                        })
                }
                Domain::Interval { lo, hi } => {
                    let (lo, hi) = (self.scalar(st, lo)?, self.scalar(st, hi)?);
                    least_motion_search(&[(lo, hi)], &[vec![0.0]], &self.cfg.search, |x| try_value(Value::Scalar(x[0])))
                        .map(|(x, m)| (Chosen::Scalar(x[0]), m))
                }
            };
            let Some((c, m)) = best else {
                return Err(self.diag("for-min", format!("no feasible value for {local}")));
            };
            chosen = c;
            objective = m;
        }
        st.locals.insert(local.to_string(), value_of(chosen));
        let mut trace = trace;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TraceRecord::ForMin { local: local.to_string(), chosen, objective, evaluated });
        }
        self.run(body, st, trace, replay)
    }
}

/// Ground an invariant term against the environment. Point targets that
/// evaluate to intersections pick the point nearest the geom.
pub fn ground_invariant(inv: &Invariant, env: &Env<'_>) -> Result<GroundInvariant, EvalError> {
    let acc = || inv.accessor().unwrap_or_default().to_string();
    let val = |i: usize| env.eval(inv.arg(i));
    let mismatch = |expected, v: &Value| EvalError::TypeMismatch {
        expr: inv.to_string(),
        expected,
        got: v.type_name(),
    };
    let scalar = |i: usize| match val(i)? {
        Value::Scalar(x) => Ok(x),
        v => Err(mismatch("scalar", &v)),
    };
    let bias = |i: usize| match val(i)? {
        Value::Bias(b) => Ok(b),
        v => Err(mismatch("bias", &v)),
    };
    Ok(match inv.kind() {
        InvariantKind::InvariantPoint => {
            let here = env.shape.point(&acc()).unwrap_or_default();
            match val(2)? {
                Value::Vector(p) => GroundInvariant::Point { acc: acc(), at: p },
                Value::Intersection(IntersectionResult::Points(ps)) => {
                    let at = ps
                        .into_iter()
                        .min_by(|a, b| (*a - here).norm().total_cmp(&(*b - here).norm()))
                        .ok_or_else(|| mismatch("point", &Value::Points(vec![])))?;
                    GroundInvariant::Point { acc: acc(), at }
                }
                Value::Intersection(IntersectionResult::Coincident(l)) => GroundInvariant::OnLocus { acc: acc(), locus: l },
                v => return Err(mismatch("point", &v)),
            }
        }
        InvariantKind::OneDConstrainedPoint => match val(2)? {
            Value::Locus(l) => GroundInvariant::OnLocus { acc: acc(), locus: l },
            v => return Err(mismatch("locus", &v)),
        },
        InvariantKind::TwoDConstrainedPoint => GroundInvariant::InRegion { acc: acc() },
        InvariantKind::FixedDistancePoint => match val(2)? {
            Value::Vector(anchor) => GroundInvariant::DistancePoint { acc: acc(), anchor, dist: scalar(3)?, bias: bias(4)? },
            v => return Err(mismatch("point", &v)),
        },
        InvariantKind::FixedDistanceLine => match val(1)? {
            Value::Locus(line) => GroundInvariant::DistanceLine { line, dist: scalar(2)?, bias: bias(3)? },
            v => return Err(mismatch("line", &v)),
        },
        InvariantKind::InvariantDirection => match val(1)? {
            Value::Vector(v) => GroundInvariant::Direction {
                dir: Direction2::new(v).map_err(|e| EvalError::Geometry { routine: "direction".into(), source: e })?,
            },
            v => return Err(mismatch("vector", &v)),
        },
        InvariantKind::InvariantDimension => GroundInvariant::Dimension { value: scalar(1)? },
    })
}

/// Execute a fragment on `geom`, with `args` binding the fragment
/// parameters. `replay` feeds recorded search choices instead of searching.
pub fn execute_plan(
    frag: &PlanFragment,
    scene: &Scene,
    geom: &str,
    args: &Substitution,
    cfg: &ExecConfig,
    replay: Option<&[Chosen]>,
) -> Result<(Shape, ExecutionTrace), ExecError> {
    execute_inner(frag, scene, geom, args, cfg, replay, 0)
}

fn execute_inner(
    frag: &PlanFragment,
    scene: &Scene,
    geom: &str,
    args: &Substitution,
    cfg: &ExecConfig,
    replay: Option<&[Chosen]>,
    constraint: usize,
) -> Result<(Shape, ExecutionTrace), ExecError> {
    let g = scene.geom(geom).ok_or_else(|| ExecError::Config(format!("unknown geom {geom}")))?;
    if g.kind() != frag.kind {
        return Err(ExecError::Config(format!("fragment is for {}, geom {geom} is a {}", frag.kind, g.kind())));
    }
    let exec = Exec {
        scene,
        geom,
        args,
        cfg,
        bounds: scene.bbox(),
        constraint,
    };
    let mut st = State { shape: g.shape, locals: BTreeMap::new(), motion: 0.0 };
    let mut records = Vec::new();
    let choices = replay.unwrap_or(&[]);
    exec.run(&frag.body, &mut st, Some(&mut records), &mut choices.iter()).map_err(|f| match f {
        Fail::Diag(d) => ExecError::Diagnostic(d),
        Fail::Config(c) => ExecError::Config(c),
    })?;

    // Post-condition: everything the fragment promises holds.
    let env = Env { scene, geom, shape: st.shape, args, locals: BTreeMap::new() };
    let bound = cfg.check_tol * scene.bbox().diagonal().max(1.0) * 1e3;
    for t in frag.preserved.iter().chain(&frag.achieves) {
        let inv = Invariant::new(t.clone()).map_err(|e| ExecError::Config(e.to_string()))?;
        let gi = ground_invariant(&inv, &env).map_err(|e| Diagnostic {
            constraint,
            routine: "post-check".into(),
            cause: e.to_string(),
        })?;
        let r = invariant_residual(&st.shape, &gi);
        if r.is_nan() || r > bound {
            return Err(Diagnostic {
                constraint,
                routine: "post-check".into(),
                cause: format!("{} left with residual {r:e}", inv.term().apply(args)),
            }
            .into());
        }
    }
    let final_residual = records.iter().rposition(|r| matches!(r, TraceRecord::Apply { .. }));
    if let Some(i) = final_residual {
        if let TraceRecord::Apply { residual, .. } = &mut records[i] {
            *residual = frag
                .achieves
                .iter()
                .filter_map(|t| Invariant::new(t.clone()).ok())
                .filter_map(|inv| ground_invariant(&inv, &env).ok())
                .map(|gi| invariant_residual(&st.shape, &gi))
                .fold(0.0, f64::max);
        }
    }
    Ok((st.shape, ExecutionTrace { geom: geom.to_string(), signature: String::new(), records }))
}

/// Fragments indexed by canonical signature.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanLibrary {
    pub fragments: BTreeMap<Signature, PlanFragment>,
}

impl PlanLibrary {
    pub fn get(&self, sig: &Signature) -> Option<&PlanFragment> {
        self.fragments.get(sig)
    }

    pub fn merge(&mut self, other: PlanLibrary) {
        self.fragments.extend(other.fragments);
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("constraint {constraint}: no plan fragment for signature {signature}")]
    MissingPlanFragment { constraint: usize, signature: Signature },
    #[error(transparent)]
    Diagnostic(#[from] Diagnostic),
    #[error("constraint {constraint}: {message}")]
    Invalid { constraint: usize, message: String },
}

/// Bind fragment parameters by matching its invariants onto `canon`, one
/// to one.
pub fn bind_params(frag: &PlanFragment, canon: &[Invariant]) -> Option<Substitution> {
    let as_pattern = |t: &Term| {
        t.map_bottom_up(&mut |x| match &x {
            Term::Const(c) if frag.params.contains(c) => Term::Var(c.clone()),
            _ => x,
        })
    };
    let mut pats: Vec<Term> = vec![];
    pats.extend(frag.achieves.iter().map(as_pattern));
    pats.extend(frag.preserved.iter().map(as_pattern));
    fn go(pats: &[Term], canon: &[Invariant], used: &mut Vec<usize>, s: &Substitution) -> Option<Substitution> {
        let Some((p, rest)) = pats.split_first() else { return Some(s.clone()) };
        for (i, c) in canon.iter().enumerate() {
            if used.contains(&i) {
                continue;
            }
            let mut s2 = s.clone();
            if match_term(p, c.term(), &mut s2) {
                used.push(i);
                if let Some(r) = go(rest, canon, used, &s2) {
                    return Some(r);
                }
                used.pop();
            }
        }
        None
    }
    if pats.len() != canon.len() {
        return None;
    }
    go(&pats, canon, &mut Vec::new(), &Substitution::new())
}

/// Satisfy the scene's constraints one at a time, in order.
pub fn solve_scene(
    scene: &Scene,
    lib: &PlanLibrary,
    rb: &RuleBase,
    cfg: &ExecConfig,
) -> Result<(Scene, Vec<ExecutionTrace>), SolveError> {
    let mut cur = scene.clone();
    let mut traces = Vec::new();
    for (ci, c) in scene.constraints.iter().enumerate() {
        let invalid = |m: String| SolveError::Invalid { constraint: ci, message: m };
        let gi = cur.geoms.iter().position(|g| g.name == c.geom).ok_or_else(|| invalid(format!("unknown geom {}", c.geom)))?;
        let kind = cur.geoms[gi].kind();
        let mut all = cur.geoms[gi].preserved.clone();
        all.push(c.invariant.clone());
        let (canon, _) = reformulate(kind, &all, rb).map_err(|e: ReformError| invalid(e.to_string()))?;
        let sig = signature_of(kind, &canon).map_err(|e: KbError| invalid(e.to_string()))?;
        let frag = lib.get(&sig).ok_or(SolveError::MissingPlanFragment { constraint: ci, signature: sig })?;
        let args = bind_params(frag, &canon)
            .ok_or_else(|| invalid(format!("fragment parameters do not match {sig}")))?;
        let (shape, mut trace) = execute_inner(frag, &cur, &c.geom, &args, cfg, None, ci).map_err(|e| match e {
            ExecError::Diagnostic(d) => SolveError::Diagnostic(d),
            ExecError::Config(m) => invalid(m),
        })?;
        trace.signature = sig.to_string();
        cur.geoms[gi].shape = shape;
        cur.geoms[gi].preserved = canon;
        traces.push(trace);
    }
    Ok((cur, traces))
}

/// Residual of one scene constraint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub constraint: usize,
    pub geom: String,
    pub invariant: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<ResidualRow>,
}

impl VerifyReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.residual <= tol)
    }
}

/// Literal reading of the argument forms a scene file can contain; kept
/// apart from the evaluator so the check shares no code with execution.
fn literal(scene: &Scene, t: &Term) -> Option<Literal> {
    let num = |t: &Term| match t {
        Term::Num(x) => Some(*x),
        _ => None,
    };
    let xy = |t: &Term| match (t.head(), t.args()) {
        (Some("pt" | "vec"), [x, y]) => Some(Vec2::new(num(x)?, num(y)?)),
        _ => None,
    };
    match t {
        Term::Num(x) => Some(Literal::Number(*x)),
        Term::Const(c) => {
            if let Some(b) = Bias::from_atom(c) {
                return Some(Literal::Bias(b));
            }
            match scene.entities.get(c.strip_prefix('$')?)? {
                Entity::Point(p) => Some(Literal::Point(*p)),
                Entity::Line(l) => Some(Literal::Locus(*l)),
            }
        }
        Term::App(h, a) => match h.as_str() {
            "pt" | "vec" => xy(t).map(Literal::Point),
            "make-line-locus" => {
                let d = Direction2::new(xy(&a[1])?).ok()?;
                Some(Literal::Locus(Locus1d::Line { through: xy(&a[0])?, dir: d }))
            }
            "make-ray-locus" => {
                let d = Direction2::new(xy(&a[1])?).ok()?;
                Some(Literal::Locus(Locus1d::Ray { origin: xy(&a[0])?, dir: d }))
            }
            "make-circle-locus" => Some(Literal::Locus(Locus1d::Circle { center: xy(&a[0])?, radius: num(&a[1])? })),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, Copy)]
enum Literal {
    Number(f64),
    Point(Point2),
    Locus(Locus1d),
    Bias(Bias),
}

fn verify_one(scene: &Scene, geom: &GeomState, inv: &Invariant) -> f64 {
    let lit = |i: usize| literal(scene, inv.arg(i));
    let acc = inv.accessor().unwrap_or_default().to_string();
    let gi = match (inv.kind(), inv.term().args().len()) {
        (InvariantKind::InvariantPoint, _) => match lit(2) {
            Some(Literal::Point(at)) => Some(GroundInvariant::Point { acc, at }),
            _ => None,
        },
        (InvariantKind::OneDConstrainedPoint, _) => match lit(2) {
            Some(Literal::Locus(locus)) => Some(GroundInvariant::OnLocus { acc, locus }),
            _ => None,
        },
        (InvariantKind::TwoDConstrainedPoint, _) => Some(GroundInvariant::InRegion { acc }),
        (InvariantKind::FixedDistancePoint, _) => match (lit(2), lit(3), lit(4)) {
            (Some(Literal::Point(anchor)), Some(Literal::Number(dist)), Some(Literal::Bias(bias))) => {
                Some(GroundInvariant::DistancePoint { acc, anchor, dist, bias })
            }
            _ => None,
        },
        (InvariantKind::FixedDistanceLine, _) => match (lit(1), lit(2), lit(3)) {
            (Some(Literal::Locus(line)), Some(Literal::Number(dist)), Some(Literal::Bias(bias))) => {
                Some(GroundInvariant::DistanceLine { line, dist, bias })
            }
            _ => None,
        },
        (InvariantKind::InvariantDirection, _) => match lit(1) {
            Some(Literal::Point(v)) => Direction2::new(v).ok().map(|dir| GroundInvariant::Direction { dir }),
            _ => None,
        },
        (InvariantKind::InvariantDimension, _) => match lit(1) {
            Some(Literal::Number(value)) => Some(GroundInvariant::Dimension { value }),
            _ => None,
        },
    };
    gi.map_or(f64::INFINITY, |g| invariant_residual(&geom.shape, &g))
}

/// Per-constraint residuals of the scene's current configuration.
pub fn verify_scene(scene: &Scene) -> VerifyReport {
    let rows = scene
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| ResidualRow {
            constraint: i,
            geom: c.geom.clone(),
            invariant: c.invariant.to_string(),
            residual: scene.geom(&c.geom).map_or(f64::INFINITY, |g| verify_one(scene, g, &c.invariant)),
        })
        .collect();
    VerifyReport { rows }
}

/// Kind check for user-facing inputs.
pub fn geom_kind_of(scene: &Scene, name: &str) -> Option<GeomKind> {
    scene.geom(name).map(GeomState::kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::t;

    fn scene() -> Scene {
        let mut entities = BTreeMap::new();
        entities.insert("p".into(), Entity::Point(Vec2::new(0.0, 0.0)));
        entities.insert(
            "L".into(),
            Entity::Line(make_line_locus(Vec2::default(), Direction2::new(Vec2::new(1.0, 0.0)).unwrap())),
        );
        Scene {
            tolerance: Tolerance::default(),
            entities,
            geoms: vec![GeomState::new("c", Shape::Circle { center: Vec2::new(2.0, 3.0), radius: 1.0 })],
            constraints: vec![],
        }
    }

    fn env(s: &Scene) -> Env<'_> {
        static EMPTY: std::sync::OnceLock<Substitution> = std::sync::OnceLock::new();
        Env {
            scene: s,
            geom: "c",
            shape: s.geoms[0].shape,
            args: EMPTY.get_or_init(Substitution::new),
            locals: BTreeMap::new(),
        }
    }

    #[test]
    fn evaluates_accessors_and_vectors() {
        let s = scene();
        assert_eq!(env(&s).eval(&t("(v- (>> $c center) $p)")).unwrap(), Value::Vector(Vec2::new(2.0, 3.0)));
        assert_eq!(env(&s).eval(&t("(>> $c radius)")).unwrap(), Value::Scalar(1.0));
    }

    #[test]
    fn parallel_lines_do_not_meet() {
        let s = scene();
        let v = env(&s)
            .eval(&t("(0d-intersection (make-line-locus (pt 0 0) (vec 1 0)) (make-line-locus (pt 0 1) (vec 1 0)))"))
            .unwrap();
        assert_eq!(v, Value::Intersection(IntersectionResult::Empty));
    }

    #[test]
    fn evaluation_errors() {
        let s = scene();
        assert!(matches!(env(&s).eval(&t("$nope")), Err(EvalError::UnboundName(_))));
        assert!(matches!(env(&s).eval(&t("(magnitude $L)")), Err(EvalError::TypeMismatch { .. })));
        assert!(matches!(env(&s).eval(&t("(>> $L arbitrary-point)")), Err(EvalError::Unelaborated(_))));
    }

    #[test]
    fn empty_fragment_leaves_state() {
        let s = scene();
        let frag = PlanFragment {
            kind: GeomKind::Circle,
            geom: t("$c"),
            params: vec![],
            preserved: vec![],
            achieves: vec![],
            skeleton: vec![],
            body: vec![],
        };
        let (shape, trace) = execute_plan(&frag, &s, "c", &Substitution::new(), &ExecConfig::default(), None).unwrap();
        assert_eq!(shape, s.geoms[0].shape);
        assert!(trace.records.is_empty());
    }

    #[test]
    fn search_finds_the_minimum_of_a_bowl() {
        let (x, v) = least_motion_search(&[(-3.0, 5.0), (-3.0, 5.0)], &[], &SearchConfig::default(), |x| {
            Some((x[0] - 1.234).powi(2) + (x[1] + 0.5).powi(2))
        })
        .unwrap();
        assert!(v < 1e-6, "{x:?}");
        assert!(least_motion_search(&[(0.0, 1.0)], &[], &SearchConfig::default(), |_| None).is_none());
    }

    #[test]
    fn verifier_measures_line_offsets() {
        let mut s = scene();
        s.geoms[0].shape = Shape::Circle { center: Vec2::new(0.0, 2.1), radius: 1.0 };
        s.constraints.push(Constraint {
            geom: "c".into(),
            invariant: Invariant::new(t("(fixed-distance-line $c $L 1 BIAS_COUNTERCLOCKWISE)")).unwrap(),
        });
        let r = verify_scene(&s);
        assert!((r.max_residual() - 0.1).abs() < 1e-12);
        assert!(verify_scene(&Scene { constraints: vec![], ..s }).rows.is_empty());
    }
}
