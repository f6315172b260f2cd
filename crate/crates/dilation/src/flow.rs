//! Straight-line flow: ray tracing across gluings, saddle connections,
//! closed orbits, directional cylinder decompositions and multitwists.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt;

use crate::clip;
use crate::geom::{classify_trace, normalize_mod_pi, AffineMap, GeomError, Mat2, TraceClass, Vec2};
use crate::holonomy::{Dir, LoopWord, Step};
use crate::math;
use crate::surface::{
    triangulate_with_parents, validate, DilationSurface, EdgeRef, SurfaceError, VertexClass,
};

/// An unoriented direction, stored as an angle in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(f64);

impl Direction {
    pub fn new(theta: f64) -> Self {
        Direction(normalize_mod_pi(theta))
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    pub fn unit(self) -> Vec2 {
        Vec2::from_angle(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    /// The `sector`-th ray leaving a vertex class (see [`separatrices`]).
    Vertex {
        class: usize,
        sector: usize,
    },
    Point {
        polygon: usize,
        point: Vec2,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub max_steps: usize,
    /// Vertex hits are declared within `eps_hit` times the local edge length.
    pub eps_hit: f64,
    /// Return scales within `tol` of 1 count as periodic.
    pub tol: f64,
    /// When false, rays continue straight through 2 pi marked points.
    pub stop_at_marked: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            max_steps: 10_000,
            eps_hit: 1e-9,
            tol: 1e-9,
            stop_at_marked: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("start point lies on a vertex; give a vertex class and sector instead")]
    DegenerateStart,
    #[error("start point is outside polygon {0}")]
    StartOutside(usize),
    #[error("no such start: {0}")]
    BadStart(String),
    #[error("surface does not validate")]
    InvalidSurface,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// A straight piece of trajectory inside one polygon. `acc_scale` converts
/// start-chart lengths into this polygon's chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub polygon: usize,
    pub from: Vec2,
    pub to: Vec2,
    pub acc_scale: f64,
}

impl Segment {
    pub fn start_chart_length(&self) -> f64 {
        self.from.dist(self.to) / self.acc_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrbitKind {
    Attracting,
    Repelling,
    Periodic,
}

impl fmt::Display for OrbitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrbitKind::Attracting => "attracting",
            OrbitKind::Repelling => "repelling",
            OrbitKind::Periodic => "periodic",
        })
    }
}

/// Where a closed orbit crosses an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitPoint {
    pub edge: EdgeRef,
    pub point: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceOutcome {
    SaddleConnection {
        end_class: usize,
        /// `(polygon, vertex)` where the ray stopped.
        end_corner: (usize, usize),
        length: f64,
        segments: Vec<Segment>,
    },
    ClosedOrbit {
        alpha: f64,
        kind: OrbitKind,
        core: LoopWord,
        /// Crossings of the closed leaf itself.
        cycle: Vec<OrbitPoint>,
        /// Length of one turn of the closed leaf, in start-chart units.
        cycle_length: f64,
        segments: Vec<Segment>,
    },
    Budget {
        steps: usize,
        segments: Vec<Segment>,
    },
}

impl TraceOutcome {
    pub fn segments(&self) -> &[Segment] {
        match self {
            TraceOutcome::SaddleConnection { segments, .. }
            | TraceOutcome::ClosedOrbit { segments, .. }
            | TraceOutcome::Budget { segments, .. } => segments,
        }
    }

    pub fn is_saddle_connection(&self) -> bool {
        matches!(self, TraceOutcome::SaddleConnection { .. })
    }
}

/// Vertex-class data reused across many traces.
pub struct FlowContext<'a> {
    pub surface: &'a DilationSurface,
    pub classes: Vec<VertexClass>,
    corner: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, Copy)]
struct State {
    polygon: usize,
    point: Vec2,
    sign: f64,
    acc: f64,
}

impl State {
    fn crossed(&self, to: EdgeRef, map: &AffineMap, q: Vec2) -> State {
        State {
            polygon: to.polygon,
            point: map.apply(q),
            sign: self.sign * map.scale.signum(),
            acc: self.acc * map.scale.abs(),
        }
    }
}

enum Advance {
    Crossed {
        step: Step,
        to: EdgeRef,
        map: AffineMap,
        seg: Segment,
    },
    Vertex {
        class: usize,
        corner: (usize, usize),
        seg: Segment,
    },
    Stuck,
}

#[derive(Debug, Clone, Copy)]
struct Visit {
    step: usize,
    point: Vec2,
    acc: f64,
    length: f64,
}

impl<'a> FlowContext<'a> {
    pub fn new(surface: &'a DilationSurface) -> Result<Self, FlowError> {
        let classes = surface.vertex_classes()?;
        let corner = surface.corner_index(&classes);
        Ok(FlowContext {
            surface,
            classes,
            corner,
        })
    }

    pub fn class_of(&self, polygon: usize, vertex: usize) -> usize {
        self.corner[polygon][vertex].0
    }

    fn is_regular(&self, class: usize) -> bool {
        self.classes[class].is_regular(1e-6)
    }

    /// Angle of `dir` measured counterclockwise from the start edge of corner `k`.
    fn angle_in_corner(&self, class: usize, k: usize, dir: Vec2) -> f64 {
        let (p, i) = self.classes[class].corners[k];
        let poly = self.surface.polygon(p);
        let e = poly.vertex(i + 1) - poly.vertex(i);
        let mut a = math::atan2(e.cross(dir), e.dot(dir));
        if a < 0.0 {
            a += TAU;
        }
        let width = poly.angle(i);
        if a > width + 1e-9 && a > TAU - 1e-9 {
            a = 0.0;
        }
        a
    }

    /// Corner containing angular position `phi` (half-open ranges), and the
    /// local offset inside it.
    fn locate_angle(&self, class: usize, phi: f64) -> (usize, f64) {
        let vc = &self.classes[class];
        let total = vc.cone_angle;
        let mut phi = phi - math::floor(phi / total) * total;
        if phi >= total - 1e-12 {
            phi = 0.0;
        }
        let n = vc.corners.len();
        for k in (0..n).rev() {
            if vc.offsets[k] <= phi + 1e-12 {
                let (p, i) = vc.corners[k];
                let width = self.surface.polygon(p).angle(i);
                let off = phi - vc.offsets[k];
                if off >= width - 1e-12 && k + 1 < n {
                    return (k + 1, 0.0);
                }
                if off >= width - 1e-12 {
                    return (0, 0.0);
                }
                return (k, off.max(0.0));
            }
        }
        (0, 0.0)
    }

    /// Leaves the vertex of corner `k` at local angle `off`.
    fn leave_vertex(&self, class: usize, k: usize, off: f64, d: Vec2) -> (usize, Vec2, Vec2) {
        let (p, i) = self.classes[class].corners[k];
        let poly = self.surface.polygon(p);
        let e = (poly.vertex(i + 1) - poly.vertex(i)).normalized();
        let h = Mat2::rotation(off).apply(e);
        let sign = if h.dot(d) >= 0.0 { 1.0 } else { -1.0 };
        (p, poly.vertex(i), d * sign)
    }

    /// The `n` rays in direction `d` (mod pi) leaving a class of angle `n pi`,
    /// as `(corner index, local angle)`.
    fn sector_rays(&self, class: usize, d: Vec2) -> Vec<(usize, f64)> {
        let vc = &self.classes[class];
        let (p, i) = vc.corners[0];
        let poly = self.surface.polygon(p);
        let e0 = poly.vertex(i + 1) - poly.vertex(i);
        let mut base = math::atan2(e0.cross(d), e0.dot(d));
        base -= math::floor(base / PI) * PI;
        if base >= PI - 1e-12 {
            base = 0.0;
        }
        (0..vc.multiple as usize)
            .map(|k| self.locate_angle(class, base + k as f64 * PI))
            .collect()
    }

    fn initial_state(&self, start: Start, theta: f64) -> Result<State, FlowError> {
        let d = Vec2::from_angle(theta);
        match start {
            Start::Vertex { class, sector } => {
                if class >= self.classes.len() {
                    return Err(FlowError::BadStart(alloc::format!("vertex class {class}")));
                }
                let rays = self.sector_rays(class, d);
                let &(k, off) = rays
                    .get(sector)
                    .ok_or_else(|| FlowError::BadStart(alloc::format!("sector {sector}")))?;
                let (p, pt, h) = self.leave_vertex(class, k, off, d);
                Ok(State {
                    polygon: p,
                    point: pt,
                    sign: h.dot(d).signum(),
                    acc: 1.0,
                })
            }
            Start::Point { polygon, point } => {
                let poly = self
                    .surface
                    .polygons()
                    .get(polygon)
                    .ok_or_else(|| FlowError::BadStart(alloc::format!("polygon {polygon}")))?;
                let diam = poly.diameter();
                if !poly.contains(point, 1e-12 * diam) {
                    return Err(FlowError::StartOutside(polygon));
                }
                if poly.vertices().iter().any(|v| v.dist(point) <= 1e-9 * diam) {
                    return Err(FlowError::DegenerateStart);
                }
                let mut st = State {
                    polygon,
                    point,
                    sign: 1.0,
                    acc: 1.0,
                };
                // on an edge, heading outward: start on the other side
                for e in 0..poly.len() {
                    let (a, b) = poly.edge(e);
                    if crate::surface::dist_to_segment(point, a, b) <= 1e-12 * diam
                        && (b - a).cross(d) < 0.0
                    {
                        if let Some(c) = self.surface.cross(EdgeRef::new(polygon, e)) {
                            st = State {
                                polygon: c.to.polygon,
                                point: c.map.apply(point),
                                sign: c.map.scale.signum(),
                                acc: c.map.scale.abs(),
                            };
                        }
                        break;
                    }
                }
                Ok(st)
            }
        }
    }

    fn advance(&self, st: &State, d: Vec2, eps_hit: f64) -> Advance {
        let poly = self.surface.polygon(st.polygon);
        let h = d * st.sign;
        let diam = poly.diameter();
        let tmin = 1e-12 * diam;
        let mut best: Option<(f64, usize, f64)> = None;
        for e in 0..poly.len() {
            let (a, b) = poly.edge(e);
            let ab = b - a;
            let denom = h.cross(ab);
            if denom.abs() <= 1e-14 * ab.norm() {
                continue;
            }
            let ap = a - st.point;
            let t = ap.cross(ab) / denom;
            let s = ap.cross(h) / denom;
            if t <= tmin || !(-1e-9..=1.0 + 1e-9).contains(&s) {
                continue;
            }
            if best.is_none_or(|(bt, _, _)| t < bt) {
                best = Some((t, e, s));
            }
        }
        let Some((t, e, _)) = best else {
            return Advance::Stuck;
        };
        let q = st.point + h * t;
        let seg = Segment {
            polygon: st.polygon,
            from: st.point,
            to: q,
            acc_scale: st.acc,
        };
        let (a, b) = poly.edge(e);
        let len = a.dist(b);
        let (da, db) = (q.dist(a), q.dist(b));
        if da.min(db) <= eps_hit * len {
            let v = if da <= db { e } else { (e + 1) % poly.len() };
            let vtx = poly.vertex(v);
            let seg = Segment { to: vtx, ..seg };
            return Advance::Vertex {
                class: self.class_of(st.polygon, v),
                corner: (st.polygon, v),
                seg,
            };
        }
        let c = self
            .surface
            .cross(EdgeRef::new(st.polygon, e))
            .expect("complete pairing");
        Advance::Crossed {
            step: Step::new(c.gluing, Dir::from_side(c.side)),
            to: c.to,
            map: c.map,
            seg,
        }
    }

    /// Continues straight through a regular vertex.
    fn pass_through(&self, class: usize, corner: (usize, usize), st: &State, d: Vec2) -> State {
        let vc = &self.classes[class];
        let k = vc.corners.iter().position(|&c| c == corner).unwrap();
        let back = -(d * st.sign);
        let phi_in = vc.offsets[k] + self.angle_in_corner(class, k, back);
        let (k2, off) = self.locate_angle(class, phi_in + PI);
        let (p2, pt, h2) = self.leave_vertex(class, k2, off, d);
        let rel = vc.charts[k].scale / vc.charts[k2].scale;
        State {
            polygon: p2,
            point: pt,
            sign: h2.dot(d).signum(),
            acc: st.acc * rel.abs(),
        }
    }

    /// Traces from `point` of `polygon` with the oriented `heading` given in
    /// that polygon's chart. The point may be a vertex.
    pub fn trace_from(
        &self,
        polygon: usize,
        point: Vec2,
        heading: Vec2,
        opts: &FlowOptions,
    ) -> TraceOutcome {
        let st = State {
            polygon,
            point,
            sign: 1.0,
            acc: 1.0,
        };
        self.trace_state(st, heading.normalized(), opts)
    }

    pub fn trace(
        &self,
        start: Start,
        theta: f64,
        opts: &FlowOptions,
    ) -> Result<TraceOutcome, FlowError> {
        let st = self.initial_state(start, theta)?;
        Ok(self.trace_state(st, Vec2::from_angle(theta), opts))
    }

    fn trace_state(&self, mut st: State, d: Vec2, opts: &FlowOptions) -> TraceOutcome {
        let mut segments = Vec::new();
        let mut length = 0.0;
        let mut steps: Vec<Step> = Vec::new();
        let mut visits: BTreeMap<(usize, usize, i8), Vec<Visit>> = BTreeMap::new();
        let mut count = 0;
        while count < opts.max_steps {
            count += 1;
            match self.advance(&st, d, opts.eps_hit) {
                Advance::Stuck => break,
                Advance::Vertex { class, corner, seg } => {
                    length += seg.start_chart_length();
                    segments.push(seg);
                    if opts.stop_at_marked || !self.is_regular(class) {
                        return TraceOutcome::SaddleConnection {
                            end_class: class,
                            end_corner: corner,
                            length,
                            segments,
                        };
                    }
                    st = self.pass_through(class, corner, &st, d);
                }
                Advance::Crossed { step, to, map, seg } => {
                    length += seg.start_chart_length();
                    segments.push(seg);
                    st = st.crossed(to, &map, seg.to);
                    steps.push(step);
                    let key = (to.polygon, to.edge, st.sign as i8);
                    let here = Visit {
                        step: steps.len(),
                        point: st.point,
                        acc: st.acc,
                        length,
                    };
                    if let Some(prev) = visits.get(&key) {
                        for v in prev.iter().rev().take(32) {
                            if let Some((alpha, kind, cycle, cycle_length)) =
                                self.check_return(v, &here, to, st.sign, d, opts)
                            {
                                return TraceOutcome::ClosedOrbit {
                                    alpha,
                                    kind,
                                    core: LoopWord::new(steps[v.step..].to_vec()),
                                    cycle,
                                    cycle_length,
                                    segments,
                                };
                            }
                        }
                    }
                    visits.entry(key).or_default().push(here);
                }
            }
        }
        TraceOutcome::Budget {
            steps: count,
            segments,
        }
    }

    /// Compares two visits of the same directed edge and returns a confirmed
    /// closed orbit as `(alpha, kind, crossings, length)`.
    #[allow(clippy::type_complexity)]
    fn check_return(
        &self,
        prev: &Visit,
        now: &Visit,
        edge: EdgeRef,
        sign: f64,
        d: Vec2,
        opts: &FlowOptions,
    ) -> Option<(f64, OrbitKind, Vec<OrbitPoint>, f64)> {
        let poly = self.surface.polygon(edge.polygon);
        let (a, b) = poly.edge(edge.edge);
        let len = a.dist(b);
        let u = (b - a) * (1.0 / len);
        let alpha = now.acc / prev.acc;
        let sigma = (now.point - prev.point).dot(u);
        let close = 1e-7 * len;
        let period = now.step - prev.step;
        if (alpha - 1.0).abs() <= opts.tol * (period as f64).max(1.0) {
            if sigma.abs() > close {
                return None;
            }
            let cycle = self.cycle_points(edge, prev.point, sign, d, period, opts)?;
            return Some((1.0, OrbitKind::Periodic, cycle, now.length - prev.length));
        }
        let s0 = (prev.point - a).dot(u);
        let fixed = s0 + sigma / (1.0 - alpha);
        let kind = if alpha < 1.0 {
            OrbitKind::Attracting
        } else {
            OrbitKind::Repelling
        };
        let slack = 1e-6 * len;
        if fixed < -slack || fixed > len + slack {
            return None;
        }
        if fixed <= slack || fixed >= len - slack {
            // the limit leaf runs through a vertex: a loop of saddle connections
            return Some((alpha, kind, Vec::new(), 0.0));
        }
        let y = a + u * fixed;
        let cycle = self.cycle_points(edge, y, sign, d, period, opts)?;
        let cycle_length = self.cycle_length(edge, y, sign, d, period, opts) / prev.acc;
        Some((alpha, kind, cycle, cycle_length))
    }

    /// Follows the leaf through `y` for `period` crossings; returns its
    /// crossings if it closes up at `y` without meeting a cone point.
    fn cycle_points(
        &self,
        edge: EdgeRef,
        y: Vec2,
        sign: f64,
        d: Vec2,
        period: usize,
        opts: &FlowOptions,
    ) -> Option<Vec<OrbitPoint>> {
        let mut st = State {
            polygon: edge.polygon,
            point: y,
            sign,
            acc: 1.0,
        };
        let mut pts = vec![OrbitPoint { edge, point: y }];
        let mut crossings = 0;
        let mut guard = 0;
        while crossings < period {
            guard += 1;
            if guard > 4 * period + 8 {
                return None;
            }
            match self.advance(&st, d, opts.eps_hit) {
                Advance::Stuck => return None,
                Advance::Vertex { class, corner, .. } => {
                    if !self.is_regular(class) {
                        return None;
                    }
                    st = self.pass_through(class, corner, &st, d);
                }
                Advance::Crossed { to, map, seg, .. } => {
                    st = st.crossed(to, &map, seg.to);
                    crossings += 1;
                    if crossings < period {
                        pts.push(OrbitPoint {
                            edge: to,
                            point: st.point,
                        });
                    }
                }
            }
        }
        let (a, b) = self.surface.polygon(edge.polygon).edge(edge.edge);
        let len = a.dist(b);
        let back = st.polygon == edge.polygon && st.sign == sign && st.point.dist(y) <= 1e-6 * len;
        back.then_some(pts)
    }

    fn cycle_length(
        &self,
        edge: EdgeRef,
        y: Vec2,
        sign: f64,
        d: Vec2,
        period: usize,
        opts: &FlowOptions,
    ) -> f64 {
        let mut st = State {
            polygon: edge.polygon,
            point: y,
            sign,
            acc: 1.0,
        };
        let mut total = 0.0;
        let mut crossings = 0;
        let mut guard = 0;
        while crossings < period && guard < 4 * period + 8 {
            guard += 1;
            match self.advance(&st, d, opts.eps_hit) {
                Advance::Stuck => break,
                Advance::Vertex { class, corner, seg } => {
                    total += seg.start_chart_length();
                    st = self.pass_through(class, corner, &st, d);
                }
                Advance::Crossed { to, map, seg, .. } => {
                    total += seg.start_chart_length();
                    st = st.crossed(to, &map, seg.to);
                    crossings += 1;
                }
            }
        }
        total
    }
}

/// Traces one ray. For point starts the heading is the oriented angle `theta`;
/// vertex starts use `theta` mod pi and pick the ray by sector.
pub fn trace_ray(
    s: &DilationSurface,
    start: Start,
    theta: f64,
    opts: &FlowOptions,
) -> Result<TraceOutcome, FlowError> {
    FlowContext::new(s)?.trace(start, theta, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Separatrix {
    pub class: usize,
    pub sector: usize,
    pub outcome: TraceOutcome,
}

/// All rays in direction `theta` from every vertex class: `n` rays for a
/// class of angle `n pi`, ordered by (class, sector).
pub fn separatrices(
    s: &DilationSurface,
    theta: Direction,
    opts: &FlowOptions,
) -> Result<Vec<Separatrix>, FlowError> {
    let ctx = FlowContext::new(s)?;
    let mut out = Vec::new();
    for class in 0..ctx.classes.len() {
        for sector in 0..ctx.classes[class].multiple as usize {
            let outcome = ctx.trace(Start::Vertex { class, sector }, theta.angle(), opts)?;
            out.push(Separatrix {
                class,
                sector,
                outcome,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CylinderKind {
    Euclidean {
        modulus: f64,
        circumference: f64,
        height: f64,
    },
    Dilation {
        holonomy: f64,
        multiple: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    pub kind: CylinderKind,
    /// Core curve as a word in the input surface's gluings.
    pub core: LoopWord,
    pub has_boundary: bool,
}

impl Cylinder {
    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, CylinderKind::Euclidean { .. })
    }

    pub fn modulus(&self) -> Option<f64> {
        match self.kind {
            CylinderKind::Euclidean { modulus, .. } => Some(modulus),
            CylinderKind::Dilation { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleConnection {
    pub from_class: usize,
    pub sector: usize,
    pub to_class: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub direction: Direction,
    pub saddle_connections: Vec<SaddleConnection>,
    pub cylinders: Vec<Cylinder>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NotDecomposable {
    #[error("separatrix from class {class} sector {sector} did not end within {steps} steps")]
    SeparatrixBudget {
        class: usize,
        sector: usize,
        steps: usize,
    },
    #[error("separatrix from class {class} sector {sector} accumulates on a closed orbit (return scale {alpha})")]
    EscapingSeparatrix {
        class: usize,
        sector: usize,
        alpha: f64,
    },
    #[error("leaves of component {component} did not close within the step budget")]
    LeafBudget { component: usize },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

struct WeightedUf {
    parent: Vec<usize>,
    pot: Vec<f64>,
}

impl WeightedUf {
    fn new(n: usize) -> Self {
        WeightedUf {
            parent: (0..n).collect(),
            pot: vec![1.0; n],
        }
    }

    /// Root of `x` and the factor `len_x / len_root`.
    fn find(&mut self, x: usize) -> (usize, f64) {
        let p = self.parent[x];
        if p == x {
            return (x, 1.0);
        }
        let (r, f) = self.find(p);
        self.parent[x] = r;
        self.pot[x] *= f;
        (r, self.pot[x])
    }

    /// Records `len_y = w * len_x`.
    fn union(&mut self, x: usize, y: usize, w: f64) {
        let (rx, px) = self.find(x);
        let (ry, py) = self.find(y);
        if rx == ry {
            return;
        }
        if rx < ry {
            self.parent[ry] = rx;
            self.pot[ry] = w * px / py;
        } else {
            self.parent[rx] = ry;
            self.pot[rx] = py / (w * px);
        }
    }
}

#[derive(Debug, Clone)]
struct Slab {
    tri: usize,
    lo: f64,
    hi: f64,
}

/// Cuts along all saddle connections in direction `theta` and classifies the
/// resulting annuli. Works on a triangulation of `s`.
pub fn directional_decomposition(
    s: &DilationSurface,
    theta: Direction,
    opts: &FlowOptions,
) -> Result<Decomposition, NotDecomposable> {
    if !validate(s).pass {
        return Err(FlowError::InvalidSurface.into());
    }
    let tri = triangulate_with_parents(s).map_err(FlowError::from)?;
    let t = &tri.surface;
    let ctx = FlowContext::new(t)?;
    let d = theta.unit();
    let n = d.perp();
    let pass = FlowOptions {
        stop_at_marked: false,
        ..*opts
    };

    // class map t -> s through corners
    let s_classes = s.vertex_classes().map_err(FlowError::from)?;
    let s_corner = s.corner_index(&s_classes);
    let to_s_class = |c: usize| -> usize {
        let (p, i) = ctx.classes[c].corners[0];
        s_corner[tri.parent[p]][tri.vertex_map[p][i]].0
    };

    let mut cuts: Vec<Vec<(f64, Vec2, Vec2)>> = vec![Vec::new(); t.polygons().len()];
    let mut saddle_connections = Vec::new();
    for class in 0..ctx.classes.len() {
        if ctx.is_regular(class) {
            continue;
        }
        for sector in 0..ctx.classes[class].multiple as usize {
            let out = ctx.trace(Start::Vertex { class, sector }, theta.angle(), &pass)?;
            match out {
                TraceOutcome::SaddleConnection {
                    end_class,
                    length,
                    segments,
                    ..
                } => {
                    for sg in &segments {
                        cuts[sg.polygon].push((n.dot(sg.from), sg.from, sg.to));
                    }
                    saddle_connections.push(SaddleConnection {
                        from_class: to_s_class(class),
                        sector,
                        to_class: to_s_class(end_class),
                        length,
                    });
                }
                TraceOutcome::ClosedOrbit { alpha, .. } => {
                    return Err(NotDecomposable::EscapingSeparatrix {
                        class: to_s_class(class),
                        sector,
                        alpha,
                    })
                }
                TraceOutcome::Budget { steps, .. } => {
                    return Err(NotDecomposable::SeparatrixBudget {
                        class: to_s_class(class),
                        sector,
                        steps,
                    })
                }
            }
        }
    }

    // slabs: pieces of triangles between consecutive cut levels
    let mut slabs: Vec<Slab> = Vec::new();
    let mut first_slab = Vec::with_capacity(t.polygons().len());
    for (ti, poly) in t.polygons().iter().enumerate() {
        let us: Vec<f64> = poly.vertices().iter().map(|v| n.dot(*v)).collect();
        let lo = us.iter().cloned().fold(f64::MAX, f64::min);
        let hi = us.iter().cloned().fold(f64::MIN, f64::max);
        let eps = 1e-9 * poly.diameter();
        let mut levels: Vec<f64> = cuts[ti]
            .iter()
            .map(|c| c.0)
            .filter(|&u| u > lo + eps && u < hi - eps)
            .collect();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup_by(|a, b| (*a - *b).abs() <= eps);
        first_slab.push(slabs.len());
        let mut prev = lo;
        for &u in levels.iter().chain(core::iter::once(&hi)) {
            slabs.push(Slab {
                tri: ti,
                lo: prev,
                hi: u,
            });
            prev = u;
        }
    }
    let slab_range =
        |ti: usize| first_slab[ti]..first_slab.get(ti + 1).copied().unwrap_or(slabs.len());

    let edge_is_cut = |ti: usize, e: usize| -> bool {
        let (a, b) = t.polygon(ti).edge(e);
        let mid = a.lerp(b, 0.5);
        let eps = 1e-9 * t.polygon(ti).diameter();
        cuts[ti]
            .iter()
            .any(|&(_, p, q)| crate::surface::dist_to_segment(mid, p, q) <= eps)
    };

    let mut uf = WeightedUf::new(slabs.len());
    let mut boundary = vec![false; slabs.len()];
    for (ti, poly) in t.polygons().iter().enumerate() {
        let eps = 1e-9 * poly.diameter();
        for e in 0..3 {
            let (a, b) = poly.edge(e);
            let (ua, ub) = (n.dot(a), n.dot(b));
            let c = t.cross(EdgeRef::new(ti, e)).unwrap();
            let w = c.map.scale.abs();
            let tj = c.to.polygon;
            if (ua - ub).abs() <= eps {
                // edge along the foliation
                let here = slab_range(ti)
                    .find(|&k| (slabs[k].lo - ua).abs() <= eps || (slabs[k].hi - ua).abs() <= eps);
                let (a2, _) = t.polygon(tj).edge(c.to.edge);
                let u2 = n.dot(a2);
                let eps2 = 1e-9 * t.polygon(tj).diameter();
                let there = slab_range(tj).find(|&k| {
                    (slabs[k].lo - u2).abs() <= eps2 || (slabs[k].hi - u2).abs() <= eps2
                });
                if let (Some(x), Some(y)) = (here, there) {
                    if edge_is_cut(ti, e) {
                        boundary[x] = true;
                        boundary[y] = true;
                    } else {
                        uf.union(x, y, w);
                    }
                }
                continue;
            }
            let (elo, ehi) = (ua.min(ub), ua.max(ub));
            let shift = n.dot(c.map.shift);
            for k in slab_range(ti) {
                let lo = slabs[k].lo.max(elo);
                let hi = slabs[k].hi.min(ehi);
                if hi - lo <= eps {
                    continue;
                }
                let (m1, m2) = (c.map.scale * lo + shift, c.map.scale * hi + shift);
                let (mlo, mhi) = (m1.min(m2), m1.max(m2));
                let eps2 = 1e-9 * t.polygon(tj).diameter();
                for k2 in slab_range(tj) {
                    if slabs[k2].hi.min(mhi) - slabs[k2].lo.max(mlo) > eps2 {
                        uf.union(k, k2, w);
                    }
                }
            }
        }
        // slabs bounded by interior cut chords
        for k in slab_range(ti) {
            let eps = 1e-9 * poly.diameter();
            let us: Vec<f64> = poly.vertices().iter().map(|v| n.dot(*v)).collect();
            let lo = us.iter().cloned().fold(f64::MAX, f64::min);
            let hi = us.iter().cloned().fold(f64::MIN, f64::max);
            if slabs[k].lo > lo + eps || slabs[k].hi < hi - eps {
                boundary[k] = true;
            }
        }
    }

    // components in slab order
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for k in 0..slabs.len() {
        let (r, _) = uf.find(k);
        comps.entry(r).or_default().push(k);
    }
    let n_s_gluings = s.gluings().len();
    let to_s_word = |w: &LoopWord| -> LoopWord {
        LoopWord::new(
            w.steps
                .iter()
                .copied()
                .filter(|st| st.gluing < n_s_gluings)
                .collect(),
        )
    };

    let mut cylinders = Vec::new();
    for (ci, (&root, members)) in comps.iter().enumerate() {
        let has_boundary = members.iter().any(|&k| boundary[k]);
        let sample = |k: usize, frac: f64| -> Start {
            let sl = &slabs[k];
            let u = sl.lo + (sl.hi - sl.lo) * frac;
            let poly = t.polygon(sl.tri);
            let chord = clip::clip_halfplane(
                &clip::clip_halfplane(poly.vertices(), n, u - 1e-300),
                -n,
                -u - 1e-300,
            );
            let mut c = Vec2::ZERO;
            for p in &chord {
                c += *p;
            }
            let mid = if chord.is_empty() {
                poly.centroid()
            } else {
                c * (1.0 / chord.len() as f64)
            };
            Start::Point {
                polygon: sl.tri,
                point: mid,
            }
        };
        let out = ctx.trace(sample(root, 0.5), theta.angle(), &pass)?;
        match out {
            TraceOutcome::ClosedOrbit {
                kind: OrbitKind::Periodic,
                core,
                cycle_length,
                ..
            } => {
                let mut area = 0.0;
                for &k in members {
                    let (_, f) = uf.find(k);
                    let sl = &slabs[k];
                    let poly = t.polygon(sl.tri);
                    let piece = clip::clip_halfplane(
                        &clip::clip_halfplane(poly.vertices(), n, sl.lo),
                        -n,
                        -sl.hi,
                    );
                    area += clip::area(&piece) / (f * f);
                }
                let height = area / cycle_length;
                cylinders.push(Cylinder {
                    kind: CylinderKind::Euclidean {
                        modulus: height / cycle_length,
                        circumference: cycle_length,
                        height,
                    },
                    core: to_s_word(&core),
                    has_boundary,
                });
            }
            TraceOutcome::ClosedOrbit { alpha, core, .. } => {
                let mut found: Vec<Vec<OrbitPoint>> = Vec::new();
                for &k in members {
                    for frac in [0.25, 0.5, 0.75] {
                        for th in [theta.angle(), theta.angle() + PI] {
                            if let Ok(TraceOutcome::ClosedOrbit { kind, cycle, .. }) =
                                ctx.trace(sample(k, frac), th, &pass)
                            {
                                if kind == OrbitKind::Periodic {
                                    continue;
                                }
                                let same = found.iter().any(|f| same_cycle(t, f, &cycle));
                                if !same {
                                    found.push(cycle);
                                }
                            }
                        }
                    }
                }
                let limit = found.len() as u32;
                let multiple = if has_boundary {
                    limit + 1
                } else {
                    limit.max(1)
                };
                cylinders.push(Cylinder {
                    kind: CylinderKind::Dilation {
                        holonomy: alpha.max(1.0 / alpha),
                        multiple,
                    },
                    core: to_s_word(&core),
                    has_boundary,
                });
            }
            TraceOutcome::SaddleConnection { .. } | TraceOutcome::Budget { .. } => {
                return Err(NotDecomposable::LeafBudget { component: ci });
            }
        }
    }
    Ok(Decomposition {
        direction: theta,
        saddle_connections,
        cylinders,
    })
}

fn same_cycle(t: &DilationSurface, a: &[OrbitPoint], b: &[OrbitPoint]) -> bool {
    let Some(p) = b.first() else { return false };
    a.iter().any(|q| {
        let len = t.polygon(q.edge.polygon).edge_len(q.edge.edge);
        let same_edge = q.edge == p.edge;
        let partner = t.cross(q.edge).map(|c| c.to) == Some(p.edge);
        if same_edge {
            q.point.dist(p.point) <= 1e-6 * len
        } else if partner {
            let c = t.cross(q.edge).unwrap();
            c.map.apply(q.point).dist(p.point) <= 1e-6 * len * c.map.scale.abs()
        } else {
            false
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderCertificate {
    pub cylinder: usize,
    /// Number of Dehn twists for a Euclidean cylinder.
    pub twists: Option<i64>,
    /// Dilation cylinders: the shear is isotopic to the identity rel boundary.
    pub boundary_fixed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub matrix: Mat2,
    pub direction: Direction,
    pub shear: f64,
    pub decomposition: Decomposition,
    pub cylinders: Vec<CylinderCertificate>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertifyError {
    #[error("matrix is {0}, not parabolic")]
    NotParabolic(TraceClass),
    #[error("matrix is the identity; no shear direction")]
    Identity,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("decomposition failed: {0}")]
    Decomposition(#[from] NotDecomposable),
    #[error("cylinder {cylinder}: shear times modulus = {value}, not a nonzero integer")]
    NonIntegerTwist { cylinder: usize, value: f64 },
}

/// Eigendirection and shear amount of a parabolic matrix.
pub fn shear_data(m: &Mat2, tol: f64) -> Result<(Direction, f64), CertifyError> {
    let class = classify_trace(m, tol)?;
    if class != TraceClass::Parabolic {
        return Err(CertifyError::NotParabolic(class));
    }
    let mut p = m.normalized()?;
    if p.trace() < 0.0 {
        p = p.scaled(-1.0);
    }
    let nm = Mat2::new(p.a - 1.0, p.b, p.c, p.d - 1.0);
    let c1 = Vec2::new(-nm.b, nm.a);
    let c2 = Vec2::new(nm.d, -nm.c);
    let e = if c1.norm() >= c2.norm() { c1 } else { c2 };
    if e.norm() <= 1e-12 {
        return Err(CertifyError::Identity);
    }
    let e = e.normalized();
    let f = e.perp();
    let mu = nm.apply(f).dot(e);
    Ok((Direction::new(e.angle()), mu))
}

/// Certifies that a parabolic `m` acts as a Dehn multitwist along the
/// cylinders of its eigendirection.
pub fn certify_multitwist(
    s: &DilationSurface,
    m: &Mat2,
    opts: &FlowOptions,
    twist_tol: f64,
) -> Result<Certificate, CertifyError> {
    let (direction, shear) = shear_data(m, opts.tol.max(1e-9))?;
    let decomposition = directional_decomposition(s, direction, opts)?;
    let mut cylinders = Vec::new();
    for (i, c) in decomposition.cylinders.iter().enumerate() {
        match c.kind {
            CylinderKind::Euclidean { modulus, .. } => {
                let value = shear * modulus;
                let k = math::round(value);
                if k == 0.0 || (value - k).abs() > twist_tol * k.abs().max(1.0) {
                    return Err(CertifyError::NonIntegerTwist { cylinder: i, value });
                }
                cylinders.push(CylinderCertificate {
                    cylinder: i,
                    twists: Some(k as i64),
                    boundary_fixed: false,
                });
            }
            CylinderKind::Dilation { .. } => {
                cylinders.push(CylinderCertificate {
                    cylinder: i,
                    twists: None,
                    boundary_fixed: true,
                });
            }
        }
    }
    Ok(Certificate {
        matrix: *m,
        direction,
        shear,
        decomposition,
        cylinders,
    })
}
