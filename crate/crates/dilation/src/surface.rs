//! Polygonal dilation surfaces: polygons plus a complete edge pairing by
//! real-affine maps.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::geom::{interior_angle, signed_area, AffineMap, GeomError, Mat2, Vec2};
use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error("malformed input: {0}")]
    MalformedInput(alloc::string::String),
    #[error("invalid polygon {index}: {reason}")]
    InvalidPolygon { index: usize, reason: &'static str },
    #[error("not a closed surface: {0}")]
    NotClosedSurface(&'static str),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("quadrilateral around gluing {0} is not strictly convex")]
    NonConvexQuad(usize),
    #[error("gluing {0} does not separate two distinct triangles")]
    BoundaryEdge(usize),
    #[error("surface is not triangulated")]
    NotTriangulated,
    #[error("surface failed validation")]
    Invalid,
}

/// A simple counterclockwise polygon in its own chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl Polygon {
    /// Checks vertex count, finiteness, positive area and simplicity.
    pub fn new(vertices: Vec<Vec2>) -> Result<Polygon, &'static str> {
        if vertices.len() < 3 {
            return Err("fewer than 3 vertices");
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err("non-finite coordinate");
        }
        let n = vertices.len();
        let diam = bbox_diameter(&vertices);
        for i in 0..n {
            if vertices[i].dist(vertices[(i + 1) % n]) <= 1e-14 * diam {
                return Err("zero-length edge");
            }
        }
        if signed_area(&vertices) <= 0.0 {
            return Err("not counterclockwise");
        }
        if !is_simple(&vertices) {
            return Err("self-intersecting");
        }
        Ok(Polygon { vertices })
    }

    /// Skips the simplicity check; the caller guarantees a valid polygon.
    pub(crate) fn new_unchecked(vertices: Vec<Vec2>) -> Polygon {
        Polygon { vertices }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Vec2 {
        self.vertices[i % self.vertices.len()]
    }

    /// Edge `i` as `(start, end)`.
    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        (self.vertex(i), self.vertex(i + 1))
    }

    pub fn edge_len(&self, i: usize) -> f64 {
        let (a, b) = self.edge(i);
        a.dist(b)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Interior angle at vertex `i`.
    pub fn angle(&self, i: usize) -> f64 {
        let n = self.len();
        interior_angle(self.vertex(i + n - 1), self.vertex(i), self.vertex(i + 1))
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.len();
        let mut a = 0.0;
        let mut c = Vec2::ZERO;
        for i in 0..n {
            let (p, q) = self.edge(i);
            let w = p.cross(q);
            a += w;
            c += (p + q) * w;
        }
        c * (1.0 / (3.0 * a))
    }

    pub fn diameter(&self) -> f64 {
        bbox_diameter(&self.vertices)
    }

    /// Closed containment with an absolute slack `eps`.
    pub fn contains(&self, p: Vec2, eps: f64) -> bool {
        let n = self.len();
        let mut winding = false;
        for i in 0..n {
            let (a, b) = self.edge(i);
            if dist_to_segment(p, a, b) <= eps {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    winding = !winding;
                }
            }
        }
        winding
    }

    pub fn is_triangle(&self) -> bool {
        self.vertices.len() == 3
    }

    pub fn transformed(&self, m: &Mat2) -> Polygon {
        Polygon::new_unchecked(self.vertices.iter().map(|v| m.apply(*v)).collect())
    }

    pub fn mapped(&self, f: &AffineMap) -> Polygon {
        Polygon::new_unchecked(self.vertices.iter().map(|v| f.apply(*v)).collect())
    }
}

pub(crate) fn bbox_diameter(vs: &[Vec2]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for v in vs {
        x0 = x0.min(v.x);
        y0 = y0.min(v.y);
        x1 = x1.max(v.x);
        y1 = y1.max(v.y);
    }
    math::hypot(x1 - x0, y1 - y0)
}

pub(crate) fn dist_to_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let l2 = d.norm2();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2, o: f64| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

fn is_simple(vs: &[Vec2]) -> bool {
    let n = vs.len();
    for i in 0..n {
        let (a, b) = (vs[i], vs[(i + 1) % n]);
        for j in i + 1..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (vs[j], vs[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
        // adjacent edges folding back onto each other
        let c = vs[(i + 2) % n];
        let u = b - a;
        let w = c - b;
        if u.cross(w) == 0.0 && u.dot(w) < 0.0 {
            return false;
        }
    }
    true
}

/// Edge `edge` of polygon `polygon`; the edge runs from vertex `edge` to `edge + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRef {
    pub polygon: usize,
    pub edge: usize,
}

impl EdgeRef {
    pub const fn new(polygon: usize, edge: usize) -> Self {
        EdgeRef { polygon, edge }
    }
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.polygon, self.edge)
    }
}

/// `map` sends `src` polygon coordinates to `dst` polygon coordinates, with
/// src start -> dst end and src end -> dst start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gluing {
    pub src: EdgeRef,
    pub dst: EdgeRef,
    pub map: AffineMap,
}

impl Gluing {
    pub fn new(src: EdgeRef, dst: EdgeRef, map: AffineMap) -> Self {
        Gluing { src, dst, map }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Src,
    Dst,
}

/// The far side of an edge: the partner edge and the chart change into it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub gluing: usize,
    pub side: Side,
    pub to: EdgeRef,
    pub map: AffineMap,
}

/// A corner of a polygon, identified by its vertex index.
pub type Corner = (usize, usize);

/// One vertex equivalence class, with its corners in counterclockwise order.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexClass {
    pub corners: Vec<Corner>,
    /// Maps corner `k`'s polygon chart into corner 0's chart.
    pub charts: Vec<AffineMap>,
    /// Angular position of the start of corner `k` around the cone point.
    pub offsets: Vec<f64>,
    pub cone_angle: f64,
    pub multiple: u32,
    /// Scale of the chart change after one full turn (sign included).
    pub link_map: AffineMap,
}

impl VertexClass {
    pub fn link_holonomy(&self) -> f64 {
        self.link_map.scale.abs()
    }

    pub fn is_regular(&self, tol: f64) -> bool {
        (self.cone_angle - 2.0 * PI).abs() <= tol * 2.0 * PI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationSurface {
    polygons: Vec<Polygon>,
    gluings: Vec<Gluing>,
    tolerance: f64,
    index: Vec<Vec<Option<(usize, Side)>>>,
}

impl DilationSurface {
    /// Builds the edge index. Edges may be left unpaired (`validate` reports
    /// them); out-of-range references and double gluings are rejected.
    pub fn new(
        polygons: Vec<Polygon>,
        gluings: Vec<Gluing>,
        tolerance: f64,
    ) -> Result<DilationSurface, SurfaceError> {
        use alloc::format;
        let mut index: Vec<Vec<Option<(usize, Side)>>> =
            polygons.iter().map(|p| vec![None; p.len()]).collect();
        for (gi, g) in gluings.iter().enumerate() {
            if !g.map.is_finite() || g.map.scale == 0.0 {
                return Err(SurfaceError::MalformedInput(format!(
                    "gluing {gi} has a degenerate map"
                )));
            }
            for (e, side) in [(g.src, Side::Src), (g.dst, Side::Dst)] {
                let slot = index
                    .get_mut(e.polygon)
                    .and_then(|p| p.get_mut(e.edge))
                    .ok_or_else(|| {
                        SurfaceError::MalformedInput(format!(
                            "gluing {gi} references missing edge {e}"
                        ))
                    })?;
                if slot.is_some() {
                    return Err(SurfaceError::MalformedInput(format!(
                        "edge {e} is glued twice"
                    )));
                }
                *slot = Some((gi, side));
            }
        }
        Ok(DilationSurface {
            polygons,
            gluings,
            tolerance,
            index,
        })
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn polygon(&self, i: usize) -> &Polygon {
        &self.polygons[i]
    }

    pub fn gluings(&self) -> &[Gluing] {
        &self.gluings
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn edge_count(&self) -> usize {
        self.polygons.iter().map(Polygon::len).sum()
    }

    pub fn gluing_at(&self, e: EdgeRef) -> Option<(usize, Side)> {
        *self.index.get(e.polygon)?.get(e.edge)?
    }

    /// Partner of `e` and the chart change from `e`'s polygon into the partner's.
    pub fn cross(&self, e: EdgeRef) -> Option<Crossing> {
        let (gi, side) = self.gluing_at(e)?;
        let g = &self.gluings[gi];
        Some(match side {
            Side::Src => Crossing {
                gluing: gi,
                side,
                to: g.dst,
                map: g.map,
            },
            Side::Dst => Crossing {
                gluing: gi,
                side,
                to: g.src,
                map: g.map.invert(),
            },
        })
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(Polygon::area).sum()
    }

    pub fn is_triangulated(&self) -> bool {
        self.polygons.iter().all(Polygon::is_triangle)
    }

    /// True when every gluing scale is +-1.
    pub fn is_half_translation(&self) -> bool {
        self.gluings
            .iter()
            .all(|g| (g.map.scale.abs() - 1.0).abs() <= self.tolerance)
    }

    pub fn is_complete(&self) -> bool {
        self.index.iter().all(|p| p.iter().all(Option::is_some))
    }

    /// Vertex classes with their corner cycles. Requires a complete pairing.
    pub fn vertex_classes(&self) -> Result<Vec<VertexClass>, SurfaceError> {
        if !self.is_complete() {
            return Err(SurfaceError::NotClosedSurface("unpaired edge"));
        }
        let mut seen: Vec<Vec<bool>> = self.polygons.iter().map(|p| vec![false; p.len()]).collect();
        let mut out = Vec::new();
        for p in 0..self.polygons.len() {
            for i in 0..self.polygons[p].len() {
                if seen[p][i] {
                    continue;
                }
                let mut corners = Vec::new();
                let mut charts = Vec::new();
                let mut offsets = Vec::new();
                let mut chart = AffineMap::IDENTITY;
                let mut angle = 0.0;
                let (mut q, mut j) = (p, i);
                loop {
                    if seen[q][j] {
                        if (q, j) == (p, i) {
                            break;
                        }
                        return Err(SurfaceError::MalformedInput(
                            "inconsistent vertex identifications".into(),
                        ));
                    }
                    seen[q][j] = true;
                    corners.push((q, j));
                    charts.push(chart);
                    offsets.push(angle);
                    angle += self.polygons[q].angle(j);
                    let n = self.polygons[q].len();
                    let c = self.cross(EdgeRef::new(q, (j + n - 1) % n)).unwrap();
                    chart = chart.compose(&c.map.invert());
                    q = c.to.polygon;
                    j = c.to.edge;
                }
                let multiple = math::round(angle / PI).max(0.0) as u32;
                out.push(VertexClass {
                    corners,
                    charts,
                    offsets,
                    cone_angle: angle,
                    multiple,
                    link_map: chart,
                });
            }
        }
        Ok(out)
    }

    /// `corner -> (class, position in cycle)`.
    pub fn corner_index(&self, classes: &[VertexClass]) -> Vec<Vec<(usize, usize)>> {
        let mut idx: Vec<Vec<(usize, usize)>> = self
            .polygons
            .iter()
            .map(|p| vec![(0, 0); p.len()])
            .collect();
        for (c, vc) in classes.iter().enumerate() {
            for (k, &(p, i)) in vc.corners.iter().enumerate() {
                idx[p][i] = (c, k);
            }
        }
        idx
    }

    /// Connected components of the dual graph.
    pub fn component_count(&self) -> usize {
        let n = self.polygons.len();
        let mut uf = crate::util::UnionFind::new(n);
        for g in &self.gluings {
            uf.union(g.src.polygon, g.dst.polygon);
        }
        (0..n).filter(|&i| uf.find(i) == i).count()
    }
}

/// Something wrong with a surface, as found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    UnpairedEdge(EdgeRef),
    GluingMismatch { gluing: usize, error: f64 },
    ConeAngle { class: usize, angle: f64 },
    LinkHolonomy { class: usize, holonomy: f64 },
    Disconnected { components: usize },
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::UnpairedEdge(e) => write!(f, "edge {e} is not glued"),
            Problem::GluingMismatch { gluing, error } => {
                write!(
                    f,
                    "gluing {gluing} does not match its edges (error {error:.3e})"
                )
            }
            Problem::ConeAngle { class, angle } => {
                write!(
                    f,
                    "vertex class {class}: cone angle {angle} is not a multiple of pi"
                )
            }
            Problem::LinkHolonomy { class, holonomy } => {
                write!(f, "vertex class {class}: link holonomy {holonomy} != 1")
            }
            Problem::Disconnected { components } => {
                write!(f, "surface has {components} components")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStatus {
    pub edge: EdgeRef,
    pub gluing: Option<usize>,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexReport {
    pub class: usize,
    pub corners: Vec<Corner>,
    pub cone_angle: f64,
    pub multiple: u32,
    pub link_holonomy: f64,
    pub regular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub edges: Vec<EdgeStatus>,
    pub vertices: Vec<VertexReport>,
    pub problems: Vec<Problem>,
    pub pass: bool,
}

/// Checks pairing completeness, gluing/edge consistency, cone angles and
/// vertex-link holonomy.
pub fn validate(s: &DilationSurface) -> ValidationReport {
    let tol = s.tolerance;
    let mut problems = Vec::new();
    let mut bad_gluings = BTreeSet::new();
    for (gi, g) in s.gluings.iter().enumerate() {
        let (a0, a1) = s.polygons[g.src.polygon].edge(g.src.edge);
        let (b0, b1) = s.polygons[g.dst.polygon].edge(g.dst.edge);
        let len = a0.dist(a1).max(b0.dist(b1));
        let err = g.map.apply(a0).dist(b1).max(g.map.apply(a1).dist(b0));
        if err > tol * len.max(1e-300) * 10.0 {
            bad_gluings.insert(gi);
            problems.push(Problem::GluingMismatch {
                gluing: gi,
                error: err / len,
            });
        }
    }
    let mut edges = Vec::new();
    for (p, poly) in s.polygons.iter().enumerate() {
        for i in 0..poly.len() {
            let e = EdgeRef::new(p, i);
            let gl = s.gluing_at(e).map(|x| x.0);
            if gl.is_none() {
                problems.push(Problem::UnpairedEdge(e));
            }
            edges.push(EdgeStatus {
                edge: e,
                gluing: gl,
                matches: gl.is_some_and(|g| !bad_gluings.contains(&g)),
            });
        }
    }
    let mut vertices = Vec::new();
    if let Ok(classes) = s.vertex_classes() {
        for (c, vc) in classes.iter().enumerate() {
            let n = vc.multiple;
            if n == 0 || (vc.cone_angle - n as f64 * PI).abs() > tol * vc.cone_angle.max(PI) * 10.0
            {
                problems.push(Problem::ConeAngle {
                    class: c,
                    angle: vc.cone_angle,
                });
            }
            let h = vc.link_holonomy();
            if (h - 1.0).abs() > tol * 10.0 * (vc.corners.len() as f64) {
                problems.push(Problem::LinkHolonomy {
                    class: c,
                    holonomy: h,
                });
            }
            vertices.push(VertexReport {
                class: c,
                corners: vc.corners.clone(),
                cone_angle: vc.cone_angle,
                multiple: n,
                link_holonomy: h,
                regular: n == 2,
            });
        }
    }
    let comps = s.component_count();
    if comps > 1 {
        problems.push(Problem::Disconnected { components: comps });
    }
    let pass = problems.is_empty();
    ValidationReport {
        edges,
        vertices,
        problems,
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EulerData {
    pub v: usize,
    pub e: usize,
    pub f: usize,
    pub genus: usize,
}

impl EulerData {
    pub fn chi(&self) -> i64 {
        self.v as i64 - self.e as i64 + self.f as i64
    }
}

pub fn euler_genus(s: &DilationSurface) -> Result<EulerData, SurfaceError> {
    let classes = s.vertex_classes()?;
    let (v, e, f) = (classes.len(), s.gluings.len(), s.polygons.len());
    let chi = v as i64 - e as i64 + f as i64;
    if chi % 2 != 0 {
        return Err(SurfaceError::NotClosedSurface("odd Euler characteristic"));
    }
    if chi > 2 {
        return Err(SurfaceError::NotClosedSurface(
            "Euler characteristic above 2",
        ));
    }
    Ok(EulerData {
        v,
        e,
        f,
        genus: ((2 - chi) / 2) as usize,
    })
}

/// Image of the surface under `m` acting on every chart.
pub fn apply_matrix(s: &DilationSurface, m: &Mat2) -> Result<DilationSurface, SurfaceError> {
    m.check_orientation()?;
    let polygons = s.polygons.iter().map(|p| p.transformed(m)).collect();
    let gluings = s
        .gluings
        .iter()
        .map(|g| Gluing::new(g.src, g.dst, g.map.conjugate_by(m)))
        .collect();
    DilationSurface::new(polygons, gluings, s.tolerance)
}

/// Triangulated surface plus, for each triangle, the polygon it came from.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub surface: DilationSurface,
    pub parent: Vec<usize>,
    /// Where each original edge `(polygon, edge)` ended up.
    pub edge_map: Vec<Vec<EdgeRef>>,
    /// Parent vertex index of each triangle corner.
    pub vertex_map: Vec<[usize; 3]>,
}

pub fn triangulate(s: &DilationSurface) -> Result<DilationSurface, SurfaceError> {
    Ok(triangulate_with_parents(s)?.surface)
}

/// Ear clipping on every polygon; new diagonals are glued by the identity.
/// Triangles keep the coordinates of their parent polygon.
pub fn triangulate_with_parents(s: &DilationSurface) -> Result<Triangulation, SurfaceError> {
    #[derive(Clone, Copy)]
    enum Seg {
        Orig(usize),
        Diag(usize),
    }
    let mut tris: Vec<Polygon> = Vec::new();
    let mut parent = Vec::new();
    let mut vertex_map = Vec::new();
    let mut edge_map: Vec<Vec<EdgeRef>> = s
        .polygons
        .iter()
        .map(|p| vec![EdgeRef::new(0, 0); p.len()])
        .collect();
    let mut gluings: Vec<Gluing> = Vec::new();
    let mut diag_first: Vec<Option<EdgeRef>> = Vec::new();
    for (pi, poly) in s.polygons.iter().enumerate() {
        let n = poly.len();
        let vs = poly.vertices();
        let mut faces: Vec<([usize; 3], [Seg; 3])> = Vec::new();
        if n == 3 {
            faces.push(([0, 1, 2], [Seg::Orig(0), Seg::Orig(1), Seg::Orig(2)]));
        } else {
            let mut ring: Vec<usize> = (0..n).collect();
            // seg[k] runs from ring[k] to ring[k + 1]
            let mut seg: Vec<Seg> = (0..n).map(Seg::Orig).collect();
            let diam = poly.diameter();
            let eps = 1e-12 * diam;
            while ring.len() > 3 {
                let m = ring.len();
                let mut clipped = false;
                for k0 in 0..m {
                    let k = (k0 + 1) % m;
                    let km = (k + m - 1) % m;
                    let (ia, ib, ic) = (ring[km], ring[k], ring[(k + 1) % m]);
                    let (a, b, c) = (vs[ia], vs[ib], vs[ic]);
                    if (b - a).cross(c - b) <= eps * diam {
                        continue;
                    }
                    let blocked = ring.iter().any(|&r| {
                        r != ia && r != ib && r != ic && in_closed_triangle(vs[r], a, b, c, eps)
                    });
                    if blocked {
                        continue;
                    }
                    let d = diag_first.len();
                    diag_first.push(None);
                    faces.push(([ia, ib, ic], [seg[km], seg[k], Seg::Diag(d)]));
                    seg[km] = Seg::Diag(d);
                    seg.remove(k);
                    ring.remove(k);
                    clipped = true;
                    break;
                }
                if !clipped {
                    return Err(SurfaceError::InvalidPolygon {
                        index: pi,
                        reason: "ear clipping failed",
                    });
                }
            }
            faces.push(([ring[0], ring[1], ring[2]], [seg[0], seg[1], seg[2]]));
        }
        for (vix, sides) in faces {
            let t = tris.len();
            tris.push(Polygon::new_unchecked(vix.iter().map(|&i| vs[i]).collect()));
            parent.push(pi);
            vertex_map.push(vix);
            for (k, sd) in sides.iter().enumerate() {
                let here = EdgeRef::new(t, k);
                match *sd {
                    Seg::Orig(e) => edge_map[pi][e] = here,
                    Seg::Diag(d) => match diag_first[d] {
                        None => diag_first[d] = Some(here),
                        Some(other) => gluings.push(Gluing::new(other, here, AffineMap::IDENTITY)),
                    },
                }
            }
        }
    }
    let mut all: Vec<Gluing> = s
        .gluings
        .iter()
        .map(|g| {
            Gluing::new(
                edge_map[g.src.polygon][g.src.edge],
                edge_map[g.dst.polygon][g.dst.edge],
                g.map,
            )
        })
        .collect();
    all.extend(gluings);
    let surface = DilationSurface::new(tris, all, s.tolerance)?;
    Ok(Triangulation {
        surface,
        parent,
        edge_map,
        vertex_map,
    })
}

/// Replaces the diagonal glued by `gluing` with the other diagonal of the
/// quadrilateral formed by its two triangles. The new triangles live in the
/// chart of the source triangle.
pub fn flip_edge(s: &DilationSurface, gluing: usize) -> Result<DilationSurface, SurfaceError> {
    let g = *s
        .gluings
        .get(gluing)
        .ok_or_else(|| SurfaceError::MalformedInput(alloc::format!("no gluing {gluing}")))?;
    let (t1, t2) = (g.src.polygon, g.dst.polygon);
    if !s.polygons[t1].is_triangle() || !s.polygons[t2].is_triangle() {
        return Err(SurfaceError::NotTriangulated);
    }
    if t1 == t2 {
        return Err(SurfaceError::BoundaryEdge(gluing));
    }
    let (i, j) = (g.src.edge, g.dst.edge);
    let h = g.map.invert();
    let p1 = &s.polygons[t1];
    let p2 = &s.polygons[t2];
    let a = p1.vertex(i);
    let b = p1.vertex(i + 1);
    let c = p1.vertex(i + 2);
    let d = h.apply(p2.vertex(j + 2));
    let quad = [a, d, b, c];
    let scale = p1.diameter();
    for k in 0..4 {
        let (u, v, w) = (quad[k], quad[(k + 1) % 4], quad[(k + 2) % 4]);
        if (v - u).cross(w - v) <= 1e-12 * scale * scale {
            return Err(SurfaceError::NonConvexQuad(gluing));
        }
    }
    // old edge -> (new edge, chart change old -> new)
    let relabel = |e: EdgeRef| -> (EdgeRef, AffineMap) {
        if e.polygon == t1 {
            match (e.edge + 3 - i) % 3 {
                1 => (EdgeRef::new(t2, 1), AffineMap::IDENTITY),
                2 => (EdgeRef::new(t1, 2), AffineMap::IDENTITY),
                _ => unreachable!(),
            }
        } else if e.polygon == t2 {
            match (e.edge + 3 - j) % 3 {
                1 => (EdgeRef::new(t1, 0), h),
                2 => (EdgeRef::new(t2, 0), h),
                _ => unreachable!(),
            }
        } else {
            (e, AffineMap::IDENTITY)
        }
    };
    let mut polygons = s.polygons.clone();
    polygons[t1] = Polygon::new_unchecked(vec![a, d, c]);
    polygons[t2] = Polygon::new_unchecked(vec![d, b, c]);
    let gluings = s
        .gluings
        .iter()
        .enumerate()
        .map(|(gi, old)| {
            if gi == gluing {
                return Gluing::new(
                    EdgeRef::new(t1, 1),
                    EdgeRef::new(t2, 2),
                    AffineMap::IDENTITY,
                );
            }
            let (src, cs) = relabel(old.src);
            let (dst, cd) = relabel(old.dst);
            Gluing::new(src, dst, cd.compose(&old.map).compose(&cs.invert()))
        })
        .collect();
    DilationSurface::new(polygons, gluings, s.tolerance)
}

pub(crate) fn in_closed_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2, eps: f64) -> bool {
    let d1 = (b - a).cross(p - a) / (b - a).norm();
    let d2 = (c - b).cross(p - b) / (c - b).norm();
    let d3 = (a - c).cross(p - c) / (a - c).norm();
    d1 >= -eps && d2 >= -eps && d3 >= -eps
}
