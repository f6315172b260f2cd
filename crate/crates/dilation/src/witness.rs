//! Cut-and-paste equivalences between surfaces, their verification, and a
//! bounded search for them.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::clip;
use crate::flow::{FlowContext, FlowOptions, TraceOutcome};
use crate::geom::{AffineMap, Mat2, Vec2};
use crate::holonomy::holonomy_basis;
use crate::surface::{
    apply_matrix, dist_to_segment, triangulate_with_parents, validate, DilationSurface, EdgeRef,
    SurfaceError, Triangulation,
};

/// A convex piece of a source polygon and where it goes.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub source: usize,
    /// Counterclockwise vertices in the source polygon's chart.
    pub shape: Vec<Vec2>,
    pub target: usize,
    /// Source chart to target chart.
    pub map: AffineMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Map of the root piece; informational.
    pub global: AffineMap,
    pub pieces: Vec<Piece>,
}

impl Witness {
    /// Every polygon onto itself, cut into triangles.
    pub fn identity(s: &DilationSurface) -> Result<Witness, SurfaceError> {
        let tri = triangulate_with_parents(s)?;
        let pieces = tri
            .surface
            .polygons()
            .iter()
            .zip(&tri.parent)
            .map(|(t, &p)| Piece {
                source: p,
                shape: t.vertices().to_vec(),
                target: p,
                map: AffineMap::IDENTITY,
            })
            .collect();
        Ok(Witness {
            global: AffineMap::IDENTITY,
            pieces,
        })
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

pub fn invert_witness(w: &Witness) -> Witness {
    let pieces = w
        .pieces
        .iter()
        .map(|p| Piece {
            source: p.target,
            shape: p.shape.iter().map(|v| p.map.apply(*v)).collect(),
            target: p.source,
            map: p.map.invert(),
        })
        .collect();
    Witness {
        global: w.global.invert(),
        pieces,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub valid: bool,
    pub reasons: Vec<String>,
}

const REL: f64 = 1e-7;

fn is_convex_ccw(pts: &[Vec2], eps: f64) -> bool {
    let n = pts.len();
    n >= 3
        && clip::area(pts) > 0.0
        && (0..n).all(|i| {
            let (a, b, c) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
            (b - a).cross(c - b) >= -eps
        })
}

fn overlap(a: &[Vec2], b: &[Vec2]) -> f64 {
    clip::area(&clip::clip_convex(a, b))
}

/// All representatives of a point of `s`: its own position plus the images
/// across every edge it lies on, closed under repetition.
fn representatives(s: &DilationSurface, polygon: usize, p: Vec2) -> Vec<(usize, Vec2)> {
    let mut out = vec![(polygon, p)];
    let mut k = 0;
    while k < out.len() && out.len() < 64 {
        let (q, x) = out[k];
        k += 1;
        let poly = s.polygon(q);
        let tol = REL * poly.diameter();
        for e in 0..poly.len() {
            let (a, b) = poly.edge(e);
            if dist_to_segment(x, a, b) > tol {
                continue;
            }
            if let Some(c) = s.cross(EdgeRef::new(q, e)) {
                let y = c.map.apply(x);
                let ty = REL * s.polygon(c.to.polygon).diameter();
                if !out
                    .iter()
                    .any(|&(r, z)| r == c.to.polygon && z.dist(y) <= ty)
                {
                    out.push((c.to.polygon, y));
                }
            }
        }
    }
    out
}

fn same_point(s: &DilationSurface, a: (usize, Vec2), b: (usize, Vec2)) -> bool {
    let tol = REL * s.polygon(b.0).diameter();
    representatives(s, a.0, a.1)
        .iter()
        .any(|&(q, x)| q == b.0 && x.dist(b.1) <= tol)
}

/// Checks that `w` is a cut-and-paste equivalence from `s1` to `s2`.
pub fn verify_witness(s1: &DilationSurface, s2: &DilationSurface, w: &Witness) -> WitnessReport {
    let mut reasons = Vec::new();
    let n1 = s1.polygons().len();
    let n2 = s2.polygons().len();
    for (k, p) in w.pieces.iter().enumerate() {
        if p.source >= n1 || p.target >= n2 {
            reasons.push(format!("piece {k}: polygon index out of range"));
            continue;
        }
        let diam = s1.polygon(p.source).diameter();
        if !is_convex_ccw(&p.shape, REL * diam * diam) {
            reasons.push(format!("piece {k}: not a convex counterclockwise polygon"));
        }
        if !(p.map.is_finite() && p.map.scale != 0.0) {
            reasons.push(format!("piece {k}: degenerate map"));
        }
    }
    if !reasons.is_empty() {
        return WitnessReport {
            valid: false,
            reasons,
        };
    }
    let images: Vec<Vec<Vec2>> = w
        .pieces
        .iter()
        .map(|p| p.shape.iter().map(|v| p.map.apply(*v)).collect())
        .collect();
    for (k, p) in w.pieces.iter().enumerate() {
        let src = s1.polygon(p.source);
        if !p
            .shape
            .iter()
            .all(|v| src.contains(*v, REL * src.diameter()))
        {
            reasons.push(format!("piece {k}: leaves source polygon {}", p.source));
        }
        let dst = s2.polygon(p.target);
        if !images[k]
            .iter()
            .all(|v| dst.contains(*v, REL * dst.diameter()))
        {
            reasons.push(format!(
                "piece {k}: placement leaves target polygon {}",
                p.target
            ));
        }
    }
    // partition and tiling
    for (side, n, surf) in [(0, n1, s1), (1, n2, s2)] {
        let mut by: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, p) in w.pieces.iter().enumerate() {
            by[if side == 0 { p.source } else { p.target }].push(k);
        }
        let shape = |k: usize| {
            if side == 0 {
                &w.pieces[k].shape
            } else {
                &images[k]
            }
        };
        for (q, ks) in by.iter().enumerate() {
            let a = surf.polygon(q).area();
            let sum: f64 = ks.iter().map(|&k| clip::area(shape(k))).sum();
            if (sum - a).abs() > 1e-6 * a {
                let what = if side == 0 { "source" } else { "target" };
                reasons.push(format!(
                    "{what} polygon {q}: pieces cover area {sum}, expected {a}"
                ));
            }
            for (i, &ka) in ks.iter().enumerate() {
                for &kb in &ks[i + 1..] {
                    if overlap(shape(ka), shape(kb)) > 1e-6 * a {
                        reasons.push(format!("pieces {ka} and {kb} overlap"));
                    }
                }
            }
        }
    }
    if !reasons.is_empty() {
        return WitnessReport {
            valid: false,
            reasons,
        };
    }
    // continuity across piece boundaries
    let mut by_source: Vec<Vec<usize>> = vec![Vec::new(); n1];
    for (k, p) in w.pieces.iter().enumerate() {
        by_source[p.source].push(k);
    }
    for (k, p) in w.pieces.iter().enumerate() {
        let m = p.shape.len();
        for i in 0..m {
            let (a, b) = (p.shape[i], p.shape[(i + 1) % m]);
            for frac in [0.381_966_011_250_105, 0.618_033_988_749_895] {
                let x = a.lerp(b, frac);
                let here = (p.target, p.map.apply(x));
                let mut found = false;
                for (q, y) in representatives(s1, p.source, x) {
                    let tol = REL * s1.polygon(q).diameter();
                    for &kb in &by_source[q] {
                        if kb == k && q == p.source && y.dist(x) <= tol {
                            continue;
                        }
                        let pb = &w.pieces[kb];
                        if !on_boundary_or_inside(&pb.shape, y, tol) {
                            continue;
                        }
                        found = true;
                        if !same_point(s2, here, (pb.target, pb.map.apply(y))) {
                            reasons
                                .push(format!("pieces {k} and {kb} disagree across a common edge"));
                        }
                    }
                }
                if !found {
                    reasons.push(format!("piece {k}: edge {i} has nothing on its far side"));
                }
            }
        }
        if reasons.len() > 16 {
            break;
        }
    }
    WitnessReport {
        valid: reasons.is_empty(),
        reasons,
    }
}

fn on_boundary_or_inside(poly: &[Vec2], p: Vec2, tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        (b - a).cross(p - a) / (b - a).norm() >= -tol
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Bound on the powers of holonomy values tried as root scales.
    pub max_flips: usize,
    /// Bound on overlay cells developed per root candidate.
    pub max_nodes: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_flips: 64,
            max_nodes: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("no equivalence found: {candidates} root candidates tried, {nodes} cells developed")]
    NotFound { candidates: usize, nodes: usize },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Develops the overlay of two triangulations starting from triangle `t` of
/// the first sent into triangle `u` of the second by `f`. Returns the
/// pieces, in the charts of the parent polygons, or `None` if the
/// development is inconsistent or exceeds `max_nodes`.
pub fn develop(
    t1: &Triangulation,
    t2: &Triangulation,
    root: (usize, usize, AffineMap),
    max_nodes: usize,
    nodes_used: &mut usize,
) -> Option<Witness> {
    let s1 = &t1.surface;
    let s2 = &t2.surface;
    let n1 = s1.polygons().len();
    let n2 = s2.polygons().len();
    let mut covered = vec![0.0; n1];
    let mut filled = vec![0.0; n2];
    let mut seen: Vec<Vec<AffineMap>> = vec![Vec::new(); n1 * n2];
    let mut pieces = Vec::new();
    let mut queue = VecDeque::from([root]);
    let map_tol = |f: &AffineMap| 1e-7 * (1.0 + f.shift.norm()).max(f.scale.abs());
    while let Some((t, u, f)) = queue.pop_front() {
        let slot = &mut seen[t * n2 + u];
        let tol = map_tol(&f);
        if slot.iter().any(|g| g.approx_eq(&f, tol)) {
            continue;
        }
        slot.push(f);
        *nodes_used += 1;
        if pieces.len() >= max_nodes || *nodes_used > max_nodes * 4 {
            return None;
        }
        let tri = s1.polygon(t);
        let img: Vec<Vec2> = tri.vertices().iter().map(|v| f.apply(*v)).collect();
        let target = s2.polygon(u);
        let cell = clip::clip_convex(&img, target.vertices());
        let area = clip::area(&cell);
        if area <= 1e-10 * target.area() {
            continue;
        }
        let finv = f.invert();
        covered[t] += area / (f.scale * f.scale);
        filled[u] += area;
        if covered[t] > tri.area() * (1.0 + 1e-6) || filled[u] > target.area() * (1.0 + 1e-6) {
            return None;
        }
        let shape: Vec<Vec2> = cell.iter().map(|v| finv.apply(*v)).collect();
        pieces.push(Piece {
            source: t1.parent[t],
            shape: dedup(&shape, 1e-9 * tri.diameter()),
            target: t2.parent[u],
            map: f,
        });
        let etol2 = 1e-9 * target.diameter();
        let etol1 = 1e-9 * tri.diameter();
        let m = cell.len();
        for i in 0..m {
            let (a, b) = (cell[i], cell[(i + 1) % m]);
            if a.dist(b) <= etol2 {
                continue;
            }
            let on_u = (0..3).find(|&e| {
                let (p, q) = target.edge(e);
                dist_to_segment(a, p, q) <= etol2 && dist_to_segment(b, p, q) <= etol2
            });
            let (a1, b1) = (finv.apply(a), finv.apply(b));
            let on_t = (0..3).find(|&e| {
                let (p, q) = tri.edge(e);
                dist_to_segment(a1, p, q) <= etol1 && dist_to_segment(b1, p, q) <= etol1
            });
            let c2 = on_u.and_then(|e| s2.cross(EdgeRef::new(u, e)));
            let c1 = on_t.and_then(|e| s1.cross(EdgeRef::new(t, e)));
            if let Some(c) = c2 {
                queue.push_back((t, c.to.polygon, c.map.compose(&f)));
            }
            if let Some(c) = c1 {
                queue.push_back((c.to.polygon, u, f.compose(&c.map.invert())));
            }
            if let (Some(c), Some(d)) = (c1, c2) {
                queue.push_back((
                    c.to.polygon,
                    d.to.polygon,
                    d.map.compose(&f).compose(&c.map.invert()),
                ));
            }
        }
    }
    let ok1 =
        (0..n1).all(|t| (covered[t] - s1.polygon(t).area()).abs() <= 1e-6 * s1.polygon(t).area());
    let ok2 =
        (0..n2).all(|u| (filled[u] - s2.polygon(u).area()).abs() <= 1e-6 * s2.polygon(u).area());
    (ok1 && ok2).then_some(Witness {
        global: root.2,
        pieces,
    })
}

fn dedup(pts: &[Vec2], tol: f64) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in pts {
        if out.last().is_none_or(|q| q.dist(p) > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(out[out.len() - 1]) <= tol {
        out.pop();
    }
    out
}

/// Develops from a known root map and verifies the result.
pub fn witness_from_root(
    s1: &DilationSurface,
    s2: &DilationSurface,
    polygon: usize,
    map: AffineMap,
    max_nodes: usize,
) -> Option<Witness> {
    let t1 = triangulate_with_parents(s1).ok()?;
    let t2 = triangulate_with_parents(s2).ok()?;
    let t = t1.parent.iter().position(|&p| p == polygon)?;
    let mut nodes = 0;
    for u in overlapping(&t1, &t2, t, &map) {
        if let Some(w) = develop(&t1, &t2, (t, u, map), max_nodes, &mut nodes) {
            if verify_witness(s1, s2, &w).valid {
                return Some(w);
            }
        }
    }
    None
}

fn overlapping(t1: &Triangulation, t2: &Triangulation, t: usize, f: &AffineMap) -> Vec<usize> {
    let img: Vec<Vec2> = t1
        .surface
        .polygon(t)
        .vertices()
        .iter()
        .map(|v| f.apply(*v))
        .collect();
    (0..t2.surface.polygons().len())
        .filter(|&u| {
            let target = t2.surface.polygon(u);
            overlap(&img, target.vertices()) > 1e-10 * target.area()
        })
        .collect()
}

/// Root scales tried before anchored candidates: 1, the area ratio, and
/// their products with small powers of the holonomy values of `s2`.
fn scale_candidates(s1: &DilationSurface, s2: &DilationSurface, max_pow: usize) -> Vec<f64> {
    let mut base = vec![1.0];
    let r = crate::math::sqrt(s2.area() / s1.area());
    if (r - 1.0).abs() > 1e-9 {
        base.push(r);
    }
    let mut hol: Vec<f64> = holonomy_basis(s2)
        .map(|h| {
            h.values
                .into_iter()
                .filter(|v| (v - 1.0).abs() > 1e-9)
                .collect()
        })
        .unwrap_or_default();
    hol.sort_by(f64::total_cmp);
    hol.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs() || (*a * *b - 1.0).abs() <= 1e-9);
    let mut out = Vec::new();
    let mut push = |x: f64| {
        for v in [x, -x] {
            if !out.iter().any(|y: &f64| (y - v).abs() <= 1e-9 * v.abs()) {
                out.push(v);
            }
        }
    };
    for &b in &base {
        push(b);
    }
    for k in 1..=max_pow.min(12) as i32 {
        for &h in &hol {
            for &b in &base {
                push(b * libm::pow(h, k as f64));
                push(b * libm::pow(h, -k as f64));
            }
        }
    }
    out
}

/// Cone-point anchored roots: a ray along an edge from a cone point of `s1`
/// to the next cone point, matched against parallel rays in `s2`.
fn anchored_candidates(t1: &Triangulation, t2: &Triangulation) -> Vec<(usize, usize, AffineMap)> {
    let (Ok(c1), Ok(c2)) = (FlowContext::new(&t1.surface), FlowContext::new(&t2.surface)) else {
        return Vec::new();
    };
    let cones1: Vec<usize> = (0..c1.classes.len())
        .filter(|&k| !c1.classes[k].is_regular(1e-6))
        .collect();
    let use_cones = !cones1.is_empty();
    let anchor_classes: Vec<usize> = if use_cones {
        cones1
    } else {
        (0..c1.classes.len()).collect()
    };
    let opts = FlowOptions {
        max_steps: 400,
        stop_at_marked: !use_cones,
        ..FlowOptions::default()
    };
    let ends_ok = |ctx: &FlowContext, o: &TraceOutcome| match o {
        TraceOutcome::SaddleConnection {
            end_class, length, ..
        } => (!use_cones || !ctx.classes[*end_class].is_regular(1e-6)).then_some(*length),
        _ => None,
    };
    let mut out = Vec::new();
    for &v in anchor_classes.iter().take(1) {
        let vc = &c1.classes[v];
        // first edge direction whose ray reaches an anchor
        let mut anchor = None;
        'find: for &(t, i) in &vc.corners {
            let poly = t1.surface.polygon(t);
            let d = poly.vertex(i + 1) - poly.vertex(i);
            if let Some(l1) = ends_ok(&c1, &c1.trace_from(t, poly.vertex(i), d, &opts)) {
                anchor = Some((t, i, d.normalized(), l1));
                break 'find;
            }
        }
        let Some((t, i, d, l1)) = anchor else {
            continue;
        };
        let p = t1.surface.polygon(t).vertex(i);
        for (w, wc) in c2.classes.iter().enumerate() {
            if (wc.cone_angle - vc.cone_angle).abs() > 1e-6 {
                continue;
            }
            for &(u, j) in &wc.corners {
                let poly = t2.surface.polygon(u);
                let e = (poly.vertex(j + 1) - poly.vertex(j)).normalized();
                let width = poly.angle(j);
                for sign in [1.0, -1.0] {
                    let d2 = d * sign;
                    let mut a = crate::math::atan2(e.cross(d2), e.dot(d2));
                    if a < -1e-12 {
                        a += core::f64::consts::TAU;
                    }
                    if a.abs() <= 1e-12 {
                        a = 0.0;
                    }
                    if a >= width - 1e-12 {
                        continue;
                    }
                    let q = poly.vertex(j);
                    let Some(l2) = ends_ok(&c2, &c2.trace_from(u, q, d2, &opts)) else {
                        continue;
                    };
                    let scale = sign * l2 / l1;
                    let f = AffineMap::new(scale, q - p * scale);
                    out.push((t, u, f));
                }
            }
            let _ = w;
        }
    }
    out
}

/// Bounded search for a cut-and-paste equivalence `s1 -> s2`. Deterministic:
/// candidates are tried in a fixed order and the first verified one wins.
pub fn search_isomorphism(
    s1: &DilationSurface,
    s2: &DilationSurface,
    budget: SearchBudget,
) -> Result<Witness, SearchError> {
    let t1 = triangulate_with_parents(s1)?;
    let t2 = triangulate_with_parents(s2)?;
    let mut nodes = 0;
    let mut tried = 0;
    let mut attempt = |root: (usize, usize, AffineMap), nodes: &mut usize| -> Option<Witness> {
        tried += 1;
        let w = develop(&t1, &t2, root, budget.max_nodes, nodes)?;
        verify_witness(s1, s2, &w).valid.then_some(w)
    };
    for scale in scale_candidates(s1, s2, budget.max_flips) {
        let f = AffineMap::new(scale, Vec2::ZERO);
        for u in overlapping(&t1, &t2, 0, &f) {
            if let Some(w) = attempt((0, u, f), &mut nodes) {
                return Ok(w);
            }
        }
    }
    for root in anchored_candidates(&t1, &t2) {
        if let Some(w) = attempt(root, &mut nodes) {
            return Ok(w);
        }
    }
    Err(SearchError::NotFound {
        candidates: tried,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Automorphism {
    Verified(Witness),
    NotFound(String),
}

impl Automorphism {
    pub fn is_verified(&self) -> bool {
        matches!(self, Automorphism::Verified(_))
    }
}

/// Whether `m` is the derivative of an affine self-map of `s`, certified by a
/// witness from `apply_matrix(s, m)` to `s`.
pub fn is_affine_automorphism(
    s: &DilationSurface,
    m: &Mat2,
    w: Option<&Witness>,
    budget: SearchBudget,
) -> Result<Automorphism, SurfaceError> {
    let sm = apply_matrix(s, m)?;
    if !validate(&sm).pass {
        return Ok(Automorphism::NotFound(
            "image surface does not validate".into(),
        ));
    }
    match w {
        Some(w) => {
            let r = verify_witness(&sm, s, w);
            Ok(if r.valid {
                Automorphism::Verified(w.clone())
            } else {
                Automorphism::NotFound(r.reasons.join("; "))
            })
        }
        None => Ok(match search_isomorphism(&sm, s, budget) {
            Ok(w) => Automorphism::Verified(w),
            Err(e) => Automorphism::NotFound(format!("{e}")),
        }),
    }
}
