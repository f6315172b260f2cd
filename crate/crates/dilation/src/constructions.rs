//! Generators for the standard example surfaces.

use alloc::vec;
use alloc::vec::Vec;

use crate::flow::{FlowContext, FlowOptions, Start, TraceOutcome};
use crate::geom::{AffineMap, Mat2, Vec2, DEFAULT_TOL};
use crate::holonomy::LoopWord;
use crate::surface::{apply_matrix, DilationSurface, EdgeRef, Gluing, Polygon, SurfaceError};
use crate::thurston::CurveSystem;
use crate::witness::{witness_from_root, Witness};

fn poly(pts: &[(f64, f64)]) -> Polygon {
    Polygon::new(pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect()).expect("generator polygon")
}

fn glue(p: usize, e: usize, q: usize, f: usize, scale: f64, bx: f64, by: f64) -> Gluing {
    Gluing::new(
        EdgeRef::new(p, e),
        EdgeRef::new(q, f),
        AffineMap::new(scale, Vec2::new(bx, by)),
    )
}

/// A `width x height` rectangle with opposite sides glued by translations.
pub fn square_torus(width: f64, height: f64) -> DilationSurface {
    assert!(width > 0.0 && height > 0.0, "torus sides must be positive");
    let p = poly(&[(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)]);
    let gluings = vec![
        glue(0, 0, 0, 2, 1.0, 0.0, height),
        glue(0, 1, 0, 3, 1.0, -width, 0.0),
    ];
    DilationSurface::new(vec![p], gluings, DEFAULT_TOL).expect("square torus")
}

/// Square annulus between half-sides 1 and `lambda`, cut into four
/// trapezoids (right, top, left, bottom), inner sides glued to outer sides
/// by `z -> lambda z`. Gluings 0..4 are the radial ones, 4..8 the diagonals.
pub fn hopf_torus(lambda: f64) -> DilationSurface {
    assert!(lambda > 1.0, "hopf torus needs lambda > 1");
    let base = [
        Vec2::new(1.0, -1.0),
        Vec2::new(lambda, -lambda),
        Vec2::new(lambda, lambda),
        Vec2::new(1.0, 1.0),
    ];
    let mut polygons = Vec::new();
    for k in 0..4 {
        let r = quarter_turn(k);
        polygons.push(Polygon::new(base.iter().map(|v| r.apply(*v)).collect()).expect("trapezoid"));
    }
    let mut gluings = Vec::new();
    for k in 0..4 {
        gluings.push(Gluing::new(
            EdgeRef::new(k, 3),
            EdgeRef::new(k, 1),
            AffineMap::new(lambda, Vec2::ZERO),
        ));
    }
    for k in 0..4 {
        gluings.push(Gluing::new(
            EdgeRef::new(k, 2),
            EdgeRef::new((k + 1) % 4, 0),
            AffineMap::IDENTITY,
        ));
    }
    DilationSurface::new(polygons, gluings, DEFAULT_TOL).expect("hopf torus")
}

pub(crate) fn quarter_turn(k: usize) -> Mat2 {
    match k % 4 {
        0 => Mat2::IDENTITY,
        1 => Mat2::new(0.0, -1.0, 1.0, 0.0),
        2 => Mat2::new(-1.0, 0.0, 0.0, -1.0),
        _ => Mat2::new(0.0, 1.0, -1.0, 0.0),
    }
}

/// Staircase octagon with all vertices identified to one point of angle 6 pi.
/// Paired sides have lengths in ratio 2:1, so the holonomy is nontrivial.
pub fn one_point_genus2_surface() -> DilationSurface {
    let p = poly(&[
        (1.0, 0.0),
        (3.0, 0.0),
        (3.0, 2.0),
        (2.0, 2.0),
        (2.0, 3.0),
        (0.0, 3.0),
        (0.0, 1.0),
        (1.0, 1.0),
    ]);
    let gluings = vec![
        glue(0, 0, 0, 2, 0.5, 1.5, 2.0),
        glue(0, 1, 0, 7, 0.5, -0.5, 0.0),
        glue(0, 3, 0, 5, 2.0, -4.0, -3.0),
        glue(0, 4, 0, 6, 0.5, 0.0, -0.5),
    ];
    DilationSurface::new(vec![p], gluings, DEFAULT_TOL).expect("genus two octagon")
}

/// One alpha and one beta curve meeting in four points, all weights 1.
/// Alpha visits the points in order 1 2 4 3, beta in order 1 4 2 3.
pub fn octagon_curve_system() -> CurveSystem {
    let pts = (1..=4).map(|id| (id, 1, 1.0)).collect();
    CurveSystem::new(vec![vec![0, 1, 3, 2]], vec![vec![0, 3, 1, 2]], pts).expect("octagon system")
}

/// Alpha through three points (bottom-left, bottom-right, top); beta1 through
/// bottom-left and top, beta2 through bottom-right.
pub fn l_curve_system(a: f64) -> CurveSystem {
    assert!(a > 0.0 && a.is_finite(), "weight must be positive");
    let pts = vec![(1, 1, a), (2, 1, a), (3, 1, 1.0)];
    CurveSystem::new(vec![vec![0, 1, 2]], vec![vec![0, 2], vec![1]], pts).expect("L system")
}

/// A straight slit inside one polygon, in that polygon's chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slit {
    pub polygon: usize,
    pub start: Vec2,
    pub end: Vec2,
}

impl Slit {
    pub fn new(polygon: usize, start: Vec2, end: Vec2) -> Self {
        Slit {
            polygon,
            start,
            end,
        }
    }

    fn dir(&self) -> Vec2 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SlitError {
    #[error("slit passes through a vertex of polygon {0}")]
    SlitThroughVertex(usize),
    #[error("slits are not parallel")]
    NonParallelSlits,
    #[error("slit is not inside polygon {0}")]
    SlitNotInPolygon(usize),
    #[error("edge {0} is unglued or glued to itself")]
    BadEdge(EdgeRef),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Mutable polygon soup used for cut-and-paste edits. `origin[p]` is the
/// input polygon whose chart polygon `p` uses.
#[derive(Debug, Clone)]
struct Builder {
    polys: Vec<Vec<Vec2>>,
    glue: Vec<Gluing>,
    origin: Vec<usize>,
}

impl Builder {
    fn new(surfaces: &[&DilationSurface]) -> Self {
        let mut b = Builder {
            polys: Vec::new(),
            glue: Vec::new(),
            origin: Vec::new(),
        };
        for s in surfaces {
            let off = b.polys.len();
            for p in s.polygons() {
                b.origin.push(b.polys.len());
                b.polys.push(p.vertices().to_vec());
            }
            for g in s.gluings() {
                let src = EdgeRef::new(g.src.polygon + off, g.src.edge);
                let dst = EdgeRef::new(g.dst.polygon + off, g.dst.edge);
                b.glue.push(Gluing::new(src, dst, g.map));
            }
        }
        b
    }

    fn finish(self, tol: f64) -> Result<DilationSurface, SurfaceError> {
        let polys = self
            .polys
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                Polygon::new(v).map_err(|reason| SurfaceError::InvalidPolygon { index: i, reason })
            })
            .collect::<Result<Vec<_>, _>>()?;
        DilationSurface::new(polys, self.glue, tol)
    }

    fn diam(&self, p: usize) -> f64 {
        Polygon::new_unchecked(self.polys[p].clone()).diameter()
    }

    fn find(&self, e: EdgeRef) -> Option<(usize, bool)> {
        self.glue.iter().enumerate().find_map(|(i, g)| {
            if g.src == e {
                Some((i, true))
            } else if g.dst == e {
                Some((i, false))
            } else {
                None
            }
        })
    }

    /// Inserts vertex `x` after vertex `after` of polygon `p`, renumbering edges.
    fn insert_vertex(&mut self, p: usize, after: usize, x: Vec2) {
        self.polys[p].insert(after + 1, x);
        for g in &mut self.glue {
            for e in [&mut g.src, &mut g.dst] {
                if e.polygon == p && e.edge > after {
                    e.edge += 1;
                }
            }
        }
    }

    /// Splits edge `e` at `x` and its partner at the image of `x`.
    fn split_edge(&mut self, e: EdgeRef, x: Vec2) -> Result<(), SlitError> {
        let (gi, _) = self.find(e).ok_or(SlitError::BadEdge(e))?;
        let g = self.glue[gi];
        if g.src == g.dst {
            return Err(SlitError::BadEdge(e));
        }
        let xs = if g.src == e {
            x
        } else {
            g.map.invert().apply(x)
        };
        let xd = g.map.apply(xs);
        self.insert_vertex(g.src.polygon, g.src.edge, xs);
        let d = self.glue[gi].dst;
        self.insert_vertex(d.polygon, d.edge, xd);
        let s = self.glue[gi].src;
        let d = self.glue[gi].dst;
        self.glue[gi] = Gluing::new(s, EdgeRef::new(d.polygon, d.edge + 1), g.map);
        self.glue
            .push(Gluing::new(EdgeRef::new(s.polygon, s.edge + 1), d, g.map));
        Ok(())
    }

    /// First boundary point of polygon `p` hit by the ray `from + t dir`, `t > 0`.
    fn ray_hit(&self, p: usize, from: Vec2, dir: Vec2) -> Option<(usize, Vec2)> {
        let vs = &self.polys[p];
        let n = vs.len();
        let mut best: Option<(f64, usize)> = None;
        for e in 0..n {
            let (a, b) = (vs[e], vs[(e + 1) % n]);
            let ab = b - a;
            let den = dir.cross(ab);
            if den.abs() <= 1e-15 * ab.norm() * dir.norm() {
                continue;
            }
            let ap = a - from;
            let t = ap.cross(ab) / den;
            let s = ap.cross(dir) / den;
            if t > 1e-12 && (-1e-12..=1.0 + 1e-12).contains(&s) && best.is_none_or(|(bt, _)| t < bt)
            {
                best = Some((t, e));
            }
        }
        best.map(|(t, e)| (e, from + dir * t))
    }

    /// Makes `x` (on the boundary of `p`) a vertex and returns its index.
    fn ensure_vertex(&mut self, p: usize, e: usize, x: Vec2) -> Result<usize, SlitError> {
        let tol = 1e-9 * self.diam(p);
        if let Some(i) = self.polys[p].iter().position(|v| v.dist(x) <= tol) {
            return Ok(i);
        }
        self.split_edge(EdgeRef::new(p, e), x)?;
        Ok(self.polys[p]
            .iter()
            .position(|v| v.dist(x) <= tol)
            .expect("inserted vertex"))
    }

    /// Splits polygon `p` along the chord from vertex `i` through `inner` to
    /// vertex `j`. Chord segments listed in `open` stay unglued; the others
    /// are glued by the identity.
    fn cut_chord(&mut self, p: usize, i: usize, j: usize, inner: &[Vec2], open: &[usize]) {
        let vs = self.polys[p].clone();
        let n = vs.len();
        let c1 = (j + n - i) % n;
        let mut p1: Vec<Vec2> = (0..=c1).map(|k| vs[(i + k) % n]).collect();
        p1.extend(inner.iter().rev());
        let mut p2: Vec<Vec2> = (0..=n - c1).map(|k| vs[(j + k) % n]).collect();
        p2.extend(inner.iter());
        let q = self.polys.len();
        self.polys[p] = p1;
        self.polys.push(p2);
        self.origin.push(self.origin[p]);
        for g in &mut self.glue {
            for e in [&mut g.src, &mut g.dst] {
                if e.polygon == p {
                    let k = (e.edge + n - i) % n;
                    *e = if k < c1 {
                        EdgeRef::new(p, k)
                    } else {
                        EdgeRef::new(q, (e.edge + n - j) % n)
                    };
                }
            }
        }
        let m = inner.len();
        for seg in 0..=m {
            if open.contains(&seg) {
                continue;
            }
            let up = EdgeRef::new(q, n - c1 + seg);
            let down = EdgeRef::new(p, c1 + m - seg);
            self.glue.push(Gluing::new(up, down, AffineMap::IDENTITY));
        }
    }

    /// Cuts open collinear slits of one original polygon, ordered along
    /// their common direction.
    fn cut_line(&mut self, slits: &[Slit]) -> Result<(), SlitError> {
        let s0 = slits[0];
        let d = s0.dir().normalized();
        let p = self
            .locate(s0.polygon, s0.start.lerp(s0.end, 0.5))
            .ok_or(SlitError::SlitNotInPolygon(s0.polygon))?;
        let last = slits[slits.len() - 1];
        let (ex, x) = self
            .ray_hit(p, s0.start, -d)
            .ok_or(SlitError::SlitNotInPolygon(s0.polygon))?;
        self.ensure_vertex(p, ex, x)?;
        let (ey, y) = self
            .ray_hit(p, last.end, d)
            .ok_or(SlitError::SlitNotInPolygon(s0.polygon))?;
        self.ensure_vertex(p, ey, y)?;
        let tol = 1e-9 * self.diam(p);
        let i = self.polys[p]
            .iter()
            .position(|v| v.dist(x) <= tol)
            .expect("chord start");
        let j = self.polys[p]
            .iter()
            .position(|v| v.dist(y) <= tol)
            .expect("chord end");
        let inner: Vec<Vec2> = slits.iter().flat_map(|s| [s.start, s.end]).collect();
        let open: Vec<usize> = (0..slits.len()).map(|k| 2 * k + 1).collect();
        self.cut_chord(p, i, j, &inner, &open);
        Ok(())
    }

    /// Polygon sharing the chart of `orig` whose interior contains `x`.
    fn locate(&self, orig: usize, x: Vec2) -> Option<usize> {
        (0..self.polys.len()).find(|&p| {
            if self.origin[p] != orig {
                return false;
            }
            let poly = Polygon::new_unchecked(self.polys[p].clone());
            let tol = 1e-9 * poly.diameter();
            poly.contains(x, 0.0)
                && (0..poly.len()).all(|e| {
                    let (a, b) = poly.edge(e);
                    crate::surface::dist_to_segment(x, a, b) > tol
                })
        })
    }

    /// The unglued edge of a chart-`orig` polygon running from `a` to `b`.
    fn open_edge(&self, orig: usize, a: Vec2, b: Vec2) -> Option<EdgeRef> {
        for p in 0..self.polys.len() {
            if self.origin[p] != orig {
                continue;
            }
            let vs = &self.polys[p];
            let tol = 1e-9 * self.diam(p);
            for e in 0..vs.len() {
                let r = EdgeRef::new(p, e);
                if vs[e].dist(a) <= tol
                    && vs[(e + 1) % vs.len()].dist(b) <= tol
                    && self.find(r).is_none()
                {
                    return Some(r);
                }
            }
        }
        None
    }

    /// Glues the two sides of `s1` crosswise to the two sides of `s2`.
    fn glue_crosswise(&mut self, s1: Slit, s2: Slit) -> Result<(), SlitError> {
        let missing = SlitError::SlitNotInPolygon;
        let up1 = self
            .open_edge(s1.polygon, s1.start, s1.end)
            .ok_or(missing(s1.polygon))?;
        let lo1 = self
            .open_edge(s1.polygon, s1.end, s1.start)
            .ok_or(missing(s1.polygon))?;
        let up2 = self
            .open_edge(s2.polygon, s2.start, s2.end)
            .ok_or(missing(s2.polygon))?;
        let lo2 = self
            .open_edge(s2.polygon, s2.end, s2.start)
            .ok_or(missing(s2.polygon))?;
        let map = AffineMap::from_segments(s1.start, s1.end, s2.start, s2.end, 1e-9)
            .ok_or(SlitError::NonParallelSlits)?;
        self.glue.push(Gluing::new(up1, lo2, map));
        self.glue.push(Gluing::new(lo1, up2, map));
        Ok(())
    }
}

fn check_slit(s: &DilationSurface, sl: &Slit) -> Result<(), SlitError> {
    let poly = s
        .polygons()
        .get(sl.polygon)
        .ok_or(SlitError::SlitNotInPolygon(sl.polygon))?;
    let diam = poly.diameter();
    let tol = 1e-9 * diam;
    if sl.start.dist(sl.end) <= tol {
        return Err(SlitError::SlitNotInPolygon(sl.polygon));
    }
    if poly
        .vertices()
        .iter()
        .any(|v| crate::surface::dist_to_segment(*v, sl.start, sl.end) <= tol)
    {
        return Err(SlitError::SlitThroughVertex(sl.polygon));
    }
    let inside = |x: Vec2| {
        poly.contains(x, 0.0)
            && (0..poly.len()).all(|e| {
                let (a, b) = poly.edge(e);
                crate::surface::dist_to_segment(x, a, b) > tol
            })
    };
    let crosses = (0..poly.len()).any(|e| {
        let (a, b) = poly.edge(e);
        let d = sl.end - sl.start;
        let den = d.cross(b - a);
        if den.abs() <= 1e-15 {
            return false;
        }
        let t = (a - sl.start).cross(b - a) / den;
        let u = (a - sl.start).cross(d) / den;
        (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
    });
    if !inside(sl.start) || !inside(sl.end) || crosses {
        return Err(SlitError::SlitNotInPolygon(sl.polygon));
    }
    Ok(())
}

fn parallel(a: &Slit, b: &Slit) -> bool {
    let (u, v) = (a.dir(), b.dir());
    u.cross(v).abs() <= 1e-9 * u.norm() * v.norm()
}

/// Orients `b` like `a`.
fn aligned(a: &Slit, b: Slit) -> Slit {
    if a.dir().dot(b.dir()) < 0.0 {
        Slit::new(b.polygon, b.end, b.start)
    } else {
        b
    }
}

/// Cuts every slit and glues them crosswise in the given pairs. Slits are
/// indexed in polygons of `s`.
fn glue_slit_pairs(
    s: &DilationSurface,
    pairs: &[(Slit, Slit)],
) -> Result<DilationSurface, SlitError> {
    let mut all: Vec<Slit> = Vec::new();
    for (a, b) in pairs {
        check_slit(s, a)?;
        check_slit(s, b)?;
        if !parallel(a, b) {
            return Err(SlitError::NonParallelSlits);
        }
        all.push(*a);
        all.push(aligned(a, *b));
    }
    // group collinear slits of the same polygon and cut each line once
    let mut done = vec![false; all.len()];
    let mut builder = Builder::new(&[s]);
    for k in 0..all.len() {
        if done[k] {
            continue;
        }
        let base = all[k];
        let d = base.dir().normalized();
        let mut line: Vec<Slit> = Vec::new();
        for (m, sl) in all.iter().enumerate() {
            let same = sl.polygon == base.polygon
                && parallel(&base, sl)
                && d.cross(sl.start - base.start).abs()
                    <= 1e-9 * s.polygon(base.polygon).diameter();
            if same {
                done[m] = true;
                line.push(aligned(&base, *sl));
            }
        }
        line.sort_by(|x, y| d.dot(x.start).total_cmp(&d.dot(y.start)));
        for w in line.windows(2) {
            if d.dot(w[1].start) <= d.dot(w[0].end) {
                return Err(SlitError::SlitNotInPolygon(base.polygon));
            }
        }
        builder.cut_line(&line)?;
    }
    // the edge traversed along a slit's direction bounds the region on its left
    for (a, b) in pairs {
        builder.glue_crosswise(*a, aligned(a, *b))?;
    }
    Ok(builder.finish(s.tolerance())?)
}

/// Disjoint union of two surfaces; polygons of `s2` follow those of `s1`.
pub fn disjoint_union(s1: &DilationSurface, s2: &DilationSurface) -> DilationSurface {
    Builder::new(&[s1, s2])
        .finish(s1.tolerance())
        .expect("union of valid surfaces")
}

/// Cuts a slit in each surface and glues each side of one to the opposite
/// side of the other. `slit2.polygon` indexes polygons of `s2`.
pub fn slit_connect_sum(
    s1: &DilationSurface,
    slit1: Slit,
    s2: &DilationSurface,
    slit2: Slit,
) -> Result<DilationSurface, SlitError> {
    let u = disjoint_union(s1, s2);
    let off = s1.polygons().len();
    let slit2 = Slit::new(slit2.polygon + off, slit2.start, slit2.end);
    if slit2.polygon >= u.polygons().len() {
        return Err(SlitError::SlitNotInPolygon(slit2.polygon - off));
    }
    glue_slit_pairs(&u, &[(slit1, slit2)])
}

/// Two Hopf tori joined along a horizontal slit on each positive real axis.
pub fn double_hopf(lambda: f64) -> DilationSurface {
    let h = hopf_torus(lambda);
    let (lo, hi) = axis_span(lambda, 0, 1);
    let slit = Slit::new(0, Vec2::new(lo, 0.0), Vec2::new(hi, 0.0));
    slit_connect_sum(&h, slit, &h, slit).expect("double hopf")
}

/// Radial span of the `q`-th of `n` disjoint slits on an axis of the
/// annulus between 1 and `lambda`, inside the band `[0.2, 0.8]`.
fn axis_span(lambda: f64, q: usize, n: usize) -> (f64, f64) {
    let (a, b) = (1.0 + 0.2 * (lambda - 1.0), 1.0 + 0.8 * (lambda - 1.0));
    let w = (b - a) / n as f64;
    (a + w * (q as f64 + 0.1), a + w * (q as f64 + 0.9))
}

/// An exotic Dehn multitwist example.
#[derive(Debug, Clone)]
pub struct ExoticSurface {
    pub surface: DilationSurface,
    pub matrix: Mat2,
    pub witness: Witness,
    /// One radial loop per quadrant; each has holonomy 2.
    pub twist_words: Vec<LoopWord>,
}

/// Hopf torus with `g - 1` pairs of axis slits glued crosswise (horizontal
/// pairs on the real axis, vertical pairs on the imaginary axis,
/// alternating), of genus `g`. `diag(2, 1)` acts as the composite of exotic
/// twists in the four quadrant cylinders.
pub fn exotic_dehn_surface(g: usize) -> Result<ExoticSurface, SlitError> {
    assert!(g >= 3, "exotic example needs genus at least 3");
    let lambda = 2.0;
    let h = hopf_torus(lambda);
    let pairs_total = g - 1;
    let n_h = pairs_total.div_ceil(2);
    let n_v = pairs_total / 2;
    let mut pairs = Vec::new();
    for p in 0..pairs_total {
        let (horizontal, q, n) = if p % 2 == 0 {
            (true, p / 2, n_h)
        } else {
            (false, p / 2, n_v)
        };
        let (lo, hi) = axis_span(lambda, q, n);
        let pair = if horizontal {
            (
                Slit::new(0, Vec2::new(lo, 0.0), Vec2::new(hi, 0.0)),
                Slit::new(2, Vec2::new(-hi, 0.0), Vec2::new(-lo, 0.0)),
            )
        } else {
            (
                Slit::new(1, Vec2::new(0.0, lo), Vec2::new(0.0, hi)),
                Slit::new(3, Vec2::new(0.0, -hi), Vec2::new(0.0, -lo)),
            )
        };
        pairs.push(pair);
    }
    let surface = glue_slit_pairs(&h, &pairs)?;
    let matrix = Mat2::diag(2.0, 1.0);
    let image = apply_matrix(&surface, &matrix)?;
    // in the common global chart the automorphism is z -> z / 2
    let witness = witness_from_root(
        &image,
        &surface,
        0,
        AffineMap::new(0.5, Vec2::ZERO),
        100_000,
    )
    .ok_or(SlitError::Surface(SurfaceError::Invalid))?;
    let ctx = FlowContext::new(&surface).map_err(|_| SlitError::Surface(SurfaceError::Invalid))?;
    let mut twist_words = Vec::new();
    for q in 0..4 {
        let phi = core::f64::consts::FRAC_PI_4 + q as f64 * core::f64::consts::FRAC_PI_2 + 0.2;
        let z0 = Vec2::from_angle(phi) * ((1.0 + 0.45 * (lambda - 1.0)) * square_radius_fix(phi));
        let p = (0..surface.polygons().len())
            .find(|&k| surface.polygon(k).contains(z0, 0.0))
            .ok_or(SlitError::Surface(SurfaceError::Invalid))?;
        let opts = FlowOptions::default();
        match ctx.trace(
            Start::Point {
                polygon: p,
                point: z0,
            },
            phi + core::f64::consts::PI,
            &opts,
        ) {
            Ok(TraceOutcome::ClosedOrbit { core, .. }) => twist_words.push(core),
            _ => return Err(SlitError::Surface(SurfaceError::Invalid)),
        }
    }
    Ok(ExoticSurface {
        surface,
        matrix,
        witness,
        twist_words,
    })
}

/// Rescales a unit direction so the point lands between the square
/// boundaries rather than the round ones.
fn square_radius_fix(phi: f64) -> f64 {
    let (c, s) = (crate::math::cos(phi).abs(), crate::math::sin(phi).abs());
    1.0 / c.max(s)
}
