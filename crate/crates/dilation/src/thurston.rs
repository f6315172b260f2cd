//! Thurston-type construction from a filling pair of multicurves with
//! per-intersection transition weights.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::flow::{certify_multitwist, Certificate, CertifyError, FlowOptions};
use crate::geom::{AffineMap, Mat2, Vec2};
use crate::surface::{validate, DilationSurface, EdgeRef, Gluing, Polygon, SurfaceError};

pub use crate::homology::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThurstonError {
    #[error("malformed curve system: {0}")]
    Malformed(String),
    #[error("matrix is not irreducible (curves do not fill)")]
    NotIrreducible,
    #[error("matrix has a negative or non-finite entry")]
    NotNonnegative,
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("assembled surface does not validate: {0}")]
    Invalid(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// An intersection of an alpha curve with a beta curve.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionPoint {
    /// User-facing label.
    pub id: usize,
    pub alpha: usize,
    pub beta: usize,
    pub sign: i8,
    /// Transition weight between the two curves' width spaces.
    pub t: f64,
}

/// Two multicurves given by the cyclic order of intersection points along
/// each component. Curve lists hold indices into `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSystem {
    pub alpha_curves: Vec<Vec<usize>>,
    pub beta_curves: Vec<Vec<usize>>,
    pub points: Vec<IntersectionPoint>,
}

impl CurveSystem {
    /// Builds the system; `point_curves` are filled in from the cyclic lists.
    pub fn new(
        alpha_curves: Vec<Vec<usize>>,
        beta_curves: Vec<Vec<usize>>,
        points: Vec<(usize, i8, f64)>,
    ) -> Result<CurveSystem, ThurstonError> {
        use alloc::format;
        let np = points.len();
        let mut alpha_of = vec![None; np];
        let mut beta_of = vec![None; np];
        if alpha_curves.is_empty() || beta_curves.is_empty() {
            return Err(ThurstonError::Malformed(
                "need at least one curve of each kind".into(),
            ));
        }
        for (lists, owner, name) in [
            (&alpha_curves, &mut alpha_of, "alpha"),
            (&beta_curves, &mut beta_of, "beta"),
        ] {
            for (c, list) in lists.iter().enumerate() {
                if list.is_empty() {
                    return Err(ThurstonError::Malformed(format!(
                        "{name} curve {c} is empty"
                    )));
                }
                for &p in list {
                    let slot = owner.get_mut(p).ok_or_else(|| {
                        ThurstonError::Malformed(format!(
                            "{name} curve {c} names missing point {p}"
                        ))
                    })?;
                    if slot.is_some() {
                        return Err(ThurstonError::Malformed(format!(
                            "point {p} appears twice on {name} curves"
                        )));
                    }
                    *slot = Some(c);
                }
            }
        }
        let mut pts = Vec::with_capacity(np);
        for (i, &(id, sign, t)) in points.iter().enumerate() {
            let (Some(a), Some(b)) = (alpha_of[i], beta_of[i]) else {
                return Err(ThurstonError::Malformed(format!(
                    "point {id} is not on both multicurves"
                )));
            };
            if !(t > 0.0 && t.is_finite()) {
                return Err(ThurstonError::Malformed(format!(
                    "point {id} has weight {t}"
                )));
            }
            if sign != 1 && sign != -1 {
                return Err(ThurstonError::Malformed(format!(
                    "point {id} has sign {sign}"
                )));
            }
            pts.push(IntersectionPoint {
                id,
                alpha: a,
                beta: b,
                sign,
                t,
            });
        }
        Ok(CurveSystem {
            alpha_curves,
            beta_curves,
            points: pts,
        })
    }

    pub fn k(&self) -> usize {
        self.alpha_curves.len()
    }

    pub fn l(&self) -> usize {
        self.beta_curves.len()
    }

    pub fn size(&self) -> usize {
        self.k() + self.l()
    }

    /// Whether the bipartite curve/point graph is connected.
    pub fn is_connected(&self) -> bool {
        irreducible(&build_u(self, &ModulusSpec::ones(self.size())))
    }
}

/// Target modulus per curve, alpha curves first.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusSpec(pub Vec<f64>);

impl ModulusSpec {
    pub fn ones(n: usize) -> Self {
        ModulusSpec(vec![1.0; n])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfResult {
    pub lambda_pf: f64,
    /// Positive eigenvector scaled to max entry 1.
    pub v: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Modulus operator: alpha row `i` has `m_i * sum 1/t_p` in the column of each
/// beta curve it meets, beta row `j` has `m_j * sum t_p`.
pub fn build_u(cs: &CurveSystem, m: &ModulusSpec) -> Vec<Vec<f64>> {
    let k = cs.k();
    let n = cs.size();
    let mut u = vec![vec![0.0; n]; n];
    for p in &cs.points {
        let (i, j) = (p.alpha, k + p.beta);
        u[i][j] += m.0[i] / p.t;
        u[j][i] += m.0[j] * p.t;
    }
    u
}

/// Strong connectivity of the support digraph.
pub fn irreducible(u: &[Vec<f64>]) -> bool {
    let n = u.len();
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut q = VecDeque::from([0usize]);
        while let Some(i) = q.pop_front() {
            for j in 0..n {
                let w = if forward { u[i][j] } else { u[j][i] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    q.push_back(j);
                }
            }
        }
        seen.into_iter().all(|x| x)
    };
    reach(true) && reach(false)
}

fn mat_vec(u: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    u.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Power iteration on `U + I`, which has the same Perron vector and no
/// bipartite oscillation.
pub fn power_iteration(
    u: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<PfResult, ThurstonError> {
    let n = u.len();
    if u.iter()
        .any(|r| r.len() != n || r.iter().any(|x| !(x.is_finite() && *x >= 0.0)))
    {
        return Err(ThurstonError::NotNonnegative);
    }
    if !irreducible(u) {
        return Err(ThurstonError::NotIrreducible);
    }
    let mut v = vec![1.0; n];
    for it in 1..=max_iter {
        let uv = mat_vec(u, &v);
        let w: Vec<f64> = uv.iter().zip(&v).map(|(a, b)| a + b).collect();
        let norm = sup(&w);
        v = w.iter().map(|x| x / norm).collect();
        let uv = mat_vec(u, &v);
        // Rayleigh-type estimate on the normalized vector
        let num: f64 = uv.iter().zip(&v).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().map(|x| x * x).sum();
        let lambda = num / den;
        let resid = uv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0, f64::max)
            / (lambda * sup(&v));
        if resid <= tol {
            return Ok(PfResult {
                lambda_pf: lambda,
                v,
                residual: resid,
                iterations: it,
            });
        }
    }
    Err(ThurstonError::NoConvergence(max_iter))
}

/// One rectangle per intersection point (width from its beta curve, height
/// `t_p` times its alpha width). Rectangle `p` is polygon `p`.
pub fn assemble_surface(cs: &CurveSystem, pf: &PfResult) -> Result<DilationSurface, ThurstonError> {
    let k = cs.k();
    // widths relative to the first alpha curve
    let v: Vec<f64> = pf.v.iter().map(|x| x / pf.v[0]).collect();
    let dims: Vec<(f64, f64)> = cs
        .points
        .iter()
        .map(|p| (v[k + p.beta], p.t * v[p.alpha]))
        .collect();
    let polygons: Vec<Polygon> = dims
        .iter()
        .map(|&(w, h)| {
            Polygon::new(vec![
                Vec2::ZERO,
                Vec2::new(w, 0.0),
                Vec2::new(w, h),
                Vec2::new(0.0, h),
            ])
            .map_err(|e| ThurstonError::Invalid(e.into()))
        })
        .collect::<Result<_, _>>()?;
    let edge = |p: usize, e: usize| polygons[p].edge(e);
    let mut gluings = Vec::new();
    let mut push = |src: EdgeRef, dst: EdgeRef| -> Result<(), ThurstonError> {
        let (a0, a1) = edge(src.polygon, src.edge);
        let (b0, b1) = edge(dst.polygon, dst.edge);
        let map = AffineMap::from_segments(a0, a1, b1, b0, 1e-9)
            .ok_or_else(|| ThurstonError::Invalid("non-parallel rectangle sides".into()))?;
        gluings.push(Gluing::new(src, dst, map));
        Ok(())
    };
    for curve in &cs.alpha_curves {
        for (i, &p) in curve.iter().enumerate() {
            let q = curve[(i + 1) % curve.len()];
            push(EdgeRef::new(p, 1), EdgeRef::new(q, 3))?;
        }
    }
    for curve in &cs.beta_curves {
        for (i, &p) in curve.iter().enumerate() {
            let q = curve[(i + 1) % curve.len()];
            let exit = if cs.points[p].sign > 0 { 2 } else { 0 };
            let entry = if cs.points[q].sign > 0 { 0 } else { 2 };
            push(EdgeRef::new(p, exit), EdgeRef::new(q, entry))?;
        }
    }
    let s = DilationSurface::new(polygons, gluings, crate::geom::DEFAULT_TOL)?;
    let report = validate(&s);
    if !report.pass {
        let msg = report
            .problems
            .iter()
            .map(|p| alloc::format!("{p}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(ThurstonError::Invalid(msg));
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThurstonOutput {
    pub surface: DilationSurface,
    pub pf: PfResult,
    pub u: Vec<Vec<f64>>,
    /// Shear of both multitwists: one over the common cylinder modulus.
    pub shear: f64,
    pub d_talpha: Mat2,
    pub d_tbeta: Mat2,
    pub cert_alpha: Result<Certificate, CertifyError>,
    pub cert_beta: Result<Certificate, CertifyError>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThurstonOptions {
    pub pf_tol: f64,
    pub max_iter: usize,
    pub flow: FlowOptions,
    pub twist_tol: f64,
}

impl Default for ThurstonOptions {
    fn default() -> Self {
        ThurstonOptions {
            pf_tol: 1e-13,
            max_iter: 200_000,
            flow: FlowOptions::default(),
            twist_tol: 1e-6,
        }
    }
}

pub fn thurston_construct(
    cs: &CurveSystem,
    m: &ModulusSpec,
    opts: &ThurstonOptions,
) -> Result<ThurstonOutput, ThurstonError> {
    if m.0.len() != cs.size() || m.0.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(ThurstonError::Malformed(
            "one positive modulus per curve required".into(),
        ));
    }
    let u = build_u(cs, m);
    let pf = power_iteration(&u, opts.pf_tol, opts.max_iter)?;
    let surface = assemble_surface(cs, &pf)?;
    // cylinder modulus is m_i / lambda; with unequal m_i use the first
    let shear = pf.lambda_pf / m.0[0];
    let d_talpha = Mat2::new(1.0, shear, 0.0, 1.0);
    let d_tbeta = Mat2::new(1.0, 0.0, -shear, 1.0);
    let cert_alpha = certify_multitwist(&surface, &d_talpha, &opts.flow, opts.twist_tol);
    let cert_beta = certify_multitwist(&surface, &d_tbeta, &opts.flow, opts.twist_tol);
    Ok(ThurstonOutput {
        surface,
        pf,
        u,
        shear,
        d_talpha,
        d_tbeta,
        cert_alpha,
        cert_beta,
    })
}
