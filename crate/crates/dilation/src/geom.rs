//! Planar primitives: points, 2x2 matrices, real-affine maps `z -> a z + b`.

use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::math;

/// Default relative tolerance for "equal" comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("matrix determinant {0} is not positive")]
    NonPositiveDeterminant(f64),
    #[error("non-finite value")]
    NonFinite,
}

/// A point or vector in a polygon chart.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at angle `theta` from the positive x axis.
    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(math::cos(theta), math::sin(theta))
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3d cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn approx_eq(self, o: Vec2, tol: f64) -> bool {
        let scale = 1.0 + self.norm().max(o.norm());
        self.dist(o) <= tol * scale
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
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
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
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

/// Row-major 2x2 real matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const fn diag(x: f64, y: f64) -> Self {
        Mat2::new(x, 0.0, 0.0, y)
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = (math::sin(theta), math::cos(theta));
        Mat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn scaled(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.d / det,
            -self.b / det,
            -self.c / det,
            self.a / det,
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Checks finiteness and `det > 0`; returns the determinant.
    pub fn check_orientation(&self) -> Result<f64, GeomError> {
        if !self.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let det = self.det();
        if det <= 0.0 {
            return Err(GeomError::NonPositiveDeterminant(det));
        }
        Ok(det)
    }

    /// `m / sqrt(det m)`, the SL(2,R) representative.
    pub fn normalized(&self) -> Result<Mat2, GeomError> {
        let det = self.check_orientation()?;
        Ok(self.scaled(1.0 / math::sqrt(det)))
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// The map `z -> scale * z + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub scale: f64,
    pub shift: Vec2,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        scale: 1.0,
        shift: Vec2::ZERO,
    };

    pub const fn new(scale: f64, shift: Vec2) -> Self {
        AffineMap { scale, shift }
    }

    pub const fn translation(shift: Vec2) -> Self {
        AffineMap { scale: 1.0, shift }
    }

    pub fn apply(&self, z: Vec2) -> Vec2 {
        z * self.scale + self.shift
    }

    /// Applies only the linear part.
    pub fn apply_vec(&self, v: Vec2) -> Vec2 {
        v * self.scale
    }

    /// `self ∘ g`.
    pub fn compose(&self, g: &AffineMap) -> AffineMap {
        AffineMap::new(self.scale * g.scale, g.shift * self.scale + self.shift)
    }

    pub fn invert(&self) -> AffineMap {
        let inv = 1.0 / self.scale;
        AffineMap::new(inv, -(self.shift * inv))
    }

    /// The unique map sending `p0 -> q0` and `p1 -> q1`, if it is scalar-linear
    /// (i.e. the two segments are parallel).
    pub fn from_segments(p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2, tol: f64) -> Option<AffineMap> {
        let dp = p1 - p0;
        let dq = q1 - q0;
        let l2 = dp.norm2();
        if l2 == 0.0 {
            return None;
        }
        let scale = dq.dot(dp) / l2;
        if scale == 0.0 || dq.cross(dp).abs() > tol * (dq.norm() * dp.norm()).max(tol) {
            return None;
        }
        Some(AffineMap::new(scale, q0 - p0 * scale))
    }

    pub fn approx_eq(&self, o: &AffineMap, tol: f64) -> bool {
        let s = self.scale.abs().max(o.scale.abs());
        (self.scale - o.scale).abs() <= tol * s && self.shift.approx_eq(o.shift, tol)
    }

    pub fn is_finite(&self) -> bool {
        self.scale.is_finite() && self.shift.is_finite()
    }

    /// The affine map `z -> m z + scale-free translation`, i.e. the conjugate
    /// of this map by `m` (linear parts commute with any matrix).
    pub fn conjugate_by(&self, m: &Mat2) -> AffineMap {
        AffineMap::new(self.scale, m.apply(self.shift))
    }
}

impl fmt::Display for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z -> {} z + {}", self.scale, self.shift)
    }
}

/// Conjugacy type of an orientation-preserving projective class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceClass {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl fmt::Display for TraceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TraceClass::Elliptic => "Elliptic",
            TraceClass::Parabolic => "Parabolic",
            TraceClass::Hyperbolic => "Hyperbolic",
        };
        f.write_str(s)
    }
}

/// Classifies `m / sqrt(det m)` by `|tr|` against 2. The parabolic band wins ties.
pub fn classify_trace(m: &Mat2, tol: f64) -> Result<TraceClass, GeomError> {
    let t = m.normalized()?.trace().abs();
    Ok(if (t - 2.0).abs() <= tol {
        TraceClass::Parabolic
    } else if t < 2.0 {
        TraceClass::Elliptic
    } else {
        TraceClass::Hyperbolic
    })
}

pub fn compose(f: &AffineMap, g: &AffineMap) -> AffineMap {
    f.compose(g)
}

pub fn invert(f: &AffineMap) -> AffineMap {
    f.invert()
}

/// Relative comparison `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn approx(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Signed area of a closed polyline (positive for counterclockwise).
pub fn signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        s += pts[i].cross(pts[(i + 1) % n]);
    }
    s * 0.5
}

/// Interior angle at `cur` of a counterclockwise polygon, in `(0, 2pi)`.
pub fn interior_angle(prev: Vec2, cur: Vec2, next: Vec2) -> f64 {
    let out = next - cur;
    let back = prev - cur;
    let mut ang = math::atan2(out.cross(back), out.dot(back));
    if ang <= 0.0 {
        ang += core::f64::consts::TAU;
    }
    ang
}

/// Reduces an angle to `[0, pi)`.
pub fn normalize_mod_pi(theta: f64) -> f64 {
    let pi = core::f64::consts::PI;
    let mut t = theta - math::floor(theta / pi) * pi;
    if t >= pi || t < 0.0 {
        t = 0.0;
    }
    t
}

/// Point-in-segment test with a relative tolerance, returning the parameter.
pub fn point_on_segment(p: Vec2, a: Vec2, b: Vec2, tol: f64) -> Option<f64> {
    let d = b - a;
    let l2 = d.norm2();
    if l2 == 0.0 {
        return None;
    }
    let t = (p - a).dot(d) / l2;
    let l = math::sqrt(l2);
    if (p - a).cross(d).abs() / l > tol * l {
        return None;
    }
    if t < -tol || t > 1.0 + tol {
        return None;
    }
    Some(t)
}
