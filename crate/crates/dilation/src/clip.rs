//! Convex clipping of polygons against half-planes and convex polygons.

use alloc::vec::Vec;

use crate::geom::{signed_area, Vec2};

/// Keeps the part of `poly` where `n . p >= c`.
pub fn clip_halfplane(poly: &[Vec2], n: Vec2, c: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let k = poly.len();
    for i in 0..k {
        let p = poly[i];
        let q = poly[(i + 1) % k];
        let fp = n.dot(p) - c;
        let fq = n.dot(q) - c;
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push(p.lerp(q, t));
        }
    }
    out
}

/// Intersection of `poly` with the convex counterclockwise polygon `conv`.
pub fn clip_convex(poly: &[Vec2], conv: &[Vec2]) -> Vec<Vec2> {
    let mut cur: Vec<Vec2> = poly.to_vec();
    let k = conv.len();
    for i in 0..k {
        if cur.is_empty() {
            break;
        }
        let a = conv[i];
        let b = conv[(i + 1) % k];
        let n = (b - a).perp();
        cur = clip_halfplane(&cur, n, n.dot(a));
    }
    cur
}

pub fn area(poly: &[Vec2]) -> f64 {
    if poly.len() < 3 {
        0.0
    } else {
        signed_area(poly)
    }
}
