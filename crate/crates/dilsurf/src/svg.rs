//! SVG figures: polygons developed along the dual tree, gluing labels, and
//! trajectories with their accumulated scale.

use std::collections::VecDeque;
use std::fmt::Write as _;

use dilation::flow::Segment;
use dilation::{AffineMap, DilationSurface, Vec2};

/// Polygon chart -> figure plane, one map per polygon. Components after the
/// first are shifted right so they do not overlap.
pub fn development(s: &DilationSurface) -> Vec<AffineMap> {
    let n = s.polygons().len();
    let mut dev: Vec<Option<AffineMap>> = vec![None; n];
    let mut shift_x = 0.0;
    for root in 0..n {
        if dev[root].is_some() {
            continue;
        }
        let start = dev.iter().flatten().count();
        dev[root] = Some(AffineMap::IDENTITY);
        let mut queue = VecDeque::from([root]);
        let mut members = vec![root];
        while let Some(p) = queue.pop_front() {
            let d = dev[p].unwrap();
            for e in 0..s.polygon(p).len() {
                let Some(c) = s.cross(dilation::EdgeRef::new(p, e)) else {
                    continue;
                };
                if dev[c.to.polygon].is_none() {
                    // c.map: chart of p -> chart of neighbour
                    dev[c.to.polygon] = Some(d.compose(&c.map.invert()));
                    queue.push_back(c.to.polygon);
                    members.push(c.to.polygon);
                }
            }
        }
        if start > 0 {
            let (lo, _) = bbox(members.iter().flat_map(|&p| {
                let d = dev[p].unwrap();
                s.polygon(p)
                    .vertices()
                    .iter()
                    .map(move |v| d.apply(*v))
                    .collect::<Vec<_>>()
            }));
            let t = AffineMap::translation(Vec2::new(shift_x - lo.x, 0.0));
            for &p in &members {
                dev[p] = Some(t.compose(&dev[p].unwrap()));
            }
        }
        let (_, hi) = bbox(
            dev.iter()
                .enumerate()
                .filter_map(|(p, d)| d.map(|d| (p, d)))
                .flat_map(|(p, d)| {
                    s.polygon(p)
                        .vertices()
                        .iter()
                        .map(move |v| d.apply(*v))
                        .collect::<Vec<_>>()
                }),
        );
        shift_x = hi.x + 0.25 * (hi.x.abs() + 1.0);
    }
    dev.into_iter().map(|d| d.unwrap()).collect()
}

fn bbox(pts: impl IntoIterator<Item = Vec2>) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

fn f(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// The surface and optional trajectories. Output depends only on the inputs.
pub fn render(s: &DilationSurface, trajectories: &[&[Segment]]) -> String {
    let dev = development(s);
    let mut pts: Vec<Vec2> = Vec::new();
    for (p, d) in s.polygons().iter().zip(&dev) {
        pts.extend(p.vertices().iter().map(|v| d.apply(*v)));
    }
    let (lo, hi) = bbox(pts);
    let size = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
    let pad = 0.05 * size;
    let font = 0.025 * size;
    let stroke = 0.003 * size;
    // y axis points up in charts, down in SVG
    let pt = |v: Vec2| format!("{},{}", f(v.x), f(-v.y));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        f(lo.x - pad),
        f(-hi.y - pad),
        f(hi.x - lo.x + 2.0 * pad),
        f(hi.y - lo.y + 2.0 * pad)
    );
    let _ = writeln!(
        out,
        r##"<g fill="#eef3fb" stroke="#223" stroke-width="{}">"##,
        f(stroke)
    );
    for (i, (p, d)) in s.polygons().iter().zip(&dev).enumerate() {
        let v: Vec<String> = p.vertices().iter().map(|v| pt(d.apply(*v))).collect();
        let _ = writeln!(out, r#"<polygon id="poly{i}" points="{}"/>"#, v.join(" "));
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r##"<g font-family="sans-serif" font-size="{}" fill="#a22" text-anchor="middle">"##,
        f(font)
    );
    for (gi, g) in s.gluings().iter().enumerate() {
        for e in [g.src, g.dst] {
            let (a, b) = s.polygon(e.polygon).edge(e.edge);
            let d = &dev[e.polygon];
            let (a, b) = (d.apply(a), d.apply(b));
            let mid = a.lerp(b, 0.5);
            // nudge the label inside the polygon (interior is to the left)
            let inward = (b - a).perp().normalized();
            let at = mid + inward * (0.8 * font);
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}">{gi}</text>"#,
                f(at.x),
                f(-at.y + 0.35 * font)
            );
        }
    }
    out.push_str("</g>\n");
    for (k, segs) in trajectories.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<g id="traj{k}" stroke="#1a7" stroke-width="{}" fill="none">"##,
            f(1.5 * stroke)
        );
        for seg in segs.iter() {
            let d = &dev[seg.polygon];
            let _ = writeln!(
                out,
                r#"<polyline points="{} {}" data-scale="{}"><title>scale {}</title></polyline>"#,
                pt(d.apply(seg.from)),
                pt(d.apply(seg.to)),
                seg.acc_scale,
                seg.acc_scale
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
