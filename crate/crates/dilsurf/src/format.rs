//! Line-oriented text formats for surfaces and curve systems.
//!
//! Surfaces:
//!
//! ```text
//! DILSURF 1
//! POLY <id> x1 y1 x2 y2 ...
//! GLUE <pid>.<edge> <pid>.<edge> a bx by
//! MATRIX a b c d                      (optional, with PIECE records)
//! PIECE <src> <tgt> a bx by x1 y1 ...
//! ```
//!
//! Curve systems:
//!
//! ```text
//! CSYS 1
//! ALPHA <id> <point> <point> ...
//! BETA <id> <point> ...
//! POINT <id> <sign> <t>
//! MOD <curve-id> <m>
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use dilation::thurston::{CurveSystem, ModulusSpec};
use dilation::witness::{Piece, Witness};
use dilation::{AffineMap, DilationSurface, EdgeRef, Gluing, Mat2, Polygon, Vec2, DEFAULT_TOL};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Build(String),
}

fn perr(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        msg: msg.into(),
    }
}

/// 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn num(tok: &str, line: usize) -> Result<f64, FormatError> {
    tok.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| perr(line, format!("bad number `{tok}`")))
}

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

/// A surface file, possibly carrying an automorphism certificate.
#[derive(Debug, Clone)]
pub struct SurfaceFile {
    pub surface: DilationSurface,
    pub witness: Option<(Mat2, Witness)>,
}

pub fn parse_surface(text: &str) -> Result<SurfaceFile, FormatError> {
    let mut header = false;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut polys: Vec<Polygon> = Vec::new();
    let mut gluings = Vec::new();
    let mut matrix = None;
    let mut pieces = Vec::new();
    let mut pending_pieces = Vec::new();
    for (line, toks) in records(text) {
        match toks[0] {
            "DILSURF" => {
                if toks.get(1) != Some(&"1") {
                    return Err(perr(line, "unsupported version"));
                }
                header = true;
            }
            _ if !header => return Err(perr(line, "missing DILSURF header")),
            "POLY" => {
                let id = toks.get(1).ok_or_else(|| perr(line, "POLY needs an id"))?;
                let coords = toks[2..]
                    .iter()
                    .map(|t| num(t, line))
                    .collect::<Result<Vec<_>, _>>()?;
                if coords.len() % 2 != 0 {
                    return Err(perr(line, "odd number of coordinates"));
                }
                let vs = coords.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
                let p = Polygon::new(vs).map_err(|r| perr(line, format!("polygon {id}: {r}")))?;
                if ids.insert(id.to_string(), polys.len()).is_some() {
                    return Err(perr(line, format!("duplicate polygon id {id}")));
                }
                polys.push(p);
            }
            "GLUE" => {
                if toks.len() != 6 {
                    return Err(perr(line, "GLUE takes 5 fields"));
                }
                let edge = |t: &str| -> Result<EdgeRef, FormatError> {
                    let (p, e) = t
                        .split_once('.')
                        .ok_or_else(|| perr(line, format!("bad edge `{t}`")))?;
                    let p = *ids
                        .get(p)
                        .ok_or_else(|| perr(line, format!("unknown polygon {p}")))?;
                    let e = e
                        .parse::<usize>()
                        .map_err(|_| perr(line, format!("bad edge index `{t}`")))?;
                    if e >= polys[p].len() {
                        return Err(perr(line, format!("edge {t} out of range")));
                    }
                    Ok(EdgeRef::new(p, e))
                };
                let (src, dst) = (edge(toks[1])?, edge(toks[2])?);
                let a = num(toks[3], line)?;
                let b = Vec2::new(num(toks[4], line)?, num(toks[5], line)?);
                if a == 0.0 {
                    return Err(perr(line, "zero scale"));
                }
                gluings.push(Gluing::new(src, dst, AffineMap::new(a, b)));
            }
            "MATRIX" => {
                let v = toks[1..]
                    .iter()
                    .map(|t| num(t, line))
                    .collect::<Result<Vec<_>, _>>()?;
                if v.len() != 4 {
                    return Err(perr(line, "MATRIX takes 4 entries"));
                }
                matrix = Some(Mat2::new(v[0], v[1], v[2], v[3]));
            }
            "PIECE" => {
                if toks.len() < 12 || (toks.len() - 6) % 2 != 0 {
                    return Err(perr(
                        line,
                        "PIECE needs src tgt a bx by and at least 3 points",
                    ));
                }
                pending_pieces.push((line, toks.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
            }
            other => return Err(perr(line, format!("unknown record {other}"))),
        }
    }
    if !header {
        return Err(perr(0, "empty input"));
    }
    for (line, toks) in pending_pieces {
        let idx = |t: &str| {
            ids.get(t)
                .copied()
                .ok_or_else(|| perr(line, format!("unknown polygon {t}")))
        };
        let (source, target) = (idx(&toks[1])?, idx(&toks[2])?);
        let a = num(&toks[3], line)?;
        let shift = Vec2::new(num(&toks[4], line)?, num(&toks[5], line)?);
        let pts = toks[6..]
            .iter()
            .map(|t| num(t, line))
            .collect::<Result<Vec<_>, _>>()?;
        let shape = pts.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
        pieces.push(Piece {
            source,
            shape,
            target,
            map: AffineMap::new(a, shift),
        });
    }
    let surface = DilationSurface::new(polys, gluings, DEFAULT_TOL)
        .map_err(|e| FormatError::Build(e.to_string()))?;
    let witness = match (matrix, pieces.is_empty()) {
        (Some(m), false) => {
            let global = pieces[0].map;
            Some((m, Witness { global, pieces }))
        }
        (None, true) => None,
        _ => {
            return Err(FormatError::Build(
                "MATRIX and PIECE records must appear together".into(),
            ))
        }
    };
    Ok(SurfaceFile { surface, witness })
}

pub fn write_surface(s: &DilationSurface) -> String {
    write_surface_file(&SurfaceFile {
        surface: s.clone(),
        witness: None,
    })
}

pub fn write_surface_file(f: &SurfaceFile) -> String {
    let s = &f.surface;
    let mut out = String::from("DILSURF 1\n");
    for (i, p) in s.polygons().iter().enumerate() {
        let _ = write!(out, "POLY {i}");
        for v in p.vertices() {
            let _ = write!(out, " {} {}", real(v.x), real(v.y));
        }
        out.push('\n');
    }
    for g in s.gluings() {
        let _ = writeln!(
            out,
            "GLUE {} {} {} {} {}",
            g.src,
            g.dst,
            real(g.map.scale),
            real(g.map.shift.x),
            real(g.map.shift.y)
        );
    }
    if let Some((m, w)) = &f.witness {
        let _ = writeln!(
            out,
            "MATRIX {} {} {} {}",
            real(m.a),
            real(m.b),
            real(m.c),
            real(m.d)
        );
        for p in &w.pieces {
            let _ = write!(
                out,
                "PIECE {} {} {} {} {}",
                p.source,
                p.target,
                real(p.map.scale),
                real(p.map.shift.x),
                real(p.map.shift.y)
            );
            for v in &p.shape {
                let _ = write!(out, " {} {}", real(v.x), real(v.y));
            }
            out.push('\n');
        }
    }
    out
}

/// A curve system with the names used in its file.
#[derive(Debug, Clone)]
pub struct CsysFile {
    pub system: CurveSystem,
    pub moduli: ModulusSpec,
    pub alpha_names: Vec<String>,
    pub beta_names: Vec<String>,
    pub point_names: Vec<String>,
}

pub fn parse_csys(text: &str) -> Result<CsysFile, FormatError> {
    let mut header = false;
    let mut alphas: Vec<(String, Vec<String>, usize)> = Vec::new();
    let mut betas: Vec<(String, Vec<String>, usize)> = Vec::new();
    let mut points: Vec<(String, i8, f64)> = Vec::new();
    let mut mods: Vec<(String, f64, usize)> = Vec::new();
    for (line, toks) in records(text) {
        match toks[0] {
            "CSYS" => {
                if toks.get(1) != Some(&"1") {
                    return Err(perr(line, "unsupported version"));
                }
                header = true;
            }
            _ if !header => return Err(perr(line, "missing CSYS header")),
            "ALPHA" | "BETA" => {
                if toks.len() < 3 {
                    return Err(perr(line, "curve needs an id and at least one point"));
                }
                let rec = (
                    toks[1].to_string(),
                    toks[2..].iter().map(|s| s.to_string()).collect(),
                    line,
                );
                if toks[0] == "ALPHA" {
                    alphas.push(rec);
                } else {
                    betas.push(rec);
                }
            }
            "POINT" => {
                if toks.len() != 4 {
                    return Err(perr(line, "POINT takes id sign t"));
                }
                let sign = match toks[2] {
                    "1" | "+1" | "+" => 1,
                    "-1" | "-" => -1,
                    s => return Err(perr(line, format!("bad sign `{s}`"))),
                };
                let t = num(toks[3], line)?;
                if points.iter().any(|p| p.0 == toks[1]) {
                    return Err(perr(line, format!("duplicate point {}", toks[1])));
                }
                points.push((toks[1].to_string(), sign, t));
            }
            "MOD" => {
                if toks.len() != 3 {
                    return Err(perr(line, "MOD takes curve-id m"));
                }
                mods.push((toks[1].to_string(), num(toks[2], line)?, line));
            }
            other => return Err(perr(line, format!("unknown record {other}"))),
        }
    }
    if !header {
        return Err(perr(0, "empty input"));
    }
    let pindex: HashMap<&str, usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.0.as_str(), i))
        .collect();
    let resolve =
        |curves: &[(String, Vec<String>, usize)]| -> Result<Vec<Vec<usize>>, FormatError> {
            curves
                .iter()
                .map(|(_, pts, line)| {
                    pts.iter()
                        .map(|p| {
                            pindex
                                .get(p.as_str())
                                .copied()
                                .ok_or_else(|| perr(*line, format!("unknown point {p}")))
                        })
                        .collect()
                })
                .collect()
        };
    let a = resolve(&alphas)?;
    let b = resolve(&betas)?;
    // numeric part of a point name becomes its label
    let label = |i: usize, name: &str| {
        name.trim_start_matches(|c: char| !c.is_ascii_digit())
            .parse()
            .unwrap_or(i)
    };
    let system = CurveSystem::new(
        a,
        b,
        points
            .iter()
            .enumerate()
            .map(|(i, p)| (label(i, &p.0), p.1, p.2))
            .collect(),
    )
    .map_err(|e| FormatError::Build(e.to_string()))?;
    let names: Vec<&str> = alphas.iter().chain(&betas).map(|c| c.0.as_str()).collect();
    let mut m = vec![1.0; names.len()];
    for (id, val, line) in &mods {
        let k = names
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| perr(*line, format!("unknown curve {id}")))?;
        if *val <= 0.0 {
            return Err(perr(*line, "modulus must be positive"));
        }
        m[k] = *val;
    }
    Ok(CsysFile {
        system,
        moduli: ModulusSpec(m),
        alpha_names: alphas.into_iter().map(|c| c.0).collect(),
        beta_names: betas.into_iter().map(|c| c.0).collect(),
        point_names: points.into_iter().map(|p| p.0).collect(),
    })
}

pub fn write_csys(cs: &CurveSystem, m: Option<&ModulusSpec>) -> String {
    let mut out = String::from("CSYS 1\n");
    let mut ids: Vec<usize> = cs.points.iter().map(|p| p.id).collect();
    ids.sort_unstable();
    ids.dedup();
    let name = |i: usize| {
        if ids.len() == cs.points.len() {
            cs.points[i].id
        } else {
            i
        }
    };
    for (i, c) in cs.alpha_curves.iter().enumerate() {
        let pts: Vec<String> = c.iter().map(|p| format!("p{}", name(*p))).collect();
        let _ = writeln!(out, "ALPHA a{i} {}", pts.join(" "));
    }
    for (j, c) in cs.beta_curves.iter().enumerate() {
        let pts: Vec<String> = c.iter().map(|p| format!("p{}", name(*p))).collect();
        let _ = writeln!(out, "BETA b{j} {}", pts.join(" "));
    }
    for (i, p) in cs.points.iter().enumerate() {
        let _ = writeln!(out, "POINT p{} {} {}", name(i), p.sign, real(p.t));
    }
    if let Some(m) = m {
        let k = cs.k();
        for (i, v) in m.0.iter().enumerate() {
            if *v != 1.0 {
                let name = if i < k {
                    format!("a{i}")
                } else {
                    format!("b{}", i - k)
                };
                let _ = writeln!(out, "MOD {name} {}", real(*v));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use dilation::constructions::{hopf_torus, l_curve_system, one_point_genus2_surface};

    #[test]
    fn surface_round_trip() {
        for s in [hopf_torus(2.0), one_point_genus2_surface()] {
            let text = write_surface(&s);
            let back = parse_surface(&text).unwrap().surface;
            assert_eq!(back, s);
            assert_eq!(write_surface(&back), text);
        }
    }

    #[test]
    fn csys_round_trip() {
        let cs = l_curve_system(2.0);
        let f = parse_csys(&write_csys(&cs, None)).unwrap();
        assert_eq!(f.system, cs);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = parse_surface("DILSURF 1\nPOLY 0 0 0 1 0\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
        let err = parse_surface("DILSURF 1\nPOLY 0 0 0 1 0 1 1\nGLUE 0.0 0.7 1 0 0\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_csys("CSYS 1\nALPHA a p1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
