//! Scaling holonomy of loops in the dual graph.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::surface::{DilationSurface, EdgeRef, Side, SurfaceError, VertexClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    SrcToDst,
    DstToSrc,
}

impl Dir {
    pub fn reversed(self) -> Dir {
        match self {
            Dir::SrcToDst => Dir::DstToSrc,
            Dir::DstToSrc => Dir::SrcToDst,
        }
    }

    pub fn from_side(side: Side) -> Dir {
        match side {
            Side::Src => Dir::SrcToDst,
            Side::Dst => Dir::DstToSrc,
        }
    }
}

/// One crossing of a gluing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub gluing: usize,
    pub dir: Dir,
}

impl Step {
    pub fn new(gluing: usize, dir: Dir) -> Self {
        Step { gluing, dir }
    }

    pub fn reversed(self) -> Step {
        Step::new(self.gluing, self.dir.reversed())
    }
}

/// A closed path in the dual graph, as a sequence of gluing crossings.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct LoopWord {
    pub steps: Vec<Step>,
}

impl LoopWord {
    pub fn new(steps: Vec<Step>) -> Self {
        LoopWord { steps }
    }

    pub fn concat(&self, other: &LoopWord) -> LoopWord {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        LoopWord { steps }
    }

    pub fn inverse(&self) -> LoopWord {
        LoopWord {
            steps: self.steps.iter().rev().map(|s| s.reversed()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for LoopWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.steps.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            match s.dir {
                Dir::SrcToDst => write!(f, "+{}", s.gluing)?,
                Dir::DstToSrc => write!(f, "-{}", s.gluing)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HolonomyError {
    #[error("word is broken at step {0}")]
    BrokenWord(usize),
    #[error("word does not close up")]
    NotClosed,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

fn endpoints(s: &DilationSurface, st: Step) -> Option<(usize, usize)> {
    let g = s.gluings().get(st.gluing)?;
    Some(match st.dir {
        Dir::SrcToDst => (g.src.polygon, g.dst.polygon),
        Dir::DstToSrc => (g.dst.polygon, g.src.polygon),
    })
}

/// Scale is the product of `|a|` (inverted for reverse crossings); sign the
/// product of `sign(a)`.
pub fn loop_holonomy(s: &DilationSurface, w: &LoopWord) -> Result<(f64, i8), HolonomyError> {
    let mut scale = 1.0;
    let mut sign = 1i8;
    let mut start = None;
    let mut at = None;
    for (k, st) in w.steps.iter().enumerate() {
        let (from, to) = endpoints(s, *st).ok_or(HolonomyError::BrokenWord(k))?;
        if let Some(p) = at {
            if p != from {
                return Err(HolonomyError::BrokenWord(k));
            }
        } else {
            start = Some(from);
        }
        at = Some(to);
        let a = s.gluings()[st.gluing].map.scale;
        match st.dir {
            Dir::SrcToDst => scale *= a.abs(),
            Dir::DstToSrc => scale /= a.abs(),
        }
        if a < 0.0 {
            sign = -sign;
        }
    }
    if start != at {
        return Err(HolonomyError::NotClosed);
    }
    Ok((scale, sign))
}

pub fn is_trivial_on(s: &DilationSurface, w: &LoopWord) -> Result<bool, HolonomyError> {
    let (scale, _) = loop_holonomy(s, w)?;
    Ok((scale - 1.0).abs() <= s.tolerance() * 10.0 * (1 + w.len()) as f64)
}

/// The word crossing, in order, the edges met when turning once around a vertex class.
pub fn vertex_link_word(s: &DilationSurface, vc: &VertexClass) -> LoopWord {
    let steps = vc
        .corners
        .iter()
        .map(|&(p, i)| {
            let n = s.polygon(p).len();
            let (g, side) = s.gluing_at(EdgeRef::new(p, (i + n - 1) % n)).unwrap();
            Step::new(g, Dir::from_side(side))
        })
        .collect();
    LoopWord::new(steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyRep {
    /// One generator per gluing outside the dual spanning tree.
    pub generators: Vec<LoopWord>,
    pub values: Vec<f64>,
    pub sign_values: Vec<i8>,
    /// Indices into `generators` of a basis of first homology.
    pub homology_basis: Vec<usize>,
    /// Gluing index of each generator.
    pub generator_gluings: Vec<usize>,
}

impl HolonomyRep {
    pub fn homology_values(&self) -> Vec<f64> {
        self.homology_basis
            .iter()
            .map(|&i| self.values[i])
            .collect()
    }
}

/// Dual spanning tree by breadth-first search from polygon 0, visiting edges
/// in index order. Returns, per polygon, the path from the root.
pub fn dual_tree(s: &DilationSurface) -> (Vec<Option<Vec<Step>>>, Vec<bool>) {
    let n = s.polygons().len();
    let mut path: Vec<Option<Vec<Step>>> = vec![None; n];
    let mut in_tree = vec![false; s.gluings().len()];
    if n == 0 {
        return (path, in_tree);
    }
    path[0] = Some(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(p) = queue.pop_front() {
        for e in 0..s.polygon(p).len() {
            let Some(c) = s.cross(EdgeRef::new(p, e)) else {
                continue;
            };
            let q = c.to.polygon;
            if path[q].is_none() {
                let mut pq = path[p].clone().unwrap();
                pq.push(Step::new(c.gluing, Dir::from_side(c.side)));
                path[q] = Some(pq);
                in_tree[c.gluing] = true;
                queue.push_back(q);
            }
        }
    }
    (path, in_tree)
}

pub fn holonomy_basis(s: &DilationSurface) -> Result<HolonomyRep, HolonomyError> {
    let (path, in_tree) = dual_tree(s);
    let mut generators = Vec::new();
    let mut generator_gluings = Vec::new();
    for (gi, g) in s.gluings().iter().enumerate() {
        if in_tree[gi] {
            continue;
        }
        let to_src = path[g.src.polygon]
            .clone()
            .ok_or(HolonomyError::NotClosed)?;
        let to_dst = path[g.dst.polygon]
            .clone()
            .ok_or(HolonomyError::NotClosed)?;
        let mut steps = to_src;
        steps.push(Step::new(gi, Dir::SrcToDst));
        steps.extend(to_dst.iter().rev().map(|st| st.reversed()));
        generators.push(LoopWord::new(steps));
        generator_gluings.push(gi);
    }
    let mut values = Vec::with_capacity(generators.len());
    let mut sign_values = Vec::with_capacity(generators.len());
    for w in &generators {
        let (v, sg) = loop_holonomy(s, w)?;
        values.push(v);
        sign_values.push(sg);
    }
    // Homology: cycle space of non-tree gluings modulo vertex links.
    let col: Vec<Option<usize>> = {
        let mut c = vec![None; s.gluings().len()];
        for (k, &gi) in generator_gluings.iter().enumerate() {
            c[gi] = Some(k);
        }
        c
    };
    let dim = generators.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for vc in s.vertex_classes()? {
        let mut r = vec![0.0; dim];
        for st in vertex_link_word(s, &vc).steps {
            if let Some(k) = col[st.gluing] {
                r[k] += if st.dir == Dir::SrcToDst { 1.0 } else { -1.0 };
            }
        }
        rows.push(r);
    }
    let mut rank = crate::util::rank_f64(&rows);
    let mut homology_basis = Vec::new();
    for k in 0..dim {
        let mut r = vec![0.0; dim];
        r[k] = 1.0;
        rows.push(r);
        let nr = crate::util::rank_f64(&rows);
        if nr > rank {
            rank = nr;
            homology_basis.push(k);
        } else {
            rows.pop();
        }
    }
    Ok(HolonomyRep {
        generators,
        values,
        sign_values,
        homology_basis,
        generator_gluings,
    })
}

/// Path between two polygons through the dual tree.
pub fn tree_path(s: &DilationSurface, from: usize, to: usize) -> Vec<Step> {
    let (path, _) = dual_tree(s);
    let a = path[from].clone().unwrap_or_default();
    let b = path[to].clone().unwrap_or_default();
    let mut steps: Vec<Step> = a.iter().rev().map(|st| st.reversed()).collect();
    steps.extend(b);
    reduce(steps)
}

/// Cancels adjacent inverse crossings.
pub fn reduce(steps: Vec<Step>) -> Vec<Step> {
    let mut out: Vec<Step> = Vec::with_capacity(steps.len());
    for st in steps {
        if out.last().is_some_and(|l| *l == st.reversed()) {
            out.pop();
        } else {
            out.push(st);
        }
    }
    out
}
