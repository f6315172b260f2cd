//! Dilation surfaces as polygons glued by maps `z -> a z + b` with `a` real.
#![no_std]

extern crate alloc;

pub mod geom;
mod math;

pub use geom::{classify_trace, AffineMap, GeomError, Mat2, TraceClass, Vec2, DEFAULT_TOL};
pub mod clip;
pub mod constructions;
pub mod flow;
pub mod holonomy;
pub mod homology;
pub mod surface;
pub mod thurston;
mod util;
pub mod witness;

pub use holonomy::{
    holonomy_basis, is_trivial_on, loop_holonomy, Dir, HolonomyError, HolonomyRep, LoopWord, Step,
};
pub use surface::{
    apply_matrix, euler_genus, flip_edge, triangulate, triangulate_with_parents, validate,
    DilationSurface, EdgeRef, EulerData, Gluing, Polygon, Problem, Side, SurfaceError,
    Triangulation, ValidationReport, VertexClass,
};
