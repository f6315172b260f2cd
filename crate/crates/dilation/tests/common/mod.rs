#![allow(dead_code)]

use dilation::constructions::{
    double_hopf, exotic_dehn_surface, hopf_torus, l_curve_system, octagon_curve_system,
    one_point_genus2_surface, square_torus,
};
use dilation::thurston::{thurston_construct, ModulusSpec, ThurstonOptions, ThurstonOutput};
use dilation::{DilationSurface, Mat2};
use rand::Rng;

pub fn thurston(cs: &dilation::thurston::CurveSystem) -> ThurstonOutput {
    thurston_construct(
        cs,
        &ModulusSpec::ones(cs.size()),
        &ThurstonOptions::default(),
    )
    .unwrap()
}

pub fn octagon_surface() -> DilationSurface {
    thurston(&octagon_curve_system()).surface
}

/// Every generator with its documented genus.
pub fn generators() -> Vec<(&'static str, DilationSurface, usize)> {
    vec![
        ("square", square_torus(1.0, 1.0), 1),
        ("rect", square_torus(2.0, 0.5), 1),
        ("hopf2", hopf_torus(2.0), 1),
        ("hopf3", hopf_torus(3.0), 1),
        ("genus2", one_point_genus2_surface(), 2),
        ("double_hopf", double_hopf(2.0), 2),
        ("octagon", octagon_surface(), 2),
        ("l2", thurston(&l_curve_system(2.0)).surface, 2),
        ("exotic3", exotic_dehn_surface(3).unwrap().surface, 3),
    ]
}

/// Rotation, diagonal stretch, rotation; determinant in `[0.1, 10]`.
pub fn random_pos_det<R: Rng>(rng: &mut R) -> Mat2 {
    use std::f64::consts::PI;
    let s1 = 3f64.powf(rng.gen_range(-1.0..1.0));
    let s2 = 3f64.powf(rng.gen_range(-1.0..1.0));
    Mat2::rotation(rng.gen_range(0.0..2.0 * PI))
        .mul(&Mat2::diag(s1, s2))
        .mul(&Mat2::rotation(rng.gen_range(0.0..2.0 * PI)))
}

pub fn random_det1<R: Rng>(rng: &mut R) -> Mat2 {
    let m = random_pos_det(rng);
    m.scaled(1.0 / m.det().sqrt())
}
