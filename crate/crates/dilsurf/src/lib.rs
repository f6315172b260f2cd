//! Text formats, SVG figures and the command line for `dilation`.

pub mod cli;
pub mod format;
pub mod svg;

use dilation::Mat2;
use rand::Rng;

/// A random matrix of determinant 1: rotation, diagonal stretch in
/// `[1/3, 3]`, rotation.
pub fn random_det1<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    use std::f64::consts::PI;
    let t1 = rng.gen_range(0.0..2.0 * PI);
    let t2 = rng.gen_range(0.0..2.0 * PI);
    let s = 3f64.powf(rng.gen_range(-1.0..1.0));
    Mat2::rotation(t1)
        .mul(&Mat2::diag(s, 1.0 / s))
        .mul(&Mat2::rotation(t2))
}
