mod common;

use std::f64::consts::PI;

use common::{random_det1, thurston};
use dilation::constructions::{
    double_hopf, exotic_dehn_surface, hopf_torus, l_curve_system, one_point_genus2_surface,
    slit_connect_sum, square_torus, Slit, SlitError,
};
use dilation::flow::{directional_decomposition, CylinderKind, Direction, FlowOptions};
use dilation::witness::{is_affine_automorphism, search_isomorphism, verify_witness, SearchBudget};
use dilation::{
    apply_matrix, classify_trace, euler_genus, holonomy_basis, validate, DilationSurface, Mat2,
    TraceClass, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

fn multiples(s: &DilationSurface) -> Vec<u32> {
    let mut m: Vec<u32> = validate(s).vertices.iter().map(|v| v.multiple).collect();
    m.sort();
    m
}

#[test]
fn square_torus_examples() {
    let t = square_torus(1.0, 1.0);
    assert!(validate(&t).pass);
    assert_eq!(euler_genus(&t).unwrap().genus, 1);
    assert_eq!(
        apply_matrix(&t, &Mat2::diag(2.0, 1.0)).unwrap(),
        square_torus(2.0, 1.0)
    );
    assert_eq!(
        holonomy_basis(&t).unwrap().homology_values(),
        vec![1.0, 1.0]
    );
}

#[test]
fn hopf_examples() {
    let h = hopf_torus(2.0);
    assert!(validate(&h).pass);
    assert_eq!(euler_genus(&h).unwrap().genus, 1);
    let d = directional_decomposition(&h, Direction::new(0.0), &FlowOptions::default()).unwrap();
    assert_eq!(d.cylinders.len(), 1);
    assert!(
        matches!(d.cylinders[0].kind, CylinderKind::Dilation { holonomy, .. } if (holonomy - 2.0).abs() < 1e-9)
    );
}

#[test]
fn hopf_veech_group_is_everything() {
    let h = hopf_torus(2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let m = random_det1(&mut rng);
        assert!(
            is_affine_automorphism(&h, &m, None, SearchBudget::default())
                .unwrap()
                .is_verified(),
            "{m}"
        );
    }
}

#[test]
fn two_tori_along_unit_slits() {
    let t = square_torus(2.0, 1.0);
    let slit = Slit::new(0, v(0.5, 0.5), v(1.5, 0.5));
    let s = slit_connect_sum(&t, slit, &t, slit).unwrap();
    assert!(validate(&s).pass);
    assert_eq!(euler_genus(&s).unwrap().genus, 2);
    assert_eq!(multiples(&s).iter().filter(|&&m| m == 4).count(), 2);
}

#[test]
fn unequal_slits_glue_by_a_dilation() {
    let a = square_torus(2.0, 1.0);
    let b = square_torus(3.0, 1.0);
    let s = slit_connect_sum(
        &a,
        Slit::new(0, v(0.5, 0.5), v(1.5, 0.5)),
        &b,
        Slit::new(0, v(0.5, 0.5), v(2.5, 0.5)),
    )
    .unwrap();
    let r = validate(&s);
    assert!(r.pass, "{:?}", r.problems);
    assert_eq!(euler_genus(&s).unwrap().genus, 2);
    assert!(s.gluings().iter().any(
        |g| (g.map.scale.abs() - 2.0).abs() < 1e-12 || (g.map.scale.abs() - 0.5).abs() < 1e-12
    ));
    // both slit crossings use the same chart change, so loops through them close up
    assert!(holonomy_basis(&s)
        .unwrap()
        .values
        .iter()
        .all(|x| (x - 1.0).abs() < 1e-12));
}

#[test]
fn slit_errors() {
    let t = square_torus(2.0, 1.0);
    let good = Slit::new(0, v(0.5, 0.5), v(1.5, 0.5));
    let tilted = Slit::new(0, v(0.5, 0.2), v(1.5, 0.8));
    assert_eq!(
        slit_connect_sum(&t, good, &t, tilted),
        Err(SlitError::NonParallelSlits)
    );
    let outside = Slit::new(0, v(0.5, 0.5), v(2.5, 0.5));
    assert!(matches!(
        slit_connect_sum(&t, outside, &t, good),
        Err(SlitError::SlitNotInPolygon(_))
    ));
    let sq = square_torus(1.0, 1.0);
    let diag = Slit::new(0, v(0.0, 0.0), v(0.5, 0.5));
    assert!(matches!(
        slit_connect_sum(&sq, diag, &sq, diag),
        Err(SlitError::SlitThroughVertex(_))
    ));
    assert!(matches!(
        slit_connect_sum(&t, good, &t, Slit::new(4, v(0.5, 0.5), v(1.5, 0.5))),
        Err(SlitError::SlitNotInPolygon(_))
    ));
}

#[test]
fn slit_sum_commutes_up_to_isomorphism() {
    let a = square_torus(2.0, 1.0);
    let b = square_torus(2.0, 1.5);
    let (sa, sb) = (
        Slit::new(0, v(0.5, 0.5), v(1.5, 0.5)),
        Slit::new(0, v(0.3, 0.7), v(1.3, 0.7)),
    );
    let ab = slit_connect_sum(&a, sa, &b, sb).unwrap();
    let ba = slit_connect_sum(&b, sb, &a, sa).unwrap();
    let w = search_isomorphism(&ab, &ba, SearchBudget::default()).unwrap();
    assert!(verify_witness(&ab, &ba, &w).valid);
}

#[test]
fn double_hopf_upper_triangular_automorphisms() {
    let s = double_hopf(2.0);
    assert!(validate(&s).pass);
    assert_eq!(euler_genus(&s).unwrap().genus, 2);
    assert_eq!(multiples(&s).iter().filter(|&&m| m == 4).count(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let a = 3f64.powf(rng.gen_range(-1.0..1.0));
        let b = rng.gen_range(-3.0..3.0);
        let m = Mat2::new(a, b, 0.0, 1.0 / a);
        assert!(
            is_affine_automorphism(&s, &m, None, SearchBudget::default())
                .unwrap()
                .is_verified(),
            "{m}"
        );
    }
}

#[test]
fn exotic_surfaces() {
    assert_eq!(
        classify_trace(&Mat2::diag(2.0, 1.0), 1e-9),
        Ok(TraceClass::Hyperbolic)
    );
    for g in 3..=6 {
        let e = exotic_dehn_surface(g).unwrap();
        assert_eq!(e.matrix, Mat2::diag(2.0, 1.0));
        assert!(validate(&e.surface).pass);
        assert_eq!(euler_genus(&e.surface).unwrap().genus, g);
        let image = apply_matrix(&e.surface, &e.matrix).unwrap();
        let r = verify_witness(&image, &e.surface, &e.witness);
        assert!(r.valid, "g={g}: {:?}", r.reasons);
    }
}

#[test]
fn genus2_octagon_and_l_outputs() {
    let s = one_point_genus2_surface();
    let r = validate(&s);
    assert_eq!(r.vertices.len(), 1);
    assert!((r.vertices[0].cone_angle - 6.0 * PI).abs() < 1e-9);
    let one = holonomy_basis(&thurston(&l_curve_system(1.0)).surface).unwrap();
    assert!(one.values.iter().all(|x| (x - 1.0).abs() < 1e-12));
    let two = holonomy_basis(&thurston(&l_curve_system(2.0)).surface).unwrap();
    assert!(two.values.iter().any(|x| (x - 2.0).abs() < 1e-12));
}

/// A random slit well inside polygon `p` of `s` in direction `d`.
fn random_slit(rng: &mut ChaCha8Rng, s: &DilationSurface, p: usize, d: Vec2) -> Option<Slit> {
    let poly = s.polygon(p);
    let n = poly.len();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    let c = (0..n).fold(Vec2::ZERO, |acc, i| acc + poly.vertex(i) * (w[i] / total));
    let len = rng.gen_range(0.1..0.4) * poly.diameter();
    let (a, b) = (c - d * (0.5 * len), c + d * (0.5 * len));
    let margin = 1e-3 * poly.diameter();
    let inside = poly.contains(a, -margin) && poly.contains(b, -margin);
    let clear = poly
        .vertices()
        .iter()
        .all(|x| dilation::geom::point_on_segment(*x, a, b, margin).is_none());
    (inside && clear).then(|| Slit::new(p, a, b))
}

/// 20 random placements: genera add and exactly two new 4 pi points appear.
#[test]
fn random_slit_sums() {
    let pool = || {
        vec![
            square_torus(2.0, 1.0),
            square_torus(1.3, 1.7),
            hopf_torus(2.0),
            one_point_genus2_surface(),
        ]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut done = 0;
    while done < 20 {
        let surfaces = pool();
        let s1 = &surfaces[rng.gen_range(0..surfaces.len())];
        let s2 = &surfaces[rng.gen_range(0..surfaces.len())];
        let d = Vec2::from_angle(rng.gen_range(0.0..PI));
        let p1 = rng.gen_range(0..s1.polygons().len());
        let p2 = rng.gen_range(0..s2.polygons().len());
        let (Some(a), Some(b)) = (
            random_slit(&mut rng, s1, p1, d),
            random_slit(&mut rng, s2, p2, d),
        ) else {
            continue;
        };
        let s = slit_connect_sum(s1, a, s2, b).unwrap();
        let r = validate(&s);
        assert!(r.pass, "{:?}", r.problems);
        let g = |x: &DilationSurface| euler_genus(x).unwrap().genus;
        assert_eq!(g(&s), g(s1) + g(s2));
        let fours = |x: &DilationSurface| multiples(x).iter().filter(|&&m| m == 4).count();
        assert_eq!(fours(&s), fours(s1) + fours(s2) + 2);
        done += 1;
    }
}
