mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::{octagon_surface, thurston};
use dilation::constructions::{
    exotic_dehn_surface, hopf_torus, l_curve_system, one_point_genus2_surface, square_torus,
};
use dilation::flow::{
    certify_multitwist, directional_decomposition, separatrices, shear_data, trace_ray,
    CertifyError, CylinderKind, Direction, FlowContext, FlowError, FlowOptions, OrbitKind, Start,
    TraceOutcome,
};
use dilation::geom::point_on_segment;
use dilation::{loop_holonomy, Mat2, Vec2};
use proptest::prelude::*;

fn opts() -> FlowOptions {
    FlowOptions::default()
}

#[test]
fn torus_horizontal_separatrix() {
    let o = trace_ray(
        &square_torus(1.0, 1.0),
        Start::Vertex {
            class: 0,
            sector: 0,
        },
        0.0,
        &opts(),
    )
    .unwrap();
    match o {
        TraceOutcome::SaddleConnection {
            end_class, length, ..
        } => {
            assert_eq!(end_class, 0);
            assert!((length - 1.0).abs() < 1e-12);
        }
        o => panic!("{o:?}"),
    }
}

#[test]
fn vertex_start_needs_sector() {
    let t = square_torus(1.0, 1.0);
    let r = trace_ray(
        &t,
        Start::Point {
            polygon: 0,
            point: Vec2::new(0.0, 0.0),
        },
        0.3,
        &opts(),
    );
    assert_eq!(r, Err(FlowError::DegenerateStart));
    assert!(matches!(
        trace_ray(
            &t,
            Start::Vertex {
                class: 0,
                sector: 9
            },
            0.0,
            &opts()
        ),
        Err(FlowError::BadStart(_))
    ));
}

#[test]
fn hopf_vertical_closed_orbit() {
    let h = hopf_torus(2.0);
    for p in [
        Vec2::new(1.5, 0.1),
        Vec2::new(1.3, -0.4),
        Vec2::new(1.77, 0.61),
    ] {
        let o = trace_ray(
            &h,
            Start::Point {
                polygon: 0,
                point: p,
            },
            FRAC_PI_2,
            &opts(),
        )
        .unwrap();
        let TraceOutcome::ClosedOrbit {
            alpha, kind, core, ..
        } = &o
        else {
            panic!("{o:?}")
        };
        assert!(
            (alpha - 0.5).abs() <= 1e-9 || (alpha - 2.0).abs() <= 1e-9,
            "{alpha}"
        );
        assert_eq!(
            *kind,
            if *alpha < 1.0 {
                OrbitKind::Attracting
            } else {
                OrbitKind::Repelling
            }
        );
        assert!((loop_holonomy(&h, core).unwrap().0 - alpha).abs() <= 1e-9);
    }
}

#[test]
fn closed_orbit_alpha_matches_core_word() {
    let cases = [
        (hopf_torus(3.0), 0.7),
        (hopf_torus(2.0), 2.9),
        (exotic_dehn_surface(3).unwrap().surface, 0.3),
    ];
    for (s, theta) in cases {
        let fc = FlowContext::new(&s).unwrap();
        let c = s.polygon(0).centroid();
        let o = fc
            .trace(
                Start::Point {
                    polygon: 0,
                    point: c,
                },
                theta,
                &opts(),
            )
            .unwrap();
        if let TraceOutcome::ClosedOrbit { alpha, core, .. } = &o {
            assert!((loop_holonomy(&s, core).unwrap().0 - alpha).abs() <= 1e-9 * alpha);
        } else {
            panic!("expected a closed orbit, got {o:?}");
        }
    }
}

#[test]
fn octagon_horizontal_separatrices_are_unit() {
    let s = octagon_surface();
    let seps = separatrices(&s, Direction::new(0.0), &opts()).unwrap();
    assert!(!seps.is_empty());
    for sp in &seps {
        match &sp.outcome {
            TraceOutcome::SaddleConnection { length, .. } => assert!((length - 1.0).abs() < 1e-9),
            o => panic!("{o:?}"),
        }
    }
}

#[test]
fn separatrix_counts() {
    let g2 = separatrices(&one_point_genus2_surface(), Direction::new(0.0), &opts()).unwrap();
    assert_eq!(g2.len(), 6);
    let t = separatrices(&square_torus(1.0, 1.0), Direction::new(0.0), &opts()).unwrap();
    assert_eq!(t.len(), 2);
}

#[test]
fn octagon_decomposes_into_one_cylinder_each_way() {
    let s = octagon_surface();
    for theta in [0.0, FRAC_PI_2] {
        let d = directional_decomposition(&s, Direction::new(theta), &opts()).unwrap();
        assert_eq!(d.cylinders.len(), 1);
        assert!((d.cylinders[0].modulus().unwrap() - 0.25).abs() < 1e-9);
    }
}

#[test]
fn hopf_is_one_dilation_cylinder() {
    let d = directional_decomposition(&hopf_torus(2.0), Direction::new(0.0), &opts()).unwrap();
    assert_eq!(d.cylinders.len(), 1);
    match d.cylinders[0].kind {
        CylinderKind::Dilation { holonomy, multiple } => {
            assert!((holonomy - 2.0).abs() < 1e-9);
            assert_eq!(multiple, 2);
        }
        ref k => panic!("{k:?}"),
    }
}

#[test]
fn translation_surfaces_have_euclidean_cylinders() {
    let cases = [
        (square_torus(1.0, 1.0), (0.5f64).atan()),
        (octagon_surface(), PI / 4.0),
        (thurston(&l_curve_system(1.0)).surface, 0.0),
        (thurston(&l_curve_system(1.0)).surface, FRAC_PI_2),
    ];
    for (s, theta) in cases {
        let d = directional_decomposition(&s, Direction::new(theta), &opts()).unwrap();
        assert!(!d.cylinders.is_empty());
        assert!(d.cylinders.iter().all(|c| c.is_euclidean()));
    }
}

#[test]
fn certify_octagon() {
    let s = octagon_surface();
    let c = certify_multitwist(&s, &Mat2::new(1.0, 4.0, 0.0, 1.0), &opts(), 1e-6).unwrap();
    assert_eq!(c.cylinders.len(), 1);
    assert_eq!(c.cylinders[0].twists, Some(1));
    let half = certify_multitwist(&s, &Mat2::new(1.0, 2.0, 0.0, 1.0), &opts(), 1e-6);
    assert!(
        matches!(half, Err(CertifyError::NonIntegerTwist { value, .. }) if (value - 0.5).abs() < 1e-9)
    );
    assert!(matches!(
        certify_multitwist(&s, &Mat2::diag(2.0, 1.0), &opts(), 1e-6),
        Err(CertifyError::NotParabolic(_))
    ));
}

#[test]
fn certify_l_example_at_one() {
    let s = thurston(&l_curve_system(1.0)).surface;
    let mu = 5f64.sqrt();
    for m in [Mat2::new(1.0, mu, 0.0, 1.0), Mat2::new(1.0, 0.0, -mu, 1.0)] {
        let c = certify_multitwist(&s, &m, &opts(), 1e-6).unwrap();
        assert!(
            c.cylinders.iter().all(|k| k.twists == Some(1)),
            "{:?}",
            c.cylinders
        );
    }
}

#[test]
fn shear_of_standard_parabolics() {
    let (d, mu) = shear_data(&Mat2::new(1.0, 4.0, 0.0, 1.0), 1e-9).unwrap();
    assert!(d.angle().abs() < 1e-12);
    assert!((mu - 4.0).abs() < 1e-12);
    let (d, mu) = shear_data(&Mat2::new(1.0, 0.0, -4.0, 1.0), 1e-9).unwrap();
    assert!((d.angle() - FRAC_PI_2).abs() < 1e-12);
    assert!((mu.abs() - 4.0).abs() < 1e-12);
    assert_eq!(
        shear_data(&Mat2::IDENTITY, 1e-9),
        Err(CertifyError::Identity)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn traces_reverse(theta in 0.0f64..(2.0 * PI), u in 0.05f64..0.95, v in 0.05f64..0.95, which in 0usize..3) {
        let s = match which {
            0 => octagon_surface(),
            1 => thurston(&l_curve_system(2.0)).surface,
            _ => one_point_genus2_surface(),
        };
        let poly = s.polygon(0);
        let p = poly.vertex(0).lerp(poly.vertex(2), u).lerp(poly.vertex(1), v * 0.5);
        prop_assume!(poly.contains(p, 1e-6));
        let fc = FlowContext::new(&s).unwrap();
        let k = 12;
        let o = fc.trace_from(0, p, Vec2::from_angle(theta), &FlowOptions { max_steps: k, ..opts() });
        prop_assume!(matches!(o, TraceOutcome::Budget { .. }));
        let last = *o.segments().last().unwrap();
        let mid = last.from.lerp(last.to, 0.5);
        let back = fc.trace_from(last.polygon, mid, last.from - last.to, &FlowOptions { max_steps: k, ..opts() });
        prop_assume!(matches!(back, TraceOutcome::Budget { .. }));
        let end = back.segments().last().unwrap();
        prop_assert_eq!(end.polygon, 0);
        prop_assert!(point_on_segment(p, end.from, end.to, 1e-7).is_some(), "{:?} not on {:?}", p, end);
    }
}
