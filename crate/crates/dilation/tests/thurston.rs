mod common;

use common::thurston;
use dilation::constructions::{l_curve_system, octagon_curve_system};
use dilation::flow::{directional_decomposition, Direction, FlowOptions};
use dilation::thurston::{
    assemble_surface, build_u, power_iteration, thurston_construct, CurveSystem, ModulusSpec,
    ThurstonError, ThurstonOptions,
};
use dilation::witness::{search_isomorphism, SearchBudget};
use dilation::{euler_genus, holonomy_basis, validate};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dominant eigenpair from a dense Schur/SVD solve; vector normalized to max 1.
fn oracle(u: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = u.len();
    let m = DMatrix::from_fn(n, n, |i, j| u[i][j]);
    let lambda = m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted = &m - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.unwrap();
    let k = (0..n)
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .unwrap();
    let mut v: Vec<f64> = vt.row(k).iter().copied().collect();
    let big = v
        .iter()
        .copied()
        .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    v.iter_mut().for_each(|x| *x /= big);
    (lambda, v)
}

/// U by its defining formula, written out independently.
fn u_by_formula(cs: &CurveSystem, m: &[f64]) -> Vec<Vec<f64>> {
    let (k, n) = (cs.k(), cs.size());
    let mut u = vec![vec![0.0; n]; n];
    for i in 0..k {
        for j in 0..cs.l() {
            let shared: Vec<f64> = cs
                .points
                .iter()
                .filter(|p| p.alpha == i && p.beta == j)
                .map(|p| p.t)
                .collect();
            u[i][k + j] = m[i] * shared.iter().map(|t| 1.0 / t).sum::<f64>();
            u[k + j][i] = m[k + j] * shared.iter().sum::<f64>();
        }
    }
    u
}

#[derive(Clone, Copy)]
enum Weights {
    Unit,
    Free,
    /// `t_p = x_alpha * y_beta`: cone holonomy stays trivial.
    Gauge,
}

/// Random connected bipartite intersection pattern, `k, l <= 4`, at most 12
/// points, coherent signs.
fn random_system(rng: &mut ChaCha8Rng, weights: Weights) -> CurveSystem {
    loop {
        let k = rng.gen_range(1..=4);
        let l = rng.gen_range(1..=4);
        let np = rng.gen_range((k + l - 1).max(1)..=12);
        let mut owner: Vec<(usize, usize)> = (0..np)
            .map(|_| (rng.gen_range(0..k), rng.gen_range(0..l)))
            .collect();
        owner.shuffle(rng);
        let mut alpha: Vec<Vec<usize>> = vec![Vec::new(); k];
        let mut beta: Vec<Vec<usize>> = vec![Vec::new(); l];
        for (p, &(a, b)) in owner.iter().enumerate() {
            alpha[a].push(p);
            beta[b].push(p);
        }
        if alpha.iter().chain(&beta).any(|c| c.is_empty()) {
            continue;
        }
        for c in alpha.iter_mut().chain(beta.iter_mut()) {
            c.shuffle(rng);
        }
        let x: Vec<f64> = (0..k + l).map(|_| rng.gen_range(0.5..2.0)).collect();
        let pts = (0..np)
            .map(|p| {
                let t = match weights {
                    Weights::Unit => 1.0,
                    Weights::Free => rng.gen_range(0.25..4.0),
                    Weights::Gauge => x[owner[p].0] * x[k + owner[p].1],
                };
                (p, 1, t)
            })
            .collect();
        let cs = CurveSystem::new(alpha, beta, pts).unwrap();
        if dilation::thurston::irreducible(&build_u(&cs, &ModulusSpec::ones(cs.size()))) {
            return cs;
        }
    }
}

#[test]
fn u_examples() {
    let oct = octagon_curve_system();
    assert_eq!(
        build_u(&oct, &ModulusSpec::ones(2)),
        vec![vec![0.0, 4.0], vec![4.0, 0.0]]
    );
    let a = 3.0;
    let u = build_u(&l_curve_system(a), &ModulusSpec::ones(3));
    assert_eq!(u[0], vec![0.0, 1.0 + 1.0 / a, 1.0 / a]);
    assert_eq!(u[1], vec![1.0 + a, 0.0, 0.0]);
    assert_eq!(u[2], vec![a, 0.0, 0.0]);
}

#[test]
fn pf_examples() {
    let r = power_iteration(&[vec![0.0, 4.0], vec![4.0, 0.0]], 1e-13, 1000).unwrap();
    assert!((r.lambda_pf - 4.0).abs() <= 1e-12);
    assert_eq!(r.v, vec![1.0, 1.0]);
    let u = build_u(&l_curve_system(1.0), &ModulusSpec::ones(3));
    let r = power_iteration(&u, 1e-13, 200_000).unwrap();
    let s5 = 5f64.sqrt();
    assert!((r.lambda_pf - s5).abs() <= 1e-12);
    assert!((r.v[1] / r.v[0] - 2.0 / s5).abs() <= 1e-12);
    assert!((r.v[2] / r.v[0] - 1.0 / s5).abs() <= 1e-12);
}

#[test]
fn pf_errors() {
    let reducible = vec![
        vec![0.0, 1.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 2.0],
        vec![0.0, 0.0, 2.0, 0.0],
    ];
    assert_eq!(
        power_iteration(&reducible, 1e-13, 1000),
        Err(ThurstonError::NotIrreducible)
    );
    assert_eq!(
        power_iteration(&[vec![0.0, -1.0], vec![1.0, 0.0]], 1e-13, 1000),
        Err(ThurstonError::NotNonnegative)
    );
    let u = build_u(&l_curve_system(5.0), &ModulusSpec::ones(3));
    assert_eq!(
        power_iteration(&u, 1e-13, 1),
        Err(ThurstonError::NoConvergence(1))
    );
}

#[test]
fn disconnected_system_rejected() {
    let pts = vec![(0, 1, 1.0), (1, 1, 1.0)];
    let cs = CurveSystem::new(vec![vec![0], vec![1]], vec![vec![0], vec![1]], pts).unwrap();
    let r = thurston_construct(&cs, &ModulusSpec::ones(4), &ThurstonOptions::default());
    assert!(matches!(r, Err(ThurstonError::NotIrreducible)));
}

#[test]
fn malformed_systems_rejected() {
    // point 1 on no beta curve
    assert!(CurveSystem::new(
        vec![vec![0, 1]],
        vec![vec![0]],
        vec![(0, 1, 1.0), (1, 1, 1.0)]
    )
    .is_err());
    assert!(CurveSystem::new(vec![vec![0]], vec![vec![0]], vec![(0, 1, -1.0)]).is_err());
    assert!(CurveSystem::new(vec![vec![0]], vec![vec![0]], vec![(0, 2, 1.0)]).is_err());
    let oct = octagon_curve_system();
    let r = thurston_construct(&oct, &ModulusSpec(vec![1.0]), &ThurstonOptions::default());
    assert!(matches!(r, Err(ThurstonError::Malformed(_))));
}

#[test]
fn octagon_construction() {
    let o = thurston(&octagon_curve_system());
    assert!((o.pf.lambda_pf - 4.0).abs() <= 1e-12);
    assert!((o.shear - 4.0).abs() <= 1e-12);
    assert_eq!(o.surface.polygons().len(), 4);
    assert_eq!(euler_genus(&o.surface).unwrap().genus, 2);
    let (ca, cb) = (o.cert_alpha.unwrap(), o.cert_beta.unwrap());
    assert_eq!(ca.cylinders.len(), 1);
    assert_eq!(cb.cylinders.len(), 1);
    assert_eq!(ca.cylinders[0].twists, Some(1));
    assert_eq!(cb.cylinders[0].twists, Some(1));
}

#[test]
fn l_example_closed_forms() {
    for a in [0.5, 1.0, 2.0, 5.0] {
        let o = thurston(&l_curve_system(a));
        let (s, t) = (o.pf.v[1] / o.pf.v[0], o.pf.v[2] / o.pf.v[0]);
        let s_exact = a.sqrt() * (1.0 + a) / (a * a + 3.0 * a + 1.0).sqrt();
        assert!((s - s_exact).abs() <= 1e-9, "a={a}");
        assert!((t / s - a / (1.0 + a)).abs() <= 1e-9, "a={a}");
        assert!(o.cert_alpha.is_ok() && o.cert_beta.is_ok(), "a={a}");
        assert_eq!(euler_genus(&o.surface).unwrap().genus, 2);
    }
    let one = thurston(&l_curve_system(1.0));
    assert!((one.shear - 5f64.sqrt()).abs() <= 1e-12);
    assert!(holonomy_basis(&one.surface)
        .unwrap()
        .values
        .iter()
        .all(|v| (v - 1.0).abs() <= 1e-12));
    let two = holonomy_basis(&thurston(&l_curve_system(2.0)).surface)
        .unwrap()
        .homology_values();
    assert!(two.iter().any(|v| (v - 2.0).abs() <= 1e-12));
    assert!(two.iter().any(|v| (v - 0.5).abs() <= 1e-12));
}

/// PF on random irreducible bipartite systems, checked against a dense solve.
#[test]
fn pf_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let cs = random_system(&mut rng, Weights::Free);
        let m: Vec<f64> = (0..cs.size()).map(|_| rng.gen_range(0.5..2.0)).collect();
        let u = build_u(&cs, &ModulusSpec(m.clone()));
        for (r1, r2) in u.iter().zip(u_by_formula(&cs, &m)) {
            for (x, y) in r1.iter().zip(r2) {
                assert!((x - y).abs() <= 1e-14 * y.abs());
            }
        }
        let r = power_iteration(&u, 1e-13, 200_000).unwrap();
        assert!(r.residual <= 1e-12);
        assert!(r.v.iter().all(|x| *x > 0.0));
        let (lam, v) = oracle(&u);
        assert!(
            (r.lambda_pf - lam).abs() <= 1e-9 * lam,
            "{} vs {lam}",
            r.lambda_pf
        );
        for (x, y) in r.v.iter().zip(&v) {
            assert!((x - y).abs() <= 1e-9, "{:?} vs {v:?}", r.v);
        }
        // residual recomputed here
        let uv: Vec<f64> = u
            .iter()
            .map(|row| row.iter().zip(&r.v).map(|(a, b)| a * b).sum())
            .collect();
        let res = uv
            .iter()
            .zip(&r.v)
            .map(|(a, b)| (a - r.lambda_pf * b).abs())
            .fold(0.0, f64::max)
            / r.lambda_pf;
        assert!(res <= 1e-12);
    }
}

#[test]
fn random_systems_assemble() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let cs = random_system(&mut rng, Weights::Gauge);
        let n = cs.size();
        let o =
            thurston_construct(&cs, &ModulusSpec::ones(n), &ThurstonOptions::default()).unwrap();
        assert!(validate(&o.surface).pass);
        let e = euler_genus(&o.surface).unwrap();
        assert_eq!(e.f, cs.points.len());
        assert_eq!(e.e, 2 * cs.points.len());
        assert!(o.cert_alpha.is_ok() && o.cert_beta.is_ok());
        // parallel components merge into one cylinder, so count curves
        // through modulus * shear, which is the number merged
        for (theta, curves) in [(0.0, cs.k()), (std::f64::consts::FRAC_PI_2, cs.l())] {
            let d = directional_decomposition(
                &o.surface,
                Direction::new(theta),
                &FlowOptions::default(),
            )
            .unwrap();
            let mut total = 0;
            for c in &d.cylinders {
                let x = c.modulus().unwrap() * o.shear;
                assert!((x - x.round()).abs() <= 1e-9 && x.round() >= 1.0, "{x}");
                total += x.round() as usize;
            }
            assert_eq!(total, curves);
        }
    }
}

/// All weights 1: a half-translation surface with trivial holonomy.
#[test]
fn unit_weights_give_unit_scales() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..60 {
        let cs = random_system(&mut rng, Weights::Unit);
        let u = build_u(&cs, &ModulusSpec::ones(cs.size()));
        let pf = power_iteration(&u, 1e-13, 200_000).unwrap();
        let s = assemble_surface(&cs, &pf).unwrap();
        for g in s.gluings() {
            assert!((g.map.scale.abs() - 1.0).abs() <= 1e-9, "{}", g.map.scale);
        }
        assert!(holonomy_basis(&s)
            .unwrap()
            .values
            .iter()
            .all(|v| (v - 1.0).abs() <= 1e-9));
    }
}

#[test]
fn common_weight_scaling_is_a_global_dilation() {
    for (cs, c) in [(octagon_curve_system(), 2.0), (l_curve_system(2.0), 3.0)] {
        let mut scaled = cs.clone();
        scaled.points.iter_mut().for_each(|p| p.t *= c);
        let a = thurston(&cs).surface;
        let b = thurston(&scaled).surface;
        let w = search_isomorphism(&a, &b, SearchBudget::default()).unwrap();
        assert!(
            (w.global.scale.abs() - c).abs() <= 1e-9,
            "{}",
            w.global.scale
        );
    }
}
