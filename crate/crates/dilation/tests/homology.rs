use dilation::homology::{
    annihilator, check_compatible_prop, compatible_holonomy_space, identity, l_example_classes,
    mat_apply, mat_mul, octagon_classes, pairing, standard_form, transvection, twist_action,
    HomologyError, PropCheck,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn transpose(a: &[Vec<i64>]) -> Vec<Vec<i64>> {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

#[test]
fn genus_one_twist() {
    let j = standard_form(1);
    let t = twist_action(&[(vec![1, 0], 1)], &j).unwrap();
    assert_eq!(mat_apply(&t, &[0, 1]), vec![1, 1]);
}

#[test]
fn octagon_space_has_dimension_two() {
    let (a, b, j) = octagon_classes();
    let psi = twist_action(&[(a.clone(), 1), (b.clone(), -1)], &j).unwrap();
    let comp = compatible_holonomy_space(&psi);
    assert_eq!(comp.len(), 2);
    match check_compatible_prop(&a, &b, &j).unwrap() {
        PropCheck::Checked {
            compatible,
            annihilator,
            equal,
        } => {
            assert!(equal);
            assert_eq!(compatible.len(), 2);
            assert_eq!(annihilator.len(), 2);
        }
        PropCheck::NotApplicable => panic!("octagon classes intersect"),
    }
}

#[test]
fn l_example_log_pattern() {
    let (a, [b1, b2], j) = l_example_classes();
    let psi = twist_action(&[(a, 1), (b1, -1), (b2, -1)], &j).unwrap();
    let comp = compatible_holonomy_space(&psi);
    assert_eq!(comp.len(), 1);
    let v = &comp[0];
    assert_eq!((v[0], v[1]), (0, 0));
    assert!(v[2] != 0 && v[3] == -v[2], "{v:?}");
}

#[test]
fn identity_is_fully_compatible() {
    for g in 1..=3 {
        assert_eq!(compatible_holonomy_space(&identity(2 * g)).len(), 2 * g);
    }
}

#[test]
fn genus_one_pair_has_no_compatible_characters() {
    let j = standard_form(1);
    match check_compatible_prop(&[1, 0], &[0, 1], &j).unwrap() {
        PropCheck::Checked {
            compatible,
            annihilator,
            equal,
        } => {
            assert!(equal);
            assert!(compatible.is_empty() && annihilator.is_empty());
        }
        PropCheck::NotApplicable => panic!(),
    }
}

#[test]
fn disjoint_classes_not_applicable() {
    let j = standard_form(2);
    assert_eq!(
        check_compatible_prop(&[1, 0, 0, 0], &[0, 0, 1, 0], &j).unwrap(),
        PropCheck::NotApplicable
    );
}

#[test]
fn dimension_errors() {
    let j = standard_form(2);
    assert_eq!(
        check_compatible_prop(&[1, 0], &[0, 0, 1, 0], &j),
        Err(HomologyError::DimensionMismatch {
            expected: 4,
            got: 2
        })
    );
    assert!(matches!(
        twist_action(&[(vec![1, 0, 0], 1)], &j),
        Err(HomologyError::DimensionMismatch { .. })
    ));
    assert!(matches!(
        transvection(&[1, 0], 1, &[vec![1, 0], vec![0, 1]]),
        Err(HomologyError::NotSymplectic)
    ));
}

/// 50 random genus-two pairs with nonzero intersection.
#[test]
fn proposition_holds_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let j = standard_form(2);
    let mut checked = 0;
    while checked < 50 {
        let a: Vec<i64> = (0..4).map(|_| rng.gen_range(-3..=3)).collect();
        let b: Vec<i64> = (0..4).map(|_| rng.gen_range(-3..=3)).collect();
        if pairing(&a, &b, &j) == 0 {
            continue;
        }
        let r = check_compatible_prop(&a, &b, &j).unwrap();
        assert!(r.holds(), "{a:?} {b:?}: {r:?}");
        checked += 1;
    }
}

fn class(n: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-4i64..=4, n)
}

proptest! {
    #[test]
    fn twists_preserve_the_form(a in class(4), b in class(4), m in -3i64..=3) {
        let j = standard_form(2);
        let psi = twist_action(&[(a.clone(), m), (b.clone(), -1)], &j).unwrap();
        prop_assert_eq!(mat_mul(&mat_mul(&transpose(&psi), &j), &psi), j.clone());
        let t = transvection(&a, m, &j).unwrap();
        let ti = transvection(&a, -m, &j).unwrap();
        prop_assert_eq!(mat_mul(&t, &ti), identity(4));
    }

    #[test]
    fn compatible_vectors_are_invariant(a in class(4), b in class(4)) {
        let j = standard_form(2);
        let psi = twist_action(&[(a.clone(), 1), (b.clone(), -1)], &j).unwrap();
        for l in compatible_holonomy_space(&psi) {
            // l o psi = l, as row vector times matrix
            let lp: Vec<i64> = (0..4).map(|c| (0..4).map(|r| l[r] * psi[r][c]).sum()).collect();
            prop_assert_eq!(&lp, &l);
        }
        for l in annihilator(&[a.clone(), b.clone()], 4) {
            prop_assert_eq!(l.iter().zip(&a).map(|(x, y)| x * y).sum::<i64>(), 0);
            prop_assert_eq!(l.iter().zip(&b).map(|(x, y)| x * y).sum::<i64>(), 0);
        }
    }
}
