//! Integer homology: transvections, invariant functionals, and the
//! compatibility check for `T_alpha T_beta^-1`.
//!
//! Pairing is `<x, y> = x^T J y`. The standard form puts blocks
//! `[[0, -1], [1, 0]]` on the diagonal, so `<b_i, a_i> = 1` and the twist
//! along `a_1` sends `b_1` to `b_1 + a_1`.

use alloc::vec;
use alloc::vec::Vec;

pub type HomologyClass = Vec<i64>;
pub type IntMatrix = Vec<Vec<i64>>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HomologyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("intersection form is not antisymmetric and unimodular")]
    NotSymplectic,
}

pub fn standard_form(genus: usize) -> IntMatrix {
    let n = 2 * genus;
    let mut j = vec![vec![0; n]; n];
    for i in 0..genus {
        j[2 * i][2 * i + 1] = -1;
        j[2 * i + 1][2 * i] = 1;
    }
    j
}

pub fn pairing(x: &[i64], y: &[i64], j: &[Vec<i64>]) -> i64 {
    let mut s = 0;
    for (r, xi) in x.iter().enumerate() {
        for (c, yc) in y.iter().enumerate() {
            s += xi * j[r][c] * yc;
        }
    }
    s
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

pub fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> IntMatrix {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k] != 0 {
                for jx in 0..m {
                    out[i][jx] += a[i][k] * b[k][jx];
                }
            }
        }
    }
    out
}

pub fn mat_apply(a: &[Vec<i64>], x: &[i64]) -> HomologyClass {
    a.iter()
        .map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

fn check_form(j: &[Vec<i64>]) -> Result<usize, HomologyError> {
    let n = j.len();
    for r in j {
        if r.len() != n {
            return Err(HomologyError::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
    }
    let antisym = (0..n).all(|a| (0..n).all(|b| j[a][b] == -j[b][a]));
    if !antisym || n % 2 == 1 || det(j).abs() != 1 {
        return Err(HomologyError::NotSymplectic);
    }
    Ok(n)
}

/// Matrix of `c -> c + m <c, g> g`.
pub fn transvection(g: &[i64], m: i64, j: &[Vec<i64>]) -> Result<IntMatrix, HomologyError> {
    let n = check_form(j)?;
    if g.len() != n {
        return Err(HomologyError::DimensionMismatch {
            expected: n,
            got: g.len(),
        });
    }
    // <c, g> = sum_k c_k (J g)_k
    let jg = mat_apply(j, g);
    let mut t = identity(n);
    for (r, row) in t.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x += m * g[r] * jg[c];
        }
    }
    Ok(t)
}

/// Composite of transvections, the first listed class applied first.
pub fn twist_action(
    classes: &[(HomologyClass, i64)],
    j: &[Vec<i64>],
) -> Result<IntMatrix, HomologyError> {
    let n = check_form(j)?;
    let mut acc = identity(n);
    for (g, m) in classes {
        acc = mat_mul(&transvection(g, *m, j)?, &acc);
    }
    Ok(acc)
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn normalize(v: &mut [i128]) {
    let g = v.iter().fold(0, |g, &x| gcd(g, x));
    if g > 1 {
        v.iter_mut().for_each(|x| *x /= g);
    }
    if let Some(&first) = v.iter().find(|x| **x != 0) {
        if first < 0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Integer reduced row echelon form (pivots not scaled to 1). Returns the
/// reduced rows and the pivot columns.
fn rref(rows: &[Vec<i64>], ncols: usize) -> (Vec<Vec<i128>>, Vec<usize>) {
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let (a, b) = (m[r][c], m[i][c]);
                let pivot = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot) {
                    *x = *x * a - y * b;
                }
                normalize(&mut m[i]);
            }
        }
        normalize(&mut m[r]);
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank(rows: &[Vec<i64>], ncols: usize) -> usize {
    rref(rows, ncols).1.len()
}

pub fn det(a: &[Vec<i64>]) -> i64 {
    // Bareiss
    let n = a.len();
    let mut m: Vec<Vec<i128>> = a
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return 0;
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for jx in k + 1..n {
                m[i][jx] = (m[i][jx] * m[k][k] - m[i][k] * m[k][jx]) / prev;
            }
        }
        prev = m[k][k];
    }
    if n == 0 {
        return 1;
    }
    (sign * m[n - 1][n - 1]) as i64
}

/// Primitive integer basis of `{x : A x = 0}`.
pub fn nullspace(rows: &[Vec<i64>], ncols: usize) -> Vec<HomologyClass> {
    let (m, pivots) = rref(rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::new();
    for &f in &free {
        let l = pivots.iter().enumerate().fold(1i128, |l, (r, &c)| {
            let p = m[r][c].abs();
            l / gcd(l, p) * p
        });
        let mut x = vec![0i128; ncols];
        x[f] = l;
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = -m[r][f] * l / m[r][c];
        }
        normalize(&mut x);
        basis.push(x.into_iter().map(|v| v as i64).collect());
    }
    basis
}

/// Basis of the log-holonomy functionals fixed by `psi`: kernel of `psi^T - I`.
pub fn compatible_holonomy_space(psi: &[Vec<i64>]) -> Vec<HomologyClass> {
    let n = psi.len();
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| psi[j][i] - i64::from(i == j)).collect())
        .collect();
    nullspace(&rows, n)
}

/// Functionals vanishing on every given class.
pub fn annihilator(classes: &[HomologyClass], n: usize) -> Vec<HomologyClass> {
    nullspace(classes, n)
}

pub fn same_span(a: &[HomologyClass], b: &[HomologyClass], n: usize) -> bool {
    let ra = rank(a, n);
    if ra != rank(b, n) {
        return false;
    }
    let both: Vec<HomologyClass> = a.iter().chain(b).cloned().collect();
    rank(&both, n) == ra
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropCheck {
    /// `<alpha, beta> = 0`.
    NotApplicable,
    Checked {
        compatible: Vec<HomologyClass>,
        annihilator: Vec<HomologyClass>,
        equal: bool,
    },
}

impl PropCheck {
    pub fn holds(&self) -> bool {
        matches!(self, PropCheck::Checked { equal: true, .. })
    }
}

pub fn check_compatible_prop(
    alpha: &[i64],
    beta: &[i64],
    j: &[Vec<i64>],
) -> Result<PropCheck, HomologyError> {
    let n = check_form(j)?;
    for c in [alpha, beta] {
        if c.len() != n {
            return Err(HomologyError::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
    }
    if pairing(alpha, beta, j) == 0 {
        return Ok(PropCheck::NotApplicable);
    }
    let psi = twist_action(&[(alpha.to_vec(), 1), (beta.to_vec(), -1)], j)?;
    let compatible = compatible_holonomy_space(&psi);
    let annihilator = annihilator(&[alpha.to_vec(), beta.to_vec()], n);
    let equal = same_span(&compatible, &annihilator, n);
    Ok(PropCheck::Checked {
        compatible,
        annihilator,
        equal,
    })
}

/// Octagon classes in the basis `(a1, b1, a2, b2)` with `<alpha, beta> = 4`.
pub fn octagon_classes() -> (HomologyClass, HomologyClass, IntMatrix) {
    (vec![0, 1, 0, 1], vec![3, 0, 1, 0], standard_form(2))
}

/// L-example classes on the basis `(g1, g2, g3, g4)`: `alpha = g3 + g4` and the
/// multicurve components `beta1 = g1`, `beta2 = g2`.
pub fn l_example_classes() -> (HomologyClass, [HomologyClass; 2], IntMatrix) {
    let j = vec![
        vec![0, 0, 1, 1],
        vec![0, 0, 0, 1],
        vec![-1, 0, 0, 1],
        vec![-1, -1, -1, 0],
    ];
    (vec![0, 0, 1, 1], [vec![1, 0, 0, 0], vec![0, 1, 0, 0]], j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_one_transvection() {
        let j = standard_form(1);
        let t = twist_action(&[(vec![1, 0], 1)], &j).unwrap();
        assert_eq!(mat_apply(&t, &[0, 1]), vec![1, 1]);
    }

    #[test]
    fn octagon_formula() {
        let (a, b, j) = octagon_classes();
        assert_eq!(pairing(&a, &b, &j), 4);
        let psi = twist_action(&[(a.clone(), 1), (b.clone(), -1)], &j).unwrap();
        let expect: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x - 4 * y).collect();
        assert_eq!(mat_apply(&psi, &a), expect);
        // psi(beta) = beta + i(beta, alpha) alpha - i(beta, alpha) i(alpha, beta) beta
        let expect_b: Vec<i64> = a.iter().zip(&b).map(|(x, y)| y - 4 * x + 16 * y).collect();
        assert_eq!(mat_apply(&psi, &b), expect_b);
        assert_eq!(compatible_holonomy_space(&psi).len(), 2);
        assert!(check_compatible_prop(&a, &b, &j).unwrap().holds());
    }

    #[test]
    fn twice_is_multiplicity_two() {
        let j = standard_form(2);
        let g = vec![1, 2, 0, -1];
        let once = twist_action(&[(g.clone(), 1), (g.clone(), 1)], &j).unwrap();
        assert_eq!(once, twist_action(&[(g, 2)], &j).unwrap());
    }

    #[test]
    fn l_example_pattern() {
        let (a, [b1, b2], j) = l_example_classes();
        assert_eq!(det(&j).abs(), 1);
        let psi = twist_action(&[(a, 1), (b1, -1), (b2, -1)], &j).unwrap();
        let space = compatible_holonomy_space(&psi);
        assert_eq!(space, vec![vec![0, 0, 1, -1]]);
    }

    #[test]
    fn identity_and_degenerate() {
        assert_eq!(compatible_holonomy_space(&identity(4)).len(), 4);
        let j = standard_form(1);
        let r = check_compatible_prop(&[1, 0], &[0, 1], &j).unwrap();
        match r {
            PropCheck::Checked {
                compatible,
                annihilator,
                equal,
            } => {
                assert!(equal && compatible.is_empty() && annihilator.is_empty());
            }
            _ => panic!("expected a check"),
        }
        assert_eq!(
            check_compatible_prop(&[1, 0], &[2, 0], &j).unwrap(),
            PropCheck::NotApplicable
        );
        assert!(matches!(
            transvection(&[1, 0, 0], 1, &j),
            Err(HomologyError::DimensionMismatch { .. })
        ));
    }
}
