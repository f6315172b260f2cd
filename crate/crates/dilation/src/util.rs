//! Small shared helpers.

use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Unites the classes; the smaller root wins so results are order-stable.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Numerical rank by Gaussian elimination with partial pivoting.
pub fn rank_f64(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let ncol = m[0].len();
    let mut rank = 0;
    for c in 0..ncol {
        let mut best = rank;
        for r in rank..m.len() {
            if m[r][c].abs() > m[best][c].abs() {
                best = r;
            }
        }
        if rank >= m.len() || m[best][c].abs() < 1e-9 {
            continue;
        }
        m.swap(rank, best);
        for r in 0..m.len() {
            if r != rank {
                let f = m[r][c] / m[rank][c];
                if f != 0.0 {
                    let pivot = m[rank].clone();
                    for (x, y) in m[r][c..ncol].iter_mut().zip(&pivot[c..ncol]) {
                        *x -= f * y;
                    }
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}
