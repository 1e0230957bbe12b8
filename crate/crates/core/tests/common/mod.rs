#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    graph_mcs::rng::rng(seed, graph_mcs::rng::Stream::Instance)
}

pub fn gaussian(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vec(r: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal))
}

/// `B B^T / n` with `B` of size `n x rank`.
pub fn random_psd(r: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let b = gaussian(r, n, rank);
    let z = &b * b.transpose() / n as f64;
    (&z + z.transpose()) * 0.5
}

pub fn random_subset(r: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut s = rand::seq::index::sample(r, n, k).into_vec();
    s.sort_unstable();
    s
}

pub fn det(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        1.0
    } else {
        m.clone().lu().determinant()
    }
}

pub fn principal(z: &DMatrix<f64>, set: &[usize]) -> DMatrix<f64> {
    graph_mcs::linalg::submatrix(z, set, set)
}

pub fn ridged(z: &DMatrix<f64>, ridge: f64) -> DMatrix<f64> {
    z + DMatrix::identity(z.nrows(), z.ncols()) * ridge
}

/// All `k`-subsets of `0..n`, ascending.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Two 4-cliques `{0..3}` and `{4..7}` joined by one edge of weight `w`.
pub fn two_cliques(w: f64) -> graph_mcs::graph::Graph {
    let mut e = Vec::new();
    for base in [0, 4] {
        for i in 0..4 {
            for j in (i + 1)..4 {
                e.push((base + i, base + j, 1.0));
            }
        }
    }
    e.push((3, 4, w));
    graph_mcs::graph::Graph::from_edges(8, e).unwrap()
}
