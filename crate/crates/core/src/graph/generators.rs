use rand::Rng;

use super::{BipartitePartition, Graph};
use crate::error::{Error, Result};
use crate::rng::{rng, Stream};

/// Extra attempts (with seed + 1, + 2, ...) before giving up on connectivity.
pub const MAX_REGENERATIONS: usize = 16;

/// Random geometric sensor graph: `n` uniform points in the unit square,
/// k-nearest-neighbor edges with Gaussian weights.
pub fn random_sensor_graph(n: usize, k: usize, seed: u64) -> Result<Graph> {
    check_knn(n, k)?;
    regenerate(seed, |s| {
        let mut r = rng(s, Stream::Graph);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![r.random::<f64>(), r.random::<f64>()])
            .collect();
        knn_graph(pts, k)
    })
}

/// k-NN graph over points sampled on a Swiss-roll surface in 3-D.
pub fn swiss_roll_graph(n: usize, k: usize, seed: u64) -> Result<Graph> {
    check_knn(n, k)?;
    let (t0, t1) = (1.5 * std::f64::consts::PI, 4.5 * std::f64::consts::PI);
    regenerate(seed, |s| {
        let mut r = rng(s, Stream::Graph);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let t = t0 + (t1 - t0) * r.random::<f64>();
                let y = 20.0 * r.random::<f64>();
                vec![t * t.cos(), y, t * t.sin()]
            })
            .collect();
        knn_graph(pts, k)
    })
}

/// Random bipartite graph with sides `0..nl` and `nl..nl+nh`; each cross
/// edge is present with probability `p` and has unit weight.
pub fn random_bipartite_graph(
    nl: usize,
    nh: usize,
    p: f64,
    seed: u64,
) -> Result<(Graph, BipartitePartition)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "edge probability {p} outside (0, 1]"
        )));
    }
    if nl == 0 || nh == 0 {
        return Err(Error::InvalidParameter(
            "both sides must be nonempty".into(),
        ));
    }
    let g = regenerate(seed, |s| {
        let mut r = rng(s, Stream::Graph);
        let mut edges = Vec::new();
        for u in 0..nl {
            for v in nl..nl + nh {
                if r.random::<f64>() < p {
                    edges.push((u, v, 1.0));
                }
            }
        }
        Graph::from_edges(nl + nh, edges)
    })?;
    let part = BipartitePartition::new(&g, (0..nl).collect(), (nl..nl + nh).collect())?;
    Ok((g, part))
}

fn check_knn(n: usize, k: usize) -> Result<()> {
    if k == 0 || n < k + 1 {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k < n, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

fn regenerate(seed: u64, mut build: impl FnMut(u64) -> Result<Graph>) -> Result<Graph> {
    for attempt in 0..=MAX_REGENERATIONS {
        let g = build(seed.wrapping_add(attempt as u64))?;
        if g.is_connected() {
            return Ok(g);
        }
        log::debug!("graph from seed {seed} + {attempt} disconnected; regenerating");
    }
    Err(Error::Disconnected {
        attempts: MAX_REGENERATIONS + 1,
    })
}

/// Gaussian-weighted k-NN graph, `sigma` = mean k-NN distance, symmetrized
/// by max. Neighbor ties break toward the lower index.
fn knn_graph(pts: Vec<Vec<f64>>, k: usize) -> Result<Graph> {
    let n = pts.len();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut nn: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut cand: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, dist(&pts[i], &pts[j])))
            .collect();
        cand.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        cand.truncate(k);
        nn.push(cand);
    }
    let total: f64 = nn.iter().flatten().map(|&(_, d)| d).sum();
    let sigma = total / (n * k) as f64;
    let weight = |d: f64| {
        if sigma > 0.0 {
            (-d * d / (2.0 * sigma * sigma)).exp()
        } else {
            1.0
        }
    };
    let mut w = std::collections::BTreeMap::new();
    for (i, list) in nn.iter().enumerate() {
        for &(j, d) in list {
            let key = (i.min(j), i.max(j));
            let v = weight(d);
            w.entry(key)
                .and_modify(|e: &mut f64| *e = e.max(v))
                .or_insert(v);
        }
    }
    Graph::from_edges(n, w.into_iter().map(|((u, v), x)| (u, v, x)))?.with_coords(pts)
}
