//! Dense eigendecomposition, graph Fourier transform, spectral clustering.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::LaplacianKind;
use crate::linalg;
use crate::rng::{rng, Stream};

const SYMMETRY_TOL: f64 = 1e-10;
const KMEANS_RESTARTS: usize = 50;
const KMEANS_MAX_ITERS: usize = 300;

/// Eigenpairs of a symmetric graph operator, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    evecs: DMatrix<f64>,
    evals: DVector<f64>,
    kind: Option<LaplacianKind>,
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Each eigenvector is signed so that its largest-magnitude entry is
/// positive; entries within 1e-12 of the maximum count as ties and the
/// lowest index wins.
pub fn eigendecompose(
    op: &DMatrix<f64>,
    kind: Option<LaplacianKind>,
) -> Result<SpectralDecomposition> {
    let n = linalg::ensure_square(op)?;
    let asym = linalg::asymmetry(op);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let sym = (op + op.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });

    let mut evecs = DMatrix::zeros(n, n);
    let mut evals = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        fix_sign(&mut v);
        evecs.set_column(dst, &v);
        evals[dst] = eig.eigenvalues[src];
    }
    Ok(SpectralDecomposition { evecs, evals, kind })
}

pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(i) = v.iter().position(|x| x.abs() >= peak - 1e-12) {
        if v[i] < 0.0 {
            v.neg_mut();
        }
    }
}

impl SpectralDecomposition {
    /// Wraps an externally built orthonormal basis. Columns must already be
    /// ordered by ascending eigenvalue.
    pub fn from_parts(
        evecs: DMatrix<f64>,
        evals: DVector<f64>,
        kind: Option<LaplacianKind>,
    ) -> Self {
        debug_assert_eq!(evecs.ncols(), evals.len());
        SpectralDecomposition { evecs, evals, kind }
    }

    pub fn n(&self) -> usize {
        self.evals.len()
    }

    pub fn evecs(&self) -> &DMatrix<f64> {
        &self.evecs
    }

    pub fn evals(&self) -> &DVector<f64> {
        &self.evals
    }

    pub fn kind(&self) -> Option<LaplacianKind> {
        self.kind
    }

    pub fn lambda_max(&self) -> f64 {
        self.evals.iter().cloned().fold(0.0, f64::max)
    }

    /// `U diag(values) U^T`
    pub fn synthesize(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let mut scaled = self.evecs.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[j];
        }
        &scaled * self.evecs.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.synthesize(&self.evals)
    }

    pub fn gft(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x.len())?;
        Ok(self.evecs.tr_mul(x))
    }

    pub fn igft(&self, xhat: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(xhat.len())?;
        Ok(&self.evecs * xhat)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Spectral clustering into `p` nonempty sets.
///
/// Embeds each vertex as its row of eigenvectors `1..p` (the constant
/// eigenvector 0 is skipped) and runs k-means with k-means++ seeding,
/// keeping the best of 50 restarts. Clusters are returned ordered by their
/// smallest vertex, each sorted ascending.
pub fn spectral_clusters(
    d: &SpectralDecomposition,
    p: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let n = d.n();
    if p < 2 || p > n {
        return Err(Error::InvalidParameter(format!(
            "cluster count {p} outside [2, {n}]"
        )));
    }
    let dims = p - 1;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| (1..=dims).map(|j| d.evecs[(i, j)]).collect())
        .collect();
    let labels = kmeans(&points, p, seed)?;
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); p];
    for (i, &c) in labels.iter().enumerate() {
        sets[c].push(i);
    }
    if sets.iter().any(Vec::is_empty) {
        return Err(Error::EmptyCluster);
    }
    sets.sort_by_key(|s| s[0]);
    Ok(sets)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    let mut r = rng(seed, Stream::Clustering);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let centers = kmeans_pp(points, k, &mut r);
        let (labels, wcss) = lloyd(points, centers);
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        if counts.contains(&0) {
            continue;
        }
        if best.as_ref().is_none_or(|(b, _)| wcss < *b) {
            best = Some((wcss, labels));
        }
    }
    best.map(|(_, l)| l).ok_or(Error::EmptyCluster)
}

fn kmeans_pp(points: &[Vec<f64>], k: usize, r: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[r.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = r.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            r.random_range(0..n)
        };
        centers.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> (Vec<usize>, f64) {
    let k = centers.len();
    let dim = points[0].len();
    let assign = |centers: &[Vec<f64>]| -> Vec<usize> {
        points
            .iter()
            .map(|p| {
                let mut best = (f64::INFINITY, 0);
                for (c, ctr) in centers.iter().enumerate() {
                    let d = sq_dist(p, ctr);
                    if d < best.0 {
                        best = (d, c);
                    }
                }
                best.1
            })
            .collect()
    };
    let mut labels = assign(&centers);
    for _ in 0..KMEANS_MAX_ITERS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // Re-seed an empty cluster at the point worst served by its center.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[labels[a]])
                            .total_cmp(&sq_dist(&points[b], &centers[labels[b]]))
                            .then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                centers[c] = points[far].clone();
            }
        }
        let next = assign(&centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    let wcss = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum();
    (labels, wcss)
}
