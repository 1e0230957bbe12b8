//! Dense linear-algebra helpers shared by the sampling and filter-bank modules.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative singular-value cutoff for pseudoinverses.
pub const PINV_RTOL: f64 = 1e-10;

/// Largest absolute difference between `m` and its transpose.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn ensure_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Thin singular value decomposition `m = u diag(s) vt`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub vt: DMatrix<f64>,
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD, singular values descending.
pub fn svd(m: &DMatrix<f64>) -> Svd {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    match to_faer(m).thin_svd() {
        Ok(d) => {
            let (u, v, s) = (d.U(), d.V(), d.S().column_vector());
            Svd {
                u: DMatrix::from_fn(rows, r, |i, j| u[(i, j)]),
                s: DVector::from_fn(r, |i, _| s[i]),
                vt: DMatrix::from_fn(r, cols, |i, j| v[(j, i)]),
            }
        }
        Err(e) => {
            log::warn!("faer SVD failed ({e:?}); using nalgebra");
            let d = m.clone().svd(true, true);
            Svd {
                u: d.u.expect("left vectors requested"),
                s: d.singular_values,
                vt: d.v_t.expect("right vectors requested"),
            }
        }
    }
}

fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    match to_faer(m).singular_values() {
        Ok(s) => DVector::from_vec(s),
        Err(_) => m.clone().singular_values(),
    }
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).iter().cloned().fold(0.0, f64::max)
}

/// Rank/conditioning summary of a matrix, taken from its singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conditioning {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub sigma_max: f64,
    /// Smallest singular value kept by the truncation.
    pub sigma_min_kept: f64,
    /// `sigma_max / sigma_min_kept`; infinite when the matrix is zero.
    pub cond: f64,
}

/// Moore-Penrose pseudoinverse with singular values below `rtol * sigma_max` dropped.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    pub conditioning: Conditioning,
}

pub fn pinv(m: &DMatrix<f64>, rtol: f64) -> PseudoInverse {
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return PseudoInverse {
            matrix: DMatrix::zeros(cols, rows),
            conditioning: Conditioning {
                rows,
                cols,
                rank: 0,
                sigma_max: 0.0,
                sigma_min_kept: 0.0,
                cond: f64::INFINITY,
            },
        };
    }
    let Svd { u, s: sv, vt } = svd(m);
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = rtol * sigma_max;
    let mut rank = 0;
    let mut sigma_min_kept = f64::INFINITY;
    // pinv = V diag(1/s) U^T over kept singular triplets
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &s) in sv.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            sigma_min_kept = sigma_min_kept.min(s);
            let vk = vt.row(k).transpose();
            let uk = u.column(k);
            out.ger(1.0 / s, &vk, &uk, 1.0);
        }
    }
    let cond = if rank == 0 {
        f64::INFINITY
    } else {
        sigma_max / sigma_min_kept
    };
    PseudoInverse {
        matrix: out,
        conditioning: Conditioning {
            rows,
            cols,
            rank,
            sigma_max,
            sigma_min_kept: if rank == 0 { 0.0 } else { sigma_min_kept },
            cond,
        },
    }
}

/// Conditioning of a matrix without keeping its pseudoinverse.
pub fn conditioning(m: &DMatrix<f64>, rtol: f64) -> Conditioning {
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return Conditioning {
            rows,
            cols,
            rank: 0,
            sigma_max: 0.0,
            sigma_min_kept: 0.0,
            cond: f64::INFINITY,
        };
    }
    let sv = singular_values(m);
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<f64> = sv
        .iter()
        .cloned()
        .filter(|&s| s > rtol * sigma_max && s > 0.0)
        .collect();
    let sigma_min_kept = kept.iter().cloned().fold(f64::INFINITY, f64::min);
    Conditioning {
        rows,
        cols,
        rank: kept.len(),
        sigma_max,
        sigma_min_kept: if kept.is_empty() { 0.0 } else { sigma_min_kept },
        cond: if kept.is_empty() {
            f64::INFINITY
        } else {
            sigma_max / sigma_min_kept
        },
    }
}

/// Rows of `m` listed in `rows`, in that order.
pub fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn select_cols(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn select_entries(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Vertices of `0..n` not in `set`, ascending. Entries `>= n` are ignored.
pub fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    let mut taken = vec![false; n];
    for &i in set.iter().filter(|&&i| i < n) {
        taken[i] = true;
    }
    (0..n).filter(|&i| !taken[i]).collect()
}

/// Solve a symmetric positive definite system, falling back to LU when the
/// Cholesky factorization breaks down.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::NotInvertible("singular system in direct solve".into()))
}

pub fn relative_error(approx: &DVector<f64>, exact: &DVector<f64>) -> f64 {
    let denom = exact.norm();
    let diff = (approx - exact).norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

pub fn relative_frobenius(approx: &DMatrix<f64>, exact: &DMatrix<f64>) -> f64 {
    let denom = exact.norm();
    let diff = (approx - exact).norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

/// Gershgorin upper bound on the spectrum of a symmetric matrix.
pub fn gershgorin_bound(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
