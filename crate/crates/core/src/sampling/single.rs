//! Single-channel vertex-domain sampling: `y = I_M G x`, best-possible
//! recovery `A (S^T A)^+ y`, the direct-sum check, and greedy
//! determinant-maximizing sampling set selection.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::neumann::neumann_solve;
use crate::error::{Error, Result};
use crate::filters::GraphFilter;
use crate::linalg::{self, Conditioning, PINV_RTOL};

/// One sampling channel: analysis filter `G`, generator `A`, sampling set `M`.
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    analysis: GraphFilter,
    generator: DMatrix<f64>,
    sampling_set: Vec<usize>,
    generator_rank: usize,
}

impl ChannelSpec {
    /// Validates the sampling set (unique, in range) and records the
    /// numerical rank of the generator.
    pub fn new(
        analysis: GraphFilter,
        generator: DMatrix<f64>,
        sampling_set: Vec<usize>,
    ) -> Result<Self> {
        let n = generator.nrows();
        let mut seen = vec![false; n];
        for &v in &sampling_set {
            if v >= n {
                return Err(Error::InvalidParameter(format!(
                    "sampling vertex {v} out of range for {n}"
                )));
            }
            if seen[v] {
                return Err(Error::InvalidParameter(format!(
                    "sampling vertex {v} repeated"
                )));
            }
            seen[v] = true;
        }
        let generator_rank = linalg::conditioning(&generator, PINV_RTOL).rank;
        Ok(ChannelSpec {
            analysis,
            generator,
            sampling_set,
            generator_rank,
        })
    }

    pub fn n(&self) -> usize {
        self.generator.nrows()
    }

    pub fn analysis(&self) -> &GraphFilter {
        &self.analysis
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn sampling_set(&self) -> &[usize] {
        &self.sampling_set
    }

    pub fn generator_rank(&self) -> usize {
        self.generator_rank
    }

    /// Whether the generator has full column rank.
    pub fn is_full_rank(&self) -> bool {
        self.generator_rank == self.generator.ncols()
    }

    pub fn with_sampling_set(&self, sampling_set: Vec<usize>) -> Result<Self> {
        ChannelSpec::new(self.analysis.clone(), self.generator.clone(), sampling_set)
    }

    /// `I_M G B` for an arbitrary `N x k` matrix `B`.
    pub fn sample_columns(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let filtered = self.analysis.apply_columns(b)?;
        Ok(linalg::select_rows(&filtered, &self.sampling_set))
    }

    /// `S^T A`
    pub fn sampled_generator(&self) -> Result<DMatrix<f64>> {
        self.sample_columns(&self.generator)
    }
}

/// `y = (G x)` restricted to the channel's sampling set.
pub fn apply_sampling(ch: &ChannelSpec, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != ch.n() {
        return Err(Error::DimensionMismatch {
            expected: ch.n(),
            actual: x.len(),
        });
    }
    let gx = ch.analysis.apply(x)?;
    Ok(linalg::select_entries(&gx, &ch.sampling_set))
}

#[derive(Debug, Clone)]
pub struct SingleRecovery {
    pub signal: DVector<f64>,
    /// Rank and condition number of `S^T A`.
    pub conditioning: Conditioning,
}

/// `A (S^T A)^+ y` with singular values below `1e-10 sigma_max` truncated.
pub fn recover_single(ch: &ChannelSpec, y: &DVector<f64>) -> Result<SingleRecovery> {
    recover_single_with(ch, y, PINV_RTOL)
}

/// [`recover_single`] with truncation at `rtol * sigma_max`.
pub fn recover_single_with(
    ch: &ChannelSpec,
    y: &DVector<f64>,
    rtol: f64,
) -> Result<SingleRecovery> {
    if y.len() != ch.sampling_set.len() {
        return Err(Error::DimensionMismatch {
            expected: ch.sampling_set.len(),
            actual: y.len(),
        });
    }
    if ch.sampling_set.is_empty() {
        return Err(Error::InvalidParameter("empty sampling set".into()));
    }
    let sa = ch.sampled_generator()?;
    let p = linalg::pinv(&sa, rtol);
    Ok(SingleRecovery {
        signal: &ch.generator * (&p.matrix * y),
        conditioning: p.conditioning,
    })
}

/// Default bound on `cond(S^T A)` for the direct-sum check.
pub const DS_COND_MAX: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DsStatus {
    Holds { cond: f64 },
    Fails { reason: String },
}

/// Direct-sum condition for a square channel (`|M| = K`): `S^T A`
/// invertible with condition number at most `cond_max`.
pub fn check_ds(ch: &ChannelSpec, cond_max: f64) -> Result<DsStatus> {
    let k = ch.generator.ncols();
    if ch.sampling_set.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: ch.sampling_set.len(),
        });
    }
    let c = linalg::conditioning(&ch.sampled_generator()?, 0.0);
    Ok(if c.rank < k {
        DsStatus::Fails {
            reason: format!("S^T A has rank {} < {k}", c.rank),
        }
    } else if c.cond > cond_max {
        DsStatus::Fails {
            reason: format!("condition number {:.3e} exceeds {cond_max:.1e}", c.cond),
        }
    } else {
        DsStatus::Holds { cond: c.cond }
    })
}

/// `Z = (G A)(G A)^T`, filtering the generator columns instead of forming `G`.
pub fn build_z(filter: &GraphFilter, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ga = filter.apply_columns(a)?;
    let z = &ga * ga.transpose();
    // exact symmetry for downstream Cholesky/eigen work
    Ok((&z + z.transpose()) * 0.5)
}

/// Tuning for the greedy selectors. `None` picks the scale-aware default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SelectionOptions {
    /// Diagonal loading; default `1e-8 * trace(Z) / N`.
    pub ridge: Option<f64>,
    /// Neumann stopping tolerance; default `1e-9 * trace(Z) / N`.
    pub beta: Option<f64>,
}

pub(crate) fn mean_diag(z: &DMatrix<f64>) -> f64 {
    z.trace() / z.nrows().max(1) as f64
}

impl SelectionOptions {
    pub fn ridge_for(&self, z: &DMatrix<f64>) -> f64 {
        self.ridge.unwrap_or(1e-8 * mean_diag(z))
    }

    pub fn beta_for(&self, z: &DMatrix<f64>) -> f64 {
        self.beta.unwrap_or(1e-9 * mean_diag(z))
    }
}

/// Output of a greedy selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    /// Vertices in the order they were picked.
    pub order: Vec<usize>,
    /// Winning score at each pick.
    pub scores: Vec<f64>,
    pub ridge: f64,
    /// Neumann solves that hit the iteration cap and were redone directly.
    pub fallbacks: usize,
}

impl Selection {
    pub fn sorted(&self) -> Vec<usize> {
        let mut s = self.order.clone();
        s.sort_unstable();
        s
    }
}

fn check_selection_args(z: &DMatrix<f64>, k: usize) -> Result<usize> {
    let n = linalg::ensure_square(z)?;
    if k > n {
        return Err(Error::InvalidParameter(format!("K = {k} exceeds N = {n}")));
    }
    Ok(n)
}

/// Index of the largest score; ties go to the lowest index. `None` scores
/// are skipped.
pub(crate) fn argmax(scores: &[Option<f64>]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(v) = *s {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best
}

/// Schur complement `Z_yy - Z_{y,M} Z_M^{-1} Z_{M,y}` of the ridged matrix
/// `Z + ridge I`, by a direct solve.
pub fn schur_score(z: &DMatrix<f64>, set: &[usize], y: usize, ridge: f64) -> Result<f64> {
    let zyy = z[(y, y)] + ridge;
    if set.is_empty() {
        return Ok(zyy);
    }
    let mut zm = linalg::submatrix(z, set, set);
    for i in 0..set.len() {
        zm[(i, i)] += ridge;
    }
    let b = DVector::from_iterator(set.len(), set.iter().map(|&m| z[(m, y)]));
    let eps = linalg::solve_spd(&zm, &b)?;
    Ok(zyy - b.dot(&eps))
}

/// Greedy D-optimal selection with exact Schur-complement scores.
///
/// Each pick adds the vertex maximizing `Z_yy - Z_{y,M} Z_M^{-1} Z_{M,y}`
/// of `Z + ridge I`, which by the Schur determinant formula maximizes
/// `det(Z_{M+y})`. Scores are kept current with a pivoted-Cholesky update,
/// so a full run costs `O(N K^2)`.
pub fn sss_greedy_exact(z: &DMatrix<f64>, k: usize, opts: SelectionOptions) -> Result<Selection> {
    let n = check_selection_args(z, k)?;
    let ridge = opts.ridge_for(z);
    let mut residual: Vec<f64> = (0..n).map(|i| z[(i, i)] + ridge).collect();
    let mut factor: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let mut order = Vec::with_capacity(k);
    let mut scores = Vec::with_capacity(k);
    for _ in 0..k {
        let cand: Vec<Option<f64>> = (0..n)
            .map(|i| (!chosen[i]).then_some(residual[i]))
            .collect();
        let (p, score) = argmax(&cand).expect("k <= n leaves a candidate");
        if !(score > 0.0) {
            return Err(Error::Numerical(format!(
                "non-positive Schur complement {score:e} at pick {}",
                order.len()
            )));
        }
        chosen[p] = true;
        order.push(p);
        scores.push(score);
        let pivot = score.sqrt();
        let col = DVector::from_fn(n, |i, _| {
            let mut v = z[(i, p)] + if i == p { ridge } else { 0.0 };
            for f in &factor {
                v -= f[i] * f[p];
            }
            v / pivot
        });
        for i in 0..n {
            residual[i] -= col[i] * col[i];
        }
        factor.push(col);
    }
    Ok(Selection {
        order,
        scores,
        ridge,
        fallbacks: 0,
    })
}

/// Greedy selection with Schur scores from the iterative Neumann solve.
///
/// Each candidate solves `(Z_M + ridge I) eps = Z_{M,y}` iteratively with at
/// most `10 |M|` steps; a solve that does not reach `beta` is redone
/// directly and counted in [`Selection::fallbacks`].
pub fn sss_greedy_neumann(z: &DMatrix<f64>, k: usize, opts: SelectionOptions) -> Result<Selection> {
    let n = check_selection_args(z, k)?;
    let ridge = opts.ridge_for(z);
    let beta = opts.beta_for(z);
    let mut order: Vec<usize> = Vec::with_capacity(k);
    let mut scores = Vec::with_capacity(k);
    let mut fallbacks = 0;
    let mut chosen = vec![false; n];
    for _ in 0..k {
        let mut zm = linalg::submatrix(z, &order, &order);
        for i in 0..order.len() {
            zm[(i, i)] += ridge;
        }
        let cap = 10 * order.len();
        let evals: Vec<Option<(f64, bool)>> = (0..n)
            .into_par_iter()
            .map(|y| {
                if chosen[y] {
                    return Ok(None);
                }
                let zyy = z[(y, y)] + ridge;
                if order.is_empty() {
                    return Ok(Some((zyy, false)));
                }
                let b = DVector::from_iterator(order.len(), order.iter().map(|&m| z[(m, y)]));
                let solve = neumann_solve(&zm, b.clone(), beta, cap);
                let (eps, fell_back) = if solve.converged {
                    (solve.solution, false)
                } else {
                    (linalg::solve_spd(&zm, &b)?, true)
                };
                Ok(Some((zyy - b.dot(&eps), fell_back)))
            })
            .collect::<Result<_>>()?;
        fallbacks += evals.iter().flatten().filter(|e| e.1).count();
        let cand: Vec<Option<f64>> = evals.iter().map(|e| e.map(|(s, _)| s)).collect();
        let (p, score) = argmax(&cand).expect("k <= n leaves a candidate");
        chosen[p] = true;
        order.push(p);
        scores.push(score);
    }
    Ok(Selection {
        order,
        scores,
        ridge,
        fallbacks,
    })
}
