//! Bipartite graph filter banks and their reading as two-channel sampling.
//!
//! Channel 0 keeps the low side `V_L` after filtering with `H_0(L)`, channel
//! 1 keeps `V_H` after `H_1(L)`, where `L` is the normalized Laplacian.
//! Synthesis upsamples and filters with `G_l(L)`.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filters::{exact_filter, ideal_pair, meyer_pair, GraphFilter, SpectralKernel};
use crate::graph::{BipartitePartition, Graph, LaplacianKind};
use crate::linalg;
use crate::sampling::{subband_operators, ChannelSpec, McsSystem};
use crate::spectral::{eigendecompose, fix_sign, SpectralDecomposition};

/// Agreement required between the direct and block factorizations.
pub const FACTORIZATION_TOL: f64 = 1e-8;
/// Folding check on eigenvalues against an independent decomposition.
const FOLDING_TOL: f64 = 1e-9;

/// Analysis kernels `H_0, H_1` and synthesis kernels `G_0, G_1`.
#[derive(Debug, Clone)]
pub struct FilterBankKernels {
    pub analysis: [SpectralKernel; 2],
    pub synthesis: [SpectralKernel; 2],
}

impl FilterBankKernels {
    /// Orthogonal QMF bank on `[0, 2]` from the Meyer low-pass:
    /// `H_0(l) = sqrt(2) low(l)`, `H_1(l) = H_0(2 - l)`, `G_l = H_l`.
    pub fn meyer_qmf() -> Self {
        let (low, _) = meyer_pair(8.0 / 3.0);
        let h0 = low.scaled(SQRT_2);
        let mirror = h0.clone();
        let h1 = SpectralKernel::from_fn("meyer_qmf_high", move |l| {
            mirror.eval(2.0 - l).unwrap_or(0.0)
        });
        FilterBankKernels {
            analysis: [h0.clone(), h1.clone()],
            synthesis: [h0, h1],
        }
    }

    /// `sqrt(2)` on the lower and upper halves of the eigenvalue indices.
    pub fn ideal(n: usize) -> Result<Self> {
        let half: Vec<usize> = (0..n / 2).collect();
        let (lo, hi) = ideal_pair(n, &half)?;
        let (lo, hi) = (lo.scaled(SQRT_2), hi.scaled(SQRT_2));
        Ok(FilterBankKernels {
            analysis: [lo.clone(), hi.clone()],
            synthesis: [lo, hi],
        })
    }

    pub fn uniform(analysis: [SpectralKernel; 2], synthesis: [SpectralKernel; 2]) -> Self {
        FilterBankKernels {
            analysis,
            synthesis,
        }
    }
}

/// Dense two-channel transform: full `N x N` filters and the kept vertex sets.
#[derive(Debug, Clone)]
pub struct TwoChannelTransform {
    pub analysis_filters: [DMatrix<f64>; 2],
    pub synthesis_filters: [DMatrix<f64>; 2],
    pub sets: [Vec<usize>; 2],
}

impl TwoChannelTransform {
    /// Filters a graph with `kernels` on its normalized Laplacian and keeps
    /// `sets` (which need not come from a bipartition).
    pub fn from_graph(
        g: &Graph,
        sets: [Vec<usize>; 2],
        kernels: &FilterBankKernels,
    ) -> Result<Self> {
        let l = g.laplacian(LaplacianKind::Normalized)?;
        let d = eigendecompose(&l, Some(LaplacianKind::Normalized))?;
        Ok(Self::from_decomposition(&d, sets, kernels))
    }

    pub fn from_decomposition(
        d: &SpectralDecomposition,
        sets: [Vec<usize>; 2],
        kernels: &FilterBankKernels,
    ) -> Self {
        TwoChannelTransform {
            analysis_filters: [
                exact_filter(d, &kernels.analysis[0]),
                exact_filter(d, &kernels.analysis[1]),
            ],
            synthesis_filters: [
                exact_filter(d, &kernels.synthesis[0]),
                exact_filter(d, &kernels.synthesis[1]),
            ],
            sets,
        }
    }

    pub fn n(&self) -> usize {
        self.analysis_filters[0].nrows()
    }

    /// `S_ana,l^T = I_l H_l`
    pub fn analysis(&self, l: usize) -> DMatrix<f64> {
        linalg::select_rows(&self.analysis_filters[l], &self.sets[l])
    }

    /// `S_syn,l = G_l I_l^T`
    pub fn synthesis(&self, l: usize) -> DMatrix<f64> {
        linalg::select_cols(&self.synthesis_filters[l], &self.sets[l])
    }

    /// Sampling system with `S_l^T = S_ana,l^T` and generators `A_l = S_syn,l`.
    pub fn as_mcs(&self) -> Result<McsSystem> {
        let ch = |l: usize| {
            ChannelSpec::new(
                GraphFilter::dense(self.analysis_filters[l].clone()),
                self.synthesis(l),
                self.sets[l].clone(),
            )
        };
        let mut s1 = self.sets[1].clone();
        s1.sort_unstable();
        let critical = s1 == linalg::complement(self.n(), &self.sets[0]);
        McsSystem::new(ch(0)?, ch(1)?, critical)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrCheck {
    pub pr: bool,
    pub defect: f64,
}

/// Spectral norm of `S_syn,0 S_ana,0^T + S_syn,1 S_ana,1^T - I`.
pub fn check_pr(t: &TwoChannelTransform) -> PrCheck {
    let n = t.n();
    let total = t.synthesis(0) * t.analysis(0) + t.synthesis(1) * t.analysis(1)
        - DMatrix::<f64>::identity(n, n);
    let defect = linalg::norm2(&total);
    PrCheck {
        pr: defect <= 1e-8,
        defect,
    }
}

/// Residuals of the filter-bank / sampling equivalence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Report {
    /// `||A~_0 S_0^T A~_1 S_1^T + A~_1 S_1^T A~_0 S_0^T||_2`
    pub cross_term: f64,
    /// `||A~_0 S_A^T + A~_1 S_B^T - I||_2`
    pub reconstruction: f64,
    /// `||S_A^T - S_0^T||_2`
    pub subband_gap_a: f64,
    /// `||S_B^T - S_1^T||_2`
    pub subband_gap_b: f64,
}

impl Theorem1Report {
    pub fn max_residual(&self) -> f64 {
        self.cross_term
            .max(self.reconstruction)
            .max(self.subband_gap_a)
            .max(self.subband_gap_b)
    }
}

/// Forms `A~_0 = A_0 (S_A^T A_0)^{-1}`, `A~_1 = A_1 (S_B^T A_1)^{-1}` from the
/// transform's sampling reading and measures the residuals.
pub fn verify_theorem1(t: &TwoChannelTransform) -> Result<Theorem1Report> {
    let sys = t.as_mcs()?;
    let ops = subband_operators(&sys)?;
    let n = t.n();
    let mut tilde = Vec::with_capacity(2);
    let mut sub = Vec::with_capacity(2);
    for l in 0..2 {
        let reduced = ops.reduced_block(l)?;
        let inv = reduced
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotInvertible(format!("reduced block {l} is singular")))?;
        tilde.push(sys.channel(l).generator() * inv);
        sub.push(ops.materialize(l)?);
    }
    let s = [t.analysis(0), t.analysis(1)];
    let p0 = &tilde[0] * &s[0];
    let p1 = &tilde[1] * &s[1];
    let cross = &p0 * &p1 + &p1 * &p0;
    let recon = &tilde[0] * &sub[0] + &tilde[1] * &sub[1] - DMatrix::<f64>::identity(n, n);
    Ok(Theorem1Report {
        cross_term: linalg::norm2(&cross),
        reconstruction: linalg::norm2(&recon),
        subband_gap_a: linalg::norm2(&(&sub[0] - &s[0])),
        subband_gap_b: linalg::norm2(&(&sub[1] - &s[1])),
    })
}

/// Filter bank on a balanced bipartite graph with the eigenvector basis
/// arranged as `V = [[U_LL, U_LL J], [U_HL, -U_HL J]]` (rows: low side,
/// then high side).
#[derive(Debug, Clone)]
pub struct BgfbSystem {
    partition: BipartitePartition,
    kernels: FilterBankKernels,
    /// Paired eigenbasis in original vertex order.
    decomposition: SpectralDecomposition,
    u_ll: DMatrix<f64>,
    u_hl: DMatrix<f64>,
    transform: TwoChannelTransform,
    /// Relative Frobenius gap between the direct and block factorizations.
    pub factorization_gap: f64,
}

/// Assembles the filter bank. Eigenpairs are built from the SVD of the
/// normalized bipartite block `B = D_L^{-1/2} W_LH D_H^{-1/2} = P S Q^T`:
/// `[p; q]/sqrt(2)` has eigenvalue `1 - s` and `[p; -q]/sqrt(2)` has `1 + s`.
pub fn build_bgfb(
    g: &Graph,
    part: &BipartitePartition,
    kernels: FilterBankKernels,
) -> Result<BgfbSystem> {
    let (low, high) = (part.low(), part.high());
    let h = low.len();
    if h != high.len() {
        return Err(Error::Bipartite(format!(
            "sides have {} and {} vertices; equal sizes required",
            h,
            high.len()
        )));
    }
    if !g.is_connected() {
        return Err(Error::InvalidGraph(
            "filter bank needs a connected graph".into(),
        ));
    }
    let deg = g.degrees();
    let b = DMatrix::from_fn(h, h, |i, j| {
        let (u, v) = (low[i], high[j]);
        g.weight(u, v) / (deg[u] * deg[v]).sqrt()
    });
    let linalg::Svd {
        u: p,
        s: sv,
        vt: qt,
    } = linalg::svd(&b);
    let mut order: Vec<usize> = (0..h).collect();
    order.sort_by(|&a, &c| sv[c].total_cmp(&sv[a]).then(a.cmp(&c)));

    let n = 2 * h;
    let mut u_ll = DMatrix::zeros(h, h);
    let mut u_hl = DMatrix::zeros(h, h);
    let mut sigma = Vec::with_capacity(h);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = DVector::zeros(n);
        v.rows_mut(0, h).copy_from(&p.column(src));
        v.rows_mut(h, h).copy_from(&qt.row(src).transpose());
        v /= SQRT_2;
        fix_sign(&mut v);
        u_ll.set_column(dst, &v.rows(0, h));
        u_hl.set_column(dst, &v.rows(h, h));
        sigma.push(sv[src]);
    }
    let decomposition = paired_decomposition(part, &u_ll, &u_hl, &sigma);
    let transform = TwoChannelTransform::from_decomposition(
        &decomposition,
        [low.to_vec(), high.to_vec()],
        &kernels,
    );

    check_folding(g, &decomposition)?;
    let mut sys = BgfbSystem {
        partition: part.clone(),
        kernels,
        decomposition,
        u_ll,
        u_hl,
        transform,
        factorization_gap: 0.0,
    };
    sys.factorization_gap = sys.block_factorization_gap(g)?;
    if !(sys.factorization_gap <= FACTORIZATION_TOL) {
        return Err(Error::Bipartite(format!(
            "block factorization disagrees with direct filtering by {:.3e}",
            sys.factorization_gap
        )));
    }
    Ok(sys)
}

/// Full basis `V` in original vertex order with eigenvalues
/// `1 - s_0 <= ... <= 1 - s_{h-1} <= 1 + s_{h-1} <= ... <= 1 + s_0`.
fn paired_decomposition(
    part: &BipartitePartition,
    u_ll: &DMatrix<f64>,
    u_hl: &DMatrix<f64>,
    sigma: &[f64],
) -> SpectralDecomposition {
    let h = sigma.len();
    let n = 2 * h;
    let mut v = DMatrix::zeros(n, n);
    for j in 0..h {
        let mirror = n - 1 - j;
        for (i, &vert) in part.low().iter().enumerate() {
            v[(vert, j)] = u_ll[(i, j)];
            v[(vert, mirror)] = u_ll[(i, j)];
        }
        for (i, &vert) in part.high().iter().enumerate() {
            v[(vert, j)] = u_hl[(i, j)];
            v[(vert, mirror)] = -u_hl[(i, j)];
        }
    }
    let evals = DVector::from_fn(n, |i, _| {
        if i < h {
            1.0 - sigma[i]
        } else {
            1.0 + sigma[n - 1 - i]
        }
    });
    SpectralDecomposition::from_parts(v, evals, Some(LaplacianKind::Normalized))
}

fn check_folding(g: &Graph, d: &SpectralDecomposition) -> Result<()> {
    let reference = eigendecompose(&g.laplacian(LaplacianKind::Normalized)?, None)?;
    let n = d.n();
    for i in 0..n {
        let (a, b) = (d.evals()[i], reference.evals()[i]);
        if (a - b).abs() > FOLDING_TOL {
            return Err(Error::Bipartite(format!(
                "eigenvalue {i}: paired {a} vs direct {b}"
            )));
        }
        if (a + reference.evals()[n - 1 - i] - 2.0).abs() > FOLDING_TOL {
            return Err(Error::Bipartite(format!(
                "eigenvalue {i} does not fold about 1"
            )));
        }
    }
    let recon = d.reconstruct();
    let l = g.laplacian(LaplacianKind::Normalized)?;
    let gap = linalg::relative_frobenius(&recon, &l);
    if gap > FACTORIZATION_TOL {
        return Err(Error::Bipartite(format!(
            "paired basis misses the Laplacian by {gap:.3e}"
        )));
    }
    Ok(())
}

/// Counter identity of size `h`, as a row permutation.
fn flip_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let h = m.nrows();
    DMatrix::from_fn(h, m.ncols(), |i, j| m[(h - 1 - i, j)])
}

impl BgfbSystem {
    pub fn partition(&self) -> &BipartitePartition {
        &self.partition
    }

    pub fn kernels(&self) -> &FilterBankKernels {
        &self.kernels
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn u_ll(&self) -> &DMatrix<f64> {
        &self.u_ll
    }

    pub fn u_hl(&self) -> &DMatrix<f64> {
        &self.u_hl
    }

    pub fn transform(&self) -> &TwoChannelTransform {
        &self.transform
    }

    fn kernel_diag(&self, k: &SpectralKernel) -> DVector<f64> {
        k.response(&self.decomposition)
    }

    /// `U_LL [I J] H^ V^T` (`l = 0`) or `U_HL [I -J] H^ V^T` (`l = 1`).
    pub fn block_analysis(&self, l: usize) -> DMatrix<f64> {
        let u = if l == 0 { &self.u_ll } else { &self.u_hl };
        let sign = if l == 0 { 1.0 } else { -1.0 };
        let h = u.ncols();
        let mut ij = DMatrix::zeros(h, 2 * h);
        ij.columns_mut(0, h)
            .copy_from(&DMatrix::<f64>::identity(h, h));
        ij.columns_mut(h, h)
            .copy_from(&(flip_rows(&DMatrix::<f64>::identity(h, h)) * sign));
        let mut right = self.decomposition.evecs().transpose();
        let hat = self.kernel_diag(&self.kernels.analysis[l]);
        for (i, mut row) in right.row_iter_mut().enumerate() {
            row *= hat[i];
        }
        u * ij * right
    }

    /// `V G^ [I; J] U_LL^T` (`l = 0`) or `V G^ [I; -J] U_HL^T` (`l = 1`).
    pub fn block_synthesis(&self, l: usize) -> DMatrix<f64> {
        let u = if l == 0 { &self.u_ll } else { &self.u_hl };
        let sign = if l == 0 { 1.0 } else { -1.0 };
        let h = u.ncols();
        let mut ij = DMatrix::zeros(2 * h, h);
        ij.rows_mut(0, h).copy_from(&DMatrix::<f64>::identity(h, h));
        ij.rows_mut(h, h)
            .copy_from(&(flip_rows(&DMatrix::<f64>::identity(h, h)) * sign));
        let mut left = self.decomposition.evecs().clone();
        let hat = self.kernel_diag(&self.kernels.synthesis[l]);
        for (j, mut col) in left.column_iter_mut().enumerate() {
            col *= hat[j];
        }
        left * ij * u.transpose()
    }

    /// Largest relative gap between the block forms and direct filtering.
    /// Function kernels are applied through an independent
    /// eigendecomposition of the Laplacian; index kernels through the
    /// paired basis.
    fn block_factorization_gap(&self, g: &Graph) -> Result<f64> {
        let reference = eigendecompose(&g.laplacian(LaplacianKind::Normalized)?, None)?;
        let direct = |k: &SpectralKernel| {
            if k.eval(0.0).is_some() {
                exact_filter(&reference, k)
            } else {
                exact_filter(&self.decomposition, k)
            }
        };
        let mut gap: f64 = 0.0;
        for l in 0..2 {
            let sets = &self.transform.sets;
            let ana = linalg::select_rows(&direct(&self.kernels.analysis[l]), &sets[l]);
            let syn = linalg::select_cols(&direct(&self.kernels.synthesis[l]), &sets[l]);
            gap = gap.max(rel_gap(&self.block_analysis(l), &ana));
            gap = gap.max(rel_gap(&self.block_synthesis(l), &syn));
        }
        Ok(gap)
    }

    /// Same bank with the eigenvector pairs listed in `flips` negated
    /// (column `j` together with its mirror `N - 1 - j`).
    pub fn resigned(&self, flips: &[usize]) -> Result<BgfbSystem> {
        let mut u_ll = self.u_ll.clone();
        let mut u_hl = self.u_hl.clone();
        let sigma: Vec<f64> = (0..u_ll.ncols())
            .map(|j| 1.0 - self.decomposition.evals()[j])
            .collect();
        for &j in flips {
            if j >= u_ll.ncols() {
                return Err(Error::InvalidParameter(format!("pair {j} out of range")));
            }
            u_ll.column_mut(j).neg_mut();
            u_hl.column_mut(j).neg_mut();
        }
        let decomposition = paired_decomposition(&self.partition, &u_ll, &u_hl, &sigma);
        let transform = TwoChannelTransform::from_decomposition(
            &decomposition,
            self.transform.sets.clone(),
            &self.kernels,
        );
        Ok(BgfbSystem {
            partition: self.partition.clone(),
            kernels: self.kernels.clone(),
            decomposition,
            u_ll,
            u_hl,
            transform,
            factorization_gap: self.factorization_gap,
        })
    }
}

fn rel_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.norm().max(1.0);
    (a - b).norm() / scale
}
