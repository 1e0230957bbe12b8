//! Two-channel sampling: stacked recovery, the subband-wise rewrite and
//! two-channel greedy selection.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::mse_db;
use super::neumann::{initial_step, NeumannIter};
use super::single::{argmax, mean_diag, ChannelSpec, SelectionOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, Conditioning, PINV_RTOL};

/// Condition bound for the diagonal blocks in the subband rewrite.
pub const SUBBAND_COND_MAX: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct McsSystem {
    channels: [ChannelSpec; 2],
    critically_sampled: bool,
}

impl McsSystem {
    /// `critically_sampled` asserts that channel 1 samples exactly the
    /// complement of channel 0's set; this is checked.
    pub fn new(ch0: ChannelSpec, ch1: ChannelSpec, critically_sampled: bool) -> Result<Self> {
        if ch0.n() != ch1.n() {
            return Err(Error::DimensionMismatch {
                expected: ch0.n(),
                actual: ch1.n(),
            });
        }
        if critically_sampled {
            let mut s1 = ch1.sampling_set().to_vec();
            s1.sort_unstable();
            if s1 != linalg::complement(ch0.n(), ch0.sampling_set()) {
                return Err(Error::InvalidParameter(
                    "channel 1 set is not the complement of channel 0 set".into(),
                ));
            }
        }
        Ok(McsSystem {
            channels: [ch0, ch1],
            critically_sampled,
        })
    }

    /// Critically sampled system on `m0` and its complement.
    pub fn critical(ch0: ChannelSpec, ch1: ChannelSpec, m0: Vec<usize>) -> Result<Self> {
        let m1 = linalg::complement(ch0.n(), &m0);
        McsSystem::new(ch0.with_sampling_set(m0)?, ch1.with_sampling_set(m1)?, true)
    }

    pub fn channel(&self, l: usize) -> &ChannelSpec {
        &self.channels[l]
    }

    pub fn channels(&self) -> &[ChannelSpec; 2] {
        &self.channels
    }

    pub fn is_critically_sampled(&self) -> bool {
        self.critically_sampled
    }

    pub fn n(&self) -> usize {
        self.channels[0].n()
    }

    /// `(K_0, K_1)`
    pub fn generator_widths(&self) -> (usize, usize) {
        (
            self.channels[0].generator().ncols(),
            self.channels[1].generator().ncols(),
        )
    }

    /// Stacked samples `[S_0^T x; S_1^T x]`.
    pub fn sample(&self, x: &DVector<f64>) -> Result<[DVector<f64>; 2]> {
        Ok([
            super::apply_sampling(&self.channels[0], x)?,
            super::apply_sampling(&self.channels[1], x)?,
        ])
    }

    /// `[A_0 A_1]`
    pub fn stacked_generator(&self) -> DMatrix<f64> {
        let (a0, a1) = (self.channels[0].generator(), self.channels[1].generator());
        let mut a = DMatrix::zeros(self.n(), a0.ncols() + a1.ncols());
        a.columns_mut(0, a0.ncols()).copy_from(a0);
        a.columns_mut(a0.ncols(), a1.ncols()).copy_from(a1);
        a
    }

    /// `S_l^T A_j`
    pub fn cross_block(&self, l: usize, j: usize) -> Result<DMatrix<f64>> {
        self.channels[l].sample_columns(self.channels[j].generator())
    }
}

/// Block matrix `[[S_0^T A_0, S_0^T A_1], [S_1^T A_0, S_1^T A_1]]` and its
/// truncated pseudoinverse.
#[derive(Debug, Clone)]
pub struct CorrectionMatrix {
    pub m_sa: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    pub conditioning: Conditioning,
    /// `blocks[l][j]` describes `S_l^T A_j`.
    pub blocks: [[Conditioning; 2]; 2],
}

pub fn assemble_correction(sys: &McsSystem) -> Result<CorrectionMatrix> {
    assemble_correction_with(sys, PINV_RTOL)
}

/// [`assemble_correction`] with truncation at `rtol * sigma_max`.
pub fn assemble_correction_with(sys: &McsSystem, rtol: f64) -> Result<CorrectionMatrix> {
    let b = [
        [sys.cross_block(0, 0)?, sys.cross_block(0, 1)?],
        [sys.cross_block(1, 0)?, sys.cross_block(1, 1)?],
    ];
    let (r0, r1) = (b[0][0].nrows(), b[1][0].nrows());
    let (k0, k1) = sys.generator_widths();
    let mut m = DMatrix::zeros(r0 + r1, k0 + k1);
    m.view_mut((0, 0), (r0, k0)).copy_from(&b[0][0]);
    m.view_mut((0, k0), (r0, k1)).copy_from(&b[0][1]);
    m.view_mut((r0, 0), (r1, k0)).copy_from(&b[1][0]);
    m.view_mut((r0, k0), (r1, k1)).copy_from(&b[1][1]);
    let p = linalg::pinv(&m, rtol);
    let cond = |x: &DMatrix<f64>| linalg::conditioning(x, rtol);
    Ok(CorrectionMatrix {
        blocks: [
            [cond(&b[0][0]), cond(&b[0][1])],
            [cond(&b[1][0]), cond(&b[1][1])],
        ],
        m_sa: m,
        pinv: p.matrix,
        conditioning: p.conditioning,
    })
}

#[derive(Debug, Clone)]
pub struct McsRecovery {
    pub signal: DVector<f64>,
    pub conditioning: Conditioning,
    pub blocks: [[Conditioning; 2]; 2],
}

/// `[A_0 A_1] M_{S,A}^+ [y_0; y_1]`, with one step of iterative refinement.
pub fn recover_mcs_samples(
    sys: &McsSystem,
    corr: &CorrectionMatrix,
    y: &[DVector<f64>; 2],
) -> Result<McsRecovery> {
    let rows = [
        sys.channel(0).sampling_set().len(),
        sys.channel(1).sampling_set().len(),
    ];
    for l in 0..2 {
        if y[l].len() != rows[l] {
            return Err(Error::DimensionMismatch {
                expected: rows[l],
                actual: y[l].len(),
            });
        }
    }
    let stacked =
        DVector::from_iterator(rows[0] + rows[1], y[0].iter().chain(y[1].iter()).copied());
    let mut d = &corr.pinv * &stacked;
    d += &corr.pinv * (&stacked - &corr.m_sa * &d);
    Ok(McsRecovery {
        signal: sys.stacked_generator() * d,
        conditioning: corr.conditioning,
        blocks: corr.blocks,
    })
}

/// Reconstruction with its error against the known `x`.
#[derive(Debug, Clone)]
pub struct McsReport {
    pub recovery: McsRecovery,
    pub error_norm: f64,
    pub mse_db: f64,
}

/// Samples `x` through both channels and recovers it, then corrects once
/// with the recovery of the resampled residual.
pub fn recover_mcs(sys: &McsSystem, x: &DVector<f64>) -> Result<McsReport> {
    if x.len() != sys.n() {
        return Err(Error::DimensionMismatch {
            expected: sys.n(),
            actual: x.len(),
        });
    }
    let corr = assemble_correction(sys)?;
    let mut recovery = recover_mcs_samples(sys, &corr, &sys.sample(x)?)?;
    let residual = x - &recovery.signal;
    recovery.signal += recover_mcs_samples(sys, &corr, &sys.sample(&residual)?)?.signal;
    Ok(McsReport {
        error_norm: (x - &recovery.signal).norm(),
        mse_db: mse_db(x, &recovery.signal)?,
        recovery,
    })
}

/// Modified sampling operators
/// `S_A^T = S_0^T - S_0^T A_1 (S_1^T A_1)^{-1} S_1^T` and
/// `S_B^T = S_1^T - S_1^T A_0 (S_0^T A_0)^{-1} S_0^T`.
///
/// Only the small cross blocks and the LU factors of the diagonal blocks
/// are stored; applying either operator costs two channel samplings.
#[derive(Debug, Clone)]
pub struct SubbandOperators {
    sys: McsSystem,
    /// `S_l^T A_j`
    cross: [[DMatrix<f64>; 2]; 2],
    diag_lu: [nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>; 2],
    pub diag_cond: [f64; 2],
}

pub fn subband_operators(sys: &McsSystem) -> Result<SubbandOperators> {
    let cross = [
        [sys.cross_block(0, 0)?, sys.cross_block(0, 1)?],
        [sys.cross_block(1, 0)?, sys.cross_block(1, 1)?],
    ];
    let mut diag_cond = [0.0; 2];
    for l in 0..2 {
        let b = &cross[l][l];
        if b.nrows() != b.ncols() {
            return Err(Error::NotInvertible(format!(
                "S_{l}^T A_{l} is {}x{}, not square",
                b.nrows(),
                b.ncols()
            )));
        }
        let c = linalg::conditioning(b, 0.0);
        if !(c.cond <= SUBBAND_COND_MAX) {
            return Err(Error::NotInvertible(format!(
                "S_{l}^T A_{l} has condition number {:.3e}",
                c.cond
            )));
        }
        diag_cond[l] = c.cond;
    }
    let diag_lu = [cross[0][0].clone().lu(), cross[1][1].clone().lu()];
    Ok(SubbandOperators {
        sys: sys.clone(),
        cross,
        diag_lu,
        diag_cond,
    })
}

impl SubbandOperators {
    fn solve_diag(&self, l: usize, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.diag_lu[l]
            .solve(b)
            .ok_or_else(|| Error::NotInvertible(format!("S_{l}^T A_{l} is singular")))
    }

    /// Applies to the columns of `x`: `S_l^T x - S_l^T A_o (S_o^T A_o)^{-1} S_o^T x`
    /// with `o` the other channel. `l = 0` gives `S_A^T`, `l = 1` gives `S_B^T`.
    pub fn apply_columns(&self, l: usize, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let o = 1 - l;
        let own = self.sys.channel(l).sample_columns(x)?;
        let other = self.sys.channel(o).sample_columns(x)?;
        Ok(own - &self.cross[l][o] * self.solve_diag(o, &other)?)
    }

    pub fn apply(&self, l: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        let m = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
        Ok(self.apply_columns(l, &m)?.column(0).into_owned())
    }

    /// Dense `S_A^T` (`l = 0`) or `S_B^T` (`l = 1`).
    pub fn materialize(&self, l: usize) -> Result<DMatrix<f64>> {
        self.apply_columns(l, &DMatrix::identity(self.sys.n(), self.sys.n()))
    }

    /// `S_A^T A_0` (`l = 0`) or `S_B^T A_1` (`l = 1`), formed from the
    /// stored blocks: `K_l x K_l`.
    pub fn reduced_block(&self, l: usize) -> Result<DMatrix<f64>> {
        let o = 1 - l;
        Ok(&self.cross[l][l] - &self.cross[l][o] * self.solve_diag(o, &self.cross[o][l])?)
    }
}

/// `A_0 (S_A^T A_0)^+ S_A^T x + A_1 (S_B^T A_1)^+ S_B^T x`, refined once by
/// resampling the estimate through both operators.
pub fn recover_mcs_subband(ops: &SubbandOperators, x: &DVector<f64>) -> Result<DVector<f64>> {
    let mut pinv = Vec::with_capacity(2);
    let mut coef = Vec::with_capacity(2);
    for l in 0..2 {
        let p = linalg::pinv(&ops.reduced_block(l)?, PINV_RTOL).matrix;
        coef.push(&p * ops.apply(l, x)?);
        pinv.push(p);
    }
    let synth = |coef: &[DVector<f64>]| {
        let mut out = DVector::zeros(ops.sys.n());
        for (l, c) in coef.iter().enumerate() {
            out += ops.sys.channel(l).generator() * c;
        }
        out
    };
    let residual = x - synth(&coef);
    for l in 0..2 {
        coef[l] += &pinv[l] * ops.apply(l, &residual)?;
    }
    Ok(synth(&coef))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SssMode {
    /// Direct Schur complements with incremental factor updates.
    #[default]
    Exact,
    /// Iterative inner solves with a capped iteration count.
    Neumann,
}

impl std::str::FromStr for SssMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SssMode::Exact),
            "neumann" => Ok(SssMode::Neumann),
            _ => Err(Error::InvalidParameter(format!("unknown SSS mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoChannelSelection {
    /// Channel 0 set in pick order.
    pub order: Vec<usize>,
    /// Channel 1 set, sorted.
    pub complement: Vec<usize>,
    pub scores: Vec<f64>,
    pub ridge: [f64; 2],
    pub denominator_floor: f64,
    /// Accepted picks whose denominator sat at the floor.
    pub floor_hits: usize,
    pub fallbacks: usize,
}

impl TwoChannelSelection {
    pub fn sorted(&self) -> Vec<usize> {
        let mut s = self.order.clone();
        s.sort_unstable();
        s
    }
}

/// Greedy maximization of `det(Z0_M) det(Z1_{M^c})` one vertex at a time,
/// scoring candidate `y` by the ratio of the Schur complement of `Z0` over
/// `M` to that of `Z1` over `V \ (M + y)`.
pub fn sss_two_channel(
    z0: &DMatrix<f64>,
    z1: &DMatrix<f64>,
    k: usize,
    mode: SssMode,
    opts: SelectionOptions,
) -> Result<TwoChannelSelection> {
    let n = linalg::ensure_square(z0)?;
    if linalg::ensure_square(z1)? != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: z1.nrows(),
        });
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("K = {k} exceeds N = {n}")));
    }
    let ridge = [opts.ridge_for(z0), opts.ridge_for(z1)];
    let floor = 1e-12 * mean_diag(z1);
    let mut state = TwoChannelState {
        z0,
        z1,
        ridge,
        floor,
        order: Vec::with_capacity(k),
        in_m: vec![false; n],
        factor: Vec::with_capacity(k),
        num: (0..n).map(|i| z0[(i, i)] + ridge[0]).collect(),
    };
    let mut scores = Vec::with_capacity(k);
    let mut floor_hits = 0;
    let mut fallbacks = 0;
    for _ in 0..k {
        let cand = match mode {
            SssMode::Exact => state.exact_scores()?,
            SssMode::Neumann => {
                let (c, f) = state.neumann_scores(opts.beta_for(z0))?;
                fallbacks += f;
                c
            }
        };
        let (p, score) = argmax(&cand.iter().map(|c| c.map(|s| s.0)).collect::<Vec<_>>())
            .expect("k <= n leaves a candidate");
        if cand[p].is_some_and(|c| c.1) {
            floor_hits += 1;
        }
        scores.push(score);
        state.accept(p);
    }
    let complement = linalg::complement(n, &state.order);
    Ok(TwoChannelSelection {
        order: state.order,
        complement,
        scores,
        ridge,
        denominator_floor: floor,
        floor_hits,
        fallbacks,
    })
}

struct TwoChannelState<'a> {
    z0: &'a DMatrix<f64>,
    z1: &'a DMatrix<f64>,
    ridge: [f64; 2],
    floor: f64,
    order: Vec<usize>,
    in_m: Vec<bool>,
    /// Pivoted Cholesky columns of `Z0 + ridge I` over the picks.
    factor: Vec<DVector<f64>>,
    /// Schur complement of `Z0 + ridge I` over the picks, per vertex.
    num: Vec<f64>,
}

type Scored = Option<(f64, bool)>;

impl TwoChannelState<'_> {
    fn n(&self) -> usize {
        self.in_m.len()
    }

    fn rest(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.in_m[i]).collect()
    }

    fn ratio(&self, num: f64, den: f64) -> (f64, bool) {
        if den <= self.floor {
            (num / self.floor, true)
        } else {
            (num / den, false)
        }
    }

    fn z1_rest(&self, rest: &[usize]) -> DMatrix<f64> {
        let mut z = linalg::submatrix(self.z1, rest, rest);
        for i in 0..rest.len() {
            z[(i, i)] += self.ridge[1];
        }
        z
    }

    /// With `C = V \ M`, the Schur complement of `Z1_C` at `y` over
    /// `C \ y` is `1 / [(Z1_C)^{-1}]_yy`.
    fn exact_scores(&self) -> Result<Vec<Scored>> {
        let rest = self.rest();
        let zc = self.z1_rest(&rest);
        let inv = match zc.clone().cholesky() {
            Some(c) => c.inverse(),
            None => zc
                .try_inverse()
                .ok_or_else(|| Error::Numerical("channel-1 block is singular".into()))?,
        };
        let mut out = vec![None; self.n()];
        for (i, &y) in rest.iter().enumerate() {
            out[y] = Some(self.ratio(self.num[y], 1.0 / inv[(i, i)]));
        }
        Ok(out)
    }

    fn neumann_scores(&self, gamma: f64) -> Result<(Vec<Scored>, usize)> {
        let rest = self.rest();
        let mut z0m = linalg::submatrix(self.z0, &self.order, &self.order);
        for i in 0..self.order.len() {
            z0m[(i, i)] += self.ridge[0];
        }
        let a0 = initial_step(&z0m);
        let evals: Vec<(usize, f64, bool, usize)> = rest
            .par_iter()
            .map(|&y| {
                let bar: Vec<usize> = rest.iter().copied().filter(|&v| v != y).collect();
                let z1b = self.z1_rest(&bar);
                let b0 = DVector::from_iterator(
                    self.order.len(),
                    self.order.iter().map(|&m| self.z0[(m, y)]),
                );
                let b1 = DVector::from_iterator(bar.len(), bar.iter().map(|&m| self.z1[(m, y)]));
                let (eps, theta, fallbacks) = two_channel_neumann(&z0m, a0, &b0, &z1b, &b1, gamma)?;
                let num = self.z0[(y, y)] + self.ridge[0] - b0.dot(&eps);
                let den = self.z1[(y, y)] + self.ridge[1] - b1.dot(&theta);
                let (s, floored) = self.ratio(num, den);
                Ok((y, s, floored, fallbacks))
            })
            .collect::<Result<_>>()?;
        let mut out = vec![None; self.n()];
        let mut fallbacks = 0;
        for (y, s, floored, f) in evals {
            out[y] = Some((s, floored));
            fallbacks += f;
        }
        Ok((out, fallbacks))
    }

    fn accept(&mut self, p: usize) {
        let n = self.n();
        let pivot = self.num[p].max(f64::MIN_POSITIVE).sqrt();
        let col = DVector::from_fn(n, |i, _| {
            let mut v = self.z0[(i, p)] + if i == p { self.ridge[0] } else { 0.0 };
            for f in &self.factor {
                v -= f[i] * f[p];
            }
            v / pivot
        });
        for i in 0..n {
            self.num[i] -= col[i] * col[i];
        }
        self.factor.push(col);
        self.in_m[p] = true;
        self.order.push(p);
    }
}

/// Runs both inner iterations in lockstep while both stopping norms are
/// at least `gamma`, then solves directly whichever has not converged.
fn two_channel_neumann(
    z0m: &DMatrix<f64>,
    a0: f64,
    b0: &DVector<f64>,
    z1b: &DMatrix<f64>,
    b1: &DVector<f64>,
    gamma: f64,
) -> Result<(DVector<f64>, DVector<f64>, usize)> {
    let mut e = NeumannIter::new(z0m, b0.clone(), a0);
    let mut t = NeumannIter::new(z1b, b1.clone(), initial_step(z1b));
    let cap = 10 * b0.len().max(b1.len());
    let mut steps = 0;
    // an empty system imposes no condition
    let open = |it: &NeumannIter, b: &DVector<f64>| b.is_empty() || it.stopping_norm() >= gamma;
    while open(&e, b0) && open(&t, b1) && !(b0.is_empty() && b1.is_empty()) && steps < cap {
        e.step();
        t.step();
        steps += 1;
    }
    let mut fallbacks = 0;
    let mut finish =
        |it: NeumannIter, z: &DMatrix<f64>, b: &DVector<f64>| -> Result<DVector<f64>> {
            if b.is_empty() || it.stopping_norm() < gamma {
                Ok(it.into_solution())
            } else {
                fallbacks += 1;
                linalg::solve_spd(z, b)
            }
        };
    let eps = finish(e, z0m, b0)?;
    let theta = finish(t, z1b, b1)?;
    Ok((eps, theta, fallbacks))
}
