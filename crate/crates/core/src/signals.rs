//! Synthetic full-band signals: piecewise smooth (cluster indicators plus a
//! bandlimited part) and union of bandpass components.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{meyer_pair, SpectralKernel};
use crate::rng::{rng, Stream};
use crate::spectral::{spectral_clusters, SpectralDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalModel {
    Pws,
    Ubp,
}

impl std::str::FromStr for SignalModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pws" => Ok(SignalModel::Pws),
            "ubp" => Ok(SignalModel::Ubp),
            _ => Err(Error::InvalidParameter(format!(
                "unknown signal model '{s}'"
            ))),
        }
    }
}

/// Generator matrices of the two signal components.
#[derive(Debug, Clone)]
pub struct Generators {
    pub model: SignalModel,
    pub a: [DMatrix<f64>; 2],
    /// Cluster vertex sets behind the indicator columns (piecewise smooth only).
    pub clusters: Option<Vec<Vec<usize>>>,
}

impl Generators {
    pub fn n(&self) -> usize {
        self.a[0].nrows()
    }
}

/// `A_0` holds the indicators of `p` spectral clusters, `A_1` the first `bw`
/// eigenvectors.
pub fn pws_generators(
    d: &SpectralDecomposition,
    p: usize,
    bw: usize,
    seed: u64,
) -> Result<Generators> {
    if bw == 0 || bw > d.n() {
        return Err(Error::InvalidParameter(format!(
            "bandwidth {bw} outside [1, {}]",
            d.n()
        )));
    }
    let clusters = spectral_clusters(d, p, seed)?;
    let mut a0 = DMatrix::zeros(d.n(), p);
    for (c, set) in clusters.iter().enumerate() {
        for &v in set {
            a0[(v, c)] = 1.0;
        }
    }
    Ok(Generators {
        model: SignalModel::Pws,
        a: [a0, d.evecs().columns(0, bw).into_owned()],
        clusters: Some(clusters),
    })
}

/// `A_l = U G_l(Lambda)` for the given kernel pair.
pub fn ubp_generators_with(
    d: &SpectralDecomposition,
    kernels: (&SpectralKernel, &SpectralKernel),
) -> Generators {
    let shaped = |k: &SpectralKernel| {
        let r = k.response(d);
        let mut a = d.evecs().clone();
        for (j, mut col) in a.column_iter_mut().enumerate() {
            col *= r[j];
        }
        a
    };
    Generators {
        model: SignalModel::Ubp,
        a: [shaped(kernels.0), shaped(kernels.1)],
        clusters: None,
    }
}

/// Band-pass generators from the Meyer pair on `[0, lambda_max]`.
pub fn ubp_generators(d: &SpectralDecomposition) -> Generators {
    let (low, high) = meyer_pair(d.lambda_max());
    ubp_generators_with(d, (&low, &high))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalDraw {
    pub x: DVector<f64>,
    /// `A_l d_l` per component.
    pub components: [DVector<f64>; 2],
    pub coefficients: [DVector<f64>; 2],
    pub seed: u64,
}

impl SignalDraw {
    pub fn from_coefficients(
        gens: &Generators,
        coefficients: [DVector<f64>; 2],
        seed: u64,
    ) -> Result<Self> {
        for (c, a) in coefficients.iter().zip(&gens.a) {
            if c.len() != a.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: a.ncols(),
                    actual: c.len(),
                });
            }
        }
        let components = [&gens.a[0] * &coefficients[0], &gens.a[1] * &coefficients[1]];
        Ok(SignalDraw {
            x: &components[0] + &components[1],
            components,
            coefficients,
            seed,
        })
    }
}

/// Standard normal coefficients for both components.
pub fn draw(gens: &Generators, seed: u64) -> SignalDraw {
    let mut r = rng(seed, Stream::Signal);
    let mut coeffs = |k: usize| DVector::from_fn(k, |_, _| r.sample::<f64, _>(StandardNormal));
    let c0 = coeffs(gens.a[0].ncols());
    let c1 = coeffs(gens.a[1].ncols());
    SignalDraw::from_coefficients(gens, [c0, c1], seed).expect("widths match by construction")
}
