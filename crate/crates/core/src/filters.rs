//! Spectral kernels and graph filters: exact application through an
//! eigendecomposition and matrix-free Chebyshev polynomial application.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::spectral::SpectralDecomposition;

/// Number of grid points used to measure polynomial fit error.
pub const FIT_GRID: usize = 1000;

#[derive(Clone)]
enum Shape {
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Response tabulated per eigenvalue index (ideal kernels).
    Indexed(Vec<f64>),
}

/// A scalar function of graph frequency.
#[derive(Clone)]
pub struct SpectralKernel {
    label: String,
    shape: Shape,
}

impl fmt::Debug for SpectralKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralKernel")
            .field("label", &self.label)
            .finish()
    }
}

impl SpectralKernel {
    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SpectralKernel {
            label: label.into(),
            shape: Shape::Function(Arc::new(f)),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn(format!("const({c})"), move |_| c)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Value at frequency `lambda`; `None` for index-set kernels, which
    /// only have meaning relative to a decomposition.
    pub fn eval(&self, lambda: f64) -> Option<f64> {
        match &self.shape {
            Shape::Function(f) => Some(f(lambda)),
            Shape::Indexed(_) => None,
        }
    }

    /// Kernel response at every eigenvalue of `d`, in eigenvalue order.
    pub fn response(&self, d: &SpectralDecomposition) -> DVector<f64> {
        match &self.shape {
            Shape::Function(f) => d.evals().map(|l| f(l)),
            Shape::Indexed(values) => DVector::from_iterator(
                d.n(),
                (0..d.n()).map(|i| values.get(i).copied().unwrap_or(0.0)),
            ),
        }
    }

    /// `c * k(lambda)`
    pub fn scaled(&self, c: f64) -> Self {
        let label = format!("{c}*{}", self.label);
        let shape = match &self.shape {
            Shape::Function(f) => {
                let f = f.clone();
                Shape::Function(Arc::new(move |l| c * f(l)))
            }
            Shape::Indexed(values) => Shape::Indexed(values.iter().map(|v| c * v).collect()),
        };
        SpectralKernel { label, shape }
    }
}

/// Meyer half-band pair on `[0, lambda_max]`: the low-pass is 1 below
/// `lambda_max / 4`, 0 above `lambda_max / 2`, and `high = sqrt(1 - low^2)`.
pub fn meyer_pair(lambda_max: f64) -> (SpectralKernel, SpectralKernel) {
    assert!(lambda_max > 0.0, "lambda_max must be positive");
    let low = move |l: f64| meyer_low(l / lambda_max);
    let high = move |l: f64| (1.0 - meyer_low(l / lambda_max).powi(2)).max(0.0).sqrt();
    (
        SpectralKernel::from_fn("meyer_low", low),
        SpectralKernel::from_fn("meyer_high", high),
    )
}

fn meyer_nu(s: f64) -> f64 {
    s.powi(4) * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s.powi(3))
}

fn meyer_low(t: f64) -> f64 {
    if t <= 0.25 {
        1.0
    } else if t <= 0.5 {
        (PI / 2.0 * meyer_nu(4.0 * t - 1.0)).cos()
    } else {
        0.0
    }
}

/// Mexican-hat wavelet `(s lambda) exp(1 - s lambda)`, peak value 1 at `1/s`.
pub fn mexican_hat(scale: f64) -> SpectralKernel {
    SpectralKernel::from_fn(format!("mexican_hat({scale})"), move |l| {
        let x = scale * l;
        x * (1.0 - x).exp()
    })
}

/// Low-pass scaling kernel `exp(-(2 lambda / lambda_max)^4)` that completes
/// the Mexican-hat pair below the wavelet's pass band.
pub fn mexican_hat_scaling(lambda_max: f64) -> SpectralKernel {
    SpectralKernel::from_fn("mexican_hat_scaling", move |l| {
        (-(2.0 * l / lambda_max).powi(4)).exp()
    })
}

/// Two-channel Mexican-hat analysis pair: the scaling low-pass and the
/// wavelet at scale `4 / (3 lambda_max)` (peak at `3 lambda_max / 4`).
pub fn mexican_hat_pair(lambda_max: f64) -> (SpectralKernel, SpectralKernel) {
    assert!(lambda_max > 0.0, "lambda_max must be positive");
    (
        mexican_hat_scaling(lambda_max),
        mexican_hat(4.0 / (3.0 * lambda_max)),
    )
}

/// Indicator kernel on the eigenvalue indices `set` of an `n`-vertex graph.
pub fn ideal_kernel(label: impl Into<String>, n: usize, set: &[usize]) -> Result<SpectralKernel> {
    let mut values = vec![0.0; n];
    for &i in set {
        if i >= n {
            return Err(Error::InvalidParameter(format!(
                "index {i} out of range for {n}"
            )));
        }
        values[i] = 1.0;
    }
    Ok(SpectralKernel {
        label: label.into(),
        shape: Shape::Indexed(values),
    })
}

/// Complementary ideal pair: `low` on `low_set`, `high` on the rest.
pub fn ideal_pair(n: usize, low_set: &[usize]) -> Result<(SpectralKernel, SpectralKernel)> {
    let low = ideal_kernel("ideal_low", n, low_set)?;
    let high_set = crate::linalg::complement(n, low_set);
    Ok((low, ideal_kernel("ideal_high", n, &high_set)?))
}

/// Ideal pair on explicit index sets, which must not overlap.
pub fn ideal_disjoint_pair(
    n: usize,
    low_set: &[usize],
    high_set: &[usize],
) -> Result<(SpectralKernel, SpectralKernel)> {
    let low = ideal_kernel("ideal_low", n, low_set)?;
    let high = ideal_kernel("ideal_high", n, high_set)?;
    if let (Shape::Indexed(a), Shape::Indexed(b)) = (&low.shape, &high.shape) {
        if let Some(i) = (0..n).find(|&i| a[i] != 0.0 && b[i] != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ideal index sets overlap at {i}"
            )));
        }
    }
    Ok((low, high))
}

/// `U diag(k(lambda)) U^T`
pub fn exact_filter(d: &SpectralDecomposition, k: &SpectralKernel) -> DMatrix<f64> {
    d.synthesize(&k.response(d))
}

/// Chebyshev interpolant of a kernel on `[0, lambda_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevFilter {
    /// Coefficients in the halved-`c0` convention:
    /// `p(x) = c0 / 2 + sum_k c_k T_k(x)`.
    pub coeffs: Vec<f64>,
    pub lambda_max: f64,
    /// Sup-norm error against the kernel on a uniform grid of the interval.
    pub fit_error: f64,
}

impl ChebyshevFilter {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluates the polynomial at `lambda` (Clenshaw recurrence).
    pub fn eval(&self, lambda: f64) -> f64 {
        let a = self.lambda_max / 2.0;
        let x = (lambda - a) / a;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0] / 2.0
    }
}

/// Interpolates `k` at `order + 1` Chebyshev nodes mapped to `[0, lambda_max]`.
pub fn chebyshev_fit(k: &SpectralKernel, order: usize, lambda_max: f64) -> Result<ChebyshevFilter> {
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_max = {lambda_max}"
        )));
    }
    let f = match &k.shape {
        Shape::Function(f) => f.clone(),
        Shape::Indexed(_) => return Err(Error::IndexKernel(k.label.clone())),
    };
    let m = order + 1;
    let a = lambda_max / 2.0;
    let samples: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let theta = PI * (j as f64 + 0.5) / m as f64;
            (theta, f(a * theta.cos() + a))
        })
        .collect();
    let coeffs: Vec<f64> = (0..m)
        .map(|kk| {
            2.0 / m as f64
                * samples
                    .iter()
                    .map(|&(theta, v)| v * (kk as f64 * theta).cos())
                    .sum::<f64>()
        })
        .collect();
    let mut filter = ChebyshevFilter {
        coeffs,
        lambda_max,
        fit_error: 0.0,
    };
    filter.fit_error = (0..FIT_GRID)
        .map(|i| {
            let l = lambda_max * i as f64 / (FIT_GRID - 1) as f64;
            (filter.eval(l) - f(l)).abs()
        })
        .fold(0.0, f64::max);
    Ok(filter)
}

/// Applies `p(L) x` with the three-term recurrence, touching `op` only
/// through matrix-vector products.
pub fn chebyshev_apply(
    op: &dyn LinearOperator,
    f: &ChebyshevFilter,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = op.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let bound = op.spectrum_bound();
    if bound > f.lambda_max * (1.0 + 1e-9) {
        return Err(Error::IntervalViolation {
            interval: f.lambda_max,
            bound,
        });
    }
    let a = f.lambda_max / 2.0;
    let c = &f.coeffs;
    // shifted(v) = (L - aI) v / a
    let shifted = |v: &DVector<f64>| -> DVector<f64> {
        let mut y = op.apply(v);
        y.axpy(-a, v, 1.0);
        y / a
    };
    let mut out = x * (c[0] / 2.0);
    if c.len() == 1 {
        return Ok(out);
    }
    let mut t_prev = x.clone();
    let mut t_cur = shifted(x);
    out.axpy(c[1], &t_cur, 1.0);
    for &ck in &c[2..] {
        let mut t_next = shifted(&t_cur) * 2.0;
        t_next -= &t_prev;
        out.axpy(ck, &t_next, 1.0);
        t_prev = t_cur;
        t_cur = t_next;
    }
    Ok(out)
}

/// A graph filter `G` as used by a sampling channel.
#[derive(Clone)]
pub enum GraphFilter {
    Identity,
    /// Materialized `N x N` matrix (e.g. from [`exact_filter`]).
    Dense(Arc<DMatrix<f64>>),
    Polynomial {
        op: Arc<dyn LinearOperator>,
        filter: ChebyshevFilter,
    },
}

impl fmt::Debug for GraphFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFilter::Identity => write!(f, "Identity"),
            GraphFilter::Dense(m) => write!(f, "Dense({}x{})", m.nrows(), m.ncols()),
            GraphFilter::Polynomial { filter, .. } => {
                write!(f, "Polynomial(order {})", filter.order())
            }
        }
    }
}

impl GraphFilter {
    pub fn dense(m: DMatrix<f64>) -> Self {
        GraphFilter::Dense(Arc::new(m))
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            GraphFilter::Identity => Ok(x.clone()),
            GraphFilter::Dense(m) => {
                if m.ncols() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: m.ncols(),
                        actual: x.len(),
                    });
                }
                Ok(m.as_ref() * x)
            }
            GraphFilter::Polynomial { op, filter } => chebyshev_apply(op.as_ref(), filter, x),
        }
    }

    /// Filters every column of `a`.
    pub fn apply_columns(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            GraphFilter::Identity => Ok(a.clone()),
            GraphFilter::Dense(m) => {
                if m.ncols() != a.nrows() {
                    return Err(Error::DimensionMismatch {
                        expected: m.ncols(),
                        actual: a.nrows(),
                    });
                }
                Ok(m.as_ref() * a)
            }
            GraphFilter::Polynomial { .. } => {
                let cols = (0..a.ncols())
                    .into_par_iter()
                    .map(|j| self.apply(&a.column(j).into_owned()))
                    .collect::<Result<Vec<_>>>()?;
                if cols.is_empty() {
                    return Ok(DMatrix::zeros(a.nrows(), 0));
                }
                Ok(DMatrix::from_columns(&cols))
            }
        }
    }
}
