mod common;

use std::sync::Arc;

use approx::assert_relative_eq;
use graph_mcs::filters::{
    chebyshev_apply, chebyshev_fit, exact_filter, ideal_disjoint_pair, ideal_kernel, ideal_pair,
    mexican_hat, mexican_hat_pair, meyer_pair, ChebyshevFilter, GraphFilter, SpectralKernel,
    FIT_GRID,
};
use graph_mcs::graph::{random_sensor_graph, Graph, LaplacianKind};
use graph_mcs::operator::{Bounded, LinearOperator};
use graph_mcs::spectral::{eigendecompose, SpectralDecomposition};
use graph_mcs::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn sensor(n: usize, seed: u64) -> (Graph, SpectralDecomposition) {
    let g = random_sensor_graph(n, 6, seed).unwrap();
    let d = eigendecompose(&g.laplacian(LaplacianKind::Combinatorial).unwrap(), None).unwrap();
    (g, d)
}

fn bounded(g: &Graph, d: &SpectralDecomposition) -> Bounded<graph_mcs::operator::CsrMatrix> {
    Bounded {
        inner: g.laplacian_sparse(LaplacianKind::Combinatorial).unwrap(),
        bound: d.lambda_max(),
    }
}

/// `sum' c_k cos(k acos x)` evaluated term by term.
fn cheb_eval_direct(f: &ChebyshevFilter, lambda: f64) -> f64 {
    let a = f.lambda_max / 2.0;
    let t = ((lambda - a) / a).clamp(-1.0, 1.0).acos();
    f.coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k == 0 {
                c / 2.0
            } else {
                c * (k as f64 * t).cos()
            }
        })
        .sum()
}

fn grid_error(k: &SpectralKernel, f: &ChebyshevFilter) -> f64 {
    (0..FIT_GRID)
        .map(|i| {
            let l = f.lambda_max * i as f64 / (FIT_GRID - 1) as f64;
            (k.eval(l).unwrap() - cheb_eval_direct(f, l)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn meyer_endpoints_and_complementarity() {
    let lmax = 3.7;
    let (lo, hi) = meyer_pair(lmax);
    assert_eq!(lo.eval(0.0), Some(1.0));
    assert_eq!(hi.eval(0.0), Some(0.0));
    assert_eq!(lo.eval(lmax), Some(0.0));
    assert_eq!(hi.eval(lmax), Some(1.0));
    let mid = lmax * 0.375;
    assert_relative_eq!(
        lo.eval(mid).unwrap().powi(2) + hi.eval(mid).unwrap().powi(2),
        1.0,
        epsilon = 1e-12
    );
    for i in 0..1000 {
        let l = lmax * i as f64 / 999.0;
        let (a, b) = (lo.eval(l).unwrap(), hi.eval(l).unwrap());
        assert!(a >= 0.0 && b >= 0.0);
        assert!((a * a + b * b - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn mexican_hat_peaks() {
    let lmax = 5.0;
    let s0 = mexican_hat(4.0 / lmax);
    let s1 = mexican_hat(4.0 / (3.0 * lmax));
    assert_relative_eq!(s0.eval(lmax / 4.0).unwrap(), 1.0, epsilon = 1e-15);
    assert_relative_eq!(s1.eval(0.75 * lmax).unwrap(), 1.0, epsilon = 1e-15);
    assert_eq!(s0.eval(0.0), Some(0.0));
    let (c0, c1) = mexican_hat_pair(lmax);
    assert_relative_eq!(c1.eval(0.75 * lmax).unwrap(), 1.0, epsilon = 1e-15);
    assert_eq!(c0.eval(0.0), Some(1.0));
    for i in 0..=100 {
        let l = lmax * i as f64 / 100.0;
        for k in [&c0, &c1, &s0] {
            let v = k.eval(l).unwrap();
            assert!(v.is_finite() && v >= 0.0);
        }
    }
}

#[test]
fn ideal_kernels_on_path() {
    let g = Graph::from_edges(8, (0..7).map(|i| (i, i + 1, 1.0))).unwrap();
    let d = eigendecompose(&g.laplacian(LaplacianKind::Combinatorial).unwrap(), None).unwrap();
    let (lo, hi) = ideal_pair(8, &[0, 1, 2, 3]).unwrap();
    let in_gft = d.evecs().transpose() * exact_filter(&d, &lo) * d.evecs();
    let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![1., 1., 1., 1., 0., 0., 0., 0.]));
    assert!((in_gft - expect).amax() < 1e-12);
    let sum = lo.response(&d) + hi.response(&d);
    assert_eq!(sum, DVector::from_element(8, 1.0));
    assert!(lo
        .response(&d)
        .component_mul(&hi.response(&d))
        .iter()
        .all(|&v| v == 0.0));
    assert_eq!(lo.eval(1.0), None);

    assert!(ideal_disjoint_pair(8, &[0, 1, 2], &[2, 3]).is_err());
    assert!(ideal_disjoint_pair(8, &[0, 1], &[2, 3]).is_ok());
    assert!(ideal_pair(8, &[9]).is_err());
}

#[test]
fn exact_filter_spectral_calculus() {
    let (g, d) = sensor(32, 3);
    let l = g.laplacian(LaplacianKind::Combinatorial).unwrap();
    let id = exact_filter(&d, &SpectralKernel::constant(1.0));
    assert!((id - DMatrix::identity(32, 32)).amax() < 1e-9);
    let lin = exact_filter(&d, &SpectralKernel::from_fn("lambda", |x| x));
    assert!((lin - &l).norm() / l.norm() < 1e-8);
    let p = exact_filter(&d, &ideal_kernel("p", 32, &[0, 3, 5, 7]).unwrap());
    assert!((&p * &p - &p).amax() < 1e-9);
    assert!(graph_mcs::linalg::asymmetry(&p) < 1e-12);

    let (k1, k2) = meyer_pair(d.lambda_max());
    let k12 = {
        let (a, b) = (k1.clone(), k2.clone());
        SpectralKernel::from_fn("product", move |x| a.eval(x).unwrap() * b.eval(x).unwrap())
    };
    let prod = exact_filter(&d, &k1) * exact_filter(&d, &k2);
    assert!((prod - exact_filter(&d, &k12)).amax() < 1e-8);
}

#[test]
fn chebyshev_simple_fits() {
    for order in [0, 1, 5, 20] {
        let f = chebyshev_fit(&SpectralKernel::constant(1.0), order, 4.0).unwrap();
        assert_eq!(f.order(), order);
        assert_relative_eq!(f.coeffs[0], 2.0, epsilon = 1e-13);
        assert!(f.coeffs[1..].iter().all(|c| c.abs() < 1e-13));
        assert!((0..50).all(|i| (f.eval(4.0 * i as f64 / 49.0) - 1.0).abs() < 1e-13));
    }
    let lin = chebyshev_fit(&SpectralKernel::from_fn("lambda", |x| x), 1, 3.0).unwrap();
    assert!(lin.fit_error < 1e-12);
    assert!(chebyshev_fit(&SpectralKernel::constant(1.0), 3, 0.0).is_err());
    let ideal = ideal_kernel("i", 4, &[0]).unwrap();
    assert!(matches!(
        chebyshev_fit(&ideal, 3, 1.0),
        Err(Error::IndexKernel(_))
    ));
}

#[test]
fn chebyshev_fit_error_matches_recomputation() {
    let (_, d) = sensor(64, 1);
    let lmax = d.lambda_max();
    let (m0, m1) = meyer_pair(lmax);
    let (x0, x1) = mexican_hat_pair(lmax);
    for k in [m0, m1, x0, x1, mexican_hat(4.0 / lmax)] {
        let f = chebyshev_fit(&k, 50, lmax).unwrap();
        let direct = grid_error(&k, &f);
        assert!(f.fit_error < 1e-3, "{}: {}", k.label(), f.fit_error);
        assert!(
            (direct - f.fit_error).abs() <= 1e-12,
            "{} vs {}",
            direct,
            f.fit_error
        );
    }
}

#[test]
fn chebyshev_apply_matches_exact() {
    let (g, d) = sensor(64, 1);
    let op = bounded(&g, &d);
    let mut r = common::rng(3);
    let (lo, _) = meyer_pair(d.lambda_max());
    let f = chebyshev_fit(&lo, 50, d.lambda_max()).unwrap();
    let x = common::gaussian_vec(&mut r, 64);
    let exact = exact_filter(&d, &lo) * &x;
    let rel = (chebyshev_apply(&op, &f, &x).unwrap() - exact).norm() / x.norm();
    assert!(rel < 1e-3 && rel <= f.fit_error + 1e-9, "{rel}");

    let id = chebyshev_fit(&SpectralKernel::constant(1.0), 10, d.lambda_max()).unwrap();
    assert!((chebyshev_apply(&op, &id, &x).unwrap() - &x).amax() < 1e-9);
}

#[test]
fn chebyshev_interval_checks() {
    let (g, d) = sensor(32, 2);
    let sparse = g.laplacian_sparse(LaplacianKind::Combinatorial).unwrap();
    let f = chebyshev_fit(&SpectralKernel::constant(1.0), 4, d.lambda_max() / 2.0).unwrap();
    let x = DVector::from_element(32, 1.0);
    assert!(matches!(
        chebyshev_apply(&sparse, &f, &x),
        Err(Error::IntervalViolation { .. })
    ));
    // the Gershgorin bound always covers the spectrum
    let gb = sparse.spectrum_bound();
    assert!(gb >= d.lambda_max());
    let wide = chebyshev_fit(&SpectralKernel::constant(1.0), 4, gb).unwrap();
    assert!(chebyshev_apply(&sparse, &wide, &x).is_ok());
    assert!(chebyshev_apply(&sparse, &wide, &DVector::zeros(31)).is_err());
}

#[test]
fn graph_filter_variants_agree() {
    let (g, d) = sensor(32, 4);
    let (lo, _) = meyer_pair(d.lambda_max());
    let f = chebyshev_fit(&lo, 50, d.lambda_max()).unwrap();
    let poly = GraphFilter::Polynomial {
        op: Arc::new(bounded(&g, &d)),
        filter: f.clone(),
    };
    let dense = GraphFilter::dense(exact_filter(&d, &lo));
    let mut r = common::rng(4);
    let a = common::gaussian(&mut r, 32, 3);
    let pa = poly.apply_columns(&a).unwrap();
    let da = dense.apply_columns(&a).unwrap();
    for j in 0..3 {
        let diff = (pa.column(j) - da.column(j)).norm() / a.column(j).norm();
        assert!(diff <= f.fit_error + 1e-9);
    }
    assert_eq!(GraphFilter::Identity.apply_columns(&a).unwrap(), a);
    assert!(dense.apply(&DVector::zeros(5)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chebyshev_apply_is_linear(seed in 0u64..500, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let (g, d) = sensor(24, seed);
        let op = bounded(&g, &d);
        let (k, _) = mexican_hat_pair(d.lambda_max());
        let f = chebyshev_fit(&k, 30, d.lambda_max()).unwrap();
        let mut r = common::rng(seed);
        let x = common::gaussian_vec(&mut r, 24);
        let y = common::gaussian_vec(&mut r, 24);
        let lhs = chebyshev_apply(&op, &f, &(&x * alpha + &y * beta)).unwrap();
        let rhs = chebyshev_apply(&op, &f, &x).unwrap() * alpha + chebyshev_apply(&op, &f, &y).unwrap() * beta;
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (x.norm() + y.norm()).max(1.0));
    }

    #[test]
    fn shipped_kernels_within_fit_error(seed in 0u64..200, n in 16usize..96) {
        let (g, d) = sensor(n, seed);
        let op = bounded(&g, &d);
        let lmax = d.lambda_max();
        let (m0, m1) = meyer_pair(lmax);
        let (x0, x1) = mexican_hat_pair(lmax);
        let mut r = common::rng(seed);
        let x = common::gaussian_vec(&mut r, n);
        for k in [m0, m1, x0, x1] {
            let f = chebyshev_fit(&k, 50, lmax).unwrap();
            let err = (chebyshev_apply(&op, &f, &x).unwrap() - exact_filter(&d, &k) * &x).norm() / x.norm();
            prop_assert!(err <= f.fit_error + 1e-9, "{}: {} > {}", k.label(), err, f.fit_error);
        }
    }

    #[test]
    fn meyer_power_complementary(lmax in 0.1f64..20.0, t in 0.0f64..1.0) {
        let (lo, hi) = meyer_pair(lmax);
        let (a, b) = (lo.eval(t * lmax).unwrap(), hi.eval(t * lmax).unwrap());
        prop_assert!((a * a + b * b - 1.0).abs() <= 1e-12);
    }
}
