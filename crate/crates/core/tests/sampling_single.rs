mod common;

use std::sync::Arc;

use approx::assert_relative_eq;
use common::*;
use graph_mcs::filters::{chebyshev_fit, exact_filter, mexican_hat_pair, meyer_pair, GraphFilter};
use graph_mcs::graph::{random_sensor_graph, Graph, LaplacianKind};
use graph_mcs::linalg::{conditioning, select_rows};
use graph_mcs::operator::Bounded;
use graph_mcs::sampling::{
    apply_sampling, build_z, check_ds, neumann_solve, recover_single, schur_score,
    sss_greedy_exact, sss_greedy_neumann, ChannelSpec, DsStatus, SelectionOptions, DS_COND_MAX,
};
use graph_mcs::spectral::eigendecompose;
use nalgebra::{dvector, DMatrix, DVector};
use proptest::prelude::*;

fn meyer_channel(n: usize, seed: u64) -> GraphFilter {
    let g = random_sensor_graph(n, 4, seed).unwrap();
    let d = eigendecompose(&g.laplacian(LaplacianKind::Combinatorial).unwrap(), None).unwrap();
    GraphFilter::dense(exact_filter(&d, &meyer_pair(d.lambda_max()).0))
}

fn scaling_channel(n: usize, seed: u64) -> GraphFilter {
    let g = random_sensor_graph(n, 4, seed).unwrap();
    let d = eigendecompose(&g.laplacian(LaplacianKind::Combinatorial).unwrap(), None).unwrap();
    GraphFilter::dense(exact_filter(&d, &mexican_hat_pair(d.lambda_max()).0))
}

#[test]
fn sampling_examples() {
    let ch = ChannelSpec::new(GraphFilter::Identity, DMatrix::identity(4, 2), vec![0, 2]).unwrap();
    assert_eq!(
        apply_sampling(&ch, &dvector![1.0, 2.0, 3.0, 4.0]).unwrap(),
        dvector![1.0, 3.0]
    );
    let all = ch.with_sampling_set(vec![0, 1, 2, 3]).unwrap();
    let x = dvector![5.0, -1.0, 2.0, 0.5];
    assert_eq!(apply_sampling(&all, &x).unwrap(), x);
    assert!(apply_sampling(&ch, &DVector::zeros(3)).is_err());
}

#[test]
fn channel_validation() {
    let a = DMatrix::identity(4, 2);
    assert!(ChannelSpec::new(GraphFilter::Identity, a.clone(), vec![0, 0]).is_err());
    assert!(ChannelSpec::new(GraphFilter::Identity, a.clone(), vec![4]).is_err());
    let mut deficient = a.clone();
    deficient.set_column(1, &a.column(0));
    let ch = ChannelSpec::new(GraphFilter::Identity, deficient, vec![0]).unwrap();
    assert_eq!(ch.generator_rank(), 1);
    assert!(!ch.is_full_rank());
}

#[test]
fn chebyshev_and_exact_sampling_agree() {
    let g = random_sensor_graph(32, 4, 8).unwrap();
    let d = eigendecompose(&g.laplacian(LaplacianKind::Combinatorial).unwrap(), None).unwrap();
    let (lo, _) = meyer_pair(d.lambda_max());
    let f = chebyshev_fit(&lo, 50, d.lambda_max()).unwrap();
    let poly = GraphFilter::Polynomial {
        op: Arc::new(Bounded {
            inner: g.laplacian_sparse(LaplacianKind::Combinatorial).unwrap(),
            bound: d.lambda_max(),
        }),
        filter: f.clone(),
    };
    let mut r = rng(1);
    let a = gaussian(&mut r, 32, 4);
    let set = random_subset(&mut r, 32, 10);
    let exact = ChannelSpec::new(
        GraphFilter::dense(exact_filter(&d, &lo)),
        a.clone(),
        set.clone(),
    )
    .unwrap();
    let approx = ChannelSpec::new(poly, a, set).unwrap();
    let x = gaussian_vec(&mut r, 32);
    let diff = (apply_sampling(&exact, &x).unwrap() - apply_sampling(&approx, &x).unwrap()).norm();
    assert!(diff <= (f.fit_error + 1e-9) * x.norm());
}

#[test]
fn recovery_examples() {
    let mut r = rng(2);
    let n = 16;
    let g = meyer_channel(n, 3);
    let a = gaussian(&mut r, n, 5);
    let ch = ChannelSpec::new(g, a.clone(), random_subset(&mut r, n, 7)).unwrap();
    let x = &a * gaussian_vec(&mut r, 5);
    let rec = recover_single(&ch, &apply_sampling(&ch, &x).unwrap()).unwrap();
    assert!((rec.signal - &x).norm() / x.norm() < 1e-8);
    assert_eq!(rec.conditioning.rank, 5);

    let id = ChannelSpec::new(
        GraphFilter::Identity,
        DMatrix::identity(6, 6),
        (0..6).collect(),
    )
    .unwrap();
    let x = gaussian_vec(&mut r, 6);
    assert_eq!(
        recover_single(&id, &apply_sampling(&id, &x).unwrap())
            .unwrap()
            .signal,
        x
    );

    assert!(recover_single(&ch, &DVector::zeros(3)).is_err());
}

#[test]
fn bandlimited_on_path_with_selected_set() {
    let g = Graph::from_edges(8, (0..7).map(|i| (i, i + 1, 1.0))).unwrap();
    let d = eigendecompose(&g.laplacian(LaplacianKind::Combinatorial).unwrap(), None).unwrap();
    let a = d.evecs().columns(0, 4).into_owned();
    let z = build_z(&GraphFilter::Identity, &a).unwrap();
    let sel = sss_greedy_exact(&z, 4, SelectionOptions::default()).unwrap();
    let ch = ChannelSpec::new(GraphFilter::Identity, a.clone(), sel.sorted()).unwrap();
    assert!(matches!(
        check_ds(&ch, DS_COND_MAX).unwrap(),
        DsStatus::Holds { .. }
    ));
    let x = &a * dvector![1.0, -2.0, 0.5, 3.0];
    let rec = recover_single(&ch, &apply_sampling(&ch, &x).unwrap()).unwrap();
    assert!((rec.signal - &x).norm() / x.norm() < 1e-13);
}

#[test]
fn ds_examples() {
    let n = 6;
    let set = vec![1, 3, 4];
    let mut a = DMatrix::zeros(n, 3);
    for (j, &v) in set.iter().enumerate() {
        a[(v, j)] = 1.0;
    }
    let ch = ChannelSpec::new(GraphFilter::Identity, a.clone(), set).unwrap();
    match check_ds(&ch, DS_COND_MAX).unwrap() {
        DsStatus::Holds { cond } => assert_relative_eq!(cond, 1.0, epsilon = 1e-14),
        other => panic!("{other:?}"),
    }
    let off = ch.with_sampling_set(vec![0, 2, 5]).unwrap();
    assert!(matches!(
        check_ds(&off, DS_COND_MAX).unwrap(),
        DsStatus::Fails { .. }
    ));
    let short = ch.with_sampling_set(vec![0]).unwrap();
    assert!(check_ds(&short, DS_COND_MAX).is_err());
}

#[test]
fn ds_matches_direct_conditioning() {
    let mut r = rng(3);
    for _ in 0..20 {
        let a = gaussian(&mut r, 16, 8);
        let set = random_subset(&mut r, 16, 8);
        let ch = ChannelSpec::new(GraphFilter::Identity, a.clone(), set.clone()).unwrap();
        let sa = select_rows(&a, &set);
        let sv = sa.clone().svd(false, false).singular_values;
        let cond = sv.max() / sv.min();
        let rank = sa.rank(1e-12 * sv.max());
        match check_ds(&ch, DS_COND_MAX).unwrap() {
            DsStatus::Holds { cond: c } => {
                assert_eq!(rank, 8);
                assert!((c - cond).abs() <= 1e-8 * cond);
            }
            DsStatus::Fails { .. } => assert!(rank < 8 || cond > DS_COND_MAX),
        }
        assert!(matches!(
            check_ds(&ch, 1.0).unwrap(),
            DsStatus::Fails { .. }
        ));
    }
}

#[test]
fn z_examples() {
    let mut r = rng(4);
    let a = gaussian(&mut r, 10, 3);
    let z = build_z(&GraphFilter::Identity, &a).unwrap();
    assert!((z - &a * a.transpose()).amax() < 1e-13);

    let filter = meyer_channel(10, 2);
    let mut e0 = DMatrix::zeros(10, 1);
    e0[(0, 0)] = 1.0;
    let z = build_z(&filter, &e0).unwrap();
    let ge = filter.apply_columns(&e0).unwrap();
    assert!((&z - &ge * ge.transpose()).amax() < 1e-14);
    assert_eq!(conditioning(&z, 1e-10).rank, 1);

    let f = meyer_channel(32, 5);
    let z = build_z(&f, &gaussian(&mut r, 32, 12)).unwrap();
    let min = z.clone().symmetric_eigen().eigenvalues.min();
    assert!(min >= -1e-9 * z.norm());
    assert!(conditioning(&z, 1e-10).rank <= 12);
}

#[test]
fn det_identity() {
    // det(Z_M) = det(S^T A)^2 when |M| = K
    let mut r = rng(5);
    for n in [6, 10, 16] {
        let filter = scaling_channel(n, n as u64);
        for k in [1, 3, n / 2] {
            let a = gaussian(&mut r, n, k);
            let set = random_subset(&mut r, n, k);
            let z = build_z(&filter, &a).unwrap();
            let sa = ChannelSpec::new(filter.clone(), a, set.clone())
                .unwrap()
                .sampled_generator()
                .unwrap();
            let lhs = det(&principal(&z, &set));
            let rhs = det(&sa).powi(2);
            assert!(
                (lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1e-300),
                "{lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn greedy_diagonal_example() {
    let z = DMatrix::from_diagonal(&dvector![3.0, 1.0, 2.0]);
    let opts = SelectionOptions {
        ridge: Some(0.0),
        beta: None,
    };
    assert_eq!(sss_greedy_exact(&z, 2, opts).unwrap().order, vec![0, 2]);
    let neu = sss_greedy_neumann(&z, 2, opts).unwrap();
    assert_eq!(neu.order, vec![0, 2]);
    assert_eq!(neu.fallbacks, 0);
    assert!(sss_greedy_exact(&z, 4, opts).is_err());
}

#[test]
fn greedy_ties_go_to_lowest_index() {
    let z = DMatrix::identity(5, 5);
    assert_eq!(
        sss_greedy_exact(&z, 3, SelectionOptions::default())
            .unwrap()
            .order,
        vec![0, 1, 2]
    );
    assert_eq!(
        sss_greedy_neumann(&z, 3, SelectionOptions::default())
            .unwrap()
            .order,
        vec![0, 1, 2]
    );
}

#[test]
fn greedy_vs_exhaustive() {
    let mut r = rng(6);
    let subsets = combinations(8, 4);
    let mut ratios = Vec::new();
    for _ in 0..25 {
        let z = random_psd(&mut r, 8, 8);
        let sel = sss_greedy_exact(&z, 4, SelectionOptions::default()).unwrap();
        let mut dets: Vec<f64> = subsets.iter().map(|s| det(&principal(&z, s))).collect();
        dets.sort_by(|a, b| b.total_cmp(a));
        let greedy = det(&principal(&z, &sel.sorted()));
        let rank = dets
            .iter()
            .position(|&d| d <= greedy * (1.0 + 1e-12))
            .unwrap();
        assert!(rank < dets.len());
        ratios.push(greedy / dets[0]);
    }
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(worst > 0.5, "{ratios:?}");
}

#[test]
fn schur_scores_match_determinant_ratios() {
    let mut r = rng(7);
    for _ in 0..20 {
        let z = random_psd(&mut r, 12, 12);
        let sel = sss_greedy_exact(&z, 6, SelectionOptions::default()).unwrap();
        let zr = ridged(&z, sel.ridge);
        for i in 0..sel.order.len() {
            let before = &sel.order[..i];
            let after = &sel.order[..=i];
            let ratio = det(&principal(&zr, after)) / det(&principal(&zr, before));
            assert!((sel.scores[i] - ratio).abs() <= 1e-9 * ratio);
            let direct = schur_score(&z, before, sel.order[i], sel.ridge).unwrap();
            assert!((direct - ratio).abs() <= 1e-9 * ratio);
            assert!(det(&principal(&zr, after)) > 0.0);
        }
    }
}

#[test]
fn rank_deficient_selection_stays_positive() {
    let mut r = rng(8);
    let z = random_psd(&mut r, 20, 3);
    for sel in [
        sss_greedy_exact(&z, 10, SelectionOptions::default()).unwrap(),
        sss_greedy_neumann(&z, 10, SelectionOptions::default()).unwrap(),
    ] {
        assert_eq!(sel.order.len(), 10);
        assert!(sel.ridge > 0.0);
        assert!(sel.scores.iter().all(|&s| s > 0.0));
        let zr = ridged(&z, sel.ridge);
        assert!(det(&principal(&zr, &sel.order)) > 0.0);
    }
}

#[test]
fn neumann_fixed_point() {
    let mut r = rng(9);
    for _ in 0..20 {
        let z = random_psd(&mut r, 32, 32);
        let set = random_subset(&mut r, 32, 8);
        let y = graph_mcs::linalg::complement(32, &set)[0];
        let zm = principal(&z, &set);
        let b = DVector::from_iterator(8, set.iter().map(|&i| z[(i, y)]));
        let s = neumann_solve(&zm, b.clone(), 1e-12, 10_000);
        assert!(s.converged);
        let exact = zm.lu().solve(&b).unwrap();
        assert!((s.solution - &exact).norm() / exact.norm() < 1e-6);
    }
}

#[test]
fn neumann_selection_matches_exact() {
    let mut r = rng(10);
    for _ in 0..20 {
        let z = random_psd(&mut r, 16, 16);
        let mean = z.trace() / 16.0;
        let opts = SelectionOptions {
            ridge: None,
            beta: Some(1e-12 * mean),
        };
        let exact = sss_greedy_exact(&z, 6, opts).unwrap();
        let neu = sss_greedy_neumann(&z, 6, opts).unwrap();
        assert_eq!(neu.order, exact.order);
        for (a, b) in neu.scores.iter().zip(&exact.scores) {
            assert!((a - b).abs() / mean < 1e-5);
        }
    }
}

#[test]
fn neumann_diagonal_converges_immediately() {
    let z = DMatrix::from_diagonal(&dvector![2.0, 5.0, 1.0, 4.0]);
    let s = neumann_solve(&z, dvector![1.0, 1.0, 1.0, 1.0], 1e-12, 100);
    assert!(s.converged);
    let exact = dvector![0.5, 0.2, 1.0, 0.25];
    assert!((s.solution - exact).amax() < 1e-10);
    let uniform = DMatrix::from_diagonal(&dvector![3.0, 3.0, 3.0]);
    let s = neumann_solve(&uniform, dvector![1.0, 2.0, 3.0], 1e-12, 100);
    assert!(s.converged && s.iterations <= 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn recovery_is_a_projector(seed in 0u64..1000, k in 1usize..6, extra in 0usize..5) {
        let mut r = rng(seed);
        let n = 14;
        let a = gaussian(&mut r, n, k);
        let set = random_subset(&mut r, n, k + extra);
        let ch = ChannelSpec::new(meyer_channel(n, seed % 7), a, set).unwrap();
        let x = gaussian_vec(&mut r, n);
        let once = recover_single(&ch, &apply_sampling(&ch, &x).unwrap()).unwrap();
        prop_assume!(once.conditioning.rank == k && once.conditioning.cond < 1e6);
        let twice = recover_single(&ch, &apply_sampling(&ch, &once.signal).unwrap()).unwrap().signal;
        prop_assert!((twice - &once.signal).norm() <= 1e-8 * once.signal.norm().max(1.0));
    }

    #[test]
    fn selections_are_valid(seed in 0u64..1000, n in 2usize..24, rank in 1usize..24) {
        let mut r = rng(seed);
        let z = random_psd(&mut r, n, rank.min(n));
        let k = 1 + seed as usize % n;
        for sel in [
            sss_greedy_exact(&z, k, SelectionOptions::default()).unwrap(),
            sss_greedy_neumann(&z, k, SelectionOptions::default()).unwrap(),
        ] {
            prop_assert_eq!(sel.order.len(), k);
            let mut s = sel.sorted();
            s.dedup();
            prop_assert_eq!(s.len(), k);
            prop_assert!(sel.order.iter().all(|&v| v < n));
            let first = (0..n).fold(0, |b, i| if z[(i, i)] > z[(b, b)] { i } else { b });
            prop_assert_eq!(sel.order[0], first);
        }
    }
}
