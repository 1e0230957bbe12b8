use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::config::{ExperimentConfig, FilterMode, GraphType, KernelFamily};
use crate::error::{Error, Result};
use crate::filterbank::{build_bgfb, check_pr, verify_theorem1, FilterBankKernels, Theorem1Report};
use crate::filters::{
    chebyshev_fit, exact_filter, mexican_hat_pair, meyer_pair, GraphFilter, SpectralKernel,
};
use crate::graph::{
    load_edge_list, random_bipartite_graph, random_sensor_graph, swiss_roll_graph,
    BipartitePartition, Graph,
};
use crate::linalg::Conditioning;
use crate::operator::Bounded;
use crate::rng::run_seed;
use crate::sampling::{
    apply_sampling, assemble_correction_with, build_z, mse_db, recover_mcs_samples,
    recover_single_with, sss_two_channel, ChannelSpec, McsSystem, SelectionOptions,
    TwoChannelSelection,
};
use crate::signals::{draw, pws_generators, ubp_generators, Generators, SignalDraw, SignalModel};
use crate::spectral::{eigendecompose, SpectralDecomposition};

/// Writes non-finite values as `"-inf"`, `"inf"` or `"nan"`.
pub(crate) fn db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("inf")
    }
}

/// One value per reconstruction method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerMethod {
    #[serde(serialize_with = "db")]
    pub mcs: f64,
    #[serde(serialize_with = "db")]
    pub single_ch0: f64,
    #[serde(serialize_with = "db")]
    pub single_ch1: f64,
}

impl PerMethod {
    pub fn get(&self, m: Method) -> f64 {
        match m {
            Method::Mcs => self.mcs,
            Method::SingleCh0 => self.single_ch0,
            Method::SingleCh1 => self.single_ch1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mcs,
    SingleCh0,
    SingleCh1,
}

pub const METHODS: [Method; 3] = [Method::Mcs, Method::SingleCh0, Method::SingleCh1];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionSummary {
    pub k: usize,
    pub floor_hits: usize,
    pub fallbacks: usize,
    pub ridge: [f64; 2],
    pub sampling_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeRecord {
    pub pr_defect: f64,
    pub theorem1: Theorem1Report,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub setup_ms: f64,
    pub selection_ms: f64,
    pub recovery_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub graph_seed: u64,
    pub n: usize,
    pub mse_db: PerMethod,
    /// Squared error over `N`, before the log.
    pub mse: PerMethod,
    pub mcs_conditioning: Conditioning,
    pub single_conditioning: [Conditioning; 2],
    pub generator_rank: [usize; 2],
    /// Sup error of the Chebyshev fits (polynomial mode only).
    pub fit_error: Option<[f64; 2]>,
    pub selection: SelectionSummary,
    pub bridge: Option<BridgeRecord>,
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Ok(Box<RunRecord>),
    Failed {
        run: usize,
        seed: u64,
        kind: FailureKind,
        error: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Config,
    Numerical,
    Other,
}

impl FailureKind {
    pub fn of(e: &Error) -> Self {
        match e {
            Error::Config(_) => FailureKind::Config,
            Error::Io(_) | Error::Json(_) | Error::Parse { .. } => FailureKind::Other,
            _ => FailureKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    /// `10 log10` of the mean squared error over runs.
    #[serde(serialize_with = "db")]
    pub mean_db_of_mse: f64,
    /// Mean of the per-run dB values.
    #[serde(serialize_with = "db")]
    pub mean_of_dbs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub completed: usize,
    pub failed: usize,
    pub mcs: Aggregate,
    pub single_ch0: Aggregate,
    pub single_ch1: Aggregate,
    pub max_pr_defect: Option<f64>,
    pub max_theorem1_residual: Option<f64>,
}

impl Summary {
    pub fn method(&self, m: Method) -> Aggregate {
        match m {
            Method::Mcs => self.mcs,
            Method::SingleCh0 => self.single_ch0,
            Method::SingleCh1 => self.single_ch1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunOutcome>,
    pub summary: Summary,
}

impl RecoveryReport {
    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter_map(|r| match r {
            RunOutcome::Ok(rec) => Some(rec.as_ref()),
            RunOutcome::Failed { .. } => None,
        })
    }
}

/// Everything one run produced, including the signals.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub graph: Graph,
    pub draw: SignalDraw,
    /// Reconstructions by MCS, channel 0 alone, channel 1 alone.
    pub recovered: [DVector<f64>; 3],
    pub record: RunRecord,
}

struct Instance {
    graph: Graph,
    partition: Option<BipartitePartition>,
}

fn build_graph(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    let graph_only = |graph| Instance {
        graph,
        partition: None,
    };
    Ok(match cfg.graph {
        GraphType::Sensor => graph_only(random_sensor_graph(cfg.n, cfg.neighbors, seed)?),
        GraphType::SwissRoll => graph_only(swiss_roll_graph(cfg.n, cfg.neighbors, seed)?),
        GraphType::Bipartite => {
            let (graph, part) = random_bipartite_graph(cfg.n / 2, cfg.n / 2, cfg.edge_prob, seed)?;
            Instance {
                graph,
                partition: Some(part),
            }
        }
        GraphType::EdgeList => {
            let path = cfg
                .graph_path
                .as_ref()
                .ok_or_else(|| Error::Config("graph = edge_list needs graph_path".into()))?;
            let loaded = load_edge_list(path)?;
            if loaded.symmetrized {
                log::warn!("{}: asymmetric edges symmetrized by max", path.display());
            }
            graph_only(loaded.graph)
        }
    })
}

fn analysis_kernels(cfg: &ExperimentConfig, lambda_max: f64) -> (SpectralKernel, SpectralKernel) {
    match cfg.kernel {
        KernelFamily::MexicanHat => mexican_hat_pair(lambda_max),
        KernelFamily::Meyer => meyer_pair(lambda_max),
    }
}

fn make_filter(
    cfg: &ExperimentConfig,
    g: &Graph,
    d: &SpectralDecomposition,
    k: &SpectralKernel,
) -> Result<(GraphFilter, Option<f64>)> {
    match cfg.filter_mode {
        FilterMode::Exact => Ok((GraphFilter::dense(exact_filter(d, k)), None)),
        FilterMode::Poly => {
            let lmax = d.lambda_max();
            let fit = chebyshev_fit(k, cfg.order, lmax)?;
            let err = fit.fit_error;
            let op = Bounded {
                inner: g.laplacian_sparse(cfg.laplacian)?,
                bound: lmax,
            };
            Ok((
                GraphFilter::Polynomial {
                    op: Arc::new(op),
                    filter: fit,
                },
                Some(err),
            ))
        }
    }
}

fn generators(
    cfg: &ExperimentConfig,
    d: &SpectralDecomposition,
    k: usize,
    seed: u64,
) -> Result<Generators> {
    match cfg.model {
        SignalModel::Pws => pws_generators(d, cfg.clusters, cfg.bandwidth_for(k), seed),
        SignalModel::Ubp => Ok(ubp_generators(d)),
    }
}

/// Analysis filters and generators of the two channels on one graph.
#[derive(Debug, Clone)]
pub struct Channels {
    pub filters: [GraphFilter; 2],
    /// Chebyshev fit errors in polynomial mode.
    pub fit_error: Option<[f64; 2]>,
    pub generators: Generators,
}

/// Builds both channels as `cfg` describes them; `k` sets the PWS bandwidth.
pub fn build_channels(
    cfg: &ExperimentConfig,
    g: &Graph,
    d: &SpectralDecomposition,
    k: usize,
    seed: u64,
) -> Result<Channels> {
    let (h0, h1) = analysis_kernels(cfg, d.lambda_max());
    let (f0, e0) = make_filter(cfg, g, d, &h0)?;
    let (f1, e1) = make_filter(cfg, g, d, &h1)?;
    Ok(Channels {
        filters: [f0, f1],
        fit_error: e0.zip(e1).map(|(a, b)| [a, b]),
        generators: generators(cfg, d, k, seed)?,
    })
}

/// Two-channel selection of `k` channel-0 vertices with the configured mode
/// and tolerances.
pub fn select_channels(
    cfg: &ExperimentConfig,
    ch: &Channels,
    k: usize,
) -> Result<TwoChannelSelection> {
    let z0 = build_z(&ch.filters[0], &ch.generators.a[0])?;
    let z1 = build_z(&ch.filters[1], &ch.generators.a[1])?;
    let opts = SelectionOptions {
        ridge: cfg.ridge,
        beta: cfg.beta,
    };
    sss_two_channel(&z0, &z1, k, cfg.sss, opts)
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// One run of the protocol: graph, generators, signal, two-channel
/// selection, then recovery by MCS and by each channel alone.
pub fn run_one(cfg: &ExperimentConfig, run: usize) -> Result<RunArtifacts> {
    let seed = run_seed(cfg.seed, run);
    let graph_seed = if cfg.fixed_graph { cfg.seed } else { seed };
    let t0 = Instant::now();
    let inst = build_graph(cfg, graph_seed)?;
    let g = &inst.graph;
    let n = g.n();
    let k = cfg.k_for(n)?;
    let lap = g.laplacian(cfg.laplacian)?;
    let d = eigendecompose(&lap, Some(cfg.laplacian))?;
    let ch = build_channels(cfg, g, &d, k, seed)?;
    let sig = draw(&ch.generators, seed);
    let setup_ms = ms(t0);

    let t1 = Instant::now();
    let sel = select_channels(cfg, &ch, k)?;
    let selection_ms = ms(t1);

    let t2 = Instant::now();
    let m0 = sel.sorted();
    let Channels {
        filters: [f0, f1],
        fit_error,
        generators: gens,
    } = ch;
    let ch0 = ChannelSpec::new(f0, gens.a[0].clone(), m0)?;
    let ch1 = ChannelSpec::new(f1, gens.a[1].clone(), sel.complement.clone())?;
    let sys = McsSystem::new(ch0, ch1, true)?;
    let y = [
        apply_sampling(sys.channel(0), &sig.x)?,
        apply_sampling(sys.channel(1), &sig.x)?,
    ];
    let corr = assemble_correction_with(&sys, cfg.pinv_rtol)?;
    let mcs = recover_mcs_samples(&sys, &corr, &y)?;
    let r0 = recover_single_with(sys.channel(0), &y[0], cfg.pinv_rtol)?;
    let r1 = recover_single_with(sys.channel(1), &y[1], cfg.pinv_rtol)?;
    let recovery_ms = ms(t2);

    let bridge = match &inst.partition {
        Some(part) => {
            let bank = build_bgfb(g, part, FilterBankKernels::meyer_qmf())?;
            Some(BridgeRecord {
                pr_defect: check_pr(bank.transform()).defect,
                theorem1: verify_theorem1(bank.transform())?,
            })
        }
        None => None,
    };

    let recovered = [mcs.signal, r0.signal, r1.signal];
    let mse = |i: usize| (&sig.x - &recovered[i]).norm_squared() / n as f64;
    let db = |i: usize| mse_db(&sig.x, &recovered[i]);
    let record = RunRecord {
        run,
        seed,
        graph_seed,
        n,
        mse_db: PerMethod {
            mcs: db(0)?,
            single_ch0: db(1)?,
            single_ch1: db(2)?,
        },
        mse: PerMethod {
            mcs: mse(0),
            single_ch0: mse(1),
            single_ch1: mse(2),
        },
        mcs_conditioning: mcs.conditioning,
        single_conditioning: [r0.conditioning, r1.conditioning],
        generator_rank: [
            sys.channel(0).generator_rank(),
            sys.channel(1).generator_rank(),
        ],
        fit_error,
        selection: SelectionSummary {
            k,
            floor_hits: sel.floor_hits,
            fallbacks: sel.fallbacks,
            ridge: sel.ridge,
            sampling_set: sel.order,
        },
        bridge,
        timings: cfg.timings.then_some(Timings {
            setup_ms,
            selection_ms,
            recovery_ms,
        }),
    };
    Ok(RunArtifacts {
        graph: inst.graph,
        draw: sig,
        recovered,
        record,
    })
}

fn aggregate(records: &[&RunRecord], m: Method) -> Aggregate {
    if records.is_empty() {
        return Aggregate {
            mean_db_of_mse: f64::NAN,
            mean_of_dbs: f64::NAN,
        };
    }
    let count = records.len() as f64;
    let mean_mse = records.iter().map(|r| r.mse.get(m)).sum::<f64>() / count;
    Aggregate {
        mean_db_of_mse: 10.0 * mean_mse.log10(),
        mean_of_dbs: records.iter().map(|r| r.mse_db.get(m)).sum::<f64>() / count,
    }
}

/// Runs every seed in parallel; failed runs are recorded and the rest
/// continue. Only an invalid configuration is returned as an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RecoveryReport> {
    cfg.validate()?;
    if cfg.graph == GraphType::EdgeList {
        build_graph(cfg, cfg.seed).map_err(|e| Error::Config(e.to_string()))?;
    }
    let runs: Vec<RunOutcome> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| match run_one(cfg, r) {
            Ok(a) => RunOutcome::Ok(Box::new(a.record)),
            Err(e) => {
                log::error!("run {r}: {e}");
                RunOutcome::Failed {
                    run: r,
                    seed: run_seed(cfg.seed, r),
                    kind: FailureKind::of(&e),
                    error: e.to_string(),
                }
            }
        })
        .collect();
    if let Some(RunOutcome::Failed {
        kind: FailureKind::Config,
        error,
        ..
    }) = runs.first()
    {
        return Err(Error::Config(error.clone()));
    }
    let records: Vec<&RunRecord> = runs
        .iter()
        .filter_map(|r| match r {
            RunOutcome::Ok(rec) => Some(rec.as_ref()),
            RunOutcome::Failed { .. } => None,
        })
        .collect();
    let bridges: Vec<&BridgeRecord> = records.iter().filter_map(|r| r.bridge.as_ref()).collect();
    let fold = |f: &dyn Fn(&BridgeRecord) -> f64| {
        (!bridges.is_empty()).then(|| bridges.iter().map(|b| f(b)).fold(0.0, f64::max))
    };
    let summary = Summary {
        completed: records.len(),
        failed: runs.len() - records.len(),
        mcs: aggregate(&records, Method::Mcs),
        single_ch0: aggregate(&records, Method::SingleCh0),
        single_ch1: aggregate(&records, Method::SingleCh1),
        max_pr_defect: fold(&|b| b.pr_defect),
        max_theorem1_residual: fold(&|b| b.theorem1.max_residual()),
    };
    Ok(RecoveryReport {
        config: cfg.clone(),
        runs,
        summary,
    })
}
