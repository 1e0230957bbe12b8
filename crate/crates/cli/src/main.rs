use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graph_mcs::experiment::{
    build_channels, emit_report, emit_signal_dump, run_experiment, run_one, select_channels,
    write_report, ExperimentConfig,
};
use graph_mcs::filterbank::{build_bgfb, check_pr, verify_theorem1, FilterBankKernels};
use graph_mcs::graph::{load_edge_list, BipartitePartition, Graph};
use graph_mcs::spectral::eigendecompose;
use graph_mcs::Error;

const CONFIG_ERROR: u8 = 2;
const NUMERICAL_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "graph-mcs",
    version,
    about = "Multi-channel sampling of graph signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded recovery experiment and write its report.
    Run(RunArgs),
    /// Check perfect reconstruction of the filter bank on a bipartite graph.
    VerifyPr(VerifyArgs),
    /// Select a two-channel sampling set and print it.
    Sss(SssArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; keys absent from it keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    sss: Option<String>,
    #[arg(long)]
    filter_mode: Option<String>,
    #[arg(long)]
    fixed_graph: bool,
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// Per-vertex signals of run 0 as CSV.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Lines of `vertex side` with side 0 or 1.
    #[arg(long)]
    partition: PathBuf,
    /// meyer or ideal
    #[arg(long, default_value = "meyer")]
    kernel: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SssArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Comma-separated channel keys, e.g. `kernel=meyer,model=ubp,filter_mode=poly`.
    #[arg(long, default_value = "")]
    channels: String,
    #[arg(long)]
    k: usize,
    /// exact or neumann
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::InvalidParameter(_)
            | Error::InvalidGraph(_)
            | Error::Bipartite(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

const CHANNEL_KEYS: &[&str] = &[
    "kernel",
    "filter_mode",
    "order",
    "model",
    "clusters",
    "bandwidth",
    "laplacian",
];

fn run(args: RunArgs) -> CliResult {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    let flags = [
        ("n", args.n.map(|v| v.to_string())),
        ("runs", args.runs.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("model", args.model),
        ("k", args.k.map(|v| v.to_string())),
        ("sss", args.sss),
        ("filter_mode", args.filter_mode),
        ("fixed_graph", args.fixed_graph.then(|| "true".into())),
        ("timings", args.timings.then(|| "true".into())),
        ("output", args.output.map(|p| p.display().to_string())),
        ("format", args.format),
        ("dump", args.dump.map(|p| p.display().to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }

    let report = run_experiment(&cfg)?;
    match &cfg.output {
        Some(path) => emit_report(&report, cfg.format, path)?,
        None => {
            let stdout = std::io::stdout().lock();
            write_report(&report, cfg.format, stdout)?;
        }
    }
    if let Some(path) = &cfg.dump {
        let art = run_one(&cfg, 0)?;
        emit_signal_dump(&art.graph, &art.draw.x, &art.recovered, path)?;
    }
    let s = &report.summary;
    log::info!("{} runs completed, {} failed", s.completed, s.failed);
    if s.failed > 0 {
        return Err(Failure::Numerical(format!(
            "{} of {} runs failed",
            s.failed, cfg.runs
        )));
    }
    Ok(())
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let loaded = load_edge_list(path)?;
    if loaded.symmetrized {
        log::warn!("{}: asymmetric edges symmetrized by max", path.display());
    }
    Ok(loaded.graph)
}

fn load_partition(g: &Graph, path: &Path) -> Result<BipartitePartition, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut sides = [Vec::new(), Vec::new()];
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || {
            Failure::Config(format!(
                "{}:{}: expected `vertex side`",
                path.display(),
                no + 1
            ))
        };
        let mut it = line.split_whitespace();
        let v: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let side: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .filter(|&s| s < 2)
            .ok_or_else(bad)?;
        if it.next().is_some() {
            return Err(bad());
        }
        sides[side].push(v);
    }
    let [low, high] = sides;
    Ok(BipartitePartition::new(g, low, high)?)
}

fn verify_pr(args: VerifyArgs) -> CliResult {
    let g = load_graph(&args.graph)?;
    let part = load_partition(&g, &args.partition)?;
    let kernels = match args.kernel.as_str() {
        "meyer" => FilterBankKernels::meyer_qmf(),
        "ideal" => FilterBankKernels::ideal(g.n())?,
        other => {
            return Err(Failure::Config(format!(
                "kernel: '{other}' is not one of meyer|ideal"
            )))
        }
    };
    let bank = build_bgfb(&g, &part, kernels)?;
    let pr = check_pr(bank.transform());
    let th = verify_theorem1(bank.transform())?;
    let pass = pr.defect <= args.tol && th.max_residual() <= args.tol;
    let mut out = std::io::stdout().lock();
    let written = if args.json {
        let v = serde_json::json!({
            "n": g.n(),
            "pr": pr,
            "theorem1": th,
            "factorization_gap": bank.factorization_gap,
            "tol": args.tol,
            "pass": pass,
        });
        writeln!(out, "{v:#}")
    } else {
        writeln!(
            out,
            "pr_defect {:e}\ncross_term {:e}\nreconstruction {:e}\nsubband_gap {:e} {:e}\n{}",
            pr.defect,
            th.cross_term,
            th.reconstruction,
            th.subband_gap_a,
            th.subband_gap_b,
            if pass { "PASS" } else { "FAIL" }
        )
    };
    written.map_err(|e| Failure::Config(e.to_string()))?;
    if !pass {
        return Err(Failure::Numerical(format!(
            "residual exceeds {:e}",
            args.tol
        )));
    }
    Ok(())
}

fn sss(args: SssArgs) -> CliResult {
    let g = load_graph(&args.graph)?;
    let mut cfg = ExperimentConfig::default();
    for kv in args
        .channels
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            Failure::Config(format!("--channels expects key=value pairs, got '{kv}'"))
        })?;
        let k = k.trim();
        if !CHANNEL_KEYS.contains(&k) {
            return Err(Failure::Config(format!(
                "--channels: '{k}' is not one of {}",
                CHANNEL_KEYS.join("|")
            )));
        }
        cfg.set(k, v.trim())?;
    }
    if let Some(mode) = &args.mode {
        cfg.set("sss", mode)?;
    }
    if args.k > g.n() {
        return Err(Failure::Config(format!(
            "k = {} exceeds n = {}",
            args.k,
            g.n()
        )));
    }
    let d = eigendecompose(&g.laplacian(cfg.laplacian)?, Some(cfg.laplacian))?;
    let ch = build_channels(&cfg, &g, &d, args.k, args.seed)?;
    let sel = select_channels(&cfg, &ch, args.k)?;
    let mut out = std::io::stdout().lock();
    let written = if args.json {
        writeln!(
            out,
            "{:#}",
            serde_json::json!({ "sampling_set": sel.sorted(), "selection": sel })
        )
    } else {
        let mut line = String::new();
        for (i, v) in sel.sorted().iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{v}");
        }
        writeln!(out, "{line}")
    };
    written.map_err(|e| Failure::Config(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::VerifyPr(a) => verify_pr(a),
        Command::Sss(a) => sss(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(NUMERICAL_ERROR)
        }
    }
}
