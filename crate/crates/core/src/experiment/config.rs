use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::LaplacianKind;
use crate::sampling::SssMode;
use crate::signals::SignalModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphType {
    Sensor,
    SwissRoll,
    Bipartite,
    EdgeList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    MexicanHat,
    Meyer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    Exact,
    Poly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Experiment settings, read from `key = value` lines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub graph: GraphType,
    pub graph_path: Option<PathBuf>,
    pub n: usize,
    pub neighbors: usize,
    pub edge_prob: f64,
    pub laplacian: LaplacianKind,
    pub seed: u64,
    pub fixed_graph: bool,
    pub model: SignalModel,
    pub clusters: usize,
    /// Defaults to `k / 4`.
    pub bandwidth: Option<usize>,
    pub kernel: KernelFamily,
    pub filter_mode: FilterMode,
    pub order: usize,
    /// `|M_0|`; defaults to `n / 2`.
    pub k: Option<usize>,
    pub runs: usize,
    pub sss: SssMode,
    pub beta: Option<f64>,
    pub ridge: Option<f64>,
    pub pinv_rtol: f64,
    pub timings: bool,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
    pub dump: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: GraphType::Sensor,
            graph_path: None,
            n: 256,
            neighbors: 6,
            edge_prob: 0.2,
            laplacian: LaplacianKind::Combinatorial,
            seed: 1,
            fixed_graph: false,
            model: SignalModel::Pws,
            clusters: 4,
            bandwidth: None,
            kernel: KernelFamily::MexicanHat,
            filter_mode: FilterMode::Exact,
            order: 50,
            k: None,
            runs: 30,
            sss: SssMode::Exact,
            beta: None,
            ridge: None,
            pinv_rtol: crate::linalg::PINV_RTOL,
            timings: false,
            output: None,
            format: ReportFormat::Json,
            dump: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "graph",
    "graph_path",
    "n",
    "neighbors",
    "edge_prob",
    "laplacian",
    "seed",
    "fixed_graph",
    "model",
    "clusters",
    "bandwidth",
    "kernel",
    "filter_mode",
    "order",
    "k",
    "runs",
    "sss",
    "beta",
    "ridge",
    "pinv_rtol",
    "timings",
    "output",
    "format",
    "dump",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!(
            "{key} must be positive, got {value}"
        )));
    }
    Ok(v)
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|&(_, v)| v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|o| o.0).collect();
            Error::Config(format!(
                "{key}: '{value}' is not one of {}",
                names.join("|")
            ))
        })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "graph" => {
                self.graph = choice(
                    key,
                    value,
                    &[
                        ("sensor", GraphType::Sensor),
                        ("swissroll", GraphType::SwissRoll),
                        ("bipartite", GraphType::Bipartite),
                        ("edge_list", GraphType::EdgeList),
                    ],
                )?
            }
            "graph_path" => self.graph_path = opt_path(value),
            "n" => self.n = parse(key, value)?,
            "neighbors" => self.neighbors = parse(key, value)?,
            "edge_prob" => self.edge_prob = positive(key, value)?,
            "laplacian" => {
                self.laplacian = choice(
                    key,
                    value,
                    &[
                        ("combinatorial", LaplacianKind::Combinatorial),
                        ("normalized", LaplacianKind::Normalized),
                    ],
                )?
            }
            "seed" => self.seed = parse(key, value)?,
            "fixed_graph" => self.fixed_graph = parse(key, value)?,
            "model" => {
                self.model = choice(
                    key,
                    value,
                    &[("pws", SignalModel::Pws), ("ubp", SignalModel::Ubp)],
                )?
            }
            "clusters" => self.clusters = parse(key, value)?,
            "bandwidth" => self.bandwidth = Some(parse(key, value)?),
            "kernel" => {
                self.kernel = choice(
                    key,
                    value,
                    &[
                        ("mexican_hat", KernelFamily::MexicanHat),
                        ("meyer", KernelFamily::Meyer),
                    ],
                )?
            }
            "filter_mode" => {
                self.filter_mode = choice(
                    key,
                    value,
                    &[("exact", FilterMode::Exact), ("poly", FilterMode::Poly)],
                )?
            }
            "order" => self.order = parse(key, value)?,
            "k" => self.k = Some(parse(key, value)?),
            "runs" => self.runs = parse(key, value)?,
            "sss" => {
                self.sss = choice(
                    key,
                    value,
                    &[("exact", SssMode::Exact), ("neumann", SssMode::Neumann)],
                )?
            }
            "beta" => self.beta = Some(positive(key, value)?),
            "ridge" => self.ridge = Some(positive(key, value)?),
            "pinv_rtol" => self.pinv_rtol = positive(key, value)?,
            "timings" => self.timings = parse(key, value)?,
            "output" => self.output = opt_path(value),
            "format" => {
                self.format = choice(
                    key,
                    value,
                    &[("json", ReportFormat::Json), ("csv", ReportFormat::Csv)],
                )?
            }
            "dump" => self.dump = opt_path(value),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Checks that do not need the graph.
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.graph == GraphType::EdgeList && self.graph_path.is_none() {
            return Err(Error::Config("graph = edge_list needs graph_path".into()));
        }
        if self.graph == GraphType::Bipartite && !self.n.is_multiple_of(2) {
            return Err(Error::Config("bipartite graphs need an even n".into()));
        }
        if self.edge_prob > 1.0 {
            return Err(Error::Config("edge_prob must be at most 1".into()));
        }
        if let Some(k) = self.k {
            if self.graph != GraphType::EdgeList && k > self.n {
                return Err(Error::Config(format!("k = {k} exceeds n = {}", self.n)));
            }
        }
        Ok(())
    }

    /// `|M_0|` for a graph with `n` vertices.
    pub fn k_for(&self, n: usize) -> Result<usize> {
        let k = self.k.unwrap_or(n / 2);
        if k > n {
            return Err(Error::Config(format!("k = {k} exceeds n = {n}")));
        }
        Ok(k)
    }

    pub fn bandwidth_for(&self, k: usize) -> usize {
        self.bandwidth.unwrap_or((k / 4).max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let cfg =
            ExperimentConfig::parse("# demo\nmodel = ubp\nn=64 # small\nsss = neumann\n\nk = 32\n")
                .unwrap();
        assert_eq!(cfg.model, SignalModel::Ubp);
        assert_eq!(cfg.n, 64);
        assert_eq!(cfg.sss, SssMode::Neumann);
        assert_eq!(cfg.k_for(64).unwrap(), 32);
        assert_eq!(cfg.bandwidth_for(32), 8);
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("n 64").is_err());
        assert!(ExperimentConfig::parse("beta = -1").is_err());
        assert!(ExperimentConfig::parse("runs = 0")
            .unwrap()
            .validate()
            .is_err());
        assert!(ExperimentConfig::parse("n = 8\nk = 9")
            .unwrap()
            .validate()
            .is_err());
    }
}
