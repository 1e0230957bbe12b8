//! Plain-text edge lists.
//!
//! ```text
//! N 4
//! # coord 0 0.10 0.25
//! 0 1 1.0
//! 1 2 0.5
//! ```
//!
//! `N <count>` is optional (otherwise the largest index plus one), `# coord`
//! lines carry per-vertex coordinates for every vertex or none, any other
//! `#` line is a comment. Indices are 0-based and weights must be positive.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::Graph;
use crate::error::{Error, Result};

/// A graph read from disk plus what had to be repaired on the way in.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Both directions of an edge were listed with different weights; the
    /// larger one was kept.
    pub symmetrized: bool,
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, path)
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_edge_list(g))?;
    Ok(())
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "N {}", g.n());
    if let Some(coords) = g.coords() {
        for (i, c) in coords.iter().enumerate() {
            let _ = write!(out, "# coord {i}");
            for x in c {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
    }
    for (u, v, w) in g.edges() {
        let _ = writeln!(out, "{u} {v} {w}");
    }
    out
}

/// Parses edge-list text; `origin` is only used in error messages.
pub fn parse_edge_list(text: &str, origin: &Path) -> Result<LoadedGraph> {
    let err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        message,
    };
    let mut declared: Option<(usize, usize)> = None;
    let mut directed: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    let mut coords: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0].starts_with('#') {
            let rest: Vec<&str> = if toks[0] == "#" {
                toks[1..].to_vec()
            } else {
                std::iter::once(&toks[0][1..])
                    .chain(toks[1..].iter().copied())
                    .collect()
            };
            if rest.first() == Some(&"coord") {
                if rest.len() < 3 {
                    return Err(err(
                        lineno,
                        "coord line needs an index and coordinates".into(),
                    ));
                }
                let v: usize = rest[1]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad vertex index `{}`", rest[1])))?;
                let xs = rest[2..]
                    .iter()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(lineno, format!("bad coordinate `{t}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                coords.insert(v, (xs, lineno));
            }
            continue;
        }
        if toks[0] == "N" {
            if toks.len() != 2 {
                return Err(err(lineno, "header must be `N <count>`".into()));
            }
            if declared.is_some() {
                return Err(err(lineno, "duplicate `N` header".into()));
            }
            let n = toks[1]
                .parse()
                .map_err(|_| err(lineno, format!("bad vertex count `{}`", toks[1])))?;
            declared = Some((n, lineno));
            continue;
        }
        if toks.len() != 3 {
            return Err(err(lineno, format!("expected `u v w`, got `{line}`")));
        }
        let u: usize = toks[0]
            .parse()
            .map_err(|_| err(lineno, format!("bad vertex index `{}`", toks[0])))?;
        let v: usize = toks[1]
            .parse()
            .map_err(|_| err(lineno, format!("bad vertex index `{}`", toks[1])))?;
        let w: f64 = toks[2]
            .parse()
            .map_err(|_| err(lineno, format!("bad weight `{}`", toks[2])))?;
        if !w.is_finite() || w <= 0.0 {
            return Err(err(lineno, format!("weight must be positive, got {w}")));
        }
        if u == v {
            return Err(err(lineno, format!("self-loop at vertex {u}")));
        }
        directed.insert((u, v), (w, lineno));
    }

    let n = match declared {
        Some((n, _)) => n,
        None => directed
            .keys()
            .flat_map(|&(u, v)| [u, v])
            .chain(coords.keys().copied())
            .max()
            .map_or(0, |m| m + 1),
    };
    for (&(u, v), &(_, lineno)) in &directed {
        if u >= n || v >= n {
            return Err(err(
                lineno,
                format!("index {} out of range for N = {n}", u.max(v)),
            ));
        }
    }
    for (&v, &(_, lineno)) in &coords {
        if v >= n {
            return Err(err(
                lineno,
                format!("coordinate index {v} out of range for N = {n}"),
            ));
        }
    }

    let mut symmetrized = false;
    let mut undirected: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(u, v), &(w, _)) in &directed {
        let key = (u.min(v), u.max(v));
        if let Some(&(back, _)) = directed.get(&(v, u)) {
            if back != w {
                symmetrized = true;
            }
        }
        undirected
            .entry(key)
            .and_modify(|e| *e = e.max(w))
            .or_insert(w);
    }
    if symmetrized {
        log::warn!(
            "{}: asymmetric edge weights symmetrized by max",
            origin.display()
        );
    }

    let mut graph = Graph::from_edges(n, undirected.into_iter().map(|((u, v), w)| (u, v, w)))?;
    if !coords.is_empty() {
        if coords.len() != n {
            let first = coords.values().next().map_or(0, |c| c.1);
            return Err(err(
                first,
                format!("coordinates given for {} of {n} vertices", coords.len()),
            ));
        }
        graph = graph.with_coords(coords.into_values().map(|c| c.0).collect())?;
    }
    Ok(LoadedGraph { graph, symmetrized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_sensor_graph;

    fn parse(s: &str) -> Result<LoadedGraph> {
        parse_edge_list(s, Path::new("test"))
    }

    #[test]
    fn two_path() {
        let l = parse("N 2\n0 1 1.0").unwrap();
        assert_eq!(l.graph.n(), 2);
        assert_eq!(l.graph.weight(0, 1), 1.0);
        assert!(!l.symmetrized);
    }

    #[test]
    fn header_is_optional() {
        let l = parse("# a comment\n0 3 2.5\n").unwrap();
        assert_eq!(l.graph.n(), 4);
    }

    #[test]
    fn out_of_range_index() {
        let e = parse("N 4\n0 5 1.0").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse("0 1 -1.0").is_err());
        assert!(parse("0 1 0").is_err());
        assert!(parse("0 1").is_err());
        assert!(parse("0 x 1.0").is_err());
        assert!(parse("2 2 1.0").is_err());
        assert!(parse("N 3\nN 3\n").is_err());
    }

    #[test]
    fn duplicates_and_asymmetry() {
        let l = parse("0 1 1.0\n0 1 3.0\n").unwrap();
        assert_eq!(l.graph.weight(0, 1), 3.0);
        assert!(!l.symmetrized);
        let l = parse("0 1 1.0\n1 0 2.0\n").unwrap();
        assert_eq!(l.graph.weight(1, 0), 2.0);
        assert!(l.symmetrized);
    }

    #[test]
    fn coordinates_all_or_none() {
        let l = parse("N 2\n# coord 0 0.5 1\n# coord 1 2 3\n0 1 1\n").unwrap();
        assert_eq!(l.graph.coords().unwrap()[1], vec![2.0, 3.0]);
        assert!(parse("N 2\n# coord 0 0.5 1\n0 1 1\n").is_err());
    }

    #[test]
    fn save_load_roundtrip_is_exact() {
        let g = random_sensor_graph(64, 6, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        save_edge_list(&g, &path).unwrap();
        let back = load_edge_list(&path).unwrap();
        assert_eq!(back.graph.adjacency(), g.adjacency());
        assert_eq!(back.graph.coords(), g.coords());
        assert!(!back.symmetrized);
    }
}
