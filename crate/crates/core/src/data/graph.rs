//! Undirected graphs from SNAP-style edge lists, and per-vertex triangle counts.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_estimate, Limits};
use crate::bounds::Tolerance;
use crate::error::{Error, Result};
use crate::estimators::{bekas_estimate, diagpp_estimate, xdiag_estimate};
use crate::linop::{exact_diagonal, LinearOperator, PowerOperator, SparseMatrix};
use crate::probes::ProbeStream;

/// Simple undirected graph: symmetric 0/1 adjacency with an empty diagonal.
#[derive(Debug, Clone)]
pub struct Graph {
    pub adjacency: SparseMatrix,
    /// Original node ID of each row, ascending.
    pub original_ids: Vec<u64>,
}

impl Graph {
    /// Build from undirected edges over nodes `0..n`. Self-loops and
    /// duplicates are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) outside a graph with {n} nodes"
                )));
            }
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        }
        let mut triplets = Vec::with_capacity(2 * set.len());
        for (u, v) in set {
            triplets.push((u, v, 1.0));
            triplets.push((v, u, 1.0));
        }
        Ok(Self {
            adjacency: SparseMatrix::from_triplets(n, &triplets)?,
            original_ids: (0..n as u64).collect(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.n()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.row_entries(i).map(|(j, _)| j)
    }
}

/// Parse a whitespace-separated edge list. Lines starting with `#` (or `%`)
/// are comments; extra columns after the two node IDs are ignored. Nodes are
/// the endpoints of the remaining non-loop edges, renumbered by ascending ID.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
    let mut raw = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let mut id = |what: &str| -> Result<u64> {
            toks.next()
                .ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: format!("missing {what} node"),
                })?
                .parse()
                .map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("invalid {what} node ID"),
                })
        };
        let u = id("source")?;
        let v = id("target")?;
        if u != v {
            raw.push((u, v));
        }
    }
    if raw.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let ids: BTreeSet<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
    let index: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let edges: Vec<(usize, usize)> = raw.iter().map(|(u, v)| (index[u], index[v])).collect();
    let mut g = Graph::from_edges(ids.len(), &edges)?;
    g.original_ids = ids.into_iter().collect();
    Ok(g)
}

pub fn load_edge_list(path: impl AsRef<std::path::Path>) -> Result<Graph> {
    let f = std::fs::File::open(path)?;
    parse_edge_list(std::io::BufReader::new(f))
}

/// `G(n, p)`, deterministic in `seed`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability must lie in [0,1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriangleMethod {
    Exact,
    Adaptive,
    Bekas,
    Diagpp,
    Xdiag,
}

impl std::str::FromStr for TriangleMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" | "exact_diag" => Ok(Self::Exact),
            "adaptive" => Ok(Self::Adaptive),
            "bekas" => Ok(Self::Bekas),
            "diagpp" => Ok(Self::Diagpp),
            "xdiag" | "xdiag-r" | "xdiag-g" => Ok(Self::Xdiag),
            other => Err(format!("unknown triangle method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleConfig {
    pub tolerance: Tolerance,
    pub delta: f64,
    /// Products with `A³` for the fixed-budget methods.
    pub budget: usize,
    pub limits: Option<Limits>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleEstimate {
    /// Triangles through each vertex, `diag(A³)/2`.
    pub counts: Vec<f64>,
    /// Products with the adjacency matrix itself.
    pub base_matvecs: u64,
    pub warnings: Vec<String>,
}

/// Per-vertex triangle counts as `diag(A³)/2`, exactly or by estimation on `A³`.
pub fn triangle_counts(
    g: &Graph,
    method: TriangleMethod,
    config: &TriangleConfig,
    probes: &mut ProbeStream,
) -> Result<TriangleEstimate> {
    let a = &g.adjacency;
    let n = a.n();
    let before = a.matvec_count();
    let cube = PowerOperator::new(a, 3)?;
    let mut warnings = Vec::new();
    let diag = match method {
        TriangleMethod::Exact => exact_diagonal(&cube)?,
        TriangleMethod::Adaptive => {
            let limits = config.limits.unwrap_or_else(|| Limits::for_dim(n));
            let r = adaptive_estimate(&cube, config.tolerance, config.delta, probes, limits)?;
            warnings.extend(r.warnings);
            r.diagonal
        }
        TriangleMethod::Bekas => bekas_estimate(&cube, probes, config.budget)?.diagonal,
        TriangleMethod::Diagpp => diagpp_estimate(&cube, config.budget, probes)?.diagonal,
        TriangleMethod::Xdiag => xdiag_estimate(&cube, config.budget, probes)?.diagonal,
    };
    let base_matvecs = a.matvec_count() - before;
    if method != TriangleMethod::Exact && base_matvecs > 3 * n as u64 {
        warnings.push(format!(
            "{base_matvecs} products with A exceed the {} needed for the exact diagonal",
            3 * n
        ));
    }
    Ok(TriangleEstimate {
        counts: diag.into_iter().map(|d| d / 2.0).collect(),
        base_matvecs,
        warnings,
    })
}
