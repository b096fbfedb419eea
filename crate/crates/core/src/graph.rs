//! Undirected weighted graphs and their Laplacians.

use std::collections::HashMap;
use std::path::Path;

use log::warn;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected graph in canonical form: every edge has `i < j < n`, no
/// self-loops, no duplicates, strictly positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// Builds a canonical graph. Self-loops are skipped and repeated pairs
    /// keep their first weight, both with a warning.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("edge ({a},{b}) outside 0..{n}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!("edge ({a},{b}) has weight {w}")));
            }
            if a == b {
                warn!("skipping self-loop on node {a}");
                continue;
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if seen.insert((i, j), ()).is_some() {
                warn!("duplicate edge ({i},{j}); keeping the first weight");
                continue;
            }
            out.push(Edge { i, j, weight: w });
        }
        Ok(Self { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.i] += e.weight;
            d[e.j] += e.weight;
        }
        d
    }

    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push((e.j, e.weight));
            adj[e.j].push((e.i, e.weight));
        }
        adj
    }

    /// `L = D − A`.
    pub fn laplacian(&self) -> SymMatrix {
        let mut l = SymMatrix::zeros(self.n);
        for e in &self.edges {
            l.add_at(e.i, e.i, e.weight);
            l.add_at(e.j, e.j, e.weight);
            l.add_at(e.i, e.j, -e.weight);
        }
        l
    }

    pub fn connected_components(&self) -> usize {
        let adj = self.neighbors();
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components() <= 1
    }
}

/// G(n, p) with unit weights; pairs are visited in lexicographic order.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> WeightedGraph {
    assert!((0.0..=1.0).contains(&p), "edge probability {p} outside [0, 1]");
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push(Edge { i, j, weight: 1.0 });
            }
        }
    }
    WeightedGraph { n, edges }
}

/// Size of the first community: `round(frac1 · n)`.
pub fn first_community_size(n: usize, frac1: f64) -> usize {
    ((frac1 * n as f64).round() as usize).min(n)
}

/// Two-community stochastic block model with unit weights. Nodes
/// `0..round(frac1·n)` form the first community.
pub fn sbm_two_community<R: Rng + ?Sized>(
    n: usize,
    frac1: f64,
    p_in: f64,
    p_out: f64,
    rng: &mut R,
) -> WeightedGraph {
    assert!(frac1 > 0.0 && frac1 < 1.0, "community fraction {frac1} outside (0, 1)");
    let n1 = first_community_size(n, frac1);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let same = (i < n1) == (j < n1);
            let p = if same { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push(Edge { i, j, weight: 1.0 });
            }
        }
    }
    WeightedGraph { n, edges }
}

/// A graph read from an edge list, with the original node labels in
/// index order.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub graph: WeightedGraph,
    pub labels: Vec<String>,
}

/// Parses `src dst [weight]` lines; `#` starts a comment line. Node labels
/// are arbitrary tokens, indexed densely in order of first appearance.
pub fn parse_edge_list(text: &str) -> Result<LabeledGraph> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut raw = Vec::new();
    let mut intern = |tok: &str, labels: &mut Vec<String>| -> usize {
        *index.entry(tok.to_string()).or_insert_with(|| {
            labels.push(tok.to_string());
            labels.len() - 1
        })
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 || toks.len() > 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected `src dst [weight]`, got {} fields", toks.len()),
            });
        }
        let weight = match toks.get(2) {
            Some(t) => t.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("bad weight {t:?}: {e}"),
            })?,
            None => 1.0,
        };
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("weight must be positive, got {weight}"),
            });
        }
        let a = intern(toks[0], &mut labels);
        let b = intern(toks[1], &mut labels);
        raw.push((a, b, weight));
    }
    if labels.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let graph = WeightedGraph::from_edges(labels.len(), raw)?;
    Ok(LabeledGraph { graph, labels })
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    Ok(load_labeled_edge_list(path)?.graph)
}

pub fn load_labeled_edge_list(path: impl AsRef<Path>) -> Result<LabeledGraph> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}
