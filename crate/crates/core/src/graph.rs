//! Undirected weighted graphs and weighted PageRank.

use std::cmp::Ordering;

use crate::error::{CactusError, Result};

/// Undirected graph with named nodes. Edges are stored once; a self-loop is
/// an edge with equal endpoints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedGraph {
    names: Vec<String>,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(names: Vec<String>) -> Self {
        WeightedGraph {
            names,
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) {
        assert!(u < self.names.len() && v < self.names.len(), "edge endpoint out of range");
        self.edges.push((u, v, weight));
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbour lists with weights; a self-loop appears once in its own list.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.names.len()];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            if u != v {
                adj[v].push((u, w));
            }
        }
        adj
    }

    /// Node indices ordered by name; the canonical visiting order of every
    /// algorithm that needs one.
    pub fn sorted_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.names.len()).collect();
        order.sort_by(|&a, &b| self.names[a].cmp(&self.names[b]).then(a.cmp(&b)));
        order
    }

    /// Weighted degrees, self-loops counted twice.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.names.len()];
        for &(u, v, w) in &self.edges {
            d[u] += w;
            d[v] += w;
        }
        d
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn is_isolated(&self, node: usize) -> bool {
        !self.edges.iter().any(|&(u, v, w)| (u == node || v == node) && u != v && w > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRank {
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iter` was reached before the L1 change fell below `tol`.
    pub converged: bool,
}

/// Weighted PageRank by power iteration.
///
/// Every undirected edge is a pair of arcs; a node spreads its mass in
/// proportion to incident weight. Nodes without outgoing weight spread
/// uniformly. The result always sums to one.
pub fn pagerank(graph: &WeightedGraph, params: &PageRankParams) -> Result<PageRank> {
    if !(params.damping > 0.0 && params.damping < 1.0) {
        return Err(CactusError::InvalidParameter(format!(
            "damping {} must lie in (0, 1)",
            params.damping
        )));
    }
    if !(params.tol > 0.0) {
        return Err(CactusError::InvalidParameter("tol must be > 0".into()));
    }
    let n = graph.node_count();
    if n == 0 {
        return Ok(PageRank {
            scores: Vec::new(),
            iterations: 0,
            converged: true,
        });
    }
    let adj = graph.adjacency();
    let out: Vec<f64> = adj.iter().map(|nb| nb.iter().map(|e| e.1).sum()).collect();
    let d = params.damping;
    let nf = n as f64;

    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        let dangling: f64 = (0..n).filter(|&u| out[u] <= 0.0).map(|u| rank[u]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for u in 0..n {
            if out[u] <= 0.0 {
                continue;
            }
            let share = d * rank[u] / out[u];
            for &(v, w) in &adj[u] {
                next[v] += share * w;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let change: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if change < params.tol {
            converged = true;
            break;
        }
    }
    Ok(PageRank {
        scores: rank,
        iterations,
        converged,
    })
}

/// Indices sorted by descending score, ties by ascending index.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}
