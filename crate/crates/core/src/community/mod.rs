//! Deterministic community detection and partition quality.
//!
//! All algorithms visit nodes in ascending name order and break ties towards
//! the smallest community id, so repeated runs give identical assignments.
//! Final community ids are dense and numbered by the first member in name
//! order.

mod greedy;
mod lpa;
mod louvain;

use std::io::Write;

use serde::Serialize;

use crate::error::{CactusError, Result};
use crate::graph::WeightedGraph;

pub use greedy::greedy_communities;
pub use lpa::{label_propagation, MAX_SWEEPS};
pub use louvain::louvain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Greedy,
    LabelPropagation,
    Louvain,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Greedy, Algorithm::LabelPropagation, Algorithm::Louvain];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::LabelPropagation => "label_propagation",
            Algorithm::Louvain => "louvain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quality {
    pub modularity: f64,
    pub coverage: f64,
    pub performance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub graph_id: String,
    pub algorithm: Algorithm,
    /// Community of every node, indexed like the graph's nodes.
    pub assignment: Vec<usize>,
    pub modularity: f64,
    pub coverage: f64,
    pub performance: f64,
    pub warning: Option<String>,
}

impl Partition {
    pub(crate) fn new(
        graph: &WeightedGraph,
        graph_id: &str,
        algorithm: Algorithm,
        labels: &[usize],
        warning: Option<String>,
    ) -> Self {
        let assignment = canonical_labels(graph, labels);
        let q = partition_quality(graph, &assignment).expect("assignment covers graph");
        Partition {
            graph_id: graph_id.to_string(),
            algorithm,
            assignment,
            modularity: q.modularity,
            coverage: q.coverage,
            performance: q.performance,
            warning,
        }
    }

    pub fn n_communities(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    pub fn members(&self, community: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&v| self.assignment[v] == community)
            .collect()
    }

    /// Communities with at least one linked node; isolated nodes are left out.
    pub fn reported_communities(&self, graph: &WeightedGraph) -> Vec<Vec<usize>> {
        (0..self.n_communities())
            .map(|c| self.members(c))
            .map(|m| m.into_iter().filter(|&v| !graph.is_isolated(v)).collect::<Vec<_>>())
            .filter(|m| !m.is_empty())
            .collect()
    }

    pub fn quality(&self) -> Quality {
        Quality {
            modularity: self.modularity,
            coverage: self.coverage,
            performance: self.performance,
        }
    }

    /// `node,community` rows in node-name order.
    pub fn write_csv<W: Write>(&self, graph: &WeightedGraph, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["node", "community"])?;
        for v in graph.sorted_order() {
            w.write_record([graph.names()[v].clone(), self.assignment[v].to_string()])?;
        }
        w.flush().map_err(|e| CactusError::io("communities.csv", e))?;
        Ok(())
    }
}

pub fn detect(graph: &WeightedGraph, algorithm: Algorithm, graph_id: &str) -> Partition {
    match algorithm {
        Algorithm::Greedy => greedy_communities(graph, graph_id),
        Algorithm::LabelPropagation => label_propagation(graph, graph_id),
        Algorithm::Louvain => louvain(graph, graph_id),
    }
}

/// Renumbers arbitrary labels densely, in order of each community's first
/// member by node name.
pub(crate) fn canonical_labels(graph: &WeightedGraph, labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    let mut out = vec![0; labels.len()];
    for v in graph.sorted_order() {
        let next = map.len();
        out[v] = *map.entry(labels[v]).or_insert(next);
    }
    out
}

/// Modularity, coverage and performance of an assignment.
///
/// With `m` the total edge weight, `L_c` the weight inside community `c` and
/// `K_c` the summed weighted degree of its nodes:
/// `Q = sum_c L_c/m - (K_c/2m)^2` and coverage `= sum_c L_c / m`; both are 0
/// for a weightless graph. Performance counts node pairs (unweighted): pairs
/// inside a community joined by an edge plus pairs across communities not
/// joined, over all pairs. Self-loops do not enter performance.
pub fn partition_quality(graph: &WeightedGraph, assignment: &[usize]) -> Result<Quality> {
    let n = graph.node_count();
    if assignment.len() != n {
        return Err(CactusError::InvalidParameter(format!(
            "assignment has {} entries for {n} nodes",
            assignment.len()
        )));
    }
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let degrees = graph.degrees();
    let m = graph.total_weight();
    let mut inner = vec![0.0; k];
    let mut tot = vec![0.0; k];
    for (v, &c) in assignment.iter().enumerate() {
        tot[c] += degrees[v];
    }
    let mut intra_edges = 0usize;
    let mut inter_edges = 0usize;
    let mut seen = std::collections::HashSet::new();
    for &(u, v, w) in graph.edges() {
        if assignment[u] == assignment[v] {
            inner[assignment[u]] += w;
        }
        if u != v && seen.insert((u.min(v), u.max(v))) {
            if assignment[u] == assignment[v] {
                intra_edges += 1;
            } else {
                inter_edges += 1;
            }
        }
    }
    let (modularity, coverage) = if m > 0.0 {
        let q = (0..k)
            .map(|c| inner[c] / m - (tot[c] / (2.0 * m)).powi(2))
            .sum();
        // the two sums may round apart
        (q, (inner.iter().sum::<f64>() / m).min(1.0))
    } else {
        (0.0, 0.0)
    };

    let mut sizes = vec![0usize; k];
    for &c in assignment {
        sizes[c] += 1;
    }
    let pairs = n * n.saturating_sub(1) / 2;
    let intra_pairs: usize = sizes.iter().map(|s| s * s.saturating_sub(1) / 2).sum();
    let inter_pairs = pairs - intra_pairs;
    let performance = if pairs == 0 {
        1.0
    } else {
        (intra_edges + inter_pairs - inter_edges) as f64 / pairs as f64
    };
    Ok(Quality {
        modularity,
        coverage,
        performance,
    })
}
