//! Attribute correlation on raw values, the correlation graph, its minimum
//! spanning tree and node centralities.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;

use crate::dtree::DecisionTree;
use crate::error::{CactusError, Result};
use crate::graph::{pagerank, PageRankParams, WeightedGraph};
use crate::graphml::{AttrType, AttrValue, GraphMlDocument, GraphMlEdge, GraphMlNode};
use crate::ingest::{format_number, DataTable};

/// |rho| at or above this is reported as a perfect correlation.
pub const PERFECT_CORRELATION: f64 = 1.0 - 1e-12;

/// Symmetric matrix of Pearson coefficients; `None` marks undefined pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    values: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.names.len() + j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn by_name(&self, a: &str, b: &str) -> Option<f64> {
        self.get(self.index_of(a)?, self.index_of(b)?)
    }

    /// Off-diagonal pairs with |rho| = 1, as `(a, b, rho)` with `a < b` by index.
    pub fn perfect_pairs(&self) -> Vec<(String, String, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if let Some(r) = self.get(i, j) {
                    if r.abs() >= PERFECT_CORRELATION {
                        out.push((self.names[i].clone(), self.names[j].clone(), r));
                    }
                }
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.names[i].clone()];
            row.extend((0..self.len()).map(|j| self.get(i, j).map(format_number).unwrap_or_default()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| CactusError::io("correlation.csv", e))?;
        Ok(())
    }
}

/// Pearson coefficient over the rows where both values are present. `None`
/// with fewer than two such rows or zero variance on either side.
pub fn pearson(x: &[Option<f64>], y: &[Option<f64>]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(a, b) in &pairs {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation of the selected feature columns plus the label column (class
/// index as value), in that order. Categorical tokens use their numeric codes.
pub fn correlation_matrix(table: &DataTable, columns: &[String]) -> Result<CorrelationMatrix> {
    let mut names = Vec::new();
    let mut series: Vec<Vec<Option<f64>>> = Vec::new();
    for name in columns {
        if name == table.target_name() {
            continue;
        }
        let j = table
            .column_index(name)
            .ok_or_else(|| CactusError::MissingColumn(name.clone()))?;
        names.push(name.clone());
        series.push(table.numeric_codes(j));
    }
    names.push(table.target_name().to_string());
    series.push(table.labels().iter().map(|&l| Some(l as f64)).collect());

    let n = names.len();
    if n < 2 {
        return Err(CactusError::InvalidParameter("correlation needs at least 2 columns".into()));
    }
    let mut values = vec![None; n * n];
    for i in 0..n {
        for j in i..n {
            let r = if i == j {
                pearson(&series[i], &series[i]).map(|_| 1.0)
            } else {
                pearson(&series[i], &series[j])
            };
            values[i * n + j] = r;
            values[j * n + i] = r;
        }
    }
    Ok(CorrelationMatrix { names, values })
}

/// Attributes used by the tree's splits plus the label; every column when no
/// tree is given.
pub fn preselect_columns(table: &DataTable, tree: Option<&DecisionTree>) -> Vec<String> {
    let mut out: Vec<String> = match tree {
        None => table.column_names().to_vec(),
        Some(tree) => {
            let used: BTreeSet<&str> = tree.split_attributes().into_iter().collect();
            table
                .column_names()
                .iter()
                .filter(|c| used.contains(c.as_str()))
                .cloned()
                .collect()
        }
    };
    out.push(table.target_name().to_string());
    out
}

/// Nodes are the matrix's attributes, edges carry |rho| for every defined
/// pair. Self-loops of weight 1 are added only when `remove_self_loops` is
/// false.
pub fn correlation_graph(matrix: &CorrelationMatrix, remove_self_loops: bool) -> WeightedGraph {
    let n = matrix.len();
    let mut g = WeightedGraph::new(matrix.names.clone());
    for i in 0..n {
        for j in i..n {
            if i == j && remove_self_loops {
                continue;
            }
            if let Some(r) = matrix.get(i, j) {
                g.add_edge(i, j, r.abs());
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MstEdge {
    pub source: String,
    pub target: String,
    /// |rho| of the pair.
    pub weight: f64,
    /// `1 - |rho|`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanningForest {
    pub edges: Vec<MstEdge>,
    /// Connected components spanned; more than one means a forest.
    pub components: usize,
}

impl SpanningForest {
    pub fn total_cost(&self) -> f64 {
        self.edges.iter().map(|e| e.cost).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["source", "target", "weight", "cost"])?;
        for e in &self.edges {
            w.write_record([
                e.source.as_str(),
                e.target.as_str(),
                &format_number(e.weight),
                &format_number(e.cost),
            ])?;
        }
        w.flush().map_err(|e| CactusError::io("mst.csv", e))?;
        Ok(())
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal's algorithm on edge cost `1 - weight`. Equal costs are ordered by
/// the (sorted) endpoint names. Self-loops are ignored; a disconnected graph
/// yields one tree per component.
pub fn mst(graph: &WeightedGraph) -> SpanningForest {
    let names = graph.names();
    let mut candidates: Vec<(f64, &str, &str, usize, usize, f64)> = graph
        .edges()
        .iter()
        .filter(|e| e.0 != e.1)
        .map(|&(u, v, w)| {
            let (a, b) = if names[u] <= names[v] { (u, v) } else { (v, u) };
            (1.0 - w, names[a].as_str(), names[b].as_str(), a, b, w)
        })
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| (x.1, x.2).cmp(&(y.1, y.2))));
    let mut dsu = DisjointSet::new(graph.node_count());
    let mut edges = Vec::new();
    for (cost, a, b, u, v, w) in candidates {
        if dsu.union(u, v) {
            edges.push(MstEdge {
                source: a.to_string(),
                target: b.to_string(),
                weight: w,
                cost,
            });
        }
    }
    let components = graph.node_count() - edges.len();
    SpanningForest { edges, components }
}

/// Laplacian energy `sum_i d_i^2 + 2 sum_{i<j} w_ij^2`, self-loops ignored.
fn laplacian_energy(n: usize, edges: &[(usize, usize, f64)], skip: Option<usize>) -> f64 {
    let mut degree = vec![0.0; n];
    let mut off = 0.0;
    for &(u, v, w) in edges {
        if u == v || Some(u) == skip || Some(v) == skip {
            continue;
        }
        degree[u] += w;
        degree[v] += w;
        off += w * w;
    }
    degree.iter().map(|d| d * d).sum::<f64>() + 2.0 * off
}

/// Relative drop in Laplacian energy when each node is removed.
pub fn laplacian_centrality(graph: &WeightedGraph) -> Vec<f64> {
    let n = graph.node_count();
    let full = laplacian_energy(n, graph.edges(), None);
    if full <= 0.0 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|v| (full - laplacian_energy(n, graph.edges(), Some(v))) / full)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeScore {
    pub name: String,
    pub pagerank: f64,
    pub laplacian: f64,
}

pub fn node_scores(graph: &WeightedGraph, params: &PageRankParams) -> Result<(Vec<NodeScore>, bool)> {
    let pr = pagerank(graph, params)?;
    let lap = laplacian_centrality(graph);
    let scores = graph
        .names()
        .iter()
        .zip(pr.scores)
        .zip(lap)
        .map(|((name, pagerank), laplacian)| NodeScore {
            name: name.clone(),
            pagerank,
            laplacian,
        })
        .collect();
    Ok((scores, pr.converged))
}

pub fn correlation_graphml(graph: &WeightedGraph, matrix: &CorrelationMatrix, scores: &[NodeScore]) -> GraphMlDocument {
    let nodes = graph
        .sorted_order()
        .into_iter()
        .map(|v| GraphMlNode {
            id: graph.names()[v].clone(),
            attrs: vec![
                AttrValue::Double(scores[v].pagerank),
                AttrValue::Double(scores[v].laplacian),
            ],
        })
        .collect();
    let names = graph.names();
    let mut edges: Vec<GraphMlEdge> = graph
        .edges()
        .iter()
        .map(|&(u, v, w)| {
            let (a, b) = if names[u] <= names[v] { (u, v) } else { (v, u) };
            GraphMlEdge {
                source: names[a].clone(),
                target: names[b].clone(),
                attrs: vec![AttrValue::Double(w), AttrValue::Double(matrix.get(u, v).unwrap_or(0.0))],
            }
        })
        .collect();
    edges.sort_by(|x, y| (&x.source, &x.target).cmp(&(&y.source, &y.target)));
    GraphMlDocument {
        graph_id: "correlation".into(),
        node_keys: vec![("pagerank".into(), AttrType::Double), ("laplacian".into(), AttrType::Double)],
        edge_keys: vec![("weight".into(), AttrType::Double), ("rho".into(), AttrType::Double)],
        nodes,
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Cell;

    fn table() -> DataTable {
        let rows: Vec<Vec<Cell>> = (0..6)
            .map(|i| {
                let x = i as f64;
                vec![Cell::Number(x), Cell::Number(-2.0 * x + 1.0), Cell::Number((x * 7.0) % 3.0)]
            })
            .collect();
        DataTable::new(
            vec!["a".into(), "neg".into(), "c".into()],
            rows,
            vec![0, 0, 0, 1, 1, 1],
            vec!["0".into(), "1".into()],
            "y",
        )
        .unwrap()
    }

    #[test]
    fn self_and_negation() {
        let t = table();
        let m = correlation_matrix(&t, &["a".into(), "neg".into(), "c".into()]).unwrap();
        assert_eq!(m.names, ["a", "neg", "c", "y"]);
        assert_eq!(m.get(0, 0), Some(1.0));
        assert!((m.get(0, 1).unwrap() + 1.0).abs() < 1e-12);
        let warn = m.perfect_pairs();
        assert!(warn.iter().any(|(a, b, _)| a == "a" && b == "neg"));
    }

    #[test]
    fn undefined_when_constant_or_sparse() {
        assert_eq!(pearson(&[Some(1.0), Some(1.0), Some(1.0)], &[Some(1.0), Some(2.0), Some(3.0)]), None);
        assert_eq!(pearson(&[Some(1.0), None], &[Some(1.0), Some(2.0)]), None);
        let r = pearson(&[Some(1.0), None, Some(2.0), Some(3.0)], &[Some(2.0), Some(9.0), Some(4.0), Some(6.0)]);
        assert!((r.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn graph_construction_and_self_loops() {
        let m = CorrelationMatrix {
            names: vec!["a".into(), "b".into()],
            values: vec![Some(1.0), Some(-0.5), Some(-0.5), Some(1.0)],
        };
        let g = correlation_graph(&m, true);
        assert_eq!(g.edges(), &[(0, 1, 0.5)]);
        let with_loops = correlation_graph(&m, false);
        assert_eq!(with_loops.edges().iter().filter(|e| e.0 == e.1 && e.2 == 1.0).count(), 2);
    }

    #[test]
    fn triangle_mst() {
        let mut g = WeightedGraph::new(vec!["a".into(), "b".into(), "c".into()]);
        g.add_edge(0, 1, 0.9);
        g.add_edge(1, 2, 0.8);
        g.add_edge(0, 2, 0.1);
        let f = mst(&g);
        let mut costs: Vec<f64> = f.edges.iter().map(|e| e.cost).collect();
        costs.sort_by(f64::total_cmp);
        assert!((costs[0] - 0.1).abs() < 1e-12 && (costs[1] - 0.2).abs() < 1e-12);
        assert_eq!(f.components, 1);
    }

    #[test]
    fn disconnected_forest() {
        let mut g = WeightedGraph::new((0..4).map(|i| i.to_string()).collect());
        g.add_edge(0, 1, 0.5);
        g.add_edge(2, 3, 0.5);
        let f = mst(&g);
        assert_eq!(f.edges.len(), 2);
        assert_eq!(f.components, 2);
    }

    #[test]
    fn star_centre_is_most_central() {
        let mut g = WeightedGraph::new((0..5).map(|i| i.to_string()).collect());
        for leaf in 1..5 {
            g.add_edge(0, leaf, 1.0);
        }
        let c = laplacian_centrality(&g);
        for leaf in 1..5 {
            assert!(c[0] > c[leaf]);
        }
        assert_eq!(laplacian_centrality(&WeightedGraph::new(vec!["x".into(), "y".into()])), vec![0.0, 0.0]);
    }
}
