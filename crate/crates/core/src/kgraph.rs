//! Per-class knowledge graphs over flips.
//!
//! Nodes are all flips of the schema. Two flips of different attributes are
//! joined by their within-class joint probability: the share of class
//! records, among those observing both attributes, where both flips are
//! active. Co-occurrences are counted in one pass over the class records;
//! no per-record adjacency is kept.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::abstraction::{AbstractTable, FlipKind};
use crate::error::{CactusError, Result};
use crate::graph::{pagerank, PageRankParams, WeightedGraph};
use crate::graphml::{write_graphml, AttrType, AttrValue, GraphMlDocument, GraphMlEdge, GraphMlNode};
use crate::ingest::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    UpUp,
    DownDown,
    /// Any pair involving a categorical flip, or an Up with a Down.
    Mixed,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::UpUp => "up",
            EdgeKind::DownDown => "down",
            EdgeKind::Mixed => "mixed",
        }
    }

    fn of(a: &FlipKind, b: &FlipKind) -> Self {
        match (a, b) {
            (FlipKind::Up, FlipKind::Up) => EdgeKind::UpUp,
            (FlipKind::Down, FlipKind::Down) => EdgeKind::DownDown,
            _ => EdgeKind::Mixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipNode {
    /// Index into the schema's flips (and into the graph's node list).
    pub flip: usize,
    pub name: String,
    pub probability: f64,
    pub pagerank: f64,
    pub corrected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    pub class_index: usize,
    pub class_name: String,
    pub nodes: Vec<FlipNode>,
    pub edges: Vec<FlipEdge>,
    pub pagerank_converged: bool,
    pub pagerank_iterations: usize,
}

/// Builds the graph of one class. Edges with weight `<= weight_floor` are
/// left out. PageRank fields stay zero until [`KnowledgeGraph::rank`].
pub fn build_graph(at: &AbstractTable, class_index: usize, weight_floor: f64) -> Result<KnowledgeGraph> {
    let schema = &at.schema;
    let n_flips = schema.n_flips();
    let n_attrs = schema.attributes().len();
    let flips = schema.flips();

    let mut class_size = 0usize;
    let mut active = vec![0u64; n_flips];
    let mut observed = vec![0u64; n_attrs];
    // upper triangles, row-major
    let mut joint = vec![0u64; n_flips * n_flips];
    let mut both_observed = vec![0u64; n_attrs * n_attrs];
    let mut attrs: Vec<usize> = Vec::with_capacity(n_attrs);

    for (row, _) in at.rows.iter().zip(&at.labels).filter(|(_, &l)| l == class_index) {
        class_size += 1;
        attrs.clear();
        attrs.extend(row.iter().map(|&f| flips[f].attribute_index));
        for (i, &f) in row.iter().enumerate() {
            active[f] += 1;
            observed[attrs[i]] += 1;
            for (k, &g) in row.iter().enumerate().skip(i + 1) {
                joint[f * n_flips + g] += 1;
                let (a, b) = (attrs[i].min(attrs[k]), attrs[i].max(attrs[k]));
                both_observed[a * n_attrs + b] += 1;
            }
        }
    }
    if class_size == 0 {
        return Err(CactusError::EmptyClass(class_index));
    }

    let nodes = flips
        .iter()
        .enumerate()
        .map(|(f, flip)| {
            let denom = observed[flip.attribute_index];
            FlipNode {
                flip: f,
                name: flip.display_name.clone(),
                probability: if denom == 0 { 0.0 } else { active[f] as f64 / denom as f64 },
                pagerank: 0.0,
                corrected: 0.0,
            }
        })
        .collect();

    let mut edges = Vec::new();
    for f in 0..n_flips {
        for g in f + 1..n_flips {
            let (af, ag) = (flips[f].attribute_index, flips[g].attribute_index);
            if af == ag {
                continue;
            }
            let count = joint[f * n_flips + g];
            if count == 0 {
                continue;
            }
            let denom = both_observed[af.min(ag) * n_attrs + af.max(ag)];
            let weight = count as f64 / denom as f64;
            if weight > weight_floor {
                edges.push(FlipEdge {
                    source: f,
                    target: g,
                    weight,
                    kind: EdgeKind::of(&flips[f].kind, &flips[g].kind),
                });
            }
        }
    }

    Ok(KnowledgeGraph {
        class_index,
        class_name: at.class_names.get(class_index).cloned().unwrap_or_default(),
        nodes,
        edges,
        pagerank_converged: false,
        pagerank_iterations: 0,
    })
}

impl KnowledgeGraph {
    pub fn to_weighted(&self) -> WeightedGraph {
        let mut g = WeightedGraph::new(self.nodes.iter().map(|n| n.name.clone()).collect());
        for e in &self.edges {
            g.add_edge(e.source, e.target, e.weight);
        }
        g
    }

    /// Fills PageRank and the corrected significance of every node.
    pub fn rank(&mut self, params: &PageRankParams) -> Result<()> {
        let pr = pagerank(&self.to_weighted(), params)?;
        for (node, s) in self.nodes.iter_mut().zip(&pr.scores) {
            node.pagerank = *s;
        }
        self.pagerank_converged = pr.converged;
        self.pagerank_iterations = pr.iterations;
        let corrected = corrected_significance(self)?;
        for (node, c) in self.nodes.iter_mut().zip(corrected) {
            node.corrected = c;
        }
        Ok(())
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        let (s, t) = (a.min(b), a.max(b));
        self.edges
            .iter()
            .find(|e| e.source == s && e.target == t)
            .map(|e| e.weight)
    }

    pub fn to_graphml(&self) -> GraphMlDocument {
        let mut nodes: Vec<&FlipNode> = self.nodes.iter().collect();
        nodes.sort_by(|a, b| a.name.cmp(&b.name));
        let mut edges: Vec<(&str, &str, &FlipEdge)> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (self.nodes[e.source].name.as_str(), self.nodes[e.target].name.as_str());
                if a <= b {
                    (a, b, e)
                } else {
                    (b, a, e)
                }
            })
            .collect();
        edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        GraphMlDocument {
            graph_id: format!("class_{}", self.class_index),
            node_keys: vec![
                ("probability".into(), AttrType::Double),
                ("pagerank".into(), AttrType::Double),
                ("corrected".into(), AttrType::Double),
            ],
            edge_keys: vec![("weight".into(), AttrType::Double), ("kind".into(), AttrType::String)],
            nodes: nodes
                .into_iter()
                .map(|n| GraphMlNode {
                    id: n.name.clone(),
                    attrs: vec![
                        AttrValue::Double(n.probability),
                        AttrValue::Double(n.pagerank),
                        AttrValue::Double(n.corrected),
                    ],
                })
                .collect(),
            edges: edges
                .into_iter()
                .map(|(a, b, e)| GraphMlEdge {
                    source: a.to_string(),
                    target: b.to_string(),
                    attrs: vec![AttrValue::Double(e.weight), AttrValue::String(e.kind.as_str().into())],
                })
                .collect(),
        }
    }

    pub fn write_edges_csv<W: Write>(&self, writer: W) -> Result<()> {
        let doc = self.to_graphml();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["source", "target", "weight"])?;
        for e in &doc.edges {
            let weight = e.attrs[0].as_f64().expect("weight is a double");
            w.write_record([e.source.as_str(), e.target.as_str(), &format_number(weight)])?;
        }
        w.flush().map_err(|e| CactusError::io("edges.csv", e))?;
        Ok(())
    }
}

/// PageRank times `P(f|c)`, renormalised to sum to one.
pub fn corrected_significance(graph: &KnowledgeGraph) -> Result<Vec<f64>> {
    let raw: Vec<f64> = graph.nodes.iter().map(|n| n.pagerank * n.probability).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(CactusError::DegenerateGraph(graph.class_index));
    }
    Ok(raw.into_iter().map(|x| x / total).collect())
}

/// Writes `class_<i>.graphml` and `class_<i>_edges.csv` into `dir`.
pub fn export_graph(graph: &KnowledgeGraph, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CactusError::io(dir, e))?;
    let gml = dir.join(format!("class_{}.graphml", graph.class_index));
    let csv_path = dir.join(format!("class_{}_edges.csv", graph.class_index));

    let file = File::create(&gml).map_err(|e| CactusError::io(&gml, e))?;
    let mut w = BufWriter::new(file);
    write_graphml(&graph.to_graphml(), &mut w).map_err(|e| CactusError::io(&gml, e))?;
    w.flush().map_err(|e| CactusError::io(&gml, e))?;

    let file = File::create(&csv_path).map_err(|e| CactusError::io(&csv_path, e))?;
    graph.write_edges_csv(BufWriter::new(file))?;
    Ok(vec![gml, csv_path])
}
