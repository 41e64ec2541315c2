//! Auxiliary entropy decision tree fitted on the raw table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CactusError, Result};
use crate::ingest::{format_number, DataTable};

/// Splits must gain more than this many bits.
pub const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Split {
    pub attribute: String,
    pub attribute_index: usize,
    /// Rows with `value <= threshold` go left.
    pub threshold: f64,
    pub gain: f64,
    pub left: usize,
    pub right: usize,
    /// Branch taken by a missing value (the one with more observed rows).
    pub missing_left: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub depth: usize,
    pub counts: Vec<usize>,
    pub entropy: f64,
    /// Majority class, ties to the smallest index.
    pub prediction: usize,
    pub split: Option<Split>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub class_names: Vec<String>,
}

/// Shannon entropy in bits of a class histogram.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &k) in counts.iter().enumerate() {
        if k > counts[best] {
            best = c;
        }
    }
    best
}

struct Candidate {
    gain: f64,
    threshold: f64,
    missing_left: bool,
}

/// Best midpoint split of one attribute over `rows`, or `None` when the
/// observed values are constant.
fn best_split(values: &[Option<f64>], labels: &[usize], rows: &[usize], n_classes: usize) -> Option<Candidate> {
    let mut observed: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    let mut missing = vec![0usize; n_classes];
    for &r in rows {
        match values[r] {
            Some(v) => observed.push((v, labels[r])),
            None => missing[labels[r]] += 1,
        }
    }
    if observed.len() < 2 {
        return None;
    }
    observed.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut parent = missing.clone();
    for &(_, l) in &observed {
        parent[l] += 1;
    }
    let h_parent = entropy(&parent);
    let n = rows.len() as f64;
    let n_missing: usize = missing.iter().sum();

    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for &(_, l) in &observed {
        right[l] += 1;
    }
    let mut best: Option<Candidate> = None;
    let mut tmp = vec![0usize; n_classes];
    for i in 0..observed.len() - 1 {
        let (v, l) = observed[i];
        left[l] += 1;
        right[l] -= 1;
        let next = observed[i + 1].0;
        if next == v {
            continue;
        }
        let threshold = v + (next - v) / 2.0;
        let n_left = i + 1;
        let n_right = observed.len() - n_left;
        let missing_left = n_left >= n_right;
        let (a, b) = if missing_left { (&left, &right) } else { (&right, &left) };
        for c in 0..n_classes {
            tmp[c] = a[c] + missing[c];
        }
        let na = (if missing_left { n_left } else { n_right } + n_missing) as f64;
        let nb = (if missing_left { n_right } else { n_left }) as f64;
        let gain = h_parent - (na / n) * entropy(&tmp) - (nb / n) * entropy(b);
        if best.as_ref().is_none_or(|c| gain > c.gain + MIN_GAIN) {
            best = Some(Candidate {
                gain,
                threshold,
                missing_left,
            });
        }
    }
    best
}

/// Grows a tree greedily on information gain until leaves are pure, the depth
/// limit is hit, or no split gains.
///
/// Categorical columns split on their numeric codes. Candidates are scanned
/// by attribute name, then threshold; a later candidate must beat the best so
/// far by more than [`MIN_GAIN`].
pub fn fit_tree(table: &DataTable, max_depth: Option<usize>) -> Result<DecisionTree> {
    let present = table.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(CactusError::InvalidParameter(
            "decision tree needs at least 2 classes".into(),
        ));
    }
    let k = table.n_classes();
    let labels = table.labels();
    let mut order: Vec<usize> = (0..table.n_columns()).collect();
    order.sort_by(|&a, &b| table.column_names()[a].cmp(&table.column_names()[b]));
    let columns: Vec<Vec<Option<f64>>> = (0..table.n_columns()).map(|j| table.numeric_codes(j)).collect();

    let mut nodes: Vec<TreeNode> = Vec::new();
    // (node index, rows) waiting to be expanded
    let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
    let root_rows: Vec<usize> = (0..table.n_rows()).collect();
    nodes.push(leaf(&root_rows, labels, k, 0));
    stack.push((0, root_rows));

    while let Some((id, rows)) = stack.pop() {
        let depth = nodes[id].depth;
        if nodes[id].entropy == 0.0 || max_depth.is_some_and(|d| depth >= d) {
            continue;
        }
        let mut best: Option<(usize, Candidate)> = None;
        for &j in &order {
            if let Some(c) = best_split(&columns[j], labels, &rows, k) {
                if best.as_ref().is_none_or(|(_, b)| c.gain > b.gain + MIN_GAIN) {
                    best = Some((j, c));
                }
            }
        }
        let Some((j, cand)) = best else { continue };
        if cand.gain <= MIN_GAIN {
            continue;
        }
        let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
        for &r in &rows {
            let goes_left = match columns[j][r] {
                Some(v) => v <= cand.threshold,
                None => cand.missing_left,
            };
            if goes_left {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        let left = nodes.len();
        nodes.push(leaf(&left_rows, labels, k, depth + 1));
        let right = nodes.len();
        nodes.push(leaf(&right_rows, labels, k, depth + 1));
        nodes[id].split = Some(Split {
            attribute: table.column_names()[j].clone(),
            attribute_index: j,
            threshold: cand.threshold,
            gain: cand.gain,
            left,
            right,
            missing_left: cand.missing_left,
        });
        // right first so the left subtree is expanded first
        stack.push((right, right_rows));
        stack.push((left, left_rows));
    }
    Ok(DecisionTree {
        nodes,
        class_names: table.class_names().to_vec(),
    })
}

fn leaf(rows: &[usize], labels: &[usize], n_classes: usize, depth: usize) -> TreeNode {
    let mut counts = vec![0; n_classes];
    for &r in rows {
        counts[labels[r]] += 1;
    }
    TreeNode {
        depth,
        entropy: entropy(&counts),
        prediction: majority(&counts),
        counts,
        split: None,
    }
}

impl DecisionTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Distinct split attributes, in first-use order.
    pub fn split_attributes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in self.nodes.iter().filter_map(|n| n.split.as_ref()) {
            if !out.contains(&s.attribute.as_str()) {
                out.push(&s.attribute);
            }
        }
        out
    }

    pub fn leaves_pure(&self) -> bool {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .all(|n| n.counts.iter().filter(|&&c| c > 0).count() <= 1)
    }

    /// Predicted class of every row of a table with the training columns.
    pub fn predict(&self, table: &DataTable) -> Vec<usize> {
        let columns: Vec<Vec<Option<f64>>> = (0..table.n_columns()).map(|j| table.numeric_codes(j)).collect();
        (0..table.n_rows())
            .map(|r| {
                let mut id = 0;
                while let Some(s) = &self.nodes[id].split {
                    let left = match columns[s.attribute_index][r] {
                        Some(v) => v <= s.threshold,
                        None => s.missing_left,
                    };
                    id = if left { s.left } else { s.right };
                }
                self.nodes[id].prediction
            })
            .collect()
    }

    pub fn training_accuracy(&self, table: &DataTable) -> f64 {
        if table.n_rows() == 0 {
            return 0.0;
        }
        let hits = self
            .predict(table)
            .iter()
            .zip(table.labels())
            .filter(|(p, t)| p == t)
            .count();
        hits as f64 / table.n_rows() as f64
    }

    fn counts_label(&self, counts: &[usize]) -> String {
        let parts: Vec<String> = self
            .class_names
            .iter()
            .zip(counts)
            .map(|(n, c)| format!("{n}={c}"))
            .collect();
        format!("[{}]", parts.join(", "))
    }

    /// Indented text rendering, one line per branch.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let root = self.root();
        if root.is_leaf() {
            let _ = writeln!(
                out,
                "leaf: {} {}",
                self.class_names[root.prediction],
                self.counts_label(&root.counts)
            );
            return out;
        }
        let _ = writeln!(out, "root {}", self.counts_label(&root.counts));
        self.write_branches(0, 0, &mut out);
        out
    }

    fn write_branches(&self, id: usize, indent: usize, out: &mut String) {
        let Some(s) = &self.nodes[id].split else { return };
        let pad = "|   ".repeat(indent);
        for (child, op) in [(s.left, "<="), (s.right, ">")] {
            let node = &self.nodes[child];
            let t = format_number(s.threshold);
            let counts = self.counts_label(&node.counts);
            if node.is_leaf() {
                let class = &self.class_names[node.prediction];
                let _ = writeln!(out, "{pad}|--- {} {op} {t} {counts} -> {class}", s.attribute);
            } else {
                let _ = writeln!(out, "{pad}|--- {} {op} {t} {counts}", s.attribute);
                self.write_branches(child, indent + 1, out);
            }
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = [
            "node", "depth", "attribute", "threshold", "left", "right", "missing", "prediction", "entropy",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(self.class_names.iter().map(|c| format!("count_{c}")));
        w.write_record(&header)?;
        for (i, n) in self.nodes.iter().enumerate() {
            let mut row = vec![i.to_string(), n.depth.to_string()];
            match &n.split {
                Some(s) => row.extend([
                    s.attribute.clone(),
                    format_number(s.threshold),
                    s.left.to_string(),
                    s.right.to_string(),
                    if s.missing_left { "left" } else { "right" }.to_string(),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
            row.push(self.class_names[n.prediction].clone());
            row.push(format_number(n.entropy));
            row.extend(n.counts.iter().map(|c| c.to_string()));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| CactusError::io("tree.csv", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Writes `tree.txt` and `tree.csv` into `dir`.
pub fn export_tree(tree: &DecisionTree, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CactusError::io(dir, e))?;
    let txt = dir.join("tree.txt");
    fs::write(&txt, tree.to_text()).map_err(|e| CactusError::io(&txt, e))?;
    let csv_path = dir.join("tree.csv");
    fs::write(&csv_path, tree.to_csv_string()?).map_err(|e| CactusError::io(&csv_path, e))?;
    Ok(vec![txt, csv_path])
}
