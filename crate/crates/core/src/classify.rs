//! Record classification, balanced accuracy and flip/marker ranks.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::abstraction::{flip_probabilities, AbstractTable, FlipProbabilities, FlipSchema};
use crate::error::{CactusError, Result};
use crate::graph::PageRankParams;
use crate::ingest::format_number;
use crate::kgraph::{build_graph, KnowledgeGraph};

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

/// Sum of `max(P(f|c), epsilon)` over the active flips; `None` for a record
/// without active flips.
pub fn classify_probabilistic(record: &[usize], probabilities: &FlipProbabilities, epsilon: f64) -> Option<usize> {
    if record.is_empty() {
        return None;
    }
    let scores: Vec<f64> = (0..probabilities.n_classes())
        .map(|c| record.iter().map(|&f| probabilities.get(c, f).max(epsilon)).sum())
        .collect();
    Some(argmax(&scores))
}

/// Sum of the corrected significance of the active flips in each class
/// graph; `None` for a record without active flips.
pub fn classify_pagerank(record: &[usize], graphs: &[KnowledgeGraph]) -> Option<usize> {
    if record.is_empty() {
        return None;
    }
    let scores: Vec<f64> = graphs
        .iter()
        .map(|g| record.iter().filter_map(|&f| g.nodes.get(f)).map(|n| n.corrected).sum())
        .collect();
    Some(argmax(&scores))
}

/// Counts indexed `[truth][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(truth: &[usize], predicted: &[usize], n_classes: usize) -> Self {
        let mut counts = vec![vec![0u64; n_classes]; n_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            counts[t][p] += 1;
        }
        ConfusionMatrix { n_classes, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let correct: u64 = (0..self.n_classes).map(|c| self.counts[c][c]).sum();
        correct as f64 / self.total() as f64
    }

    /// Mean per-class recall, `(1/N) sum_c correct_c / |E_c|`.
    pub fn balanced_accuracy(&self) -> Result<f64> {
        let mut sum = 0.0;
        for c in 0..self.n_classes {
            let size: u64 = self.counts[c].iter().sum();
            if size == 0 {
                return Err(CactusError::EmptyClass(c));
            }
            sum += self.counts[c][c] as f64 / size as f64;
        }
        Ok(sum / self.n_classes as f64)
    }
}

pub fn balanced_accuracy(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<f64> {
    ConfusionMatrix::new(truth, predicted, n_classes).balanced_accuracy()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodMetrics {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
}

impl MethodMetrics {
    fn new(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        let confusion = ConfusionMatrix::new(truth, predicted, n_classes);
        Ok(MethodMetrics {
            accuracy: confusion.accuracy(),
            balanced_accuracy: confusion.balanced_accuracy()?,
            confusion,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RecordPrediction {
    pub row: usize,
    pub truth: usize,
    pub pagerank: usize,
    pub probabilistic: usize,
    /// No active flips; both predictions fell back to the majority class.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub per_record: Vec<RecordPrediction>,
    pub pagerank: MethodMetrics,
    pub probabilistic: MethodMetrics,
    /// Share of records where both classifiers predict the same class.
    pub agreement: f64,
    pub flagged: usize,
}

impl ClassificationReport {
    pub fn write_predictions_csv<W: Write>(&self, writer: W, class_names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row", "truth", "pagerank", "probabilistic", "flagged"])?;
        for p in &self.per_record {
            w.write_record([
                p.row.to_string(),
                class_names[p.truth].clone(),
                class_names[p.pagerank].clone(),
                class_names[p.probabilistic].clone(),
                p.flagged.to_string(),
            ])?;
        }
        w.flush().map_err(|e| CactusError::io("predictions.csv", e))?;
        Ok(())
    }

    pub fn write_metrics_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["method", "accuracy", "balanced_accuracy", "agreement", "flagged"])?;
        for (name, m) in [("pagerank", &self.pagerank), ("probabilistic", &self.probabilistic)] {
            w.write_record([
                name.to_string(),
                format_number(m.accuracy),
                format_number(m.balanced_accuracy),
                format_number(self.agreement),
                self.flagged.to_string(),
            ])?;
        }
        w.flush().map_err(|e| CactusError::io("metrics.csv", e))?;
        Ok(())
    }

    pub fn write_confusion_csv<W: Write>(&self, writer: W, class_names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["method", "truth", "predicted", "count"])?;
        for (name, m) in [("pagerank", &self.pagerank), ("probabilistic", &self.probabilistic)] {
            for (t, row) in m.confusion.counts.iter().enumerate() {
                for (p, count) in row.iter().enumerate() {
                    w.write_record([name, &class_names[t], &class_names[p], &count.to_string()])?;
                }
            }
        }
        w.flush().map_err(|e| CactusError::io("confusion.csv", e))?;
        Ok(())
    }
}

/// Classifies every record of `at` with both scorers.
///
/// `majority` is the fallback class for records without active flips.
pub fn classify_records(
    at: &AbstractTable,
    probabilities: &FlipProbabilities,
    graphs: &[KnowledgeGraph],
    epsilon: f64,
    majority: usize,
) -> Result<ClassificationReport> {
    let per_record: Vec<RecordPrediction> = at
        .rows
        .par_iter()
        .zip(at.labels.par_iter())
        .enumerate()
        .map(|(row, (flips, &truth))| {
            let prob = classify_probabilistic(flips, probabilities, epsilon);
            let pr = classify_pagerank(flips, graphs);
            RecordPrediction {
                row,
                truth,
                pagerank: pr.unwrap_or(majority),
                probabilistic: prob.unwrap_or(majority),
                flagged: prob.is_none(),
            }
        })
        .collect();
    report_from(per_record, at.n_classes)
}

fn report_from(per_record: Vec<RecordPrediction>, n_classes: usize) -> Result<ClassificationReport> {
    let truth: Vec<usize> = per_record.iter().map(|p| p.truth).collect();
    let pr: Vec<usize> = per_record.iter().map(|p| p.pagerank).collect();
    let prob: Vec<usize> = per_record.iter().map(|p| p.probabilistic).collect();
    let agree = per_record.iter().filter(|p| p.pagerank == p.probabilistic).count();
    Ok(ClassificationReport {
        pagerank: MethodMetrics::new(&truth, &pr, n_classes)?,
        probabilistic: MethodMetrics::new(&truth, &prob, n_classes)?,
        agreement: if per_record.is_empty() { 1.0 } else { agree as f64 / per_record.len() as f64 },
        flagged: per_record.iter().filter(|p| p.flagged).count(),
        per_record,
    })
}

/// Largest class, smallest index on ties.
pub fn majority_class(labels: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let mut best = 0;
    for c in 1..n_classes {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best
}

/// Builds one ranked graph per class.
pub fn build_class_graphs(
    at: &AbstractTable,
    weight_floor: f64,
    params: &PageRankParams,
) -> Result<Vec<KnowledgeGraph>> {
    (0..at.n_classes)
        .into_par_iter()
        .map(|c| {
            let mut g = build_graph(at, c, weight_floor)?;
            g.rank(params)?;
            Ok(g)
        })
        .collect()
}

/// Stratified k-fold evaluation: probabilities and graphs are rebuilt on the
/// training folds (the schema is kept) and every record is predicted once,
/// from the fold that holds it out.
pub fn cross_validate(
    at: &AbstractTable,
    folds: usize,
    weight_floor: f64,
    params: &PageRankParams,
    epsilon: f64,
) -> Result<ClassificationReport> {
    if folds < 2 {
        return Err(CactusError::InvalidParameter("k-fold needs at least 2 folds".into()));
    }
    let mut fold_of = vec![0usize; at.rows.len()];
    let mut seen = vec![0usize; at.n_classes];
    for (r, &l) in at.labels.iter().enumerate() {
        fold_of[r] = seen[l] % folds;
        seen[l] += 1;
    }
    let mut per_record = Vec::with_capacity(at.rows.len());
    for k in 0..folds {
        let train: Vec<usize> = (0..at.rows.len()).filter(|&r| fold_of[r] != k).collect();
        let test: Vec<usize> = (0..at.rows.len()).filter(|&r| fold_of[r] == k).collect();
        if test.is_empty() {
            continue;
        }
        let train_at = at.select(&train);
        let probabilities = flip_probabilities(&train_at);
        let graphs = build_class_graphs(&train_at, weight_floor, params)?;
        let majority = majority_class(&train_at.labels, at.n_classes);
        for &r in &test {
            let prob = classify_probabilistic(&at.rows[r], &probabilities, epsilon);
            let pr = classify_pagerank(&at.rows[r], &graphs);
            per_record.push(RecordPrediction {
                row: r,
                truth: at.labels[r],
                pagerank: pr.unwrap_or(majority),
                probabilistic: prob.unwrap_or(majority),
                flagged: prob.is_none(),
            });
        }
    }
    per_record.sort_by_key(|p| p.row);
    report_from(per_record, at.n_classes)
}

/// Mean absolute difference of `P(f|S)` over unordered class pairs.
pub fn flip_rank(conditional: &[f64]) -> f64 {
    let n = conditional.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += (conditional[i] - conditional[j]).abs();
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// Mean of the flip ranks of a marker.
pub fn marker_rank(flip_ranks: &[f64]) -> f64 {
    if flip_ranks.is_empty() {
        return 0.0;
    }
    flip_ranks.iter().sum::<f64>() / flip_ranks.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerRank {
    pub attribute: String,
    pub rank: f64,
    /// `(flip display name, flip rank)` in schema order.
    pub flips: Vec<(String, f64)>,
}

/// Ranks of every flip and marker, markers sorted by descending average rank
/// (ties by name).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub markers: Vec<MarkerRank>,
}

impl RankReport {
    pub fn marker(&self, attribute: &str) -> Option<&MarkerRank> {
        self.markers.iter().find(|m| m.attribute == attribute)
    }

    pub fn flip_ranks(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.markers
            .iter()
            .flat_map(|m| m.flips.iter().map(|(n, r)| (n.as_str(), *r)))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["attribute", "marker_rank", "flip", "flip_rank"])?;
        for m in &self.markers {
            for (flip, r) in &m.flips {
                w.write_record([m.attribute.as_str(), &format_number(m.rank), flip, &format_number(*r)])?;
            }
        }
        w.flush().map_err(|e| CactusError::io("ranks.csv", e))?;
        Ok(())
    }
}

pub fn rank_report(schema: &FlipSchema, probabilities: &FlipProbabilities) -> RankReport {
    let mut markers: Vec<MarkerRank> = schema
        .attributes()
        .iter()
        .map(|a| {
            let flips: Vec<(String, f64)> = a
                .flips
                .clone()
                .map(|f| {
                    (
                        schema.flips()[f].display_name.clone(),
                        flip_rank(&probabilities.across_classes(f)),
                    )
                })
                .collect();
            let ranks: Vec<f64> = flips.iter().map(|x| x.1).collect();
            MarkerRank {
                attribute: a.name.clone(),
                rank: marker_rank(&ranks),
                flips,
            }
        })
        .collect();
    markers.sort_by(|a, b| b.rank.total_cmp(&a.rank).then_with(|| a.attribute.cmp(&b.attribute)));
    RankReport { markers }
}
