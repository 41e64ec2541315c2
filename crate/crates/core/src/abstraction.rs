//! Abstraction of raw attributes into flips.
//!
//! A continuous attribute owns the pair `{Up, Down}` split at an ROC-derived
//! threshold; a categorical attribute owns one flip per observed value. A
//! record then activates at most one flip per attribute.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;

use crate::error::{CactusError, Result};
use crate::ingest::{format_number, Cell, ColumnKind, DataTable, CATEGORICAL_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlipKind {
    Up,
    Down,
    Category(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flip {
    pub attribute: String,
    /// Index of the owning attribute in [`FlipSchema::attributes`].
    pub attribute_index: usize,
    pub kind: FlipKind,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeKind {
    Continuous { threshold: f64 },
    Categorical { values: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    /// Range of this attribute's flips in [`FlipSchema::flips`].
    pub flips: Range<usize>,
}

impl Attribute {
    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, AttributeKind::Categorical { .. })
    }

    pub fn threshold(&self) -> Option<f64> {
        match self.kind {
            AttributeKind::Continuous { threshold } => Some(threshold),
            AttributeKind::Categorical { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipSchema {
    attributes: Vec<Attribute>,
    flips: Vec<Flip>,
}

impl FlipSchema {
    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn flips(&self) -> &[Flip] {
        &self.flips
    }

    pub fn n_flips(&self) -> usize {
        self.flips.len()
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn flip_index(&self, display_name: &str) -> Option<usize> {
        self.flips.iter().position(|f| f.display_name == display_name)
    }

    pub fn thresholds(&self) -> Vec<(&str, f64)> {
        self.attributes
            .iter()
            .filter_map(|a| a.threshold().map(|t| (a.name.as_str(), t)))
            .collect()
    }

    pub fn categorical_attributes(&self) -> BTreeSet<&str> {
        self.attributes
            .iter()
            .filter(|a| a.is_categorical())
            .map(|a| a.name.as_str())
            .collect()
    }

    fn from_attributes(specs: Vec<(String, AttributeKind)>) -> Result<Self> {
        let mut attributes = Vec::with_capacity(specs.len());
        let mut flips = Vec::new();
        for (index, (name, kind)) in specs.into_iter().enumerate() {
            let start = flips.len();
            let mut push = |kind: FlipKind, suffix: &str| {
                flips.push(Flip {
                    attribute: name.clone(),
                    attribute_index: index,
                    display_name: format!("{name}_{suffix}"),
                    kind,
                })
            };
            match &kind {
                AttributeKind::Continuous { .. } => {
                    push(FlipKind::Up, "U");
                    push(FlipKind::Down, "D");
                }
                AttributeKind::Categorical { values } => {
                    for v in values {
                        push(FlipKind::Category(v.clone()), v);
                    }
                }
            }
            attributes.push(Attribute {
                name,
                kind,
                flips: start..flips.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for f in &flips {
            if !seen.insert(f.display_name.as_str()) {
                return Err(CactusError::InvalidParameter(format!(
                    "flip name `{}` is produced by two attributes",
                    f.display_name
                )));
            }
        }
        Ok(FlipSchema { attributes, flips })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["attribute", "kind", "threshold"])?;
        for a in &self.attributes {
            match &a.kind {
                AttributeKind::Continuous { threshold } => {
                    w.write_record([a.name.as_str(), "continuous", &format_number(*threshold)])?
                }
                AttributeKind::Categorical { .. } => {
                    w.write_record([a.name.as_str(), "categorical", ""])?
                }
            }
        }
        w.flush().map_err(|e| CactusError::io("schema.csv", e))?;
        Ok(())
    }
}

/// Decides the kind of every feature column and, for continuous ones, the
/// Up/Down threshold. Searches run in parallel per attribute.
pub fn infer_schema(table: &DataTable, forced: &[String]) -> Result<FlipSchema> {
    let specs: Vec<(String, AttributeKind)> = (0..table.n_columns())
        .into_par_iter()
        .map(|j| {
            let name = table.column_names()[j].clone();
            let values = table.unique_tokens(j);
            if values.is_empty() {
                return Err(CactusError::AllMissing(name));
            }
            let categorical = values.len() < CATEGORICAL_LIMIT
                || forced.contains(&name)
                || table.column_kind(j) == ColumnKind::Categorical;
            if categorical {
                return Ok((name, AttributeKind::Categorical { values }));
            }
            let observed: Vec<(f64, usize)> = table
                .column(j)
                .zip(table.labels())
                .filter_map(|(c, &l)| c.as_number().map(|v| (v, l)))
                .collect();
            let threshold = choose_threshold(&observed, table.n_classes())
                .map_err(|_| CactusError::SingleValue(name.clone()))?;
            Ok((name, AttributeKind::Continuous { threshold }))
        })
        .collect::<Result<_>>()?;
    FlipSchema::from_attributes(specs)
}

/// ROC cut for a continuous attribute.
///
/// Candidates are midpoints between consecutive distinct values. The score of
/// a candidate is the mean over classes of the one-vs-rest Youden statistic
/// `|TPR - FPR|`, with "positive" meaning `value > threshold`. The best
/// candidate wins; exact ties go to the smallest threshold.
pub fn choose_threshold(values: &[(f64, usize)], n_classes: usize) -> Result<f64> {
    let mut sorted: Vec<(f64, usize)> = values.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let mut totals = vec![0usize; n_classes];
    for &(_, c) in &sorted {
        if c >= n_classes {
            return Err(CactusError::InvalidParameter(format!("class {c} out of range")));
        }
        totals[c] += 1;
    }
    let valid: Vec<usize> = (0..n_classes).filter(|&k| totals[k] > 0 && totals[k] < n).collect();

    let mut below = vec![0usize; n_classes];
    let mut best: Option<(f64, f64)> = None;
    let mut i = 0;
    while i < n {
        let v = sorted[i].0;
        while i < n && sorted[i].0 == v {
            below[sorted[i].1] += 1;
            i += 1;
        }
        if i == n {
            break;
        }
        let next = sorted[i].0;
        let threshold = v + (next - v) / 2.0;
        let above_all = n - i;
        let j = if valid.is_empty() {
            0.0
        } else {
            valid
                .iter()
                .map(|&k| {
                    let above = totals[k] - below[k];
                    let tpr = above as f64 / totals[k] as f64;
                    let fpr = (above_all - above) as f64 / (n - totals[k]) as f64;
                    (tpr - fpr).abs()
                })
                .sum::<f64>()
                / valid.len() as f64
        };
        if best.is_none_or(|(bj, _)| j > bj) {
            best = Some((j, threshold));
        }
    }
    best.map(|(_, t)| t).ok_or_else(|| {
        CactusError::InvalidParameter("threshold search needs at least two distinct values".into())
    })
}

/// The data set rewritten in flip space.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractTable {
    /// Active flip indices per record, ascending.
    pub rows: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub class_names: Vec<String>,
    pub schema: FlipSchema,
}

impl AbstractTable {
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Attributes observed in a record (one per active flip).
    pub fn observed_attributes<'a>(&'a self, row: usize) -> impl Iterator<Item = usize> + 'a {
        self.rows[row]
            .iter()
            .map(move |&f| self.schema.flips[f].attribute_index)
    }

    /// Restriction to a subset of records, keeping schema and class count.
    pub fn select(&self, rows: &[usize]) -> AbstractTable {
        AbstractTable {
            rows: rows.iter().map(|&r| self.rows[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
            schema: self.schema.clone(),
        }
    }
}

pub fn abstract_table(table: &DataTable, schema: &FlipSchema) -> Result<AbstractTable> {
    let mut columns = Vec::with_capacity(schema.attributes.len());
    let mut lookups: Vec<HashMap<&str, usize>> = Vec::with_capacity(schema.attributes.len());
    for a in &schema.attributes {
        let j = table
            .column_index(&a.name)
            .ok_or_else(|| CactusError::MissingColumn(a.name.clone()))?;
        columns.push(j);
        let mut m = HashMap::new();
        if let AttributeKind::Categorical { values } = &a.kind {
            for (k, v) in values.iter().enumerate() {
                m.insert(v.as_str(), a.flips.start + k);
            }
        }
        lookups.push(m);
    }

    let mut rows = Vec::with_capacity(table.n_rows());
    for r in 0..table.n_rows() {
        let mut active = Vec::with_capacity(schema.attributes.len());
        for (ai, a) in schema.attributes.iter().enumerate() {
            let cell = table.cell(r, columns[ai]);
            if cell.is_missing() {
                continue;
            }
            let flip = match (&a.kind, cell) {
                (AttributeKind::Continuous { threshold }, Cell::Number(v)) => {
                    if *v > *threshold {
                        a.flips.start
                    } else {
                        a.flips.start + 1
                    }
                }
                (AttributeKind::Categorical { .. }, _) => {
                    let token = cell.token().expect("observed cell");
                    *lookups[ai].get(token.as_str()).ok_or_else(|| CactusError::UnseenValue {
                        attribute: a.name.clone(),
                        value: token.clone(),
                    })?
                }
                (AttributeKind::Continuous { .. }, other) => {
                    return Err(CactusError::UnseenValue {
                        attribute: a.name.clone(),
                        value: other.token().unwrap_or_default(),
                    })
                }
            };
            active.push(flip);
        }
        active.sort_unstable();
        rows.push(active);
    }
    Ok(AbstractTable {
        rows,
        labels: table.labels().to_vec(),
        n_classes: table.n_classes(),
        class_names: table.class_names().to_vec(),
        schema: schema.clone(),
    })
}

/// Conditional flip probabilities `P(f | c)`, indexed `[class][flip]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipProbabilities {
    n_flips: usize,
    values: Vec<f64>,
}

impl FlipProbabilities {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_flips = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_flips), "ragged probability table");
        FlipProbabilities {
            n_flips,
            values: rows.into_iter().flatten().collect(),
        }
    }

    pub fn n_classes(&self) -> usize {
        if self.n_flips == 0 {
            0
        } else {
            self.values.len() / self.n_flips
        }
    }

    pub fn n_flips(&self) -> usize {
        self.n_flips
    }

    pub fn get(&self, class: usize, flip: usize) -> f64 {
        self.values[class * self.n_flips + flip]
    }

    pub fn class_row(&self, class: usize) -> &[f64] {
        &self.values[class * self.n_flips..(class + 1) * self.n_flips]
    }

    /// `P(f | c)` for every class.
    pub fn across_classes(&self, flip: usize) -> Vec<f64> {
        (0..self.n_classes()).map(|c| self.get(c, flip)).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W, schema: &FlipSchema) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["class", "flip", "probability"])?;
        for c in 0..self.n_classes() {
            for (f, flip) in schema.flips().iter().enumerate() {
                w.write_record([c.to_string(), flip.display_name.clone(), format_number(self.get(c, f))])?;
            }
        }
        w.flush().map_err(|e| CactusError::io("flip_probabilities.csv", e))?;
        Ok(())
    }
}

/// `P(f|c)` = records of class `c` with `f` active over records of class `c`
/// where `f`'s attribute is observed; 0 when that denominator is 0.
pub fn flip_probabilities(at: &AbstractTable) -> FlipProbabilities {
    let n_flips = at.schema.n_flips();
    let n_attrs = at.schema.attributes.len();
    let mut active = vec![0usize; at.n_classes * n_flips];
    let mut observed = vec![0usize; at.n_classes * n_attrs];
    for (row, &c) in at.rows.iter().zip(&at.labels) {
        for &f in row {
            active[c * n_flips + f] += 1;
            observed[c * n_attrs + at.schema.flips[f].attribute_index] += 1;
        }
    }
    let values = (0..at.n_classes)
        .flat_map(|c| {
            let active = &active;
            let observed = &observed;
            at.schema.flips.iter().enumerate().map(move |(f, flip)| {
                let denom = observed[c * n_attrs + flip.attribute_index];
                if denom == 0 {
                    0.0
                } else {
                    active[c * n_flips + f] as f64 / denom as f64
                }
            })
        })
        .collect();
    FlipProbabilities { n_flips, values }
}
