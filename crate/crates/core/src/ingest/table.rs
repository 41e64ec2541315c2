use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, Write};

use serde::Serialize;

use super::config::{Binarisation, LabelRecoding, RunConfig};
use super::thyroid;
use crate::error::{CactusError, Result};

/// Maximum number of distinct values an attribute may take to be treated as
/// categorical (and to be usable for stratification).
pub const CATEGORICAL_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Token(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    /// Canonical text of an observed cell; numbers use the shortest
    /// round-trip representation.
    pub fn token(&self) -> Option<String> {
        match self {
            Cell::Number(v) => Some(format_number(*v)),
            Cell::Token(s) => Some(s.clone()),
            Cell::Missing => None,
        }
    }
}

pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        // avoid "-0"
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Whether a column parsed entirely as numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub binarisation: String,
    pub stratum: String,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            binarisation: "original".to_string(),
            stratum: "all".to_string(),
        }
    }
}

/// Cleaned table: feature columns, per-cell missingness and dense labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    column_names: Vec<String>,
    column_kinds: Vec<ColumnKind>,
    cells: Vec<Vec<Cell>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    target_name: String,
    provenance: Provenance,
}

impl DataTable {
    /// Builds a table, checking that labels are dense and every class is
    /// populated. Column kinds are inferred from the cells.
    pub fn new(
        column_names: Vec<String>,
        cells: Vec<Vec<Cell>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        if cells.len() != labels.len() {
            return Err(CactusError::Labels(format!(
                "{} rows but {} labels",
                cells.len(),
                labels.len()
            )));
        }
        if let Some(r) = cells.iter().position(|r| r.len() != column_names.len()) {
            return Err(CactusError::Labels(format!(
                "row {r} has {} cells, expected {}",
                cells[r].len(),
                column_names.len()
            )));
        }
        if cells.is_empty() {
            return Err(CactusError::EmptyTable);
        }
        let n_classes = class_names.len();
        if n_classes < 2 {
            return Err(CactusError::Labels(format!(
                "need at least 2 classes, found {n_classes}"
            )));
        }
        let mut counts = vec![0usize; n_classes];
        for &l in &labels {
            if l >= n_classes {
                return Err(CactusError::Labels(format!("label {l} out of range")));
            }
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&c| c == 0) {
            return Err(CactusError::EmptyClass(c));
        }
        let column_kinds = (0..column_names.len())
            .map(|j| {
                if cells.iter().all(|r| !matches!(r[j], Cell::Token(_))) {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                }
            })
            .collect();
        Ok(DataTable {
            column_names,
            column_kinds,
            cells,
            labels,
            class_names,
            target_name: target_name.into(),
            provenance: Provenance::default(),
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_kind(&self, column: usize) -> ColumnKind {
        self.column_kinds[column]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn cells(&self) -> &[Vec<Cell>] {
        &self.cells
    }

    pub fn cell(&self, row: usize, column: usize) -> &Cell {
        &self.cells[row][column]
    }

    pub fn column(&self, column: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.cells.iter().map(move |r| &r[column])
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn n_columns(&self) -> usize {
        self.column_names.len()
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Distinct observed values of a column, in canonical order (numeric
    /// ascending for numeric columns, lexicographic otherwise).
    pub fn unique_tokens(&self, column: usize) -> Vec<String> {
        match self.column_kinds[column] {
            ColumnKind::Numeric => {
                let mut v: Vec<f64> = self.column(column).filter_map(Cell::as_number).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v.into_iter().map(format_number).collect()
            }
            ColumnKind::Categorical => {
                let set: BTreeSet<String> = self.column(column).filter_map(Cell::token).collect();
                set.into_iter().collect()
            }
        }
    }

    /// Numeric view of a column: numbers as-is, tokens as their index among
    /// the column's sorted distinct tokens.
    pub fn numeric_codes(&self, column: usize) -> Vec<Option<f64>> {
        match self.column_kinds[column] {
            ColumnKind::Numeric => self.column(column).map(Cell::as_number).collect(),
            ColumnKind::Categorical => {
                let codes: BTreeMap<String, f64> = self
                    .unique_tokens(column)
                    .into_iter()
                    .enumerate()
                    .map(|(i, t)| (t, i as f64))
                    .collect();
                self.column(column)
                    .map(|c| c.token().map(|t| codes[&t]))
                    .collect()
            }
        }
    }

    /// Writes the table as CSV with the label (class name) first.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![self.target_name.clone()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        for (row, &label) in self.cells.iter().zip(&self.labels) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(self.class_names[label].clone());
            rec.extend(row.iter().map(|c| c.token().unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| CactusError::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    fn subset(&self, rows: &[usize], drop_column: Option<usize>) -> Result<DataTable> {
        let keep: Vec<usize> = (0..self.n_columns()).filter(|&j| Some(j) != drop_column).collect();
        let mut present = vec![false; self.n_classes()];
        for &r in rows {
            present[self.labels[r]] = true;
        }
        // keep class indices dense
        let mut remap = vec![usize::MAX; self.n_classes()];
        let mut class_names = Vec::new();
        for (c, &p) in present.iter().enumerate() {
            if p {
                remap[c] = class_names.len();
                class_names.push(self.class_names[c].clone());
            }
        }
        let cells = rows
            .iter()
            .map(|&r| keep.iter().map(|&j| self.cells[r][j].clone()).collect())
            .collect();
        let labels = rows.iter().map(|&r| remap[self.labels[r]]).collect();
        let names = keep.iter().map(|&j| self.column_names[j].clone()).collect();
        Ok(DataTable::new(names, cells, labels, class_names, self.target_name.clone())?
            .with_provenance(self.provenance.clone()))
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads and cleans the CSV named by the configuration.
///
/// Order of cleaning: NaN tokens, value replacements, column drops, label
/// extraction (rows without a label are removed), then type inference.
pub fn load_table(config: &RunConfig) -> Result<DataTable> {
    let path = config.resolved_input();
    let file = File::open(&path).map_err(|e| CactusError::io(&path, e))?;
    read_table(file, config)
}

pub fn read_table<R: io::Read>(reader: R, config: &RunConfig) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(config.column_names.is_none())
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = match &config.column_names {
        Some(names) => names.clone(),
        None => rdr.headers()?.iter().map(|h| h.trim().to_string()).collect(),
    };

    let target = header
        .iter()
        .position(|h| *h == config.target_column)
        .ok_or_else(|| CactusError::MissingTarget(config.target_column.clone()))?;
    for dropped in &config.dropped_columns {
        if !header.contains(dropped) {
            return Err(CactusError::schema(
                "dropped_columns",
                format!("column `{dropped}` not found"),
            ));
        }
    }
    let features: Vec<usize> = (0..header.len())
        .filter(|&j| j != target && !config.dropped_columns.contains(&header[j]))
        .collect();
    let replacements: Vec<Option<&BTreeMap<String, String>>> = header
        .iter()
        .map(|h| config.value_replacements.get(h))
        .collect();

    let clean = |j: usize, raw: &str| -> Option<String> {
        let s = raw.trim();
        if s.is_empty() || config.nan_tokens.iter().any(|t| t == s) {
            return None;
        }
        let s = match replacements[j].and_then(|m| m.get(s)) {
            Some(new) => new.as_str(),
            None => s,
        };
        if s.is_empty() || config.nan_tokens.iter().any(|t| t == s) {
            None
        } else {
            Some(s.to_string())
        }
    };

    let mut raw_rows: Vec<Vec<Option<String>>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let label = match config.label_recoding {
            // recoding works on the untouched diagnosis string
            LabelRecoding::Thyroid => Some(record[target].trim().to_string()),
            LabelRecoding::None => clean(target, &record[target]),
        };
        let Some(label) = label else { continue };
        raw_rows.push(features.iter().map(|&j| clean(j, &record[j])).collect());
        raw_labels.push(label);
    }

    let (labels, class_names, rows) = match config.label_recoding {
        LabelRecoding::Thyroid => {
            let mut labels = Vec::new();
            let mut rows = Vec::new();
            for (row, raw) in raw_rows.into_iter().zip(&raw_labels) {
                if let Some(c) = thyroid::recode_thyroid_diagnosis(raw) {
                    labels.push(c);
                    rows.push(row);
                }
            }
            let names = thyroid::CLASS_NAMES.iter().map(|s| s.to_string()).collect();
            (labels, names, rows)
        }
        LabelRecoding::None => {
            let (labels, names) = index_labels(&raw_labels);
            (labels, names, raw_rows)
        }
    };
    if rows.is_empty() {
        return Err(CactusError::EmptyTable);
    }
    let (labels, class_names) = compact_classes(labels, class_names);

    let n_cols = features.len();
    let numeric: Vec<bool> = (0..n_cols)
        .map(|j| rows.iter().all(|r| r[j].as_deref().is_none_or(|s| parse_number(s).is_some())))
        .collect();
    let cells: Vec<Vec<Cell>> = rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .enumerate()
                .map(|(j, v)| match v {
                    None => Cell::Missing,
                    Some(s) if numeric[j] => Cell::Number(parse_number(&s).expect("checked numeric")),
                    Some(s) => Cell::Token(s),
                })
                .collect()
        })
        .collect();
    let names = features.iter().map(|&j| header[j].clone()).collect();
    let table = DataTable::new(names, cells, labels, class_names, config.target_column.clone())?;

    for attr in &config.stratifications {
        check_stratification(&table, attr)?;
    }
    Ok(table)
}

/// Dense class indices over the sorted distinct labels (numerically when all
/// labels are numbers).
fn index_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let all_numeric = raw.iter().all(|s| parse_number(s).is_some());
    let mut names: Vec<String> = if all_numeric {
        let mut v: Vec<f64> = raw.iter().map(|s| parse_number(s).unwrap()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.into_iter().map(format_number).collect()
    } else {
        raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
    };
    names.dedup();
    let key = |s: &str| -> String {
        if all_numeric {
            format_number(parse_number(s).unwrap())
        } else {
            s.to_string()
        }
    };
    let index: BTreeMap<String, usize> =
        names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let labels = raw.iter().map(|s| index[&key(s)]).collect();
    (labels, names)
}

fn compact_classes(labels: Vec<usize>, names: Vec<String>) -> (Vec<usize>, Vec<String>) {
    let mut present = vec![false; names.len()];
    for &l in &labels {
        present[l] = true;
    }
    let mut remap = vec![usize::MAX; names.len()];
    let mut kept = Vec::new();
    for (c, name) in names.into_iter().enumerate() {
        if present[c] {
            remap[c] = kept.len();
            kept.push(name);
        }
    }
    (labels.into_iter().map(|l| remap[l]).collect(), kept)
}

/// Collapses labels to two classes: `<= divider` is 0, the rest is 1.
pub fn binarise_labels(table: &DataTable, divider: usize) -> Result<DataTable> {
    if divider + 1 >= table.n_classes() {
        return Err(CactusError::Labels(format!(
            "divider {divider} produces an empty class ({} classes)",
            table.n_classes()
        )));
    }
    if table.n_classes() == 2 {
        return Ok(table.clone());
    }
    let labels: Vec<usize> = table.labels.iter().map(|&l| usize::from(l > divider)).collect();
    let class_names = vec![
        table.class_names[..=divider].join("+"),
        table.class_names[divider + 1..].join("+"),
    ];
    Ok(DataTable {
        labels,
        class_names,
        ..table.clone()
    })
}

pub fn apply_binarisation(table: &DataTable, b: Binarisation) -> Result<DataTable> {
    let mut t = match b {
        Binarisation::Original => table.clone(),
        Binarisation::Divider(d) => binarise_labels(table, d)?,
    };
    t.provenance.binarisation = b.slug();
    Ok(t)
}

/// Distinct integer values of a stratification attribute.
fn check_stratification(table: &DataTable, attribute: &str) -> Result<Vec<i64>> {
    let err = |reason: String| CactusError::Stratification {
        attribute: attribute.to_string(),
        reason,
    };
    let j = table
        .column_index(attribute)
        .ok_or_else(|| err("is not a column of the table".to_string()))?;
    let mut values = BTreeSet::new();
    for cell in table.column(j) {
        match cell {
            Cell::Missing => {}
            Cell::Number(v) if v.fract() == 0.0 => {
                values.insert(*v as i64);
            }
            _ => return Err(err("must be integer".to_string())),
        }
    }
    if values.len() >= CATEGORICAL_LIMIT {
        return Err(err(format!(
            "must have fewer than {CATEGORICAL_LIMIT} unique values, found {}",
            values.len()
        )));
    }
    Ok(values.into_iter().collect())
}

/// Splits the table by the values of `attribute`; the attribute column is
/// removed. Rows where it is missing form a final `missing` stratum.
pub fn stratify(table: &DataTable, attribute: &str) -> Result<Vec<DataTable>> {
    let values = check_stratification(table, attribute)?;
    let j = table.column_index(attribute).expect("checked");
    let mut groups: Vec<(String, Vec<usize>)> = values
        .iter()
        .map(|v| (format!("{attribute}_{v}"), Vec::new()))
        .collect();
    let mut missing = Vec::new();
    for (r, cell) in table.column(j).enumerate() {
        match cell.as_number() {
            Some(v) => {
                let k = values.binary_search(&(v as i64)).expect("value collected");
                groups[k].1.push(r);
            }
            None => missing.push(r),
        }
    }
    if !missing.is_empty() {
        groups.push((format!("{attribute}_missing"), missing));
    }
    groups
        .into_iter()
        .map(|(name, rows)| {
            let mut t = table.subset(&rows, Some(j))?;
            t.provenance.stratum = name;
            Ok(t)
        })
        .collect()
}
