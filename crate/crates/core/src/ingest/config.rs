//! YAML run configuration.
//!
//! Keys map one-to-one onto [`RunConfig`] fields. Unknown keys are rejected,
//! and every type or range problem is reported against the key that caused it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Serialize, Serializer};
use serde_yaml::Value;

use crate::error::{CactusError, Result};

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_SMOOTHING_EPSILON: f64 = 1e-9;
pub const DEFAULT_OUTPUT_DIR: &str = "output";

/// How the label column is collapsed before analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binarisation {
    /// Keep the classes as they are.
    Original,
    /// Class indices `<= divider` become 0, the rest become 1.
    Divider(usize),
}

impl Binarisation {
    /// Directory-friendly name, e.g. `original` or `divider_0`.
    pub fn slug(&self) -> String {
        match self {
            Binarisation::Original => "original".to_string(),
            Binarisation::Divider(d) => format!("divider_{d}"),
        }
    }
}

impl fmt::Display for Binarisation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binarisation::Original => f.write_str("original"),
            Binarisation::Divider(d) => write!(f, "{d}"),
        }
    }
}

impl Serialize for Binarisation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Binarisation::Original => serializer.serialize_str("original"),
            Binarisation::Divider(d) => serializer.serialize_u64(*d as u64),
        }
    }
}

/// Dataset-specific label rewriting applied to the raw target strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRecoding {
    #[default]
    None,
    /// Thyroid0387 diagnosis strings to healthy/hyper/hypo classes.
    Thyroid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub target_column: String,
    pub nan_tokens: Vec<String>,
    pub value_replacements: BTreeMap<String, BTreeMap<String, String>>,
    pub dropped_columns: Vec<String>,
    pub forced_categorical: Vec<String>,
    pub binarisations: Vec<Binarisation>,
    pub stratifications: Vec<String>,
    pub damping: f64,
    pub smoothing_epsilon: f64,
    pub edge_weight_floor: f64,
    pub max_tree_depth: Option<usize>,
    pub output_dir: PathBuf,
    pub remove_self_loops: bool,
    pub label_recoding: LabelRecoding,
    /// Header to use when the CSV file has none.
    pub column_names: Option<Vec<String>>,
    /// Directory relative paths are resolved against (the config file's).
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// A configuration with every optional field at its default.
    pub fn new(input_path: impl Into<PathBuf>, target_column: impl Into<String>) -> Self {
        RunConfig {
            input_path: input_path.into(),
            target_column: target_column.into(),
            nan_tokens: Vec::new(),
            value_replacements: BTreeMap::new(),
            dropped_columns: Vec::new(),
            forced_categorical: Vec::new(),
            binarisations: vec![Binarisation::Original],
            stratifications: Vec::new(),
            damping: DEFAULT_DAMPING,
            smoothing_epsilon: DEFAULT_SMOOTHING_EPSILON,
            edge_weight_floor: 0.0,
            max_tree_depth: None,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            remove_self_loops: true,
            label_recoding: LabelRecoding::None,
            column_names: None,
            base_dir: PathBuf::new(),
        }
    }

    pub fn resolved_input(&self) -> PathBuf {
        resolve(&self.base_dir, &self.input_path)
    }

    pub fn resolved_output(&self) -> PathBuf {
        resolve(&self.base_dir, &self.output_dir)
    }

    /// Checks the invariants that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.target_column.is_empty() {
            return Err(CactusError::schema("target_column", "must not be empty"));
        }
        if self.dropped_columns.contains(&self.target_column) {
            return Err(CactusError::schema(
                "dropped_columns",
                format!("target column `{}` cannot be dropped", self.target_column),
            ));
        }
        if self.stratifications.contains(&self.target_column) {
            return Err(CactusError::schema(
                "stratifications",
                "cannot stratify on the target column",
            ));
        }
        if let Some(s) = self.stratifications.iter().find(|s| self.dropped_columns.contains(s)) {
            return Err(CactusError::schema(
                "stratifications",
                format!("`{s}` is also a dropped column"),
            ));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(CactusError::schema("damping", "must lie in (0, 1)"));
        }
        if !(self.smoothing_epsilon > 0.0 && self.smoothing_epsilon.is_finite()) {
            return Err(CactusError::schema("smoothing_epsilon", "must be > 0"));
        }
        if !(self.edge_weight_floor >= 0.0 && self.edge_weight_floor.is_finite()) {
            return Err(CactusError::schema("edge_weight_floor", "must be >= 0"));
        }
        if self.binarisations.is_empty() {
            return Err(CactusError::schema("binarisations", "must not be empty"));
        }
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() || base.as_os_str().is_empty() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

const KEYS: &[&str] = &[
    "input_path",
    "target_column",
    "nan_tokens",
    "value_replacements",
    "dropped_columns",
    "forced_categorical",
    "binarisations",
    "stratifications",
    "damping",
    "smoothing_epsilon",
    "edge_weight_floor",
    "max_tree_depth",
    "output_dir",
    "remove_self_loops",
    "label_recoding",
    "column_names",
];

/// Reads and validates a configuration file. Relative paths inside it are
/// resolved against the file's directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CactusError::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, base)
}

pub fn parse_config(text: &str, base_dir: impl Into<PathBuf>) -> Result<RunConfig> {
    let doc: Value = serde_yaml::from_str(text).map_err(|e| {
        let (line, column) = e
            .location()
            .map(|l| (l.line(), l.column()))
            .unwrap_or((0, 0));
        CactusError::ConfigParse {
            line,
            column,
            message: e.to_string(),
        }
    })?;
    let Value::Mapping(map) = doc else {
        return Err(CactusError::schema("<root>", "document must be a mapping"));
    };

    let mut fields: BTreeMap<String, Value> = BTreeMap::new();
    for (k, v) in map {
        let key = match k {
            Value::String(s) => s,
            other => return Err(CactusError::schema(format!("{other:?}"), "keys must be strings")),
        };
        if !KEYS.contains(&key.as_str()) {
            return Err(CactusError::schema(key, "unknown key"));
        }
        fields.insert(key, v);
    }

    let input_path: PathBuf = required(&mut fields, "input_path")?;
    let target_column: String = required(&mut fields, "target_column")?;
    let mut cfg = RunConfig::new(input_path, target_column);
    cfg.base_dir = base_dir.into();

    if let Some(v) = fields.remove("nan_tokens") {
        cfg.nan_tokens = scalar_list("nan_tokens", v)?;
    }
    if let Some(v) = fields.remove("value_replacements") {
        cfg.value_replacements = replacements(v)?;
    }
    if let Some(v) = fields.remove("dropped_columns") {
        cfg.dropped_columns = scalar_list("dropped_columns", v)?;
    }
    if let Some(v) = fields.remove("forced_categorical") {
        cfg.forced_categorical = scalar_list("forced_categorical", v)?;
    }
    if let Some(v) = fields.remove("binarisations") {
        cfg.binarisations = binarisations(v)?;
    }
    if let Some(v) = fields.remove("stratifications") {
        cfg.stratifications = scalar_list("stratifications", v)?;
    }
    if let Some(v) = optional(&mut fields, "damping")? {
        cfg.damping = v;
    }
    if let Some(v) = optional(&mut fields, "smoothing_epsilon")? {
        cfg.smoothing_epsilon = v;
    }
    if let Some(v) = optional(&mut fields, "edge_weight_floor")? {
        cfg.edge_weight_floor = v;
    }
    if let Some(v) = optional(&mut fields, "max_tree_depth")? {
        cfg.max_tree_depth = Some(v);
    }
    if let Some(v) = optional(&mut fields, "output_dir")? {
        cfg.output_dir = v;
    }
    if let Some(v) = optional(&mut fields, "remove_self_loops")? {
        cfg.remove_self_loops = v;
    }
    if let Some(v) = optional::<String>(&mut fields, "label_recoding")? {
        cfg.label_recoding = match v.as_str() {
            "none" => LabelRecoding::None,
            "thyroid" => LabelRecoding::Thyroid,
            other => {
                return Err(CactusError::schema(
                    "label_recoding",
                    format!("expected `none` or `thyroid`, got `{other}`"),
                ))
            }
        };
    }
    if let Some(v) = fields.remove("column_names") {
        if !v.is_null() {
            cfg.column_names = Some(scalar_list("column_names", v)?);
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

fn required<T: DeserializeOwned>(fields: &mut BTreeMap<String, Value>, key: &str) -> Result<T> {
    match optional(fields, key)? {
        Some(v) => Ok(v),
        None => Err(CactusError::schema(key, "required key is missing")),
    }
}

/// `null` counts as absent.
fn optional<T: DeserializeOwned>(
    fields: &mut BTreeMap<String, Value>,
    key: &str,
) -> Result<Option<T>> {
    match fields.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_yaml::from_value(v)
            .map(Some)
            .map_err(|e| CactusError::schema(key, e.to_string())),
    }
}

fn scalar(key: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Null => Ok(String::new()),
        _ => Err(CactusError::schema(key, "expected a scalar value")),
    }
}

fn scalar_list(key: &str, v: Value) -> Result<Vec<String>> {
    match v {
        Value::Null => Ok(Vec::new()),
        Value::Sequence(items) => items.iter().map(|i| scalar(key, i)).collect(),
        _ => Err(CactusError::schema(key, "expected a list")),
    }
}

fn replacements(v: Value) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    const KEY: &str = "value_replacements";
    let mut out = BTreeMap::new();
    let map = match v {
        Value::Null => return Ok(out),
        Value::Mapping(m) => m,
        _ => return Err(CactusError::schema(KEY, "expected a mapping of attribute to mapping")),
    };
    for (attr, inner) in map {
        let attr = scalar(KEY, &attr)?;
        let Value::Mapping(inner) = inner else {
            return Err(CactusError::schema(
                KEY,
                format!("replacements for `{attr}` must be a mapping"),
            ));
        };
        let mut table = BTreeMap::new();
        for (old, new) in inner {
            table.insert(scalar(KEY, &old)?, scalar(KEY, &new)?);
        }
        out.insert(attr, table);
    }
    Ok(out)
}

fn binarisations(v: Value) -> Result<Vec<Binarisation>> {
    const KEY: &str = "binarisations";
    let items = match v {
        Value::Null => return Ok(vec![Binarisation::Original]),
        Value::Sequence(items) => items,
        _ => return Err(CactusError::schema(KEY, "expected a list")),
    };
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let b = match &item {
            Value::String(s) if s == "original" => Binarisation::Original,
            Value::String(s) => s.parse::<usize>().map(Binarisation::Divider).map_err(|_| {
                CactusError::schema(KEY, format!("`{s}` is neither `original` nor a non-negative integer"))
            })?,
            Value::Number(n) => match n.as_u64() {
                Some(d) => Binarisation::Divider(d as usize),
                None => {
                    return Err(CactusError::schema(
                        KEY,
                        format!("divider {n} must be a non-negative integer"),
                    ))
                }
            },
            _ => return Err(CactusError::schema(KEY, "dividers must be integers or `original`")),
        };
        if !out.contains(&b) {
            out.push(b);
        }
    }
    Ok(out)
}
