//! Configuration, CSV loading and label handling.

mod config;
mod table;
mod thyroid;

pub use config::{
    load_config, parse_config, Binarisation, LabelRecoding, RunConfig, DEFAULT_DAMPING,
    DEFAULT_SMOOTHING_EPSILON,
};
pub use table::{
    apply_binarisation, binarise_labels, format_number, load_table, read_table, stratify, Cell,
    ColumnKind, DataTable, Provenance, CATEGORICAL_LIMIT,
};
pub use thyroid::{recode_thyroid_diagnosis, CLASS_NAMES as THYROID_CLASS_NAMES};
