//! End-to-end runs over every (binarisation, stratum) configuration.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::abstraction::{abstract_table, flip_probabilities, infer_schema};
use crate::classify::{build_class_graphs, classify_records, majority_class, rank_report};
use crate::community::{detect, Algorithm, Partition};
use crate::correlate::{
    correlation_graph, correlation_graphml, correlation_matrix, mst, node_scores, preselect_columns,
};
use crate::dtree::{export_tree, fit_tree, DecisionTree};
use crate::error::{CactusError, Result};
use crate::graph::{PageRankParams, WeightedGraph};
use crate::graphml::write_graphml;
use crate::ingest::{apply_binarisation, format_number, load_table, stratify, DataTable, RunConfig};
use crate::kgraph::export_graph;
use crate::plot::plot_distributions;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the config's `output_dir`.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; all cores when `None`.
    pub jobs: Option<usize>,
    pub correlation: bool,
    pub preprocessing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: None,
            jobs: None,
            correlation: true,
            preprocessing: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Dtree,
    Abstract,
    Kgraph,
    Community,
    Classify,
    Plot,
    Correlate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationMetrics {
    pub pagerank_accuracy: f64,
    pub pagerank_balanced_accuracy: f64,
    pub probabilistic_accuracy: f64,
    pub probabilistic_balanced_accuracy: f64,
    pub agreement: f64,
    pub flagged_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeSummary {
    pub nodes: usize,
    pub depth: usize,
    pub root_attribute: Option<String>,
    pub training_accuracy: f64,
    pub leaves_pure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationEntry {
    pub binarisation: String,
    pub stratum: String,
    /// Relative to the output directory.
    pub directory: String,
    pub rows: usize,
    pub classes: Vec<String>,
    pub class_counts: Vec<usize>,
    pub tree: Option<TreeSummary>,
    pub metrics: Option<ConfigurationMetrics>,
    /// Markers by descending average rank.
    pub marker_ranks: Vec<(String, f64)>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionsSnapshot {
    pub correlation: bool,
    pub preprocessing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub options: OptionsSnapshot,
    pub configurations: Vec<ConfigurationEntry>,
    /// Failure before any configuration could start.
    pub failure: Option<Failure>,
    pub timings_file: String,
}

impl RunManifest {
    /// True when some stage aborted.
    pub fn failed(&self) -> bool {
        self.failure.is_some() || self.configurations.iter().any(|c| c.failure.is_some())
    }

    pub fn configuration(&self, binarisation: &str, stratum: &str) -> Option<&ConfigurationEntry> {
        self.configurations
            .iter()
            .find(|c| c.binarisation == binarisation && c.stratum == stratum)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &str> + '_ {
        self.configurations
            .iter()
            .flat_map(|c| c.warnings.iter().map(String::as_str))
    }
}

/// Wall-clock seconds, kept out of the manifest so reruns stay byte-identical.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub ingest_seconds: f64,
    pub configurations: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub timings: Timings,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CactusError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CactusError::io(path, e))
}

fn relative(base: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(base).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

struct Job<'a> {
    config: &'a RunConfig,
    options: &'a RunOptions,
    out_dir: &'a Path,
    dir: PathBuf,
    outputs: Vec<PathBuf>,
    warnings: Vec<String>,
    timings: BTreeMap<String, f64>,
    tree: Option<TreeSummary>,
    metrics: Option<ConfigurationMetrics>,
    marker_ranks: Vec<(String, f64)>,
}

impl<'a> Job<'a> {
    fn timed<T>(&mut self, stage: Stage, f: impl FnOnce(&mut Self) -> Result<T>) -> std::result::Result<T, Failure> {
        let start = Instant::now();
        let r = f(self);
        let name = serde_json::to_value(stage)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        *self.timings.entry(name).or_default() += start.elapsed().as_secs_f64();
        r.map_err(|e| Failure {
            stage,
            message: e.to_string(),
        })
    }

    fn write_with(&mut self, rel: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(rel);
        let mut w = create(&path)?;
        f(&mut w)?;
        w.flush().map_err(|e| CactusError::io(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    fn run(&mut self, table: &DataTable) -> std::result::Result<(), Failure> {
        self.timed(Stage::Ingest, |job| job.write_with("table.csv", |w| table.write_csv(w)))?;

        let mut tree: Option<DecisionTree> = None;
        if self.options.preprocessing {
            tree = Some(self.timed(Stage::Dtree, |job| {
                let t = fit_tree(table, job.config.max_tree_depth)?;
                let files = export_tree(&t, &job.dir.join("tree"))?;
                job.outputs.extend(files);
                job.tree = Some(TreeSummary {
                    nodes: t.nodes.len(),
                    depth: t.depth(),
                    root_attribute: t.root().split.as_ref().map(|s| s.attribute.clone()),
                    training_accuracy: t.training_accuracy(table),
                    leaves_pure: t.leaves_pure(),
                });
                Ok(t)
            })?);
        }

        let (at, probabilities) = self.timed(Stage::Abstract, |job| {
            let schema = infer_schema(table, &job.config.forced_categorical)?;
            let at = abstract_table(table, &schema)?;
            let probabilities = flip_probabilities(&at);
            job.write_with("schema.csv", |w| at.schema.write_csv(w))?;
            job.write_with("flip_probabilities.csv", |w| probabilities.write_csv(w, &at.schema))?;
            Ok((at, probabilities))
        })?;

        let params = PageRankParams {
            damping: self.config.damping,
            ..PageRankParams::default()
        };
        let graphs = self.timed(Stage::Kgraph, |job| {
            let graphs = build_class_graphs(&at, job.config.edge_weight_floor, &params)?;
            for g in &graphs {
                if !g.pagerank_converged {
                    job.warnings.push(format!(
                        "PageRank on class {} graph did not converge in {} iterations",
                        g.class_index, g.pagerank_iterations
                    ));
                }
                let files = export_graph(g, &job.dir.join("graphs"))?;
                job.outputs.extend(files);
            }
            Ok(graphs)
        })?;

        self.timed(Stage::Community, |job| {
            let weighted: Vec<(String, WeightedGraph)> = graphs
                .iter()
                .map(|g| (format!("class_{}", g.class_index), g.to_weighted()))
                .collect();
            job.communities(&weighted, "communities")
        })?;

        let report = self.timed(Stage::Classify, |job| {
            let majority = majority_class(&at.labels, at.n_classes);
            let report = classify_records(&at, &probabilities, &graphs, job.config.smoothing_epsilon, majority)?;
            let names = table.class_names();
            job.write_with("predictions.csv", |w| report.write_predictions_csv(w, names))?;
            job.write_with("metrics.csv", |w| report.write_metrics_csv(w))?;
            job.write_with("confusion.csv", |w| report.write_confusion_csv(w, names))?;
            if report.flagged > 0 {
                job.warnings.push(format!(
                    "{} records have no active flips and were assigned the majority class",
                    report.flagged
                ));
            }
            job.metrics = Some(ConfigurationMetrics {
                pagerank_accuracy: report.pagerank.accuracy,
                pagerank_balanced_accuracy: report.pagerank.balanced_accuracy,
                probabilistic_accuracy: report.probabilistic.accuracy,
                probabilistic_balanced_accuracy: report.probabilistic.balanced_accuracy,
                agreement: report.agreement,
                flagged_records: report.flagged,
            });
            Ok(report)
        })?;
        drop(report);

        self.timed(Stage::Plot, |job| {
            let ranks = rank_report(&at.schema, &probabilities);
            job.write_with("ranks.csv", |w| ranks.write_csv(w))?;
            let files = plot_distributions(&ranks, &at.schema, &probabilities, table.class_names(), &job.dir.join("plots"))?;
            job.outputs.extend(files);
            job.marker_ranks = ranks.markers.iter().map(|m| (m.attribute.clone(), m.rank)).collect();
            Ok(())
        })?;

        if self.options.correlation {
            self.timed(Stage::Correlate, |job| job.correlate(table, tree.as_ref(), &params))?;
        }
        Ok(())
    }

    fn communities(&mut self, graphs: &[(String, WeightedGraph)], sub: &str) -> Result<()> {
        let mut partitions: Vec<(&WeightedGraph, Partition)> = Vec::new();
        for (id, g) in graphs {
            for alg in Algorithm::ALL {
                let p = detect(g, alg, id);
                if let Some(w) = &p.warning {
                    self.warnings.push(format!("{id} {}: {w}", alg.as_str()));
                }
                self.write_with(&format!("{sub}/{id}_{}.csv", alg.as_str()), |w| p.write_csv(g, w))?;
                partitions.push((g, p));
            }
        }
        self.write_with(&format!("{sub}/partition_quality.csv"), |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["graph", "algorithm", "communities", "modularity", "coverage", "performance"])?;
            for (g, p) in &partitions {
                c.write_record([
                    p.graph_id.clone(),
                    p.algorithm.as_str().to_string(),
                    p.reported_communities(g).len().to_string(),
                    format_number(p.modularity),
                    format_number(p.coverage),
                    format_number(p.performance),
                ])?;
            }
            c.flush().map_err(|e| CactusError::io("partition_quality.csv", e))?;
            Ok(())
        })
    }

    fn correlate(&mut self, table: &DataTable, tree: Option<&DecisionTree>, params: &PageRankParams) -> Result<()> {
        let columns = preselect_columns(table, tree);
        if columns.len() < 2 {
            self.warnings
                .push("correlation skipped: the decision tree uses no attribute".to_string());
            return Ok(());
        }
        let matrix = correlation_matrix(table, &columns)?;
        self.write_with("correlation/correlation.csv", |w| matrix.write_csv(w))?;
        let perfect = matrix.perfect_pairs();
        for (a, b, r) in &perfect {
            self.warnings
                .push(format!("attributes `{a}` and `{b}` have correlation {}", format_number(*r)));
        }
        self.write_with("correlation/correlation_warnings.csv", |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["attribute_a", "attribute_b", "rho"])?;
            for (a, b, r) in &perfect {
                c.write_record([a.as_str(), b.as_str(), &format_number(*r)])?;
            }
            c.flush().map_err(|e| CactusError::io("correlation_warnings.csv", e))?;
            Ok(())
        })?;

        let graph = correlation_graph(&matrix, self.config.remove_self_loops);
        let (scores, converged) = node_scores(&graph, params)?;
        if !converged {
            self.warnings
                .push("PageRank on the correlation graph did not converge".to_string());
        }
        self.write_with("correlation/correlation.graphml", |w| {
            write_graphml(&correlation_graphml(&graph, &matrix, &scores), w)
                .map_err(|e| CactusError::io("correlation.graphml", e))
        })?;
        self.write_with("correlation/node_scores.csv", |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["attribute", "pagerank", "laplacian"])?;
            for v in graph.sorted_order() {
                let s = &scores[v];
                c.write_record([s.name.as_str(), &format_number(s.pagerank), &format_number(s.laplacian)])?;
            }
            c.flush().map_err(|e| CactusError::io("node_scores.csv", e))?;
            Ok(())
        })?;

        let forest = mst(&graph);
        if forest.components > 1 {
            self.warnings.push(format!(
                "correlation graph is disconnected; spanning forest has {} trees",
                forest.components
            ));
        }
        self.write_with("correlation/mst.csv", |w| forest.write_csv(w))?;
        self.communities(&[("correlation".to_string(), graph)], "correlation/communities")
    }
}

fn configuration_tables(base: &DataTable, config: &RunConfig) -> Vec<(String, String, Result<DataTable>)> {
    let mut out = Vec::new();
    for &b in &config.binarisations {
        let slug = b.slug();
        let binarised = match apply_binarisation(base, b) {
            Ok(t) => t,
            Err(e) => {
                out.push((slug, "all".to_string(), Err(e)));
                continue;
            }
        };
        if config.stratifications.is_empty() {
            out.push((slug, "all".to_string(), Ok(binarised)));
            continue;
        }
        for attr in &config.stratifications {
            match stratify(&binarised, attr) {
                Ok(strata) => {
                    for t in strata {
                        out.push((slug.clone(), t.provenance().stratum.clone(), Ok(t)));
                    }
                }
                Err(e) => out.push((slug.clone(), attr.clone(), Err(e))),
            }
        }
    }
    out
}

fn run_configuration(
    config: &RunConfig,
    options: &RunOptions,
    out_dir: &Path,
    binarisation: String,
    stratum: String,
    table: Result<DataTable>,
) -> (ConfigurationEntry, BTreeMap<String, f64>) {
    let dir = out_dir.join(&binarisation).join(&stratum);
    let mut job = Job {
        config,
        options,
        out_dir,
        dir: dir.clone(),
        outputs: Vec::new(),
        warnings: Vec::new(),
        timings: BTreeMap::new(),
        tree: None,
        metrics: None,
        marker_ranks: Vec::new(),
    };
    let (rows, classes, class_counts, failure) = match &table {
        Ok(t) => {
            info!("running {binarisation}/{stratum} ({} rows)", t.n_rows());
            let failure = job.run(t).err();
            (t.n_rows(), t.class_names().to_vec(), t.class_counts(), failure)
        }
        Err(e) => (
            0,
            Vec::new(),
            Vec::new(),
            Some(Failure {
                stage: Stage::Ingest,
                message: e.to_string(),
            }),
        ),
    };
    if let Some(f) = &failure {
        warn!("{binarisation}/{stratum} aborted at {:?}: {}", f.stage, f.message);
    }
    let mut outputs: Vec<String> = job.outputs.iter().map(|p| relative(job.out_dir, p)).collect();
    outputs.sort();
    let entry = ConfigurationEntry {
        directory: relative(out_dir, &dir),
        binarisation,
        stratum,
        rows,
        classes,
        class_counts,
        tree: job.tree,
        metrics: job.metrics,
        marker_ranks: job.marker_ranks,
        outputs,
        warnings: job.warnings,
        failure,
    };
    (entry, job.timings)
}

/// Runs every configuration and writes `manifest.json` and `timings.json`.
///
/// Stage failures are recorded in the manifest rather than returned; an
/// `Err` means the output directory itself could not be written.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let out_dir = options.out_dir.clone().unwrap_or_else(|| config.resolved_output());
    fs::create_dir_all(&out_dir).map_err(|e| CactusError::io(&out_dir, e))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = options.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CactusError::InvalidParameter(format!("thread pool: {e}")))?;

    let started = Instant::now();
    let mut timings = Timings::default();
    let mut manifest = RunManifest {
        config: config.clone(),
        options: OptionsSnapshot {
            correlation: options.correlation,
            preprocessing: options.preprocessing,
        },
        configurations: Vec::new(),
        failure: None,
        timings_file: TIMINGS_FILE.to_string(),
    };

    pool.install(|| {
        let t0 = Instant::now();
        let base = load_table(config);
        timings.ingest_seconds = t0.elapsed().as_secs_f64();
        match base {
            Err(e) => {
                manifest.failure = Some(Failure {
                    stage: Stage::Ingest,
                    message: e.to_string(),
                })
            }
            Ok(base) => {
                let jobs = configuration_tables(&base, config);
                let results: Vec<(ConfigurationEntry, BTreeMap<String, f64>)> = jobs
                    .into_par_iter()
                    .map(|(b, s, t)| run_configuration(config, options, &out_dir, b, s, t))
                    .collect();
                for (entry, t) in results {
                    timings.configurations.insert(entry.directory.clone(), t);
                    manifest.configurations.push(entry);
                }
            }
        }
    });
    timings.total_seconds = started.elapsed().as_secs_f64();

    let path = out_dir.join(MANIFEST_FILE);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CactusError::io(&path, e))?;
    let path = out_dir.join(TIMINGS_FILE);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &timings)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CactusError::io(&path, e))?;

    Ok(RunOutcome {
        out_dir,
        manifest,
        timings,
    })
}
