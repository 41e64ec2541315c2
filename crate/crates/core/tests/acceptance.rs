//! Acceptance report: one PASS/FAIL/BLOCKED line per criterion.
//!
//! The Thyroid0387 file is not shipped. Point `CACTUS_THYROID_DATA` at a copy
//! of `thyroid0387.data` (or drop it in `tests/data/`) to run criterion 2;
//! otherwise it reports BLOCKED, which fails the run only when
//! `CACTUS_ACCEPTANCE_STRICT=1`.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use cactus::classify::{flip_rank, marker_rank};
use cactus::dtree::fit_tree;
use cactus::ingest::{load_table, parse_config, RunConfig};
use cactus::pipeline::{run, RunManifest, RunOptions};
use common::suites::{self, Check};
use common::*;

enum Verdict {
    Pass(String),
    Fail(String),
    Blocked(String),
}

fn from_checks(checks: Vec<(&str, Check)>) -> Verdict {
    let mut parts = Vec::new();
    for (name, c) in checks {
        match c {
            Ok(s) => parts.push(format!("{name}: {s}")),
            Err(e) => return Verdict::Fail(format!("{name}: {e}")),
        }
    }
    Verdict::Pass(parts.join("; "))
}

fn wdbc_config() -> RunConfig {
    RunConfig::new(wdbc_path(), "Diagnosis")
}

fn run_into(config: &RunConfig, dir: PathBuf) -> Result<(RunManifest, f64), String> {
    let options = RunOptions {
        out_dir: Some(dir),
        ..RunOptions::default()
    };
    let start = Instant::now();
    let outcome = run(config, &options).map_err(|e| e.to_string())?;
    Ok((outcome.manifest, start.elapsed().as_secs_f64()))
}

fn criterion_1(manifest: &RunManifest, seconds: f64) -> Verdict {
    let Some(m) = manifest.configuration("original", "all").and_then(|c| c.metrics.as_ref()) else {
        return Verdict::Fail("WDBC run produced no metrics".into());
    };
    let detail = format!(
        "probabilistic BA {:.4} (>= 0.92), pagerank BA {:.4} (>= 0.91), runtime {seconds:.2}s (< 60s)",
        m.probabilistic_balanced_accuracy, m.pagerank_balanced_accuracy
    );
    if m.probabilistic_balanced_accuracy >= 0.92 && m.pagerank_balanced_accuracy >= 0.91 && seconds < 60.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn thyroid_data() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("CACTUS_THYROID_DATA") {
        return Some(PathBuf::from(p));
    }
    let local = data_dir().join("thyroid0387.data");
    local.exists().then_some(local)
}

fn criterion_2(scratch: &std::path::Path) -> Verdict {
    let Some(data) = thyroid_data() else {
        return Verdict::Blocked("thyroid0387.data not available; set CACTUS_THYROID_DATA".into());
    };
    let repo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let text = match std::fs::read_to_string(repo.join("configs/thyroid.yaml")) {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(format!("configs/thyroid.yaml: {e}")),
    };
    let mut config = match parse_config(&text, repo.join("configs")) {
        Ok(c) => c,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    config.input_path = data;
    let manifest = match run_into(&config, scratch.join("thyroid")) {
        Ok((m, _)) => m,
        Err(e) => return Verdict::Fail(e),
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for slug in ["original", "divider_0"] {
        match manifest.configuration(slug, "all").and_then(|c| c.metrics.as_ref()) {
            Some(m) => {
                ok &= m.probabilistic_balanced_accuracy >= 0.85 && m.pagerank_balanced_accuracy >= 0.85;
                parts.push(format!(
                    "{slug}: probabilistic BA {:.4}, pagerank BA {:.4}",
                    m.probabilistic_balanced_accuracy, m.pagerank_balanced_accuracy
                ));
            }
            None => {
                ok = false;
                parts.push(format!("{slug}: no metrics"));
            }
        }
    }
    let detail = format!("{} (each >= 0.85)", parts.join("; "));
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_3(manifest: &RunManifest) -> Verdict {
    let up = flip_rank(&[0.52, 0.86]);
    let down = flip_rank(&[0.48, 0.14]);
    let toy = marker_rank(&[up, down]);
    let exact = (toy - 0.34).abs() < 1e-12;
    let Some(entry) = manifest.configuration("original", "all") else {
        return Verdict::Fail("WDBC configuration missing".into());
    };
    let rank_of = |name: &str| entry.marker_ranks.iter().position(|(a, _)| a == name);
    let (Some(ps), Some(pp)) = (rank_of("Smoothness"), rank_of("Worst perimeter")) else {
        return Verdict::Fail("Smoothness or Worst perimeter missing from ranks".into());
    };
    let (rs, rp) = (entry.marker_ranks[ps].1, entry.marker_ranks[pp].1);
    let detail = format!(
        "rounded-input R = {toy:.12} (0.34), R(Smoothness) {rs:.4} in [0.30, 0.38], R(Worst perimeter) {rp:.4} in [0.78, 0.89], positions {} vs {}",
        pp + 1,
        ps + 1
    );
    if exact && (0.30..=0.38).contains(&rs) && (0.78..=0.89).contains(&rp) && pp < ps {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_4() -> Verdict {
    let table = match load_table(&wdbc_config()) {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let tree = match fit_tree(&table, None) {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let root = tree.root().split.as_ref().map(|s| s.attribute.clone()).unwrap_or_default();
    let acc = tree.training_accuracy(&table);
    let detail = format!(
        "root split `{root}`, training accuracy {acc:.4}, pure leaves {}, {} nodes",
        tree.leaves_pure(),
        tree.nodes.len()
    );
    if acc == 1.0 && tree.leaves_pure() && ["Worst perimeter", "Worst concave points"].contains(&root.as_str()) {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_5() -> Verdict {
    from_checks(vec![
        ("pagerank", suites::pagerank_exhaustive(6)),
        ("mst", suites::mst_exhaustive(8, 6, 11)),
        ("balanced accuracy", suites::balanced_accuracy_random(1000, 12)),
        ("partition quality", suites::quality_random(500, 13)),
    ])
}

fn criterion_6(scratch: &std::path::Path) -> Verdict {
    from_checks(vec![
        ("flip normalisation", suites::flip_normalisation(40, 21)),
        ("pagerank mass", suites::pagerank_mass(500, 22)),
        ("rank bounds/symmetry", suites::rank_bounds_and_symmetry(2000, 23)),
        ("partition cover", suites::partition_cover(200, 24)),
        ("correlation", suites::correlation_checks(40, 25)),
        ("determinism", suites::end_to_end_determinism(&wdbc_config(), &scratch.join("determinism"))),
    ])
}

fn criterion_7(manifest: &RunManifest) -> Verdict {
    let Some(m) = manifest.configuration("original", "all").and_then(|c| c.metrics.as_ref()) else {
        return Verdict::Fail("WDBC run produced no metrics".into());
    };
    let detail = format!("agreement {:.4} (>= 0.90)", m.agreement);
    if m.agreement >= 0.90 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn main() -> ExitCode {
    let strict = std::env::var("CACTUS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let scratch = tempfile::tempdir().expect("temporary directory");
    let wdbc = run_into(&wdbc_config(), scratch.path().join("wdbc"));

    let mut verdicts: Vec<(u32, &str, Verdict)> = Vec::new();
    match &wdbc {
        Ok((manifest, seconds)) => {
            verdicts.push((1, "WDBC resubstitution", criterion_1(manifest, *seconds)));
        }
        Err(e) => verdicts.push((1, "WDBC resubstitution", Verdict::Fail(e.clone()))),
    }
    verdicts.push((2, "Thyroid three-class and binary", criterion_2(scratch.path())));
    let missing = || Verdict::Fail("WDBC run failed".into());
    verdicts.push((
        3,
        "Rank reproduction",
        wdbc.as_ref().map_or_else(|_| missing(), |(m, _)| criterion_3(m)),
    ));
    verdicts.push((4, "Decision tree", criterion_4()));
    verdicts.push((5, "Oracle suites", criterion_5()));
    verdicts.push((6, "Invariant suite", criterion_6(scratch.path())));
    verdicts.push((
        7,
        "Classifier agreement",
        wdbc.as_ref().map_or_else(|_| missing(), |(m, _)| criterion_7(m)),
    ));

    let mut failed = false;
    for (n, name, v) in &verdicts {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed = true;
                ("FAIL", d)
            }
            Verdict::Blocked(d) => {
                failed |= strict;
                ("BLOCKED", d)
            }
        };
        println!("criterion {n} [{tag}] {name}: {detail}");
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
