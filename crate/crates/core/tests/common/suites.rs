//! Oracle and invariant checks shared by the test targets and the
//! acceptance report. Each returns a one-line summary or the first mismatch.
#![allow(dead_code)]

use std::path::Path;

use cactus::abstraction::{abstract_table, flip_probabilities, infer_schema};
use cactus::classify::{balanced_accuracy, flip_rank, marker_rank};
use cactus::community::{detect, partition_quality, Algorithm};
use cactus::correlate::{correlation_matrix, mst};
use cactus::graph::{pagerank, PageRankParams};
use cactus::ingest::{load_table, Cell, DataTable, RunConfig};
use cactus::pipeline::{run, RunOptions};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use super::*;

pub type Check = std::result::Result<String, String>;

/// Power iteration against the dense solve on every graph with up to
/// `max_nodes` nodes and edge weights in {0, 0.5, 1}.
pub fn pagerank_exhaustive(max_nodes: usize) -> Check {
    let params = PageRankParams::default();
    let grid = [0.0, 0.5, 1.0];
    let mut checked = 0u64;
    let mut worst = 0.0f64;
    for n in 1..=max_nodes {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let total = 3u64.pow(pairs.len() as u32);
        let mut edges = Vec::with_capacity(pairs.len());
        for code in 0..total {
            edges.clear();
            let mut c = code;
            for &(u, v) in &pairs {
                let w = grid[(c % 3) as usize];
                c /= 3;
                if w > 0.0 {
                    edges.push((u, v, w));
                }
            }
            let mut g = cactus::graph::WeightedGraph::new(names.clone());
            for &(u, v, w) in &edges {
                g.add_edge(u, v, w);
            }
            let pr = pagerank(&g, &params).map_err(|e| e.to_string())?;
            let dense = dense_pagerank(n, &edges, params.damping);
            for (a, b) in pr.scores.iter().zip(&dense) {
                let d = (a - b).abs();
                worst = worst.max(d);
                if d > 1e-8 {
                    return Err(format!("n={n} edges={edges:?}: {a} vs {b}"));
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} graphs, max deviation {worst:.1e}"))
}

/// Kruskal against Prüfer-sequence enumeration on random connected graphs.
pub fn mst_exhaustive(max_nodes: usize, per_size: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut checked = 0;
    for n in 2..=max_nodes {
        let mut done = 0;
        while done < per_size {
            let density = rng.gen_range(0.4..=1.0);
            // coarse weights force cost ties
            let edges: Vec<(usize, usize, f64)> = random_graph(&mut rng, n, density)
                .into_iter()
                .map(|(u, v, w)| (u, v, (w * 4.0).round() / 4.0))
                .collect();
            let mut cost = vec![vec![None; n]; n];
            for &(u, v, w) in &edges {
                cost[u][v] = Some(1.0 - w);
                cost[v][u] = Some(1.0 - w);
            }
            let Some(best) = exhaustive_mst_cost(n, &cost) else { continue };
            let forest = mst(&graph(n, &edges));
            if forest.edges.len() != n - 1 || forest.components != 1 {
                return Err(format!("n={n}: {} edges, {} components", forest.edges.len(), forest.components));
            }
            if (forest.total_cost() - best).abs() > 1e-9 {
                return Err(format!("n={n} edges={edges:?}: kruskal {} vs exhaustive {best}", forest.total_cost()));
            }
            done += 1;
            checked += 1;
        }
    }
    Ok(format!("{checked} connected graphs up to {max_nodes} nodes"))
}

pub fn balanced_accuracy_random(vectors: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    for i in 0..vectors {
        let k = rng.gen_range(2..=6);
        let n = rng.gen_range(k..200);
        let mut truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        // every class present
        for (c, t) in truth.iter_mut().take(k).enumerate() {
            *t = c;
        }
        truth.shuffle(&mut rng);
        let predicted: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let got = balanced_accuracy(&truth, &predicted, k).map_err(|e| e.to_string())?;
        let want = balanced_accuracy_oracle(&truth, &predicted, k);
        if (got - want).abs() > 1e-12 {
            return Err(format!("vector {i}: {got} vs {want}"));
        }
    }
    Ok(format!("{vectors} random prediction vectors"))
}

/// Modularity, coverage and performance of random assignments and of every
/// detector's output on random 6-node graphs.
pub fn quality_random(trials: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = 6;
    for t in 0..trials {
        let mut edges = { let p = rng.gen_range(0.2..0.9); random_graph(&mut rng, n, p) };
        if rng.gen_bool(0.3) {
            let v = rng.gen_range(0..n);
            edges.push((v, v, rng.gen_range(0.1..1.0)));
        }
        let g = graph(n, &edges);
        let mut assignments: Vec<Vec<usize>> = vec![(0..n).map(|_| rng.gen_range(0..3)).collect()];
        for alg in Algorithm::ALL {
            assignments.push(detect(&g, alg, "g").assignment);
        }
        for a in &assignments {
            let q = partition_quality(&g, a).map_err(|e| e.to_string())?;
            let (m, c, p) = quality_oracle(n, &edges, a);
            if (q.modularity - m).abs() > 1e-12 || (q.coverage - c).abs() > 1e-12 || (q.performance - p).abs() > 1e-12 {
                return Err(format!(
                    "trial {t} edges={edges:?} assignment={a:?}: ({}, {}, {}) vs ({m}, {c}, {p})",
                    q.modularity, q.coverage, q.performance
                ));
            }
        }
    }
    Ok(format!("{trials} random 6-node graphs"))
}

fn random_table(rng: &mut StdRng, rows: usize) -> DataTable {
    let k = rng.gen_range(2..=4);
    let mut labels: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..k)).collect();
    for (c, l) in labels.iter_mut().take(k).enumerate() {
        *l = c;
    }
    let cells = (0..rows)
        .map(|r| {
            let lean = labels[r] as f64;
            vec![
                if rng.gen_bool(0.1) { Cell::Missing } else { Cell::Number(rng.gen_range(0.0..10.0) + lean) },
                Cell::Number(rng.gen_range(0..20) as f64),
                if rng.gen_bool(0.1) {
                    Cell::Missing
                } else {
                    Cell::Token(["p", "q", "r"][rng.gen_range(0..3)].to_string())
                },
            ]
        })
        .collect();
    DataTable::new(
        vec!["cont".into(), "int".into(), "tok".into()],
        cells,
        labels,
        (0..k).map(|c| format!("c{c}")).collect(),
        "y",
    )
    .unwrap()
}

/// Per class and attribute, P(f|c) over the attribute's flips sums to one
/// whenever the class observes the attribute.
pub fn flip_normalisation(tables: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut cases: Vec<DataTable> = (0..tables).map(|_| {
        let rows = rng.gen_range(20..80);
        random_table(&mut rng, rows)
    }).collect();
    cases.push(load_table(&RunConfig::new(wdbc_path(), "Diagnosis")).map_err(|e| e.to_string())?);
    for (i, t) in cases.iter().enumerate() {
        let schema = infer_schema(t, &[]).map_err(|e| e.to_string())?;
        let at = abstract_table(t, &schema).map_err(|e| e.to_string())?;
        let p = flip_probabilities(&at);
        for c in 0..at.n_classes {
            for (ai, a) in schema.attributes().iter().enumerate() {
                let observed = (0..at.rows.len()).any(|r| at.labels[r] == c && at.observed_attributes(r).any(|x| x == ai));
                let s: f64 = a.flips.clone().map(|f| p.get(c, f)).sum();
                let want = if observed { 1.0 } else { 0.0 };
                if (s - want).abs() > 1e-12 {
                    return Err(format!("table {i} class {c} attribute {}: sum {s}", a.name));
                }
            }
        }
    }
    Ok(format!("{} tables", cases.len()))
}

pub fn pagerank_mass(trials: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    for t in 0..trials {
        let n = rng.gen_range(1..30);
        let edges = { let p = rng.gen_range(0.0..0.5); random_graph(&mut rng, n, p) };
        let pr = pagerank(&graph(n, &edges), &PageRankParams::default()).map_err(|e| e.to_string())?;
        let s: f64 = pr.scores.iter().sum();
        if (s - 1.0).abs() > 1e-9 || pr.scores.iter().any(|&x| x < 0.0) {
            return Err(format!("trial {t}: mass {s}"));
        }
    }
    Ok(format!("{trials} random graphs with isolated nodes"))
}

/// Ranks stay in [0, 1] and ignore the order of the classes.
pub fn rank_bounds_and_symmetry(trials: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    for t in 0..trials {
        let k = rng.gen_range(2..8);
        let p: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let r = flip_rank(&p);
        if !(0.0..=1.0).contains(&r) {
            return Err(format!("trial {t}: rank {r} for {p:?}"));
        }
        let mut q = p.clone();
        q.shuffle(&mut rng);
        let rq = flip_rank(&q);
        if (r - rq).abs() > 1e-12 {
            return Err(format!("trial {t}: {r} vs permuted {rq}"));
        }
        let m = marker_rank(&[r, rq]);
        if !(0.0..=1.0).contains(&m) {
            return Err(format!("trial {t}: marker rank {m}"));
        }
    }
    Ok(format!("{trials} random probability vectors"))
}

/// Every node carries one community id, ids are dense from 0, and every id
/// is used.
pub fn partition_cover(trials: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    for t in 0..trials {
        let n = rng.gen_range(1..15);
        let edges = { let p = rng.gen_range(0.0..0.7); random_graph(&mut rng, n, p) };
        let g = graph(n, &edges);
        for alg in Algorithm::ALL {
            let p = detect(&g, alg, "g");
            let k = p.n_communities();
            if p.assignment.len() != n || (0..k).any(|c| p.members(c).is_empty()) {
                return Err(format!("trial {t} {}: {:?}", alg.as_str(), p.assignment));
            }
            let rebuilt: usize = (0..k).map(|c| p.members(c).len()).sum();
            if rebuilt != n {
                return Err(format!("trial {t} {}: cover has {rebuilt} of {n}", alg.as_str()));
            }
            if !(-0.5..=1.0).contains(&p.modularity)
                || !(0.0..=1.0).contains(&p.coverage)
                || !(0.0..=1.0).contains(&p.performance)
            {
                return Err(format!(
                    "trial {t} {}: quality ({}, {}, {}) out of range",
                    alg.as_str(),
                    p.modularity,
                    p.coverage,
                    p.performance
                ));
            }
            if detect(&g, alg, "g") != p {
                return Err(format!("trial {t} {}: not deterministic", alg.as_str()));
            }
        }
    }
    Ok(format!("{trials} random graphs, 3 detectors"))
}

/// Symmetric, bounded matrix; a negated column is flagged.
pub fn correlation_checks(tables: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    for i in 0..tables {
        let rows = rng.gen_range(10..60);
        let base = random_table(&mut rng, rows);
        let mut names = base.column_names().to_vec();
        names.push("neg".into());
        let cells: Vec<Vec<Cell>> = base
            .cells()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.push(r[1].as_number().map_or(Cell::Missing, |v| Cell::Number(-3.0 * v + 2.0)));
                r
            })
            .collect();
        let t = DataTable::new(names.clone(), cells, base.labels().to_vec(), base.class_names().to_vec(), "y")
            .map_err(|e| e.to_string())?;
        let m = correlation_matrix(&t, &names).map_err(|e| e.to_string())?;
        for a in 0..m.len() {
            for b in 0..m.len() {
                if m.get(a, b) != m.get(b, a) {
                    return Err(format!("table {i}: asymmetric at ({a}, {b})"));
                }
                if let Some(r) = m.get(a, b) {
                    if !(-1.0..=1.0).contains(&r) {
                        return Err(format!("table {i}: rho {r}"));
                    }
                }
            }
        }
        let flagged = m.perfect_pairs().iter().any(|(a, b, r)| a == "int" && b == "neg" && *r < 0.0);
        if !flagged {
            return Err(format!("table {i}: negated column not flagged"));
        }
    }
    Ok(format!("{tables} random tables"))
}

/// Two full runs into different directories produce identical files,
/// timings aside.
pub fn end_to_end_determinism(config: &RunConfig, scratch: &Path) -> Check {
    let mut snaps = Vec::new();
    for k in 0..2 {
        let out = scratch.join(format!("run{k}"));
        let options = RunOptions {
            out_dir: Some(out.clone()),
            ..RunOptions::default()
        };
        let outcome = run(config, &options).map_err(|e| e.to_string())?;
        if outcome.manifest.failed() {
            return Err("run reported a failure".into());
        }
        let files: Vec<(String, Vec<u8>)> = snapshot(&out)
            .into_iter()
            .filter(|(p, _)| p != cactus::pipeline::TIMINGS_FILE)
            .collect();
        snaps.push(files);
    }
    if snaps[0].len() != snaps[1].len() {
        return Err(format!("{} vs {} files", snaps[0].len(), snaps[1].len()));
    }
    for (a, b) in snaps[0].iter().zip(&snaps[1]) {
        if a != b {
            return Err(format!("{} differs", a.0));
        }
    }
    Ok(format!("{} files byte-identical", snaps[0].len()))
}
