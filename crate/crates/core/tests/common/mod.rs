//! Independent reference implementations used by the integration suites.
#![allow(dead_code)]

pub mod suites;

use std::path::{Path, PathBuf};

use cactus::graph::WeightedGraph;
use rand::Rng;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn wdbc_path() -> PathBuf {
    data_dir().join("wdbc.csv")
}

pub fn graph(n: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph {
    let mut g = WeightedGraph::new((0..n).map(|i| format!("n{i}")).collect());
    for &(u, v, w) in edges {
        g.add_edge(u, v, w);
    }
    g
}

/// Random simple graph: each pair present with probability `p`, weight in
/// `(0, 1]`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v, rng.gen_range(0.05..=1.0)));
            }
        }
    }
    edges
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Stationary vector of the explicit Google matrix, from a linear solve.
/// Undirected weights give both arc directions; a self-loop is one arc.
pub fn dense_pagerank(n: usize, edges: &[(usize, usize, f64)], damping: f64) -> Vec<f64> {
    let mut w = vec![vec![0.0; n]; n];
    for &(u, v, x) in edges {
        w[u][v] += x;
        if u != v {
            w[v][u] += x;
        }
    }
    let nf = n as f64;
    // google[v][u]: probability of stepping u -> v
    let mut google = vec![vec![0.0; n]; n];
    for u in 0..n {
        let out: f64 = w[u].iter().sum();
        for v in 0..n {
            google[v][u] = if out > 0.0 {
                damping * w[u][v] / out + (1.0 - damping) / nf
            } else {
                1.0 / nf
            };
        }
    }
    // (G - I) x = 0 with the last equation replaced by sum(x) = 1
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|v| (0..n).map(|u| google[v][u] - if u == v { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut b = vec![0.0; n];
    a[n - 1] = vec![1.0; n];
    b[n - 1] = 1.0;
    solve(a, b)
}

/// Minimum total cost over every spanning tree of the complete graph on `n`
/// nodes, enumerated through Prüfer sequences. `cost[u][v] = None` marks a
/// missing edge. `None` when no spanning tree exists.
pub fn exhaustive_mst_cost(n: usize, cost: &[Vec<Option<f64>>]) -> Option<f64> {
    if n == 1 {
        return Some(0.0);
    }
    if n == 2 {
        return cost[0][1];
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    let mut best: Option<f64> = None;
    let mut seq = vec![0usize; len];
    for code in 0..total {
        let mut c = code;
        for s in seq.iter_mut() {
            *s = c % n;
            c /= n;
        }
        let mut degree = vec![1usize; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut sum = 0.0;
        let mut ok = true;
        for &s in &seq {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            match cost[leaf][s] {
                Some(x) => sum += x,
                None => {
                    ok = false;
                    break;
                }
            }
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        if !ok {
            continue;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        match cost[rest[0]][rest[1]] {
            Some(x) => sum += x,
            None => continue,
        }
        if best.is_none_or(|b| sum < b) {
            best = Some(sum);
        }
    }
    best
}

/// Mean per-class recall over the classes present in `truth`, counted
/// record by record.
pub fn balanced_accuracy_oracle(truth: &[usize], predicted: &[usize], n_classes: usize) -> f64 {
    let mut recalls = Vec::new();
    for c in 0..n_classes {
        let members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let hits = members.iter().filter(|&&i| predicted[i] == c).count();
        recalls.push(hits as f64 / members.len() as f64);
    }
    recalls.iter().sum::<f64>() / recalls.len() as f64
}

/// Modularity, coverage and performance from the adjacency matrix, pair by
/// pair.
pub fn quality_oracle(n: usize, edges: &[(usize, usize, f64)], assignment: &[usize]) -> (f64, f64, f64) {
    let mut a = vec![vec![0.0; n]; n];
    let mut linked = vec![vec![false; n]; n];
    for &(u, v, w) in edges {
        if u == v {
            a[u][u] += 2.0 * w;
        } else {
            a[u][v] += w;
            a[v][u] += w;
            linked[u][v] = true;
            linked[v][u] = true;
        }
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let (mut q, mut inside) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
                inside += a[i][j];
            }
        }
    }
    let (modularity, coverage) = if two_m > 0.0 { (q / two_m, inside / two_m) } else { (0.0, 0.0) };
    let mut good = 0usize;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            let same = assignment[i] == assignment[j];
            if same == linked[i][j] {
                good += 1;
            }
        }
    }
    let performance = if pairs == 0 { 1.0 } else { good as f64 / pairs as f64 };
    (modularity, coverage, performance)
}

/// Every set partition of `0..n` as restricted-growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            cur.push(c);
            rec(i + 1, n, cur, max.max(c), out);
            cur.pop();
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut cur = vec![0];
    rec(1, n, &mut cur, 0, &mut out);
    out
}

pub fn best_modularity(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    all_partitions(n)
        .iter()
        .map(|p| quality_oracle(n, edges, p).0)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Exhaustive ROC cut: every midpoint is scored from scratch; the first
/// (smallest) of the best scores wins.
pub fn threshold_oracle(values: &[(f64, usize)], n_classes: usize) -> Option<f64> {
    let mut distinct: Vec<f64> = values.iter().map(|v| v.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut best: Option<(f64, f64)> = None;
    for w in distinct.windows(2) {
        let t = w[0] + (w[1] - w[0]) / 2.0;
        let mut scores = Vec::new();
        for c in 0..n_classes {
            let pos = values.iter().filter(|v| v.1 == c).count();
            let neg = values.len() - pos;
            if pos == 0 || neg == 0 {
                continue;
            }
            let tp = values.iter().filter(|v| v.1 == c && v.0 > t).count();
            let fp = values.iter().filter(|v| v.1 != c && v.0 > t).count();
            scores.push((tp as f64 / pos as f64 - fp as f64 / neg as f64).abs());
        }
        let s = if scores.is_empty() { 0.0 } else { scores.iter().sum::<f64>() / scores.len() as f64 };
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, t));
        }
    }
    best.map(|b| b.1)
}

/// Laplacian energy as the squared Frobenius norm of `D - W`, self-loops
/// dropped, optionally with one node deleted.
pub fn laplacian_energy_oracle(n: usize, edges: &[(usize, usize, f64)], without: Option<usize>) -> f64 {
    let mut l = vec![vec![0.0; n]; n];
    for &(u, v, w) in edges {
        if u == v || Some(u) == without || Some(v) == without {
            continue;
        }
        l[u][v] -= w;
        l[v][u] -= w;
        l[u][u] += w;
        l[v][v] += w;
    }
    l.iter().flatten().map(|x| x * x).sum()
}

/// Within-class joint probability of two flips by direct record counting.
pub fn cooccurrence_oracle(
    rows: &[Vec<usize>],
    labels: &[usize],
    attribute_of: &[usize],
    class: usize,
    a: usize,
    b: usize,
) -> f64 {
    let (aa, ab) = (attribute_of[a], attribute_of[b]);
    let mut both = 0usize;
    let mut observed = 0usize;
    for (row, &l) in rows.iter().zip(labels) {
        if l != class {
            continue;
        }
        let sees = |attr: usize| row.iter().any(|&f| attribute_of[f] == attr);
        if sees(aa) && sees(ab) {
            observed += 1;
            if row.contains(&a) && row.contains(&b) {
                both += 1;
            }
        }
    }
    if observed == 0 {
        0.0
    } else {
        both as f64 / observed as f64
    }
}

/// Shannon entropy in bits, written independently of the library.
pub fn entropy_oracle(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let n = labels.len() as f64;
    counts.values().map(|&c| c as f64 / n).map(|p| -p * p.ln() / std::f64::consts::LN_2).sum()
}

/// Information gain of `value <= t` on fully observed data.
pub fn gain_oracle(values: &[f64], labels: &[usize], t: f64) -> f64 {
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (&v, &l) in values.iter().zip(labels) {
        if v <= t {
            left.push(l);
        } else {
            right.push(l);
        }
    }
    let n = labels.len() as f64;
    entropy_oracle(labels)
        - left.len() as f64 / n * entropy_oracle(&left)
        - right.len() as f64 / n * entropy_oracle(&right)
}

/// Recursively collects every file under `dir` as `(relative path, bytes)`.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out
}
