use super::{Algorithm, Partition};
use crate::graph::WeightedGraph;

/// Clauset-Newman-Moore agglomeration.
///
/// Starting from singletons (ids follow node-name order), the connected pair
/// with the largest modularity gain `2 (e_ij - a_i a_j)` is merged until no
/// merge gains. Ties go to the lexicographically smallest `(i, j)`; the merged
/// community keeps the smaller id.
pub fn greedy_communities(graph: &WeightedGraph, graph_id: &str) -> Partition {
    let n = graph.node_count();
    let order = graph.sorted_order();
    let mut position = vec![0; n];
    for (p, &v) in order.iter().enumerate() {
        position[v] = p;
    }
    let two_m = 2.0 * graph.total_weight();
    let mut labels: Vec<usize> = position.clone();
    if two_m <= 0.0 || n < 2 {
        return Partition::new(graph, graph_id, Algorithm::Greedy, &labels, None);
    }

    // e[i][j]: fraction of edge ends between communities i and j (i != j)
    let mut e = vec![vec![0.0; n]; n];
    let mut a = vec![0.0; n];
    for (v, d) in graph.degrees().into_iter().enumerate() {
        a[position[v]] = d / two_m;
    }
    for &(u, v, w) in graph.edges() {
        let (i, j) = (position[u], position[v]);
        if i != j {
            e[i][j] += w / two_m;
            e[j][i] += w / two_m;
        }
    }
    let mut alive = vec![true; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in i + 1..n {
                if !alive[j] || e[i][j] <= 0.0 {
                    continue;
                }
                let gain = 2.0 * (e[i][j] - a[i] * a[j]);
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, i, j));
                }
            }
        }
        let Some((gain, i, j)) = best else { break };
        if gain <= 0.0 {
            break;
        }
        for k in 0..n {
            if k != i && k != j && alive[k] {
                e[i][k] += e[j][k];
                e[k][i] = e[i][k];
            }
            e[j][k] = 0.0;
            e[k][j] = 0.0;
        }
        e[i][j] = 0.0;
        e[j][i] = 0.0;
        a[i] += a[j];
        a[j] = 0.0;
        alive[j] = false;
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
    }

    for (c, m) in members.iter().enumerate() {
        for &p in m {
            labels[order[p]] = c;
        }
    }
    Partition::new(graph, graph_id, Algorithm::Greedy, &labels, None)
}
