use super::{Algorithm, Partition};
use crate::graph::WeightedGraph;

/// Minimum modularity-gain improvement for a node to leave its community.
const MIN_GAIN: f64 = 1e-12;

struct Level {
    /// Neighbours with weight, self-loops excluded.
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
}

impl Level {
    fn from_graph(graph: &WeightedGraph, position: &[usize]) -> Self {
        let n = graph.node_count();
        let mut dense = vec![std::collections::BTreeMap::<usize, f64>::new(); n];
        let mut self_loops = vec![0.0; n];
        for &(u, v, w) in graph.edges() {
            let (i, j) = (position[u], position[v]);
            if i == j {
                self_loops[i] += w;
            } else {
                *dense[i].entry(j).or_default() += w;
                *dense[j].entry(i).or_default() += w;
            }
        }
        Self::from_maps(dense, self_loops)
    }

    fn from_maps(dense: Vec<std::collections::BTreeMap<usize, f64>>, self_loops: Vec<f64>) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = dense.into_iter().map(|m| m.into_iter().collect()).collect();
        let degree = adj
            .iter()
            .zip(&self_loops)
            .map(|(nb, s)| nb.iter().map(|e| e.1).sum::<f64>() + 2.0 * s)
            .collect();
        Level {
            adj,
            self_loops,
            degree,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Local moving phase. Returns the community of each node and whether any
    /// node moved.
    fn move_nodes(&self, two_m: f64) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.degree.clone();
        let mut links = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;
        loop {
            let mut moved = false;
            for i in 0..n {
                let ki = self.degree[i];
                let current = comm[i];
                touched.clear();
                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if !touched.contains(&c) {
                        touched.push(c);
                        links[c] = 0.0;
                    }
                    links[c] += w;
                }
                tot[current] -= ki;
                let stay_links = if touched.contains(&current) { links[current] } else { 0.0 };
                let stay = stay_links - tot[current] * ki / two_m;

                let mut best: Option<(f64, usize)> = None;
                for &c in &touched {
                    if c == current {
                        continue;
                    }
                    let gain = links[c] - tot[c] * ki / two_m;
                    let better = match best {
                        None => true,
                        Some((g, bc)) => gain > g || (gain == g && c < bc),
                    };
                    if better {
                        best = Some((gain, c));
                    }
                }
                let target = match best {
                    Some((g, c)) if g > stay + MIN_GAIN => c,
                    _ => current,
                };
                tot[target] += ki;
                if target != current {
                    comm[i] = target;
                    moved = true;
                    any_move = true;
                }
            }
            if !moved {
                break;
            }
        }
        (comm, any_move)
    }

    /// Collapses communities into nodes, numbered by first appearance.
    fn aggregate(&self, comm: &[usize]) -> (Level, Vec<usize>) {
        let mut renum = vec![usize::MAX; self.len()];
        let mut k = 0;
        let mut mapped = vec![0; self.len()];
        for (i, &c) in comm.iter().enumerate() {
            if renum[c] == usize::MAX {
                renum[c] = k;
                k += 1;
            }
            mapped[i] = renum[c];
        }
        let mut dense = vec![std::collections::BTreeMap::<usize, f64>::new(); k];
        let mut self_loops = vec![0.0; k];
        for i in 0..self.len() {
            let ci = mapped[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                let cj = mapped[j];
                if ci == cj {
                    // each internal edge is seen from both ends
                    if i < j {
                        self_loops[ci] += w;
                    }
                } else {
                    *dense[ci].entry(cj).or_default() += w;
                }
            }
        }
        (Level::from_maps(dense, self_loops), mapped)
    }
}

/// Two-phase Louvain (resolution 1) with nodes visited in name order.
///
/// A node moves to the neighbouring community with the largest gain (ties
/// to the smallest id) only when that beats staying. Isolated nodes keep
/// singleton communities.
pub fn louvain(graph: &WeightedGraph, graph_id: &str) -> Partition {
    let n = graph.node_count();
    let order = graph.sorted_order();
    let mut position = vec![0; n];
    for (p, &v) in order.iter().enumerate() {
        position[v] = p;
    }
    let two_m = 2.0 * graph.total_weight();
    // community of each original node, by sorted position
    let mut membership: Vec<usize> = (0..n).collect();
    if two_m > 0.0 {
        let mut level = Level::from_graph(graph, &position);
        loop {
            let (comm, moved) = level.move_nodes(two_m);
            if !moved {
                break;
            }
            let (next, mapped) = level.aggregate(&comm);
            for m in membership.iter_mut() {
                *m = mapped[*m];
            }
            level = next;
        }
    }
    let labels: Vec<usize> = (0..n).map(|v| membership[position[v]]).collect();
    Partition::new(graph, graph_id, Algorithm::Louvain, &labels, None)
}
