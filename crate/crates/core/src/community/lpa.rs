use super::{Algorithm, Partition};
use crate::graph::WeightedGraph;

pub const MAX_SWEEPS: usize = 100;

/// Asynchronous label propagation with a fixed visiting order.
///
/// Labels start as the node's position in name order. Each sweep visits the
/// nodes in that order; a node takes the neighbouring label with the largest
/// incident weight (ties to the smallest label). Stops after a sweep with no
/// change, or after [`MAX_SWEEPS`] with a warning.
pub fn label_propagation(graph: &WeightedGraph, graph_id: &str) -> Partition {
    let n = graph.node_count();
    let order = graph.sorted_order();
    let adj = graph.adjacency();
    let mut label = vec![0; n];
    for (p, &v) in order.iter().enumerate() {
        label[v] = p;
    }

    let mut weight_by_label = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut stable = false;
    for _ in 0..MAX_SWEEPS {
        let mut changed = false;
        for &v in &order {
            touched.clear();
            for &(u, w) in &adj[v] {
                if u == v {
                    continue;
                }
                let l = label[u];
                if !touched.contains(&l) {
                    touched.push(l);
                    weight_by_label[l] = 0.0;
                }
                weight_by_label[l] += w;
            }
            if touched.is_empty() {
                continue;
            }
            let mut best = touched[0];
            for &l in &touched[1..] {
                let (wl, wb) = (weight_by_label[l], weight_by_label[best]);
                if wl > wb || (wl == wb && l < best) {
                    best = l;
                }
            }
            if best != label[v] {
                label[v] = best;
                changed = true;
            }
        }
        if !changed {
            stable = true;
            break;
        }
    }
    let warning = (!stable).then(|| format!("label propagation did not settle after {MAX_SWEEPS} sweeps"));
    Partition::new(graph, graph_id, Algorithm::LabelPropagation, &label, warning)
}
