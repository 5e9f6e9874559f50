//! Thresholded interference digraph and its averaging weights.

use std::io::Write;

use ndarray::Array2;

use crate::channel::received_power;
use crate::error::{Error, Result};
use crate::topology::Topology;

/// Interference digraph at one instant.
///
/// `power[[i, j]]` is the power node `i` receives from node `j`. Node `j` is
/// an incoming neighbour of `i` when that power reaches the threshold, and
/// `adjacency` row `i` holds the received powers normalised over the
/// incoming neighbours of `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceGraph {
    pub power: Array2<f64>,
    pub incoming: Vec<Vec<usize>>,
    pub outgoing: Vec<Vec<usize>>,
    pub adjacency: Array2<f64>,
}

impl InterferenceGraph {
    /// Builds the graph from a received-power matrix; the diagonal is ignored.
    pub fn from_power(power: Array2<f64>, p0: f64) -> Self {
        let k = power.nrows();
        assert_eq!(k, power.ncols(), "power matrix must be square");
        let mut incoming = vec![Vec::new(); k];
        let mut outgoing = vec![Vec::new(); k];
        for i in 0..k {
            for j in 0..k {
                if i != j && power[[i, j]] >= p0 {
                    incoming[i].push(j);
                    outgoing[j].push(i);
                }
            }
        }
        let mut adjacency = Array2::zeros((k, k));
        for (i, nbrs) in incoming.iter().enumerate() {
            let total: f64 = nbrs.iter().map(|&j| power[[i, j]]).sum();
            if total > 0.0 {
                for &j in nbrs {
                    adjacency[[i, j]] = power[[i, j]] / total;
                }
            }
        }
        InterferenceGraph {
            power,
            incoming,
            outgoing,
            adjacency,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.incoming.len()
    }

    pub fn edge_count(&self) -> usize {
        self.incoming.iter().map(Vec::len).sum()
    }

    /// Connectivity factor: total in- plus out-degree over `2 * C(K, 2)`.
    ///
    /// Each directed edge is counted at both endpoints, so a complete
    /// bidirectional graph scores 2.
    pub fn connectivity_factor(&self) -> Result<f64> {
        let k = self.num_nodes();
        if k < 2 {
            return Err(Error::TooFewNodes(k));
        }
        let degrees: usize = self
            .incoming
            .iter()
            .zip(&self.outgoing)
            .map(|(i, o)| i.len() + o.len())
            .sum();
        let pairs = (k * (k - 1) / 2) as f64;
        Ok(degrees as f64 / (2.0 * pairs))
    }

    /// Writes one `i j weight` line per edge, where `j` is an incoming neighbour of `i`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, nbrs) in self.incoming.iter().enumerate() {
            for &j in nbrs {
                writeln!(out, "{i} {j} {}", self.adjacency[[i, j]])?;
            }
        }
        Ok(())
    }
}

/// Received powers `p_t * G[i][j] * d_ij^-alpha`, then thresholding at `p0` watts.
pub fn build_graph(
    p_t: f64,
    topology: &Topology,
    gains: &Array2<f64>,
    path_loss_exp: f64,
    p0: f64,
) -> Result<InterferenceGraph> {
    let k = topology.num_nodes();
    if gains.dim() != (k, k) {
        return Err(Error::InvalidConfig(format!(
            "gain matrix is {:?}, topology has {k} nodes",
            gains.dim()
        )));
    }
    let mut power = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            if i != j {
                power[[i, j]] =
                    received_power(p_t, gains[[i, j]], topology.distance(i, j), path_loss_exp)?;
            }
        }
    }
    Ok(InterferenceGraph::from_power(power, p0))
}

/// See [`InterferenceGraph::connectivity_factor`].
pub fn connectivity_factor(graph: &InterferenceGraph) -> Result<f64> {
    graph.connectivity_factor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Point;
    use ndarray::array;
    use proptest::prelude::*;

    fn line_topology(k: usize) -> Topology {
        let pos = (0..k)
            .map(|i| Point {
                x: 1.0 + i as f64 * 3.0,
                y: (i * i) as f64 * 0.5,
            })
            .collect();
        Topology::from_positions(pos, vec![]).unwrap()
    }

    #[test]
    fn hand_built_three_nodes() {
        let p = array![[0.0, 4.0, 1.0], [2.0, 0.0, 2.0], [0.0, 3.0, 0.0]];
        let g = InterferenceGraph::from_power(p, 2.0);
        assert_eq!(g.incoming, vec![vec![1], vec![0, 2], vec![1]]);
        assert_eq!(g.outgoing, vec![vec![1], vec![0, 2], vec![1]]);
        let expected = array![[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]];
        assert_eq!(g.adjacency, expected);
    }

    #[test]
    fn zero_threshold_is_complete() {
        let topo = line_topology(5);
        let gains = Array2::from_elem((5, 5), 0.8);
        let g = build_graph(0.2, &topo, &gains, 4.0, 0.0).unwrap();
        assert_eq!(g.edge_count(), 20);
        for row in g.adjacency.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_threshold_is_empty() {
        let topo = line_topology(4);
        let gains = Array2::from_elem((4, 4), 1.0);
        let g = build_graph(0.2, &topo, &gains, 4.0, 1.0).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(g.adjacency.iter().all(|&a| a == 0.0));
        assert_eq!(g.connectivity_factor().unwrap(), 0.0);
    }

    #[test]
    fn zero_power_neighbours_give_zero_row() {
        let g = InterferenceGraph::from_power(Array2::zeros((3, 3)), 0.0);
        assert_eq!(g.edge_count(), 6);
        assert!(g.adjacency.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn connectivity_examples() {
        let full = InterferenceGraph::from_power(Array2::from_elem((4, 4), 1.0), 0.5);
        assert_eq!(full.connectivity_factor().unwrap(), 2.0);
        let single = InterferenceGraph::from_power(array![[0.0, 1.0], [0.0, 0.0]], 0.5);
        assert_eq!(single.connectivity_factor().unwrap(), 1.0);
        let lonely = InterferenceGraph::from_power(array![[0.0]], 0.5);
        assert!(lonely.connectivity_factor().is_err());
    }

    #[test]
    fn rejects_mismatched_gains() {
        let topo = line_topology(3);
        assert!(build_graph(0.2, &topo, &Array2::zeros((2, 2)), 4.0, 0.0).is_err());
    }

    #[test]
    fn edge_list_format() {
        let p = array![[0.0, 4.0, 1.0], [2.0, 0.0, 2.0], [0.0, 3.0, 0.0]];
        let g = InterferenceGraph::from_power(p, 2.0);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1 1\n1 0 0.5\n1 2 0.5\n2 1 1\n");
    }

    fn power_matrix(k: usize) -> impl Strategy<Value = Array2<f64>> {
        proptest::collection::vec(0.0..1.0f64, k * k)
            .prop_map(move |v| Array2::from_shape_vec((k, k), v).unwrap())
    }

    proptest! {
        #[test]
        fn graph_invariants(p in (2usize..9).prop_flat_map(power_matrix), p0 in 0.0..1.0f64) {
            let g = InterferenceGraph::from_power(p.clone(), p0);
            let k = g.num_nodes();
            let out_total: usize = g.outgoing.iter().map(Vec::len).sum();
            prop_assert_eq!(g.edge_count(), out_total);
            for i in 0..k {
                prop_assert_eq!(g.adjacency[[i, i]], 0.0);
                for j in 0..k {
                    let edge = i != j && p[[i, j]] >= p0;
                    prop_assert_eq!(g.incoming[i].contains(&j), edge);
                    prop_assert_eq!(g.outgoing[j].contains(&i), edge);
                    if !edge {
                        prop_assert_eq!(g.adjacency[[i, j]], 0.0);
                    }
                }
                let s = g.adjacency.row(i).sum();
                if g.incoming[i].iter().any(|&j| p[[i, j]] > 0.0) {
                    prop_assert!((s - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn connectivity_non_increasing_in_threshold(
            p in (2usize..9).prop_flat_map(power_matrix),
            a in 0.0..1.0f64,
            b in 0.0..1.0f64,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let cf_lo = InterferenceGraph::from_power(p.clone(), lo).connectivity_factor().unwrap();
            let cf_hi = InterferenceGraph::from_power(p, hi).connectivity_factor().unwrap();
            prop_assert!(cf_hi <= cf_lo);
        }
    }
}
