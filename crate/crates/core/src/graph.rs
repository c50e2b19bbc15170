//! Immutable undirected graph in compressed sparse row form.
//!
//! Every undirected edge is stored twice (once per direction). Rows are
//! sorted, deduplicated and free of self-links.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Dense node index in `0..n`.
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Graph {
    /// Builds a graph from arbitrary edge pairs.
    ///
    /// Pairs are symmetrized and deduplicated; self-links are dropped.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::EdgeOutOfRange(u, v, n));
            }
            if u != v {
                degree[u] += 1;
                degree[v] += 1;
            }
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0; offsets[n]];
        for &(u, v) in edges {
            if u != v {
                targets[cursor[u]] = v;
                cursor[u] += 1;
                targets[cursor[v]] = u;
                cursor[v] += 1;
            }
        }

        // sort + dedup each row, then compact
        let mut compact_offsets = Vec::with_capacity(n + 1);
        compact_offsets.push(0);
        let mut write = 0;
        for u in 0..n {
            let row = &mut targets[offsets[u]..offsets[u + 1]];
            row.sort_unstable();
            let mut last = None;
            for i in offsets[u]..offsets[u + 1] {
                let v = targets[i];
                if last != Some(v) {
                    targets[write] = v;
                    write += 1;
                    last = Some(v);
                }
            }
            compact_offsets.push(write);
        }
        targets.truncate(write);

        Ok(Graph {
            offsets: compact_offsets,
            targets,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Sorted neighbors of `u`; never contains `u`.
    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|u| self.degree(u)).collect()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| u < v)
                .map(move |&v| (u, v))
        })
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[NodeId] {
        &self.targets
    }

    /// `D^{-1/2} (A + S) D^{-1/2}` with `S = I` when `add_self_loops` is set
    /// and `D` the degree matrix of `A + S`. Isolated nodes without self-loops
    /// get an all-zero row.
    pub fn sym_normalized_adjacency(&self, add_self_loops: bool) -> CsrMatrix {
        let n = self.num_nodes();
        let extra = usize::from(add_self_loops);
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|u| {
                let d = self.degree(u) + extra;
                if d == 0 {
                    0.0
                } else {
                    1.0 / (d as f64).sqrt()
                }
            })
            .collect();

        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(self.targets.len() + n * extra);
        let mut values = Vec::with_capacity(self.targets.len() + n * extra);
        offsets.push(0);
        for u in 0..n {
            let mut self_done = !add_self_loops;
            for &v in self.neighbors(u) {
                if !self_done && v > u {
                    indices.push(u);
                    values.push(inv_sqrt[u] * inv_sqrt[u]);
                    self_done = true;
                }
                indices.push(v);
                values.push(inv_sqrt[u] * inv_sqrt[v]);
            }
            if !self_done {
                indices.push(u);
                values.push(inv_sqrt[u] * inv_sqrt[u]);
            }
            offsets.push(indices.len());
        }
        CsrMatrix::from_raw(n, n, offsets, indices, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn duplicates_and_self_links_collapse() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 0), (2, 2)]).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert!(g.neighbors(2).is_empty());
        assert_eq!(g.degrees(), vec![1, 1, 0]);
    }

    #[test]
    fn single_node_no_edges() {
        let g = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.degrees(), vec![0]);
    }

    #[test]
    fn out_of_range_endpoint_is_reported() {
        let err = Graph::from_edges(2, &[(0, 1), (1, 5)]).unwrap_err();
        assert!(matches!(err, Error::EdgeOutOfRange(1, 5, 2)));
    }

    #[test]
    fn neighbor_lists() {
        assert_eq!(triangle().neighbors(0), &[1, 2]);
        let path = Graph::from_edges(3, &[(1, 0), (2, 1)]).unwrap();
        assert_eq!(path.neighbors(1), &[0, 2]);
        let g = Graph::from_edges(4, &[(0, 1)]).unwrap();
        assert!(g.neighbors(3).is_empty());
    }

    #[test]
    fn normalized_adjacency_single_edge() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let plain = g.sym_normalized_adjacency(false).to_dense();
        assert_eq!(plain, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let looped = g.sym_normalized_adjacency(true).to_dense();
        for row in looped {
            for v in row {
                assert!((v - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalized_adjacency_isolated_row_is_zero() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let a = g.sym_normalized_adjacency(false);
        assert_eq!(a.row(2).0.len(), 0);
        // with self loops an isolated node keeps its unit self weight
        let a = g.sym_normalized_adjacency(true).to_dense();
        assert_eq!(a[2], vec![0.0, 0.0, 1.0]);
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (1usize..50).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n), 0..(3 * n)).prop_map(move |edges| {
                Graph::from_edges(n, &edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn canonical_form(g in arb_graph()) {
            for u in 0..g.num_nodes() {
                let row = g.neighbors(u);
                prop_assert!(!row.contains(&u));
                prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
                prop_assert_eq!(row.len(), g.degree(u));
                for &v in row {
                    prop_assert!(g.neighbors(v).binary_search(&u).is_ok());
                }
            }
        }

        #[test]
        fn rebuild_is_identity(g in arb_graph()) {
            let edges: Vec<_> = g.edges().collect();
            prop_assert_eq!(Graph::from_edges(g.num_nodes(), &edges).unwrap(), g);
        }

        #[test]
        fn normalized_entries_match_degrees(g in arb_graph()) {
            let a = g.sym_normalized_adjacency(false);
            for u in 0..g.num_nodes() {
                let (cols, vals) = a.row(u);
                prop_assert_eq!(cols, g.neighbors(u));
                for (&v, &w) in cols.iter().zip(vals) {
                    let expect = 1.0 / ((g.degree(u) * g.degree(v)) as f64).sqrt();
                    prop_assert!((w - expect).abs() < 1e-15);
                }
            }
        }
    }
}
