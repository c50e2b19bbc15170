//! Fixtures shared by the benchmarks.

use labeldist::Graph;

/// Ring lattice with `k` neighbors on each side plus deterministic chords,
/// a cheap stand-in for a sparse citation graph.
pub fn lattice_with_chords(n: usize, k: usize) -> Graph {
    let mut edges = Vec::with_capacity(n * (k + 1));
    for u in 0..n {
        for j in 1..=k {
            edges.push((u, (u + j) % n));
        }
        edges.push((u, (u * 7919 + 13) % n));
    }
    Graph::from_edges(n, &edges).expect("endpoints in range")
}
