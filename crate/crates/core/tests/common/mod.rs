#![allow(dead_code, clippy::needless_range_loop)]

pub mod gradcheck;

use labeldist::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph: random spanning tree plus extra random edges.
pub fn random_connected(n: usize, extra: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((v, rng.random_range(0..v)));
    }
    for _ in 0..extra {
        edges.push((rng.random_range(0..n), rng.random_range(0..n)));
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Erdos-Renyi style graph, possibly disconnected with isolated nodes.
pub fn random_graph(n: usize, edges: usize, rng: &mut ChaCha8Rng) -> Graph {
    let pairs: Vec<_> = (0..edges)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    Graph::from_edges(n, &pairs).unwrap()
}

/// Dense PPR by Gaussian elimination on `(I - (1-a)P^T) pi = a e_seed`,
/// independent of the power-iteration oracle in the library.
pub fn ppr_by_solve(g: &Graph, seed: usize, alpha: f64) -> Vec<f64> {
    let n = g.num_nodes();
    let a = 2.0 * alpha / (1.0 + alpha);
    // M = I - (1-a) * T^T, T the transition matrix with isolated mass sent to the seed
    let mut m = vec![vec![0.0; n + 1]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for u in 0..n {
        let nb = g.neighbors(u);
        if nb.is_empty() {
            m[seed][u] -= 1.0 - a;
        } else {
            for &v in nb {
                m[v][u] -= (1.0 - a) / nb.len() as f64;
            }
        }
    }
    m[seed][n] = a;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        for k in col..=n {
            m[col][k] /= p;
        }
        for r in 0..n {
            if r != col && m[r][col] != 0.0 {
                let f = m[r][col];
                for k in col..=n {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    m.iter().map(|row| row[n]).collect()
}
