//! Approximate personalized PageRank by local push.
//!
//! Each push at `u` moves `2α/(1+α)·r(u)` into the solution and spreads
//! `(1-α)/(1+α)·r(u)` evenly across the neighbors' residuals. Pushing stops
//! once every node satisfies `r(u) < ε·d(u)`. The fixed point is ordinary
//! personalized PageRank on the random walk `D^{-1}A` with teleport
//! probability `2α/(1+α)`, which [`exact_ppr`] computes by power iteration.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::sparse::CsrMatrix;

const MAGIC: &[u8; 5] = b"APPR1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApprConfig {
    pub alpha: f64,
    pub epsilon: f64,
}

impl ApprConfig {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        let cfg = ApprConfig { alpha, epsilon };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Input(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Input(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Teleport probability of the equivalent non-lazy walk.
    pub fn effective_teleport(&self) -> f64 {
        teleport(self.alpha)
    }
}

fn teleport(alpha: f64) -> f64 {
    2.0 * alpha / (1.0 + alpha)
}

/// Sparse vector with sorted indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    pub indices: Vec<NodeId>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn get(&self, i: NodeId) -> f64 {
        self.indices
            .binary_search(&i)
            .map(|k| self.values[k])
            .unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Work counters of a single push run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PushStats {
    pub pushes: usize,
    /// Sum of `d(u)` over pushed nodes: the number of residual updates.
    pub work: usize,
    /// Sum of `r(u)` over pushed nodes.
    pub pushed_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApprVector {
    pub seed: NodeId,
    pub p: SparseVec,
    pub r: SparseVec,
    pub stats: PushStats,
}

/// Reusable dense scratch space for repeated push runs on one graph.
struct PushWorkspace {
    p: Vec<f64>,
    r: Vec<f64>,
    touched: Vec<NodeId>,
    seen: Vec<bool>,
    queued: Vec<bool>,
    queue: VecDeque<NodeId>,
}

impl PushWorkspace {
    fn new(n: usize) -> Self {
        PushWorkspace {
            p: vec![0.0; n],
            r: vec![0.0; n],
            touched: Vec::new(),
            seen: vec![false; n],
            queued: vec![false; n],
            queue: VecDeque::new(),
        }
    }

    #[inline]
    fn touch(&mut self, u: NodeId) {
        if !self.seen[u] {
            self.seen[u] = true;
            self.touched.push(u);
        }
    }

    fn run(&mut self, g: &Graph, seed: NodeId, cfg: &ApprConfig) -> ApprVector {
        let mut stats = PushStats::default();

        if g.degree(seed) == 0 {
            // The walk can never leave an isolated seed.
            return ApprVector {
                seed,
                p: SparseVec {
                    indices: vec![seed],
                    values: vec![1.0],
                },
                r: SparseVec::default(),
                stats,
            };
        }

        let keep = teleport(cfg.alpha);
        let spread = (1.0 - cfg.alpha) / (1.0 + cfg.alpha);
        let eps = cfg.epsilon;

        self.touch(seed);
        self.r[seed] = 1.0;
        if self.r[seed] >= eps * g.degree(seed) as f64 {
            self.queued[seed] = true;
            self.queue.push_back(seed);
        }

        while let Some(u) = self.queue.pop_front() {
            self.queued[u] = false;
            let ru = self.r[u];
            let du = g.degree(u);
            debug_assert!(ru >= eps * du as f64);

            self.p[u] += keep * ru;
            self.r[u] = 0.0;
            let share = spread * ru / du as f64;
            for &v in g.neighbors(u) {
                self.touch(v);
                self.r[v] += share;
                if !self.queued[v] && self.r[v] >= eps * g.degree(v) as f64 {
                    self.queued[v] = true;
                    self.queue.push_back(v);
                }
            }
            debug_assert!(self.p[u] >= 0.0 && self.r[u] >= 0.0);

            stats.pushes += 1;
            stats.work += du;
            stats.pushed_mass += ru;
        }

        self.touched.sort_unstable();
        let mut p = SparseVec::default();
        let mut r = SparseVec::default();
        for &u in &self.touched {
            if self.p[u] != 0.0 {
                p.indices.push(u);
                p.values.push(self.p[u]);
            }
            if self.r[u] != 0.0 {
                r.indices.push(u);
                r.values.push(self.r[u]);
            }
            self.p[u] = 0.0;
            self.r[u] = 0.0;
            self.seen[u] = false;
        }
        self.touched.clear();

        ApprVector { seed, p, r, stats }
    }
}

/// Runs push from the single-node start vector `e_seed`.
///
/// Nodes are processed in FIFO order of crossing the `ε·d(u)` threshold, so
/// the result is a deterministic function of `(g, seed, cfg)`.
pub fn approximate_ppr(g: &Graph, seed: NodeId, cfg: &ApprConfig) -> ApprVector {
    assert!(seed < g.num_nodes(), "seed {seed} out of range");
    PushWorkspace::new(g.num_nodes()).run(g, seed, cfg)
}

/// Exact personalized PageRank by power iteration on
/// `π = α'·e_seed + (1-α')·π·D^{-1}A` with `α' = 2α/(1+α)`.
///
/// Walk mass sitting on an isolated node returns to the seed.
pub fn exact_ppr(g: &Graph, seed: NodeId, alpha: f64) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-14;
    const MAX_ITERS: usize = 1_000_000;

    let n = g.num_nodes();
    assert!(seed < n, "seed {seed} out of range");
    let a = teleport(alpha);
    let mut pi = vec![0.0; n];
    pi[seed] = 1.0;
    let mut next = vec![0.0; n];

    for _ in 0..MAX_ITERS {
        next.iter_mut().for_each(|x| *x = 0.0);
        next[seed] += a;
        for (u, &pu) in pi.iter().enumerate() {
            let mass = (1.0 - a) * pu;
            if mass == 0.0 {
                continue;
            }
            let nbrs = g.neighbors(u);
            if nbrs.is_empty() {
                next[seed] += mass;
            } else {
                let share = mass / nbrs.len() as f64;
                for &v in nbrs {
                    next[v] += share;
                }
            }
        }
        let delta: f64 = pi.iter().zip(&next).map(|(x, y)| (x - y).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if delta < TOL {
            return Ok(pi);
        }
    }
    Err(Error::Numerical(format!(
        "power iteration from seed {seed} did not converge"
    )))
}

/// Stacked APPR solutions, row `i` seeded at node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApprMatrix {
    rows: CsrMatrix,
    config: ApprConfig,
}

impl ApprMatrix {
    pub fn new(rows: CsrMatrix, config: ApprConfig) -> Result<Self> {
        if rows.rows() != rows.cols() {
            return Err(Error::Dimension(format!(
                "APPR matrix must be square, got {}x{}",
                rows.rows(),
                rows.cols()
            )));
        }
        Ok(ApprMatrix { rows, config })
    }

    pub fn config(&self) -> ApprConfig {
        self.config
    }

    pub fn num_nodes(&self) -> usize {
        self.rows.rows()
    }

    pub fn nnz(&self) -> usize {
        self.rows.nnz()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.rows
    }

    pub fn row(&self, seed: NodeId) -> (&[NodeId], &[f64]) {
        self.rows.row(seed)
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.num_nodes() as u64).to_le_bytes())?;
        w.write_all(&self.config.alpha.to_le_bytes())?;
        w.write_all(&self.config.epsilon.to_le_bytes())?;
        for i in 0..self.num_nodes() {
            let (idx, val) = self.rows.row(i);
            w.write_all(&(idx.len() as u64).to_le_bytes())?;
            for &c in idx {
                w.write_all(&(c as u64).to_le_bytes())?;
            }
            for &v in val {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let bad = |msg: &str| Error::Input(format!("APPR file: {msg}"));
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut word).map_err(|_| bad("truncated"))?;
            Ok(word)
        };
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let alpha = f64::from_le_bytes(next(&mut r)?);
        let epsilon = f64::from_le_bytes(next(&mut r)?);
        let config = ApprConfig::new(alpha, epsilon)?;

        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let count = u64::from_le_bytes(next(&mut r)?) as usize;
            if count > n {
                return Err(bad("row longer than node count"));
            }
            let mut idx = Vec::with_capacity(count);
            for _ in 0..count {
                let c = u64::from_le_bytes(next(&mut r)?) as usize;
                if c >= n || idx.last().is_some_and(|&l| l >= c) {
                    return Err(bad("column indices out of range or unsorted"));
                }
                idx.push(c);
            }
            let mut val = Vec::with_capacity(count);
            for _ in 0..count {
                val.push(f64::from_le_bytes(next(&mut r)?));
            }
            rows.push((idx, val));
        }
        ApprMatrix::new(CsrMatrix::from_rows(n, rows), config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f))
    }
}

/// Computes the APPR row of every node on a pool of `threads` workers
/// (`0` = rayon default). Rows are independent of the worker count.
pub fn appr_all(g: &Graph, cfg: &ApprConfig, threads: usize) -> Result<ApprMatrix> {
    cfg.validate()?;
    let n = g.num_nodes();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    let rows: Vec<(Vec<usize>, Vec<f64>)> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map_init(
                || PushWorkspace::new(n),
                |ws, seed| {
                    let v = ws.run(g, seed, cfg);
                    (v.p.indices, v.p.values)
                },
            )
            .collect()
    });
    ApprMatrix::new(CsrMatrix::from_rows(n, rows), *cfg)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn alpha_one_keeps_all_mass_at_seed() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let cfg = ApprConfig::new(1.0, 1e-6).unwrap();
        for s in 0..5 {
            let v = approximate_ppr(&g, s, &cfg);
            assert_eq!(v.p.indices, vec![s]);
            assert_eq!(v.p.values, vec![1.0]);
            assert!(v.r.is_empty());
        }
    }

    #[test]
    fn isolated_seed() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let v = approximate_ppr(&g, 2, &ApprConfig::new(0.3, 1e-4).unwrap());
        assert_eq!(v.p.to_dense(3), vec![0.0, 0.0, 1.0]);
        assert!(v.r.is_empty());
        assert_eq!(exact_ppr(&g, 2, 0.3).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn oracle_small_cases() {
        let single = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(exact_ppr(&single, 0, 0.4).unwrap(), vec![1.0]);

        let edge = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(exact_ppr(&edge, 0, 1.0).unwrap(), vec![1.0, 0.0]);

        // alpha' = 2/3: pi(0) = 1/(2 - a') = 3/4, pi(1) = (1 - a')/(2 - a') = 1/4
        let pi = exact_ppr(&edge, 0, 0.5).unwrap();
        assert!((pi[0] - 0.75).abs() < 1e-13);
        assert!((pi[1] - 0.25).abs() < 1e-13);
    }

    #[test]
    fn triangle_push_tracks_oracle() {
        let g = triangle();
        let cfg = ApprConfig::new(0.5, 1e-8).unwrap();
        let v = approximate_ppr(&g, 0, &cfg);
        let exact = exact_ppr(&g, 0, 0.5).unwrap();
        // 3-cycle, a' = 2/3, solved by matrix inverse: pi = (5/7, 1/7, 1/7)
        assert!((exact[0] - 5.0 / 7.0).abs() < 1e-13);
        assert!((exact[1] - 1.0 / 7.0).abs() < 1e-13);
        let r_total = v.r.sum();
        for u in 0..3 {
            let gap = exact[u] - v.p.get(u);
            assert!(gap >= -1e-15 && gap <= r_total + 1e-15);
        }
        assert!(r_total < 3.0 * 2.0 * 1e-8);
        assert!((v.p.sum() + r_total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn appr_all_triangle_is_symmetric() {
        let m = appr_all(&triangle(), &ApprConfig::new(0.5, 1e-6).unwrap(), 1).unwrap();
        let d = m.matrix().to_dense();
        let sorted = |mut r: Vec<f64>| {
            r.sort_by(f64::total_cmp);
            r
        };
        for i in 0..3 {
            // the seed keeps the largest mass; the rest is the same multiset
            assert_eq!(sorted(d[i].clone()), sorted(d[0].clone()));
            assert!(d[i][i] > 0.7);
        }
    }

    #[test]
    fn binary_roundtrip() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 0), (4, 5)]).unwrap();
        let m = appr_all(&g, &ApprConfig::new(0.2, 1e-4).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..5], b"APPR1");
        let back = ApprMatrix::read_from(&buf[..]).unwrap();
        assert_eq!(back, m);
        assert!(ApprMatrix::read_from(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ApprConfig::new(0.0, 1e-5).is_err());
        assert!(ApprConfig::new(1.5, 1e-5).is_err());
        assert!(ApprConfig::new(0.5, 0.0).is_err());
        assert!(ApprConfig::new(1.0, 1e-5).is_ok());
    }
}
