//! Node representations built from training labels.
//!
//! The local label distribution of `v` is row `v` of `Z·Y_train`, where `Z`
//! is the APPR matrix with its diagonal removed. Removing the diagonal keeps
//! a node's own label out of its own representation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::appr::ApprMatrix;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Multiclass,
    Multilabel,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiclass" => Ok(Task::Multiclass),
            "multilabel" => Ok(Task::Multilabel),
            _ => Err(Error::Input(format!("unknown task '{s}'"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Multiclass => "multiclass",
            Task::Multilabel => "multilabel",
        })
    }
}

/// Binary `n × l` label matrix. Unlabeled rows are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    task: Task,
    y: Array2<f64>,
    labeled: Vec<bool>,
}

impl LabelMatrix {
    /// Builds a matrix from per-node label lists; `None` marks an unlabeled
    /// node.
    pub fn new(task: Task, num_labels: usize, labels: &[Option<Vec<usize>>]) -> Result<Self> {
        let n = labels.len();
        let mut y = Array2::zeros((n, num_labels));
        let mut labeled = vec![false; n];
        for (v, entry) in labels.iter().enumerate() {
            let Some(set) = entry else { continue };
            if set.is_empty() {
                return Err(Error::Input(format!("node {v} has an empty label set")));
            }
            if task == Task::Multiclass && set.len() != 1 {
                return Err(Error::Input(format!(
                    "node {v} has {} labels in a multiclass task",
                    set.len()
                )));
            }
            for &j in set {
                if j >= num_labels {
                    return Err(Error::Input(format!("node {v} label {j} >= {num_labels}")));
                }
                y[[v, j]] = 1.0;
            }
            labeled[v] = true;
        }
        Ok(LabelMatrix { task, y, labeled })
    }

    /// Multiclass matrix from one class index per node.
    pub fn from_classes(num_labels: usize, classes: &[Option<usize>]) -> Result<Self> {
        let lists: Vec<_> = classes.iter().map(|c| c.map(|c| vec![c])).collect();
        Self::new(Task::Multiclass, num_labels, &lists)
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn num_nodes(&self) -> usize {
        self.y.nrows()
    }

    pub fn num_labels(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_labeled(&self, v: NodeId) -> bool {
        self.labeled[v]
    }

    pub fn labeled_nodes(&self) -> Vec<NodeId> {
        (0..self.num_nodes()).filter(|&v| self.labeled[v]).collect()
    }

    pub fn labels_of(&self, v: NodeId) -> Vec<usize> {
        self.y
            .row(v)
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// The class of a labeled node in a multiclass task.
    pub fn class_of(&self, v: NodeId) -> Option<usize> {
        self.labels_of(v).first().copied()
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    /// Copy that keeps only the rows of `nodes`; every other row becomes
    /// unlabeled. This is how `Y_train` is formed from the full ground truth.
    pub fn restrict_to(&self, nodes: &[NodeId]) -> LabelMatrix {
        let mut out = LabelMatrix {
            task: self.task,
            y: Array2::zeros(self.y.raw_dim()),
            labeled: vec![false; self.num_nodes()],
        };
        for &v in nodes {
            if self.labeled[v] {
                out.y.row_mut(v).assign(&self.y.row(v));
                out.labeled[v] = true;
            }
        }
        out
    }

    /// Replaces the labels of `v` (or clears them with `None`).
    pub fn set_labels(&mut self, v: NodeId, labels: Option<&[usize]>) -> Result<()> {
        self.y.row_mut(v).fill(0.0);
        self.labeled[v] = false;
        if let Some(set) = labels {
            if set.is_empty() || (self.task == Task::Multiclass && set.len() != 1) {
                return Err(Error::Input(format!("invalid label set for node {v}")));
            }
            for &j in set {
                if j >= self.num_labels() {
                    return Err(Error::Input(format!("label {j} out of range")));
                }
                self.y[[v, j]] = 1.0;
            }
            self.labeled[v] = true;
        }
        Ok(())
    }
}

/// Dense `n × l` matrix of per-label mass.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: Array2<f64>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }

    /// Text dump: `rows cols` header, then one row per line with 17
    /// significant digits per value.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows(), self.cols());
        for row in self.x.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let (rows, cols) = parse_header::<2>(lines.next())
            .map(|h| (h[0], h[1]))
            .ok_or_else(|| Error::Input("feature dump: bad header".into()))?;
        let mut x = Array2::zeros((rows, cols));
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Input(format!("feature dump: missing row {r}")))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Input(format!("feature dump row {r}: {e}")))?;
            if vals.len() != cols {
                return Err(Error::Dimension(format!(
                    "feature dump row {r} has {} values, expected {cols}",
                    vals.len()
                )));
            }
            for (c, v) in vals.into_iter().enumerate() {
                x[[r, c]] = v;
            }
        }
        Ok(FeatureMatrix { x })
    }
}

fn parse_header<const N: usize>(line: Option<&str>) -> Option<[usize; N]> {
    let toks: Vec<usize> = line?
        .split_whitespace()
        .map(|t| t.parse().ok())
        .collect::<Option<_>>()?;
    toks.try_into().ok()
}

/// Classifier input: dense label features or sparse adjacency rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(FeatureMatrix),
    Sparse(CsrMatrix),
}

impl Features {
    pub fn rows(&self) -> usize {
        match self {
            Features::Dense(f) => f.rows(),
            Features::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Features::Dense(f) => f.cols(),
            Features::Sparse(m) => m.cols(),
        }
    }

    /// Copy with every nonzero row scaled to sum to one.
    pub fn row_normalized(&self) -> Features {
        match self {
            Features::Dense(f) => {
                let mut x = f.x.clone();
                for mut row in x.rows_mut() {
                    let sum = row.sum();
                    if sum != 0.0 {
                        row /= sum;
                    }
                }
                Features::Dense(FeatureMatrix { x })
            }
            Features::Sparse(m) => {
                let rows = (0..m.rows()).map(|r| {
                    let (idx, val) = m.row(r);
                    let sum: f64 = val.iter().sum();
                    let scaled = if sum != 0.0 { val.iter().map(|v| v / sum).collect() } else { val.to_vec() };
                    (idx.to_vec(), scaled)
                });
                Features::Sparse(CsrMatrix::from_rows(m.cols(), rows))
            }
        }
    }

    /// Rows `rows` of `X · w`.
    pub fn mul_rows(&self, rows: &[NodeId], w: ArrayView2<f64>) -> Array2<f64> {
        match self {
            Features::Dense(f) => {
                let mut out = Array2::zeros((rows.len(), w.ncols()));
                for (i, &r) in rows.iter().enumerate() {
                    out.row_mut(i).assign(&f.x.row(r).dot(&w));
                }
                out
            }
            Features::Sparse(m) => m
                .mul_dense_rows(rows, w)
                .expect("feature width checked by caller"),
        }
    }

    /// `X[rows]^T · grad`.
    pub fn transpose_mul_rows(&self, rows: &[NodeId], grad: ArrayView2<f64>) -> Array2<f64> {
        match self {
            Features::Dense(f) => {
                let mut out = Array2::zeros((f.cols(), grad.ncols()));
                for (i, &r) in rows.iter().enumerate() {
                    for (c, &xv) in f.x.row(r).iter().enumerate() {
                        if xv != 0.0 {
                            out.row_mut(c).scaled_add(xv, &grad.row(i));
                        }
                    }
                }
                out
            }
            Features::Sparse(m) => m.transpose_mul_dense_rows(rows, grad),
        }
    }

    /// Dense text dump, or for sparse features a `rows cols nnz` header
    /// followed by `row col value` triples.
    pub fn to_text(&self) -> String {
        match self {
            Features::Dense(f) => f.to_text(),
            Features::Sparse(m) => {
                let mut out = format!("{} {} {}\n", m.rows(), m.cols(), m.nnz());
                for r in 0..m.rows() {
                    let (idx, val) = m.row(r);
                    for (c, v) in idx.iter().zip(val) {
                        writeln!(out, "{r} {c} {v:.16e}").unwrap();
                    }
                }
                out
            }
        }
    }

    /// Parses either dump format, recognised by the header width.
    pub fn from_text(text: &str) -> Result<Self> {
        let first = text.lines().next();
        if let Some([rows, cols, nnz]) = parse_header::<3>(first) {
            let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
            for (k, line) in text.lines().skip(1).take(nnz).enumerate() {
                let t: Vec<&str> = line.split_whitespace().collect();
                let parsed = (t.len() == 3)
                    .then(|| Some((t[0].parse::<usize>().ok()?, t[1].parse::<usize>().ok()?, t[2].parse::<f64>().ok()?)))
                    .flatten();
                let (r, c, v) = parsed
                    .filter(|&(r, c, _)| r < rows && c < cols)
                    .ok_or_else(|| Error::Input(format!("sparse dump entry {k}: '{line}'")))?;
                entries[r].push((c, v));
            }
            let mut out_rows = Vec::with_capacity(rows);
            for mut row in entries {
                row.sort_by_key(|e| e.0);
                row.dedup_by_key(|e| e.0);
                out_rows.push(row.into_iter().unzip());
            }
            return Ok(Features::Sparse(CsrMatrix::from_rows(cols, out_rows)));
        }
        FeatureMatrix::from_text(text).map(Features::Dense)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Local label distribution `X = Z·Y_train`, `Z` the APPR matrix with its
/// diagonal dropped. Rows are not renormalized.
pub fn build_label_distribution(appr: &ApprMatrix, labels: &LabelMatrix) -> Result<FeatureMatrix> {
    let n = appr.num_nodes();
    if labels.num_nodes() != n {
        return Err(Error::Dimension(format!(
            "APPR has {n} rows but label matrix has {}",
            labels.num_nodes()
        )));
    }
    let y = labels.matrix();
    let mut x = Array2::zeros((n, labels.num_labels()));
    for v in 0..n {
        let (idx, val) = appr.row(v);
        let mut dst = x.row_mut(v);
        for (&u, &mass) in idx.iter().zip(val) {
            if u != v && labels.is_labeled(u) {
                dst.scaled_add(mass, &y.row(u));
            }
        }
    }
    Ok(FeatureMatrix { x })
}

/// Binary adjacency rows as sparse features.
pub fn adjacency_features(g: &Graph) -> CsrMatrix {
    let n = g.num_nodes();
    CsrMatrix::from_raw(
        n,
        n,
        g.offsets().to_vec(),
        g.targets().to_vec(),
        vec![1.0; g.targets().len()],
    )
}

/// One propagation step `Â·Y_train` over the normalized adjacency without
/// self-loops.
pub fn label_conv_features(g: &Graph, labels: &LabelMatrix) -> Result<FeatureMatrix> {
    if labels.num_nodes() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "graph has {} nodes but label matrix has {}",
            g.num_nodes(),
            labels.num_nodes()
        )));
    }
    let a_hat = g.sym_normalized_adjacency(false);
    let x = a_hat.mul_dense(labels.matrix())?;
    Ok(FeatureMatrix { x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appr::{appr_all, exact_ppr, ApprConfig};

    fn star() -> Graph {
        Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap()
    }

    /// Dense oracle APPR matrix built from the power-iteration solver.
    fn oracle_matrix(g: &Graph, alpha: f64) -> ApprMatrix {
        let n = g.num_nodes();
        let rows = (0..n).map(|s| {
            let pi = exact_ppr(g, s, alpha).unwrap();
            let idx: Vec<usize> = (0..n).filter(|&u| pi[u] != 0.0).collect();
            let val = idx.iter().map(|&u| pi[u]).collect();
            (idx, val)
        });
        ApprMatrix::new(CsrMatrix::from_rows(n, rows), ApprConfig::new(alpha, 1e-9).unwrap()).unwrap()
    }

    #[test]
    fn star_center_sees_leaf_labels_only() {
        let g = star();
        let appr = oracle_matrix(&g, 0.3);
        // leaves 1,2 -> class 0, leaf 3 -> class 1, leaf 4 unlabeled; center labeled 1
        let labels = LabelMatrix::from_classes(2, &[Some(1), Some(0), Some(0), Some(1), None]).unwrap();
        let x = build_label_distribution(&appr, &labels).unwrap();
        let expect0 = appr.matrix().get(0, 1) + appr.matrix().get(0, 2);
        let expect1 = appr.matrix().get(0, 3);
        assert!((x.x[[0, 0]] - expect0).abs() < 1e-15);
        assert!((x.x[[0, 1]] - expect1).abs() < 1e-15);

        let mut flipped = labels.clone();
        flipped.set_labels(0, Some(&[0])).unwrap();
        let y = build_label_distribution(&appr, &flipped).unwrap();
        assert_eq!(x.x.row(0), y.x.row(0));
    }

    #[test]
    fn unlabeled_neighborhood_gives_zero_row() {
        let g = star();
        let appr = appr_all(&g, &ApprConfig::new(0.5, 1e-6).unwrap(), 1).unwrap();
        let labels = LabelMatrix::from_classes(2, &[Some(0), None, None, None, None]).unwrap();
        let x = build_label_distribution(&appr, &labels).unwrap();
        assert!(x.x.row(0).iter().all(|&v| v == 0.0));
        assert!(x.x.row(1)[0] > 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let appr = appr_all(&star(), &ApprConfig::new(0.5, 1e-6).unwrap(), 1).unwrap();
        let labels = LabelMatrix::from_classes(2, &[Some(0), None]).unwrap();
        assert!(matches!(
            build_label_distribution(&appr, &labels),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn adjacency_rows() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let a = adjacency_features(&g).to_dense();
        assert_eq!(a[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(a[2], vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn label_conv_two_nodes() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let labels = LabelMatrix::from_classes(1, &[None, Some(0)]).unwrap();
        let x = label_conv_features(&g, &labels).unwrap();
        assert_eq!(x.x[[0, 0]], 1.0);
        assert_eq!(x.x[[1, 0]], 0.0);

        let empty = LabelMatrix::from_classes(1, &[None, None]).unwrap();
        let x = label_conv_features(&g, &empty).unwrap();
        assert!(x.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn label_matrix_validation() {
        assert!(LabelMatrix::new(Task::Multiclass, 2, &[Some(vec![0, 1])]).is_err());
        assert!(LabelMatrix::new(Task::Multilabel, 2, &[Some(vec![])]).is_err());
        assert!(LabelMatrix::new(Task::Multilabel, 2, &[Some(vec![2])]).is_err());
        let y = LabelMatrix::new(Task::Multilabel, 2, &[Some(vec![0, 1]), None]).unwrap();
        assert_eq!(y.labels_of(0), vec![0, 1]);
        assert!(!y.is_labeled(1));
        let t = y.restrict_to(&[1]);
        assert!(t.labeled_nodes().is_empty());
    }

    #[test]
    fn text_dumps_roundtrip() {
        let f = FeatureMatrix {
            x: ndarray::array![[0.1, 1.0 / 3.0], [0.0, 1e-300]],
        };
        let text = f.to_text();
        assert!(text.starts_with("2 2\n"));
        assert_eq!(FeatureMatrix::from_text(&text).unwrap(), f);

        let sparse = Features::Sparse(adjacency_features(&star()));
        assert_eq!(Features::from_text(&sparse.to_text()).unwrap(), sparse);
    }
}
