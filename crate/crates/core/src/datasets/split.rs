use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::labelfeat::Task;

/// Disjoint train / validation / test node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train: Vec<NodeId>,
    pub val: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

impl SplitSpec {
    /// Checks disjointness, range, and that every training node is labeled.
    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        let n = ds.num_nodes();
        let mut owner = vec![0u8; n];
        for (tag, set) in [(1u8, &self.train), (2, &self.val), (3, &self.test)] {
            for &v in set {
                if v >= n {
                    return Err(Error::Input(format!("split node {v} out of range 0..{n}")));
                }
                if owner[v] != 0 {
                    return Err(Error::Input(format!("split node {v} appears twice")));
                }
                owner[v] = tag;
            }
        }
        if let Some(&v) = self.train.iter().find(|&&v| !ds.labels.is_labeled(v)) {
            return Err(Error::Input(format!("training node {v} is unlabeled")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("split file: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fixed-size split: `per_class` training nodes from every class, then
/// `n_test` and `n_val` nodes drawn from the remaining labeled nodes.
pub fn planetoid_split(
    ds: &Dataset,
    per_class: usize,
    n_val: usize,
    n_test: usize,
    seed: u64,
) -> Result<SplitSpec> {
    if ds.task() != Task::Multiclass {
        return Err(Error::Input("per-class splits need a multiclass dataset".into()));
    }
    let mut rng = rng(seed);
    let labels = &ds.labels;
    let mut in_train = vec![false; ds.num_nodes()];
    let mut train = Vec::new();
    for class in 0..labels.num_labels() {
        let mut members: Vec<NodeId> = (0..ds.num_nodes())
            .filter(|&v| labels.is_labeled(v) && labels.class_of(v) == Some(class))
            .collect();
        if members.len() < per_class {
            return Err(Error::Input(format!(
                "class '{}' has {} members, fewer than {per_class}",
                ds.label_names[class],
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for &v in &members[..per_class] {
            in_train[v] = true;
            train.push(v);
        }
    }

    let mut rest: Vec<NodeId> = (0..ds.num_nodes())
        .filter(|&v| labels.is_labeled(v) && !in_train[v])
        .collect();
    if rest.len() < n_val + n_test {
        return Err(Error::Input(format!(
            "{} labeled nodes remain after training selection, need {}",
            rest.len(),
            n_val + n_test
        )));
    }
    rest.shuffle(&mut rng);
    let mut test = rest[..n_test].to_vec();
    let mut val = rest[n_test..n_test + n_val].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitSpec {
        seed,
        train,
        val,
        test,
    })
}

/// Uniform non-stratified split of the labeled nodes. Train and validation
/// sizes are floored; test takes the remainder.
pub fn ratio_split(
    ds: &Dataset,
    train_frac: f64,
    val_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<SplitSpec> {
    let fracs = [train_frac, val_frac, test_frac];
    if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("split fractions {fracs:?} must sum to 1")));
    }
    let mut nodes = ds.labels.labeled_nodes();
    let n = nodes.len();
    let n_train = ((train_frac * n as f64) + 1e-9).floor() as usize;
    let n_val = (((val_frac * n as f64) + 1e-9).floor() as usize).min(n - n_train);
    nodes.shuffle(&mut rng(seed));
    let mut train = nodes[..n_train].to_vec();
    let mut val = nodes[n_train..n_train + n_val].to_vec();
    let mut test = nodes[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitSpec {
        seed,
        train,
        val,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::labelfeat::LabelMatrix;
    use crate::datasets::IdMap;
    use proptest::prelude::*;

    fn dataset(classes: &[usize], task: Task) -> Dataset {
        let n = classes.len();
        let l = classes.iter().max().map_or(1, |m| m + 1);
        let lists: Vec<_> = classes.iter().map(|&c| Some(vec![c])).collect();
        let mut id_map = IdMap::default();
        for v in 0..n {
            id_map.intern(&v.to_string());
        }
        Dataset {
            graph: Graph::from_edges(n, &[]).unwrap(),
            labels: LabelMatrix::new(task, l, &lists).unwrap(),
            id_map,
            label_names: (0..l).map(|j| format!("c{j}")).collect(),
        }
    }

    #[test]
    fn planetoid_counts_and_determinism() {
        let classes: Vec<usize> = (0..700).map(|v| v % 7).collect();
        let ds = dataset(&classes, Task::Multiclass);
        let s = planetoid_split(&ds, 20, 100, 200, 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (140, 100, 200));
        for c in 0..7 {
            assert_eq!(s.train.iter().filter(|&&v| classes[v] == c).count(), 20);
        }
        s.validate(&ds).unwrap();
        assert_eq!(planetoid_split(&ds, 20, 100, 200, 3).unwrap(), s);
        assert_ne!(planetoid_split(&ds, 20, 100, 200, 4).unwrap(), s);
    }

    #[test]
    fn planetoid_small_class_is_named() {
        let classes: Vec<usize> = (0..50).map(|v| usize::from(v == 0)).collect();
        let ds = dataset(&classes, Task::Multiclass);
        let err = planetoid_split(&ds, 2, 1, 1, 0).unwrap_err();
        assert!(err.to_string().contains("c1"), "{err}");
    }

    #[test]
    fn ratio_sizes() {
        let ds = dataset(&[0; 10], Task::Multilabel);
        let s = ratio_split(&ds, 0.7, 0.1, 0.2, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (7, 1, 2));

        let ds = dataset(&vec![0; 32732], Task::Multilabel);
        let s = ratio_split(&ds, 0.7, 0.1, 0.2, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (22912, 3273, 6547));

        assert!(ratio_split(&ds, 0.7, 0.2, 0.2, 1).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let s = SplitSpec {
            seed: u64::MAX,
            train: vec![0, 5],
            val: vec![],
            test: vec![1, 2, 3],
        };
        let text = s.to_json();
        assert!(text.contains("\"seed\""));
        assert_eq!(SplitSpec::from_json(&text).unwrap(), s);
    }

    proptest! {
        #[test]
        fn ratio_partitions_labeled_nodes(n in 1usize..300, seed: u64) {
            let ds = dataset(&vec![0; n], Task::Multilabel);
            let s = ratio_split(&ds, 0.7, 0.1, 0.2, seed).unwrap();
            s.validate(&ds).unwrap();
            prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), n);
        }
    }
}
