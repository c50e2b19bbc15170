//! Synthetic communication networks in which printers and databases look
//! alike structurally and differ only in the roles of their neighbors.
//!
//! Every component holds a ring of users, two linked servers, and equally
//! many printers and databases, all of degree three. Each user also links
//! both servers. A printer links three users; a database links two users
//! and one server. The four roles therefore have pairwise distinct
//! neighbor-label proportions, while printers and databases share their
//! degree profile.

use rand::seq::index::sample;
use rand::Rng;

use super::split::{rng, SplitSpec};
use super::{Dataset, IdMap};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::labelfeat::LabelMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    User = 0,
    Server = 1,
    Database = 2,
    Printer = 3,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::User, Role::Server, Role::Database, Role::Printer];

    pub fn name(self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Server => "server",
            Role::Database => "database",
            Role::Printer => "printer",
        }
    }

    /// Databases and printers are the nodes to classify.
    pub fn is_target(self) -> bool {
        matches!(self, Role::Database | Role::Printer)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub component: Vec<usize>,
    pub role: Vec<Role>,
}

impl SyntheticDataset {
    pub fn num_components(&self) -> usize {
        self.component.iter().max().map_or(0, |c| c + 1)
    }

    pub fn targets_in(&self, components: &[usize]) -> Vec<NodeId> {
        (0..self.role.len())
            .filter(|&v| self.role[v].is_target() && components.contains(&self.component[v]))
            .collect()
    }

    /// Split that tests on the targets of `test_components`.
    ///
    /// Users and servers everywhere are training nodes, so their labels are
    /// visible in every component. Targets of the remaining components are
    /// divided between training and validation with `val_frac`.
    pub fn holdout_split(&self, test_components: &[usize], val_frac: f64, seed: u64) -> SplitSpec {
        let mut r = rng(seed);
        let mut train = Vec::new();
        let mut val = Vec::new();
        let mut test = Vec::new();
        for v in 0..self.role.len() {
            if !self.role[v].is_target() {
                train.push(v);
            } else if test_components.contains(&self.component[v]) {
                test.push(v);
            } else if r.random_bool(val_frac) {
                val.push(v);
            } else {
                train.push(v);
            }
        }
        SplitSpec {
            seed,
            train,
            val,
            test,
        }
    }
}

pub fn make_figure1_synthetic(num_components: usize, seed: u64) -> Result<SyntheticDataset> {
    if num_components < 2 {
        return Err(Error::Input(format!(
            "need at least 2 components, got {num_components}"
        )));
    }
    let mut r = rng(seed);
    let mut role: Vec<Role> = Vec::new();
    let mut component = Vec::new();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();

    for c in 0..num_components {
        let n_users = r.random_range(4..=6);
        let n_targets = r.random_range(2..=3);
        let mut add = |kind: Role, count: usize| -> Vec<NodeId> {
            (0..count)
                .map(|_| {
                    role.push(kind);
                    component.push(c);
                    role.len() - 1
                })
                .collect()
        };
        let users = add(Role::User, n_users);
        let servers = add(Role::Server, 2);
        let databases = add(Role::Database, n_targets);
        let printers = add(Role::Printer, n_targets);

        for i in 0..n_users {
            edges.push((users[i], users[(i + 1) % n_users]));
            edges.push((users[i], servers[0]));
            edges.push((users[i], servers[1]));
        }
        edges.push((servers[0], servers[1]));
        for &p in &printers {
            for k in sample(&mut r, n_users, 3) {
                edges.push((p, users[k]));
            }
        }
        for &d in &databases {
            for k in sample(&mut r, n_users, 2) {
                edges.push((d, users[k]));
            }
            edges.push((d, servers[r.random_range(0..2)]));
        }
    }

    let n = role.len();
    let graph = Graph::from_edges(n, &edges)?;
    let classes: Vec<Option<usize>> = role.iter().map(|&k| Some(k as usize)).collect();
    let labels = LabelMatrix::from_classes(Role::ALL.len(), &classes)?;
    let mut id_map = IdMap::default();
    for v in 0..n {
        id_map.intern(&format!("n{v}"));
    }
    Ok(SyntheticDataset {
        dataset: Dataset {
            graph,
            labels,
            id_map,
            label_names: Role::ALL.iter().map(|k| k.name().to_string()).collect(),
        },
        component,
        role,
    })
}

/// Multilabel planted-partition graph. Each community owns a few labels and
/// its members carry most of them, so a node's labels show up among its
/// direct neighbors.
pub fn make_multilabel_communities(
    num_communities: usize,
    community_size: usize,
    num_labels: usize,
    seed: u64,
) -> Result<Dataset> {
    if num_communities < 2 || community_size < 2 || num_labels < 2 {
        return Err(Error::Input(format!(
            "degenerate generator parameters ({num_communities}, {community_size}, {num_labels})"
        )));
    }
    let mut r = rng(seed);
    let n = num_communities * community_size;
    let owned: Vec<Vec<usize>> = (0..num_communities)
        .map(|_| sample(&mut r, num_labels, 2.min(num_labels)).into_vec())
        .collect();
    let rows: Vec<Option<Vec<usize>>> = (0..n)
        .map(|v| {
            let mut s: Vec<usize> = owned[v / community_size]
                .iter()
                .copied()
                .filter(|_| r.random_bool(0.8))
                .collect();
            if s.is_empty() {
                s.push(owned[v / community_size][0]);
            }
            if r.random_bool(0.05) {
                s.push(r.random_range(0..num_labels));
            }
            Some(s)
        })
        .collect();
    let labels = LabelMatrix::new(crate::labelfeat::Task::Multilabel, num_labels, &rows)?;

    let p_in = 6.0 / community_size as f64;
    let p_out = 0.5 / n as f64;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if u / community_size == v / community_size { p_in } else { p_out };
            if r.random_bool(p.min(1.0)) {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges)?;
    let mut id_map = IdMap::default();
    for v in 0..n {
        id_map.intern(&format!("n{v}"));
    }
    Ok(Dataset {
        graph,
        labels,
        id_map,
        label_names: (0..num_labels).map(|j| format!("g{j}")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appr::{appr_all, ApprConfig};
    use crate::labelfeat::build_label_distribution;

    #[test]
    fn printers_and_databases_share_degree_profiles() {
        let s = make_figure1_synthetic(2, 7).unwrap();
        let g = &s.dataset.graph;
        for c in 0..2 {
            let degs = |kind: Role| -> Vec<usize> {
                let mut d: Vec<usize> = (0..g.num_nodes())
                    .filter(|&v| s.component[v] == c && s.role[v] == kind)
                    .map(|v| g.degree(v))
                    .collect();
                d.sort_unstable();
                d
            };
            assert_eq!(degs(Role::Printer), degs(Role::Database));
            assert!(degs(Role::Printer).iter().all(|&d| d == 3));
        }
    }

    #[test]
    fn label_distributions_differ() {
        let s = make_figure1_synthetic(2, 7).unwrap();
        let ds = &s.dataset;
        let appr = appr_all(&ds.graph, &ApprConfig::new(0.5, 1e-6).unwrap(), 1).unwrap();
        let x = build_label_distribution(&appr, &ds.labels).unwrap();
        let p = s.role.iter().position(|&k| k == Role::Printer).unwrap();
        let d = s.role.iter().position(|&k| k == Role::Database).unwrap();
        assert_ne!(x.x.row(p), x.x.row(d));
        // printers never touch servers directly, databases always do
        assert!(x.x[[d, Role::Server as usize]] > x.x[[p, Role::Server as usize]]);
    }

    #[test]
    fn components_are_disjoint() {
        let s = make_figure1_synthetic(3, 1).unwrap();
        for (u, v) in s.dataset.graph.edges() {
            assert_eq!(s.component[u], s.component[v]);
        }
        assert_eq!(s.num_components(), 3);
    }

    #[test]
    fn holdout_split_is_valid() {
        let s = make_figure1_synthetic(10, 3).unwrap();
        let split = s.holdout_split(&[8, 9], 0.25, 3);
        split.validate(&s.dataset).unwrap();
        assert_eq!(split.test, s.targets_in(&[8, 9]));
        assert!(split.train.iter().all(|&v| !s.role[v].is_target() || s.component[v] < 8));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = make_figure1_synthetic(4, 11).unwrap();
        let b = make_figure1_synthetic(4, 11).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert!(make_figure1_synthetic(1, 0).is_err());
    }
}
