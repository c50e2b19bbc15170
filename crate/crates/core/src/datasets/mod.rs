//! Dataset loading, split generation and synthetic generators.

mod split;
mod synth;

pub use split::{planetoid_split, ratio_split, SplitSpec};
pub use synth::{make_figure1_synthetic, make_multilabel_communities, Role, SyntheticDataset};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::labelfeat::{LabelMatrix, Task};

/// Bijection between external string ids and dense node ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMap {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl IdMap {
    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    /// Returns the id of `name`, assigning the next dense id if new.
    pub fn intern(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    /// Full ground truth.
    pub labels: LabelMatrix,
    pub id_map: IdMap,
    pub label_names: Vec<String>,
}

impl Dataset {
    pub fn task(&self) -> Task {
        self.labels.task()
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Content hash of the graph structure, used to key on-disk caches.
    pub fn graph_digest(&self) -> String {
        let mut h = Sha256::new();
        for &o in self.graph.offsets() {
            h.update((o as u64).to_le_bytes());
        }
        for &t in self.graph.targets() {
            h.update((t as u64).to_le_bytes());
        }
        h.finalize().iter().take(12).fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
    }

    /// Writes the generic `edges` / `labels` TSV pair.
    pub fn write_edge_label_tsv(&self, edges_path: &Path, labels_path: &Path) -> Result<()> {
        let mut edges = String::new();
        for (u, v) in self.graph.edges() {
            writeln!(edges, "{}\t{}", self.id_map.name(u), self.id_map.name(v)).unwrap();
        }
        let mut labels = String::new();
        for v in 0..self.num_nodes() {
            if !self.labels.is_labeled(v) {
                continue;
            }
            let names: Vec<&str> = self
                .labels
                .labels_of(v)
                .into_iter()
                .map(|j| self.label_names[j].as_str())
                .collect();
            writeln!(labels, "{}\t{}", self.id_map.name(v), names.join(",")).unwrap();
        }
        fs::write(edges_path, edges).map_err(|e| Error::io(edges_path, e))?;
        fs::write(labels_path, labels).map_err(|e| Error::io(labels_path, e))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn intern_label(names: &mut Vec<String>, label: &str) -> usize {
    match names.iter().position(|l| l == label) {
        Some(j) => j,
        None => {
            names.push(label.to_string());
            names.len() - 1
        }
    }
}

/// Loads a citation benchmark in `content` / `cites` form.
///
/// Node ids follow the order of the content file. Attribute columns are
/// ignored. Citation lines naming an id missing from the content file are
/// skipped.
pub fn load_content_cites(content_path: &Path, cites_path: &Path) -> Result<Dataset> {
    let content = read(content_path)?;
    let mut id_map = IdMap::default();
    let mut label_names = Vec::new();
    let mut classes = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 2 {
            return Err(parse_err(content_path, i + 1, "expected '<id> ... <class>'"));
        }
        if id_map.get(toks[0]).is_some() {
            return Err(parse_err(content_path, i + 1, format!("duplicate id '{}'", toks[0])));
        }
        id_map.intern(toks[0]);
        classes.push(Some(intern_label(&mut label_names, toks[toks.len() - 1])));
    }

    let cites = read(cites_path)?;
    let mut edges = Vec::new();
    let mut skipped = 0usize;
    for (i, line) in cites.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => continue,
            [a, b] => match (id_map.get(a), id_map.get(b)) {
                (Some(u), Some(v)) => edges.push((u, v)),
                _ => skipped += 1,
            },
            _ => return Err(parse_err(cites_path, i + 1, "expected '<cited> <citing>'")),
        }
    }
    if skipped > 0 {
        log::warn!(
            "{}: skipped {skipped} citation lines with unknown ids",
            cites_path.display()
        );
    }
    if label_names.is_empty() {
        return Err(Error::Input(format!("{}: no classes", content_path.display())));
    }

    let graph = Graph::from_edges(id_map.len(), &edges)?;
    let labels = LabelMatrix::from_classes(label_names.len(), &classes)?;
    Ok(Dataset {
        graph,
        labels,
        id_map,
        label_names,
    })
}

/// Loads the generic edge list / label list pair.
///
/// Ids are numbered in order of first appearance in the labels file, then
/// the edges file. Labels are comma separated; nodes without a label line
/// stay unlabeled.
pub fn load_edge_label_tsv(edges_path: &Path, labels_path: &Path, task: Task) -> Result<Dataset> {
    let labels_text = read(labels_path)?;
    let mut id_map = IdMap::default();
    let mut label_names = Vec::new();
    let mut assigned: Vec<Option<Vec<usize>>> = Vec::new();
    for (i, line) in labels_text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (id, field) = match toks.as_slice() {
            [] => continue,
            [id, field] => (*id, *field),
            _ => return Err(parse_err(labels_path, i + 1, "expected '<id> <label>[,<label>...]'")),
        };
        let mut set: Vec<usize> = field
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|l| intern_label(&mut label_names, l))
            .collect();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() {
            return Err(parse_err(labels_path, i + 1, "empty label list"));
        }
        if task == Task::Multiclass && set.len() > 1 {
            return Err(parse_err(labels_path, i + 1, "multiple labels in a multiclass task"));
        }
        let v = id_map.intern(id);
        if v < assigned.len() {
            return Err(parse_err(labels_path, i + 1, format!("duplicate id '{id}'")));
        }
        assigned.push(Some(set));
    }

    let edges_text = read(edges_path)?;
    let mut edges = Vec::new();
    for (i, line) in edges_text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => continue,
            [a, b] => {
                let u = id_map.intern(a);
                let v = id_map.intern(b);
                edges.push((u, v));
            }
            _ => return Err(parse_err(edges_path, i + 1, "expected '<src> <dst>'")),
        }
    }

    if label_names.is_empty() {
        return Err(Error::Input(format!("{}: no classes", labels_path.display())));
    }
    assigned.resize(id_map.len(), None);
    let graph = Graph::from_edges(id_map.len(), &edges)?;
    let labels = LabelMatrix::new(task, label_names.len(), &assigned)?;
    Ok(Dataset {
        graph,
        labels,
        id_map,
        label_names,
    })
}
