use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::metrics::{accuracy, macro_f1, micro_f1};
use super::report::{EvalReport, ReportRow};
use crate::appr::{appr_all, ApprConfig, ApprMatrix};
use crate::datasets::{planetoid_split, ratio_split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::labelfeat::{adjacency_features, build_label_distribution, label_conv_features, Features, Task};
use crate::nn::{train, train_emb_augmented, MlpModel, TrainConfig, TrainLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Local label distribution features.
    Ld,
    /// Label distribution plus a learned structural embedding.
    LdEmb,
    /// Raw adjacency rows.
    Adj,
    /// One normalized-adjacency propagation of the training labels.
    LabelConv,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ld => "ld",
            Method::LdEmb => "ld+emb",
            Method::Adj => "adj",
            Method::LabelConv => "labelconv",
        }
    }

    pub fn uses_alpha(self) -> bool {
        matches!(self, Method::Ld | Method::LdEmb)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ld" => Ok(Method::Ld),
            "ld+emb" | "ldemb" => Ok(Method::LdEmb),
            "adj" => Ok(Method::Adj),
            "labelconv" => Ok(Method::LabelConv),
            _ => Err(Error::Input(format!("unknown method '{s}'"))),
        }
    }
}

pub type SplitFn = dyn Fn(&Dataset, u64) -> Result<SplitSpec> + Send + Sync;

#[derive(Clone)]
pub enum SplitStrategy {
    /// Fixed count per class plus fixed validation / test sizes.
    Planetoid {
        per_class: usize,
        n_val: usize,
        n_test: usize,
    },
    /// Fractions of the labeled nodes.
    Ratio { train: f64, val: f64, test: f64 },
    Custom(Arc<SplitFn>),
}

impl SplitStrategy {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Multiclass => SplitStrategy::Planetoid {
                per_class: 20,
                n_val: 500,
                n_test: 1000,
            },
            Task::Multilabel => SplitStrategy::Ratio {
                train: 0.7,
                val: 0.1,
                test: 0.2,
            },
        }
    }

    pub fn make(&self, ds: &Dataset, seed: u64) -> Result<SplitSpec> {
        match self {
            SplitStrategy::Planetoid {
                per_class,
                n_val,
                n_test,
            } => planetoid_split(ds, *per_class, *n_val, *n_test, seed),
            SplitStrategy::Ratio { train, val, test } => ratio_split(ds, *train, *val, *test, seed),
            SplitStrategy::Custom(f) => f(ds, seed),
        }
    }
}

impl std::fmt::Debug for SplitStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitStrategy::Planetoid {
                per_class,
                n_val,
                n_test,
            } => write!(f, "Planetoid({per_class}, {n_val}, {n_test})"),
            SplitStrategy::Ratio { train, val, test } => write!(f, "Ratio({train}, {val}, {test})"),
            SplitStrategy::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub train: TrainConfig,
    pub emb_dim: usize,
    /// Worker threads for APPR and concurrent cells; 0 = all cores.
    pub threads: usize,
    pub split: SplitStrategy,
    /// Directory for cached APPR matrices.
    pub cache_dir: Option<PathBuf>,
    /// Record wall-clock time per cell; otherwise `wall_ms` is 0 so reports
    /// are reproducible byte for byte.
    pub record_timing: bool,
    /// Scale classifier input rows to unit sum before training.
    pub row_normalize: bool,
}

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        ExperimentConfig {
            epsilon: 1e-5,
            train: TrainConfig::default(),
            emb_dim: 16,
            threads: 0,
            split: SplitStrategy::for_task(task),
            cache_dir: None,
            record_timing: false,
            row_normalize: true,
        }
    }
}

fn load_or_compute_appr(ds: &Dataset, cfg: &ApprConfig, exp: &ExperimentConfig) -> Result<ApprMatrix> {
    let Some(dir) = &exp.cache_dir else {
        return appr_all(&ds.graph, cfg, exp.threads);
    };
    let path = dir.join(format!(
        "appr-{}-a{}-e{}.bin",
        ds.graph_digest(),
        cfg.alpha,
        cfg.epsilon
    ));
    if path.exists() {
        if let Ok(m) = ApprMatrix::load(&path) {
            if m.config() == *cfg && m.num_nodes() == ds.num_nodes() {
                return Ok(m);
            }
        }
        log::warn!("ignoring stale APPR cache {}", path.display());
    }
    let m = appr_all(&ds.graph, cfg, exp.threads)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    m.save(&path)?;
    Ok(m)
}

struct Cell<'a> {
    method: Method,
    alpha: Option<f64>,
    seed: u64,
    split: &'a SplitSpec,
    appr: Option<&'a ApprMatrix>,
}

/// Result of one train/evaluate cell.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: ReportRow,
    pub log: TrainLog,
    /// Trained classifier; `None` for the embedding-augmented variant.
    pub model: Option<MlpModel>,
}

/// Classifier input for `method`, using only the labels of `train` nodes.
pub fn method_features(
    ds: &Dataset,
    method: Method,
    train: &[NodeId],
    appr: Option<&ApprMatrix>,
) -> Result<Features> {
    if method != Method::Adj && train.is_empty() {
        return Err(Error::Input("the training set is empty, no labels to distribute".into()));
    }
    let y_train = ds.labels.restrict_to(train);
    Ok(match method {
        Method::Ld | Method::LdEmb => {
            let appr = appr.ok_or_else(|| Error::Input(format!("method {} needs an APPR matrix", method.name())))?;
            Features::Dense(build_label_distribution(appr, &y_train)?)
        }
        Method::Adj => Features::Sparse(adjacency_features(&ds.graph)),
        Method::LabelConv => Features::Dense(label_conv_features(&ds.graph, &y_train)?),
    })
}

/// Trains on precomputed raw features and scores the split. Row
/// normalization from `exp` is applied here.
pub fn train_and_score(
    ds: &Dataset,
    method: Method,
    alpha: Option<f64>,
    split_seed: u64,
    split: &SplitSpec,
    features: Features,
    exp: &ExperimentConfig,
) -> Result<CellOutcome> {
    let start = Instant::now();
    if features.rows() != ds.num_nodes() {
        return Err(Error::Dimension(format!(
            "features have {} rows, dataset has {} nodes",
            features.rows(),
            ds.num_nodes()
        )));
    }
    let features = if exp.row_normalize { features.row_normalized() } else { features };
    let mut tc = exp.train.clone();
    tc.rng_seed = tc.rng_seed.wrapping_add(split_seed);
    if method == Method::LabelConv {
        // output layer directly on the propagated labels
        tc.hidden = 0;
    }
    let (pred, log, model) = match method {
        Method::LdEmb => {
            let (model, log) = train_emb_augmented(&ds.graph, &features, &ds.labels, split, &tc, exp.emb_dim)?;
            (model.predict(&features, tc.threshold), log, None)
        }
        _ => {
            let t = train(&features, &ds.labels, split, &tc)?;
            (t.model.predict(&features, tc.threshold), t.log, Some(t.model))
        }
    };
    let truth = ds.labels.matrix().mapv(|v| v != 0.0);
    let wall_ms = if exp.record_timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    let row = ReportRow {
        method: method.name().to_string(),
        alpha,
        split_seed,
        micro_f1: micro_f1(&pred, &truth, &split.test),
        macro_f1: macro_f1(&pred, &truth, &split.test),
        accuracy: accuracy(&pred, &truth, &split.test),
        val_micro_f1: micro_f1(&pred, &truth, &split.val),
        wall_ms,
    };
    Ok(CellOutcome { row, log, model })
}

fn run_cell(ds: &Dataset, cell: &Cell<'_>, exp: &ExperimentConfig) -> Result<CellOutcome> {
    let start = Instant::now();
    let features = method_features(ds, cell.method, &cell.split.train, cell.appr)?;
    let mut out = train_and_score(ds, cell.method, cell.alpha, cell.seed, cell.split, features, exp)?;
    if exp.record_timing {
        out.row.wall_ms = start.elapsed().as_millis() as u64;
    }
    Ok(out)
}

/// Trains and evaluates one method on a given split. `alpha` is required
/// exactly when the method uses APPR features.
pub fn run_single(
    ds: &Dataset,
    method: Method,
    alpha: Option<f64>,
    split_seed: u64,
    split: &SplitSpec,
    cfg: &ExperimentConfig,
) -> Result<CellOutcome> {
    cfg.train.validate()?;
    split.validate(ds)?;
    let alpha = if method.uses_alpha() {
        Some(alpha.ok_or_else(|| Error::Input(format!("method {} needs an alpha", method.name())))?)
    } else {
        None
    };
    let appr = match alpha {
        Some(a) => Some(load_or_compute_appr(ds, &ApprConfig::new(a, cfg.epsilon)?, cfg)?),
        None => None,
    };
    let cell = Cell {
        method,
        alpha,
        seed: split_seed,
        split,
        appr: appr.as_ref(),
    };
    run_cell(ds, &cell, cfg)
}

/// Runs `method` for every `(alpha, seed)` pair. Methods without a teleport
/// parameter run once per seed. Rows come back sorted.
pub fn run_experiment(
    ds: &Dataset,
    method: Method,
    alphas: &[f64],
    split_seeds: &[u64],
    cfg: &ExperimentConfig,
) -> Result<EvalReport> {
    run_sweep(ds, &[method], alphas, split_seeds, cfg)
}

/// [`run_experiment`] over several methods sharing splits and APPR matrices.
pub fn run_sweep(
    ds: &Dataset,
    methods: &[Method],
    alphas: &[f64],
    split_seeds: &[u64],
    cfg: &ExperimentConfig,
) -> Result<EvalReport> {
    cfg.train.validate()?;
    if methods.is_empty() || split_seeds.is_empty() {
        return Err(Error::Input("need at least one method and one split seed".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;

    let splits: Vec<SplitSpec> = split_seeds
        .iter()
        .map(|&s| {
            let split = cfg.split.make(ds, s)?;
            split.validate(ds)?;
            Ok(split)
        })
        .collect::<Result<_>>()?;

    let needs_alpha = methods.iter().any(|m| m.uses_alpha());
    if needs_alpha && alphas.is_empty() {
        return Err(Error::Input("no alpha values given".into()));
    }
    let mut apprs: HashMap<u64, ApprMatrix> = HashMap::new();
    if needs_alpha {
        for &a in alphas {
            let acfg = ApprConfig::new(a, cfg.epsilon)?;
            let m = pool.install(|| load_or_compute_appr(ds, &acfg, cfg))?;
            apprs.insert(a.to_bits(), m);
        }
    }

    let mut cells = Vec::new();
    for &method in methods {
        let alpha_list: Vec<Option<f64>> = if method.uses_alpha() {
            alphas.iter().map(|&a| Some(a)).collect()
        } else {
            vec![None]
        };
        for alpha in alpha_list {
            for (split, &seed) in splits.iter().zip(split_seeds) {
                cells.push(Cell {
                    method,
                    alpha,
                    seed,
                    split,
                    appr: alpha.map(|a| &apprs[&a.to_bits()]),
                });
            }
        }
    }

    let rows: Vec<ReportRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                run_cell(ds, c, cfg).map(|o| o.row).map_err(|e| Error::Cell {
                    alpha: c.alpha.map(|a| a.to_string()).unwrap_or_else(|| "-".into()),
                    seed: c.seed,
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()
    })?;
    let mut report = EvalReport { rows };
    report.sort();
    Ok(report)
}
