use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;

use super::model::{decide, gather, Cache, Structural, StructuralGrads};
use super::{Gradients, Head, MlpModel, ModelRng};
use crate::datasets::SplitSpec;
use crate::error::{Error, Result};
use crate::eval::metrics::micro_f1;
use crate::graph::NodeId;
use crate::labelfeat::{Features, LabelMatrix, Task};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Weight of `‖W1‖²` in the loss.
    pub l2_weight: f64,
    pub dropout_keep_prob: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    /// Up-weighting of positive targets under the sigmoid head.
    pub pos_weight: f64,
    pub hidden: usize,
    pub rng_seed: u64,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            l2_weight: 5e-4,
            dropout_keep_prob: 0.5,
            max_epochs: 200,
            early_stop_patience: 10,
            pos_weight: 10.0,
            hidden: 16,
            rng_seed: 0,
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    // negated comparisons so NaN is rejected as well
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Input(m));
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.pos_weight >= 1.0) {
            return bad(format!("pos_weight must be >= 1, got {}", self.pos_weight));
        }
        if self.early_stop_patience < 1 {
            return bad("early-stopping patience must be >= 1".into());
        }
        if !(self.dropout_keep_prob > 0.0 && self.dropout_keep_prob <= 1.0) {
            return bad(format!("dropout keep probability must lie in (0, 1], got {}", self.dropout_keep_prob));
        }
        if self.l2_weight < 0.0 {
            return bad("l2 weight must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_metric\n");
        for r in &self.epochs {
            writeln!(out, "{},{:.9},{:.9},{:.6}", r.epoch, r.train_loss, r.val_loss, r.val_metric).unwrap();
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: MlpModel,
    pub log: TrainLog,
}

/// Adaptive-moment optimizer state over a flat list of tensors.
pub(crate) struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, sizes: &[usize]) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

fn slice_mut<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

fn slice<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

pub(crate) fn model_params(m: &mut MlpModel) -> Vec<&mut [f64]> {
    let mut out = Vec::new();
    if let Some(h) = &mut m.hidden {
        out.push(slice_mut(&mut h.w));
        out.push(slice_mut(&mut h.b));
    }
    out.push(slice_mut(&mut m.out.w));
    out.push(slice_mut(&mut m.out.b));
    out
}

pub(crate) fn grad_slices(g: &Gradients) -> Vec<&[f64]> {
    let mut out = Vec::new();
    if let Some(h) = &g.hidden {
        out.push(slice(&h.w));
        out.push(slice(&h.b));
    }
    out.push(slice(&g.out.w));
    out.push(slice(&g.out.b));
    out
}

pub(crate) fn head_for(task: Task) -> Head {
    match task {
        Task::Multiclass => Head::Softmax,
        Task::Multilabel => Head::Sigmoid,
    }
}

pub(crate) fn check_inputs(features: &Features, labels: &LabelMatrix, split: &SplitSpec) -> Result<()> {
    if features.rows() != labels.num_nodes() {
        return Err(Error::Dimension(format!(
            "{} feature rows for {} nodes",
            features.rows(),
            labels.num_nodes()
        )));
    }
    if split.train.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    let n = labels.num_nodes();
    if let Some(&v) = split.train.iter().chain(&split.val).chain(&split.test).find(|&&v| v >= n) {
        return Err(Error::Input(format!("split node {v} out of range 0..{n}")));
    }
    if let Some(&v) = split.train.iter().find(|&&v| !labels.is_labeled(v)) {
        return Err(Error::Input(format!("training node {v} is unlabeled")));
    }
    Ok(())
}

/// Shared full-batch loop. `step` runs one training epoch and returns the
/// train loss; `evaluate` returns validation probabilities and loss.
pub(crate) struct Loop<'a> {
    pub cfg: &'a TrainConfig,
    pub labels: &'a LabelMatrix,
    pub split: &'a SplitSpec,
    pub head: Head,
}

impl Loop<'_> {
    pub fn run<S>(
        &self,
        mut state: S,
        mut step: impl FnMut(&mut S, &mut ModelRng) -> f64,
        mut evaluate: impl FnMut(&S) -> (f64, Array2<f64>),
    ) -> Result<(S, TrainLog)>
    where
        S: Clone,
    {
        let mut rng = ModelRng::seed_from_u64(self.cfg.rng_seed.wrapping_add(1));
        let mut log = TrainLog::default();
        let mut best: Option<(f64, S)> = None;
        let mut since_best = 0;
        let truth = self.labels.matrix().mapv(|v| v != 0.0);

        for epoch in 1..=self.cfg.max_epochs {
            let train_loss = step(&mut state, &mut rng);
            if !train_loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "training loss became {train_loss} at epoch {epoch} (learning rate {})",
                    self.cfg.learning_rate
                )));
            }
            let (val_loss, val_metric) = if self.split.val.is_empty() {
                (train_loss, f64::NAN)
            } else {
                let (loss, probs) = evaluate(&state);
                let pred = decide(self.head, &probs, self.cfg.threshold);
                let truth_rows = gather_bool(&truth, &self.split.val);
                let all: Vec<NodeId> = (0..self.split.val.len()).collect();
                (loss, micro_f1(&pred, &truth_rows, &all))
            };
            log.epochs.push(EpochRecord {
                epoch,
                train_loss,
                val_loss,
                val_metric,
            });
            if !val_loss.is_finite() {
                return Err(Error::Numerical(format!("validation loss became {val_loss} at epoch {epoch}")));
            }
            if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
                best = Some((val_loss, state.clone()));
                log.best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= self.cfg.early_stop_patience {
                    break;
                }
            }
        }
        Ok((best.map_or(state, |(_, s)| s), log))
    }
}

fn gather_bool(m: &Array2<bool>, rows: &[NodeId]) -> Array2<bool> {
    let mut out = Array2::from_elem((rows.len(), m.ncols()), false);
    for (i, &r) in rows.iter().enumerate() {
        out.row_mut(i).assign(&m.row(r));
    }
    out
}

/// Forward + backward pass with optional dropout and structural input.
#[allow(clippy::too_many_arguments)]
pub(crate) fn epoch_grads(
    model: &MlpModel,
    structural: Option<&Structural<'_>>,
    features: &Features,
    rows: &[NodeId],
    y: &Array2<f64>,
    cfg: &TrainConfig,
    rng: Option<&mut ModelRng>,
) -> (f64, Gradients, Option<StructuralGrads>) {
    let dropout = match rng {
        Some(r) if cfg.dropout_keep_prob < 1.0 => Some((cfg.dropout_keep_prob, r)),
        _ => None,
    };
    let cache: Cache = model.forward_cached(features, rows, structural, dropout);
    model.backward(features, rows, y.view(), &cache, structural, cfg.l2_weight, cfg.pos_weight)
}

/// Trains a classifier on `split.train`, early-stopping on validation loss.
/// The returned parameters are those of the epoch with the lowest
/// validation loss.
pub fn train(
    features: &Features,
    labels: &LabelMatrix,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    check_inputs(features, labels, split)?;
    let head = head_for(labels.task());
    let mut init_rng = ModelRng::seed_from_u64(cfg.rng_seed);
    let mut model = MlpModel::new(features.cols(), cfg.hidden, labels.num_labels(), head, &mut init_rng);

    let y_train = gather(labels.matrix(), &split.train);
    let y_val = gather(labels.matrix(), &split.val);
    let sizes: Vec<usize> = model_params(&mut model).iter().map(|p| p.len()).collect();
    let mut adam = Adam::new(cfg.learning_rate, &sizes);

    let lp = Loop {
        cfg,
        labels,
        split,
        head,
    };
    let (model, log) = lp.run(
        model,
        |m, rng| {
            let (loss, grads, _) = epoch_grads(m, None, features, &split.train, &y_train, cfg, Some(rng));
            adam.step(model_params(m), grad_slices(&grads));
            loss
        },
        |m| evaluate(m, None, features, &split.val, &y_val, cfg),
    )?;
    Ok(TrainedModel { model, log })
}

/// Dropout-free loss (including the L2 term) and probabilities on `rows`.
pub(crate) fn evaluate(
    model: &MlpModel,
    structural: Option<&Structural<'_>>,
    features: &Features,
    rows: &[NodeId],
    y: &Array2<f64>,
    cfg: &TrainConfig,
) -> (f64, Array2<f64>) {
    let cache = model.forward_cached(features, rows, structural, None);
    let loss = model.data_loss(&cache.probs, y.view(), cfg.pos_weight) + model.l2_penalty(cfg.l2_weight);
    (loss, cache.probs)
}
