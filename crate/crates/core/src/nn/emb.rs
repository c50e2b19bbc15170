//! Classifier whose output layer also sees a learned structural vector
//! `(Â·E)[v]`, with `Â` the self-looped normalized adjacency and `E` a
//! trainable node embedding.

use ndarray::Array2;
use rand::SeedableRng;

use super::model::{decide, gather, glorot_matrix, Structural};
use super::train::{check_inputs, epoch_grads, evaluate, grad_slices, head_for, model_params, Adam, Loop};
use super::{Gradients, MlpModel, ModelRng, TrainConfig, TrainLog};
use crate::datasets::SplitSpec;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::labelfeat::{Features, LabelMatrix};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbAugmentedModel {
    pub base: MlpModel,
    /// `n × k` node embedding.
    pub emb: Array2<f64>,
    /// `k × l` output weights for the structural vector; together with
    /// `base.out.w` this is the output layer over `[hidden, Â·E]`.
    pub emb_out: Array2<f64>,
    pub a_hat: CsrMatrix,
}

impl EmbAugmentedModel {
    pub fn emb_dim(&self) -> usize {
        self.emb.ncols()
    }

    fn structural(&self) -> Structural<'_> {
        Structural {
            a_hat: &self.a_hat,
            emb: &self.emb,
            w_out: &self.emb_out,
        }
    }

    pub fn forward(&self, x: &Features, rows: &[NodeId]) -> Array2<f64> {
        self.base
            .forward_cached(x, rows, Some(&self.structural()), None)
            .probs
    }

    pub fn predict(&self, x: &Features, threshold: f64) -> Array2<bool> {
        let rows: Vec<NodeId> = (0..x.rows()).collect();
        decide(self.base.head, &self.forward(x, &rows), threshold)
    }

    /// Dropout-free loss and gradients: base parameters, then the embedding
    /// and its output weights.
    pub fn loss_and_grads(
        &self,
        x: &Features,
        rows: &[NodeId],
        y: &Array2<f64>,
        cfg: &TrainConfig,
    ) -> (f64, Gradients, Array2<f64>, Array2<f64>) {
        let (loss, g, st) = epoch_grads(&self.base, Some(&self.structural()), x, rows, y, cfg, None);
        let st = st.expect("structural gradients");
        (loss, g, st.emb, st.w_out)
    }
}

/// Trains the embedding-augmented classifier jointly. With `k == 0` it
/// consumes the generator exactly like [`super::train`] and yields the same
/// predictions.
pub fn train_emb_augmented(
    g: &Graph,
    features: &Features,
    labels: &LabelMatrix,
    split: &SplitSpec,
    cfg: &TrainConfig,
    k: usize,
) -> Result<(EmbAugmentedModel, TrainLog)> {
    cfg.validate()?;
    check_inputs(features, labels, split)?;
    if g.num_nodes() != labels.num_nodes() {
        return Err(Error::Dimension(format!(
            "graph has {} nodes, labels {}",
            g.num_nodes(),
            labels.num_nodes()
        )));
    }
    if cfg.hidden == 0 {
        return Err(Error::Input("embedding-augmented model needs a hidden layer".into()));
    }
    let head = head_for(labels.task());
    let l = labels.num_labels();
    let n = g.num_nodes();
    let mut init_rng = ModelRng::seed_from_u64(cfg.rng_seed);
    let base = MlpModel::new(features.cols(), cfg.hidden, l, head, &mut init_rng);
    let emb = glorot_matrix(n, k, n + k, &mut init_rng);
    let emb_out = glorot_matrix(k, l, cfg.hidden + k + l, &mut init_rng);
    let mut model = EmbAugmentedModel {
        base,
        emb,
        emb_out,
        a_hat: g.sym_normalized_adjacency(true),
    };

    let y_train = gather(labels.matrix(), &split.train);
    let y_val = gather(labels.matrix(), &split.val);
    let mut sizes: Vec<usize> = model_params(&mut model.base).iter().map(|p| p.len()).collect();
    sizes.extend([model.emb.len(), model.emb_out.len()]);
    let mut adam = Adam::new(cfg.learning_rate, &sizes);

    let lp = Loop {
        cfg,
        labels,
        split,
        head,
    };
    lp.run(
        model,
        |m, rng| {
            let st = Structural {
                a_hat: &m.a_hat,
                emb: &m.emb,
                w_out: &m.emb_out,
            };
            let (loss, grads, sg) = epoch_grads(&m.base, Some(&st), features, &split.train, &y_train, cfg, Some(rng));
            let sg = sg.expect("structural gradients");
            let mut params = model_params(&mut m.base);
            params.push(m.emb.as_slice_mut().unwrap());
            params.push(m.emb_out.as_slice_mut().unwrap());
            let mut gs = grad_slices(&grads);
            gs.push(sg.emb.as_slice().unwrap());
            gs.push(sg.w_out.as_slice().unwrap());
            adam.step(params, gs);
            loss
        },
        |m| evaluate(&m.base, Some(&m.structural()), features, &split.val, &y_val, cfg),
    )
}
