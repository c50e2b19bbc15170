//! Central finite-difference checks for every parameter tensor.
#![allow(clippy::needless_range_loop)]

use labeldist::datasets::SplitSpec;
use labeldist::labelfeat::{adjacency_features, FeatureMatrix};
use labeldist::nn::{train_emb_augmented, EmbAugmentedModel, Head, MlpModel, ModelRng, TrainConfig};
use labeldist::{Features, LabelMatrix};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};

use super::{random_connected, rng};

const STEP: f64 = 1e-5;

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Worst relative error between `analytic` and central differences over
/// every entry of `param(model)`.
fn check_tensor<M: Clone>(
    model: &M,
    analytic: &[f64],
    param: impl Fn(&mut M) -> &mut [f64],
    loss: impl Fn(&M) -> f64,
) -> f64 {
    let mut m = model.clone();
    let len = param(&mut m).len();
    assert_eq!(len, analytic.len());
    let mut worst: f64 = 0.0;
    for i in 0..len {
        let orig = param(&mut m)[i];
        param(&mut m)[i] = orig + STEP;
        let up = loss(&m);
        param(&mut m)[i] = orig - STEP;
        let down = loss(&m);
        param(&mut m)[i] = orig;
        worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * STEP)));
    }
    worst
}

fn random_matrix(rows: usize, cols: usize, r: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || r.random_range(-1.0..1.0))
}

fn mlp_worst(m: &MlpModel, x: &Features, rows: &[usize], y: &Array2<f64>, l2: f64, pw: f64) -> f64 {
    let loss = |m: &MlpModel| m.loss_and_grads(x, rows, y.view(), l2, pw).0;
    let (_, g) = m.loss_and_grads(x, rows, y.view(), l2, pw);
    let mut worst: f64 = 0.0;
    if let Some(h) = &g.hidden {
        worst = worst.max(check_tensor(m, h.w.as_slice().unwrap(), |m| m.hidden.as_mut().unwrap().w.as_slice_mut().unwrap(), loss));
        worst = worst.max(check_tensor(m, h.b.as_slice().unwrap(), |m| m.hidden.as_mut().unwrap().b.as_slice_mut().unwrap(), loss));
    }
    worst = worst.max(check_tensor(m, g.out.w.as_slice().unwrap(), |m| m.out.w.as_slice_mut().unwrap(), loss));
    worst.max(check_tensor(m, g.out.b.as_slice().unwrap(), |m| m.out.b.as_slice_mut().unwrap(), loss))
}

/// Both heads, with and without the hidden layer, dense and sparse input.
pub fn mlp_max_error() -> f64 {
    let mut worst: f64 = 0.0;
    for (head, hidden, seed) in [(Head::Softmax, 16, 1), (Head::Sigmoid, 16, 2), (Head::Softmax, 0, 3), (Head::Sigmoid, 5, 4)] {
        let mut r = rng(seed);
        let mut m = MlpModel::new(3, hidden, 3, head, &mut ModelRng::seed_from_u64(seed));
        m.out.b.mapv_inplace(|_| r.random_range(-0.5..0.5));
        if let Some(h) = &mut m.hidden {
            h.b.mapv_inplace(|_| r.random_range(-0.5..0.5));
        }
        let x = Features::Dense(FeatureMatrix { x: random_matrix(4, 3, &mut r) });
        let y = match head {
            Head::Softmax => array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
            Head::Sigmoid => array![[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]],
        };
        worst = worst.max(mlp_worst(&m, &x, &[0, 1, 2, 3], &y, 5e-3, 10.0));
    }

    let g = random_connected(6, 4, &mut rng(5));
    let x = Features::Sparse(adjacency_features(&g));
    let m = MlpModel::new(6, 4, 2, Head::Softmax, &mut ModelRng::seed_from_u64(5));
    let y = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
    worst.max(mlp_worst(&m, &x, &[0, 2, 5], &y, 1e-3, 1.0))
}

/// Embedding-augmented model, both heads, including the embedding tensors.
pub fn emb_max_error() -> f64 {
    let mut worst: f64 = 0.0;
    for head in [Head::Softmax, Head::Sigmoid] {
        let mut r = rng(6);
        let g = random_connected(6, 3, &mut r);
        let labels = LabelMatrix::from_classes(2, &[Some(0), Some(1), Some(0), Some(1), Some(0), Some(1)]).unwrap();
        let split = SplitSpec {
            seed: 0,
            train: vec![0, 1, 2, 3],
            val: vec![4],
            test: vec![5],
        };
        let x = Features::Dense(FeatureMatrix { x: random_matrix(6, 2, &mut r) });
        let short = TrainConfig {
            max_epochs: 3,
            ..TrainConfig::default()
        };
        // a few real updates so the embedding is not at its initial point
        let (mut m, _) = train_emb_augmented(&g, &x, &labels, &split, &short, 3).unwrap();
        m.base.head = head;
        let y = match head {
            Head::Softmax => array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
            Head::Sigmoid => array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 1.0]],
        };
        let cfg = TrainConfig {
            l2_weight: 1e-3,
            ..TrainConfig::default()
        };
        let rows = &split.train;
        let loss = |m: &EmbAugmentedModel| m.loss_and_grads(&x, rows, &y, &cfg).0;
        let (_, gr, d_emb, d_out) = m.loss_and_grads(&x, rows, &y, &cfg);
        let h = gr.hidden.unwrap();
        for w in [
            check_tensor(&m, d_emb.as_slice().unwrap(), |m| m.emb.as_slice_mut().unwrap(), loss),
            check_tensor(&m, d_out.as_slice().unwrap(), |m| m.emb_out.as_slice_mut().unwrap(), loss),
            check_tensor(&m, h.w.as_slice().unwrap(), |m| m.base.hidden.as_mut().unwrap().w.as_slice_mut().unwrap(), loss),
            check_tensor(&m, h.b.as_slice().unwrap(), |m| m.base.hidden.as_mut().unwrap().b.as_slice_mut().unwrap(), loss),
            check_tensor(&m, gr.out.w.as_slice().unwrap(), |m| m.base.out.w.as_slice_mut().unwrap(), loss),
            check_tensor(&m, gr.out.b.as_slice().unwrap(), |m| m.base.out.b.as_slice_mut().unwrap(), loss),
        ] {
            worst = worst.max(w);
        }
    }
    worst
}
