use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::ModelRng;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::labelfeat::Features;
use crate::sparse::CsrMatrix;

const MAGIC: &[u8; 6] = b"LDMLP1";
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Softmax,
    Sigmoid,
}

/// Affine layer `x·w + b`, `w` stored `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            w: Array2::zeros((fan_in, fan_out)),
            b: Array1::zeros(fan_out),
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut ModelRng) -> Self {
        let w = glorot_matrix(fan_in, fan_out, fan_in + fan_out, rng);
        Dense {
            w,
            b: Array1::zeros(fan_out),
        }
    }
}

pub(crate) fn glorot_matrix(rows: usize, cols: usize, fan_sum: usize, rng: &mut ModelRng) -> Array2<f64> {
    let limit = (6.0 / fan_sum.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

/// Feed-forward classifier: optional ReLU hidden layer, then an output
/// layer with a softmax or independent-sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub hidden: Option<Dense>,
    pub out: Dense,
    pub head: Head,
}

/// Gradients matching the layout of [`MlpModel`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub hidden: Option<Dense>,
    pub out: Dense,
}

/// Extra output-layer input `(Â·E)[v]` for the embedding-augmented model.
pub(crate) struct Structural<'a> {
    pub a_hat: &'a CsrMatrix,
    pub emb: &'a Array2<f64>,
    pub w_out: &'a Array2<f64>,
}

pub(crate) struct StructuralGrads {
    pub emb: Array2<f64>,
    pub w_out: Array2<f64>,
}

pub(crate) struct Cache {
    pre_hidden: Option<Array2<f64>>,
    mask: Option<Array2<f64>>,
    /// Input to the output layer (post-dropout hidden, or raw features).
    hidden: Option<Array2<f64>>,
    structural: Option<Array2<f64>>,
    pub probs: Array2<f64>,
}

impl MlpModel {
    /// Randomly initialized model. `hidden == 0` gives a single dense layer.
    pub fn new(input: usize, hidden: usize, outputs: usize, head: Head, rng: &mut ModelRng) -> Self {
        let (hid, fan) = if hidden > 0 {
            (Some(Dense::glorot(input, hidden, rng)), hidden)
        } else {
            (None, input)
        };
        MlpModel {
            hidden: hid,
            out: Dense::glorot(fan, outputs, rng),
            head,
        }
    }

    pub fn zeros(input: usize, hidden: usize, outputs: usize, head: Head) -> Self {
        let (hid, fan) = if hidden > 0 {
            (Some(Dense::zeros(input, hidden)), hidden)
        } else {
            (None, input)
        };
        MlpModel {
            hidden: hid,
            out: Dense::zeros(fan, outputs),
            head,
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.hidden {
            Some(h) => h.w.nrows(),
            None => self.out.w.nrows(),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden.as_ref().map_or(0, |h| h.w.ncols())
    }

    pub fn num_outputs(&self) -> usize {
        self.out.w.ncols()
    }

    fn first_weights(&self) -> &Array2<f64> {
        match &self.hidden {
            Some(h) => &h.w,
            None => &self.out.w,
        }
    }

    pub fn is_finite(&self) -> bool {
        let hid = self
            .hidden
            .as_ref()
            .is_none_or(|h| h.w.iter().chain(&h.b).all(|v| v.is_finite()));
        hid && self.out.w.iter().chain(&self.out.b).all(|v| v.is_finite())
    }

    /// Output probabilities for `rows`. Dropout on the hidden layer is applied
    /// only when `dropout` carries a keep probability and generator.
    pub fn forward(
        &self,
        x: &Features,
        rows: &[NodeId],
        dropout: Option<(f64, &mut ModelRng)>,
    ) -> Array2<f64> {
        self.forward_cached(x, rows, None, dropout).probs
    }

    pub(crate) fn forward_cached(
        &self,
        x: &Features,
        rows: &[NodeId],
        structural: Option<&Structural<'_>>,
        dropout: Option<(f64, &mut ModelRng)>,
    ) -> Cache {
        assert_eq!(x.cols(), self.input_dim(), "feature width does not match model input");
        let mut cache = Cache {
            pre_hidden: None,
            mask: None,
            hidden: None,
            structural: None,
            probs: Array2::zeros((0, 0)),
        };

        let mut logits = match &self.hidden {
            Some(layer) => {
                let mut z = x.mul_rows(rows, layer.w.view());
                z += &layer.b;
                let mut h = z.mapv(|v| v.max(0.0));
                if let Some((keep, rng)) = dropout {
                    let scale = 1.0 / keep;
                    let mask = Array2::from_shape_simple_fn(h.raw_dim(), || {
                        if rng.random::<f64>() < keep {
                            scale
                        } else {
                            0.0
                        }
                    });
                    h *= &mask;
                    cache.mask = Some(mask);
                }
                let logits = h.dot(&self.out.w);
                cache.pre_hidden = Some(z);
                cache.hidden = Some(h);
                logits
            }
            None => x.mul_rows(rows, self.out.w.view()),
        };
        if let Some(st) = structural {
            if st.emb.ncols() > 0 {
                let s = st
                    .a_hat
                    .mul_dense_rows(rows, st.emb.view())
                    .expect("embedding rows match adjacency");
                logits += &s.dot(st.w_out);
                cache.structural = Some(s);
            }
        }
        logits += &self.out.b;

        cache.probs = match self.head {
            Head::Softmax => {
                for mut row in logits.rows_mut() {
                    let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|v| (v - max).exp());
                    let sum = row.sum();
                    row /= sum;
                }
                logits
            }
            Head::Sigmoid => logits.mapv(sigmoid),
        };
        cache
    }

    /// Loss and parameter gradients on `rows` with targets `y` (one row per
    /// entry of `rows`), with dropout disabled.
    ///
    /// Softmax: mean cross-entropy. Sigmoid: mean over nodes and labels of
    /// `-(w·y·log p + (1-y)·log(1-p))`. Both add `l2·‖W1‖²` on the first
    /// layer weights.
    pub fn loss_and_grads(
        &self,
        x: &Features,
        rows: &[NodeId],
        y: ArrayView2<f64>,
        l2_weight: f64,
        pos_weight: f64,
    ) -> (f64, Gradients) {
        let cache = self.forward_cached(x, rows, None, None);
        let (loss, grads, _) = self.backward(x, rows, y, &cache, None, l2_weight, pos_weight);
        (loss, grads)
    }

    pub(crate) fn data_loss(&self, probs: &Array2<f64>, y: ArrayView2<f64>, pos_weight: f64) -> f64 {
        let clamp = |p: f64| p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        let b = probs.nrows().max(1) as f64;
        match self.head {
            Head::Softmax => {
                let mut total = 0.0;
                for (p, t) in probs.rows().into_iter().zip(y.rows()) {
                    for (&pi, &ti) in p.iter().zip(t) {
                        if ti != 0.0 {
                            total -= ti * clamp(pi).ln();
                        }
                    }
                }
                total / b
            }
            Head::Sigmoid => {
                let mut total = 0.0;
                for (&pi, &ti) in probs.iter().zip(y.iter()) {
                    let pc = clamp(pi);
                    total -= pos_weight * ti * pc.ln() + (1.0 - ti) * (1.0 - pc).ln();
                }
                total / (b * probs.ncols().max(1) as f64)
            }
        }
    }

    pub(crate) fn l2_penalty(&self, l2_weight: f64) -> f64 {
        l2_weight * self.first_weights().iter().map(|w| w * w).sum::<f64>()
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward(
        &self,
        x: &Features,
        rows: &[NodeId],
        y: ArrayView2<f64>,
        cache: &Cache,
        structural: Option<&Structural<'_>>,
        l2_weight: f64,
        pos_weight: f64,
    ) -> (f64, Gradients, Option<StructuralGrads>) {
        let probs = &cache.probs;
        let loss = self.data_loss(probs, y, pos_weight) + self.l2_penalty(l2_weight);
        let b = rows.len().max(1) as f64;

        let dlogits = match self.head {
            Head::Softmax => (probs - &y) / b,
            Head::Sigmoid => {
                let scale = b * probs.ncols().max(1) as f64;
                let mut d = Array2::zeros(probs.raw_dim());
                ndarray::Zip::from(&mut d)
                    .and(probs)
                    .and(&y)
                    .for_each(|d, &p, &t| *d = (-pos_weight * t * (1.0 - p) + (1.0 - t) * p) / scale);
                d
            }
        };

        let db2 = dlogits.sum_axis(Axis(0));
        let (hidden_grads, dw2) = match (&self.hidden, &cache.hidden) {
            (Some(layer), Some(h)) => {
                let dw2 = h.t().dot(&dlogits);
                let mut dh = dlogits.dot(&self.out.w.t());
                if let Some(mask) = &cache.mask {
                    dh *= mask;
                }
                let z = cache.pre_hidden.as_ref().unwrap();
                ndarray::Zip::from(&mut dh).and(z).for_each(|g, &zv| {
                    if zv <= 0.0 {
                        *g = 0.0;
                    }
                });
                let mut dw1 = x.transpose_mul_rows(rows, dh.view());
                dw1.scaled_add(2.0 * l2_weight, &layer.w);
                let db1 = dh.sum_axis(Axis(0));
                (Some(Dense { w: dw1, b: db1 }), dw2)
            }
            _ => {
                let mut dw2 = x.transpose_mul_rows(rows, dlogits.view());
                dw2.scaled_add(2.0 * l2_weight, &self.out.w);
                (None, dw2)
            }
        };

        let st_grads = match (structural, &cache.structural) {
            (Some(st), Some(sv)) => {
                let d_wout = sv.t().dot(&dlogits);
                let ds = dlogits.dot(&st.w_out.t());
                let d_emb = st.a_hat.transpose_mul_dense_rows(rows, ds.view());
                Some(StructuralGrads {
                    emb: d_emb,
                    w_out: d_wout,
                })
            }
            (Some(st), None) => Some(StructuralGrads {
                emb: Array2::zeros(st.emb.raw_dim()),
                w_out: Array2::zeros(st.w_out.raw_dim()),
            }),
            _ => None,
        };

        (
            loss,
            Gradients {
                hidden: hidden_grads,
                out: Dense { w: dw2, b: db2 },
            },
            st_grads,
        )
    }

    /// Hard predictions for every node: argmax (lowest index on ties) for
    /// softmax, `p >= threshold` for sigmoid.
    pub fn predict(&self, x: &Features, threshold: f64) -> Array2<bool> {
        let rows: Vec<NodeId> = (0..x.rows()).collect();
        decide(self.head, &self.forward(x, &rows, None), threshold)
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        for d in [self.input_dim(), self.hidden_dim(), self.num_outputs()] {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        w.write_all(&[match self.head {
            Head::Softmax => 0u8,
            Head::Sigmoid => 1u8,
        }])?;
        let layers = self.hidden.iter().chain(std::iter::once(&self.out));
        for layer in layers {
            for v in layer.w.iter().chain(&layer.b) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let bad = |m: &str| Error::Input(format!("model checkpoint: {m}"));
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic).map_err(|_| bad("truncated"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut word = [0u8; 8];
        let mut dims = [0usize; 3];
        for d in &mut dims {
            r.read_exact(&mut word).map_err(|_| bad("truncated"))?;
            *d = u64::from_le_bytes(word) as usize;
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag).map_err(|_| bad("truncated"))?;
        let head = match tag[0] {
            0 => Head::Softmax,
            1 => Head::Sigmoid,
            _ => return Err(bad("unknown head tag")),
        };
        let [input, hidden, outputs] = dims;
        let mut model = MlpModel::zeros(input, hidden, outputs, head);
        let mut fill = |arr: &mut dyn Iterator<Item = &mut f64>| -> Result<()> {
            for v in arr {
                r.read_exact(&mut word).map_err(|_| bad("truncated"))?;
                *v = f64::from_le_bytes(word);
            }
            Ok(())
        };
        if let Some(h) = &mut model.hidden {
            fill(&mut h.w.iter_mut())?;
            fill(&mut h.b.iter_mut())?;
        }
        fill(&mut model.out.w.iter_mut())?;
        fill(&mut model.out.b.iter_mut())?;
        Ok(model)
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

pub(crate) fn decide(head: Head, probs: &Array2<f64>, threshold: f64) -> Array2<bool> {
    match head {
        Head::Softmax => {
            let mut out = Array2::from_elem(probs.raw_dim(), false);
            for (i, row) in probs.rows().into_iter().enumerate() {
                let mut best = 0;
                for (j, &p) in row.iter().enumerate() {
                    if p > row[best] {
                        best = j;
                    }
                }
                if !row.is_empty() {
                    out[[i, best]] = true;
                }
            }
            out
        }
        Head::Sigmoid => probs.mapv(|p| p >= threshold),
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Selects rows `rows` of a dense matrix.
pub(crate) fn gather(m: ArrayView2<f64>, rows: &[NodeId]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), m.ncols()));
    for (i, &r) in rows.iter().enumerate() {
        out.row_mut(i).assign(&m.slice(s![r, ..]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelfeat::FeatureMatrix;
    use ndarray::array;
    use rand::SeedableRng;

    fn dense(x: Array2<f64>) -> Features {
        Features::Dense(FeatureMatrix { x })
    }

    #[test]
    fn zero_model_outputs() {
        let x = dense(Array2::from_elem((3, 4), 0.7));
        let soft = MlpModel::zeros(4, 16, 7, Head::Softmax);
        let p = soft.forward(&x, &[0, 1, 2], None);
        assert!(p.iter().all(|&v| (v - 1.0 / 7.0).abs() < 1e-15));
        let sig = MlpModel::zeros(4, 16, 3, Head::Sigmoid);
        let p = sig.forward(&x, &[0, 2], None);
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn predict_tie_breaks_low() {
        let probs = array![[0.2, 0.5, 0.3], [0.4, 0.4, 0.2]];
        let d = decide(Head::Softmax, &probs, 0.5);
        assert_eq!(d.row(0).to_vec(), vec![false, true, false]);
        assert_eq!(d.row(1).to_vec(), vec![true, false, false]);
        let d = decide(Head::Sigmoid, &array![[0.49, 0.51]], 0.5);
        assert_eq!(d.row(0).to_vec(), vec![false, true]);
    }

    #[test]
    fn perfect_prediction_leaves_only_l2() {
        // saturated sigmoid output equals targets after clamping
        let mut m = MlpModel::zeros(2, 0, 2, Head::Sigmoid);
        m.out.b = array![1e3, -1e3];
        let x = dense(array![[0.0, 0.0], [0.0, 0.0]]);
        let y = array![[1.0, 0.0], [1.0, 0.0]];
        let (loss, _) = m.loss_and_grads(&x, &[0, 1], y.view(), 0.1, 10.0);
        assert!(loss.abs() < 1e-9, "{loss}");
        m.out.w = array![[1.0, 0.0], [0.0, 1.0]];
        let (loss, _) = m.loss_and_grads(&x, &[0, 1], y.view(), 0.1, 10.0);
        assert!((loss - 0.2).abs() < 1e-9);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let mut rng = ModelRng::seed_from_u64(5);
        for hidden in [0, 16] {
            let m = MlpModel::new(5, hidden, 3, Head::Sigmoid, &mut rng);
            let mut buf = Vec::new();
            m.write_to(&mut buf).unwrap();
            assert_eq!(&buf[..6], b"LDMLP1");
            assert_eq!(MlpModel::read_from(&buf[..]).unwrap(), m);
        }
        assert!(MlpModel::read_from(&b"LDMLP0"[..]).is_err());
    }

    #[test]
    fn glorot_range() {
        let mut rng = ModelRng::seed_from_u64(1);
        let m = MlpModel::new(10, 16, 4, Head::Softmax, &mut rng);
        let lim = (6.0f64 / 26.0).sqrt();
        assert!(m.hidden.as_ref().unwrap().w.iter().all(|v| v.abs() <= lim));
        assert!(m.hidden.as_ref().unwrap().b.iter().all(|&v| v == 0.0));
    }
}
