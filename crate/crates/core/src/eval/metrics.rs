use ndarray::Array2;

use crate::graph::NodeId;

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Counts {
    fn add(&mut self, pred: bool, truth: bool) {
        match (pred, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => {}
        }
    }

    fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

fn check(pred: &Array2<bool>, truth: &Array2<bool>) {
    assert_eq!(pred.dim(), truth.dim(), "prediction and truth shapes differ");
}

/// F1 over all (node, label) decisions of `eval_set`, pooled.
pub fn micro_f1(pred: &Array2<bool>, truth: &Array2<bool>, eval_set: &[NodeId]) -> f64 {
    check(pred, truth);
    let mut c = Counts::default();
    for &v in eval_set {
        for (&p, &t) in pred.row(v).iter().zip(truth.row(v)) {
            c.add(p, t);
        }
    }
    c.f1()
}

/// Unweighted mean of per-label F1 over `eval_set`.
pub fn macro_f1(pred: &Array2<bool>, truth: &Array2<bool>, eval_set: &[NodeId]) -> f64 {
    check(pred, truth);
    let l = pred.ncols();
    if l == 0 {
        return 0.0;
    }
    let mut per = vec![Counts::default(); l];
    for &v in eval_set {
        for (j, c) in per.iter_mut().enumerate() {
            c.add(pred[[v, j]], truth[[v, j]]);
        }
    }
    per.iter().map(Counts::f1).sum::<f64>() / l as f64
}

/// Fraction of `eval_set` rows predicted exactly.
pub fn accuracy(pred: &Array2<bool>, truth: &Array2<bool>, eval_set: &[NodeId]) -> f64 {
    check(pred, truth);
    if eval_set.is_empty() {
        return 0.0;
    }
    let hits = eval_set.iter().filter(|&&v| pred.row(v) == truth.row(v)).count();
    hits as f64 / eval_set.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn worked_example() {
        let truth = array![[true, false], [false, true]];
        let pred = array![[true, false], [true, false]];
        assert_eq!(micro_f1(&pred, &truth, &[0, 1]), 0.5);
        assert!((macro_f1(&pred, &truth, &[0, 1]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(accuracy(&pred, &truth, &[0, 1]), 0.5);
    }

    #[test]
    fn perfect_and_empty() {
        let truth = array![[true, false], [false, true]];
        assert_eq!(micro_f1(&truth, &truth, &[0, 1]), 1.0);
        assert_eq!(macro_f1(&truth, &truth, &[0, 1]), 1.0);
        let none = Array2::from_elem((2, 2), false);
        assert_eq!(micro_f1(&none, &truth, &[0, 1]), 0.0);
        assert_eq!(micro_f1(&none, &none, &[0, 1]), 0.0);
    }

    #[test]
    fn single_label_macro_equals_its_f1() {
        let truth = array![[true], [false], [true]];
        let pred = array![[true], [true], [false]];
        assert_eq!(macro_f1(&pred, &truth, &[0, 1, 2]), micro_f1(&pred, &truth, &[0, 1, 2]));
    }
}
