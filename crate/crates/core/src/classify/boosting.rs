//! Multiclass gradient boosting with softmax loss. Each round fits one
//! regression tree per class to the negative gradient; leaves carry a
//! one-step Newton estimate.

use ndarray::ArrayView2;
#[cfg(test)]
use ndarray::ArrayView1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{argmax_first, grow, GrowParams, ResidualSums, SortedColumns, Tree};
use super::{derive_seed, ClassifierSpec};

#[derive(Debug, Clone)]
pub(crate) struct Boosted {
    init: Vec<f64>,
    learning_rate: f64,
    /// Round-major: `trees[round * n_classes + class]`.
    trees: Vec<Tree<f64>>,
    n_classes: usize,
}

fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

impl Boosted {
    pub(crate) fn fit(spec: &ClassifierSpec, x: ArrayView2<f64>, labels: &[usize], n_classes: usize) -> Self {
        let n = x.nrows();
        let c = n_classes;
        let columns = SortedColumns::new(x);
        let params = GrowParams {
            max_depth: spec.max_depth,
            min_samples_split: spec.min_samples_split,
            max_features: spec.features_per_split.count(columns.n_features()),
        };
        let mut counts = vec![0usize; c];
        for &l in labels {
            counts[l] += 1;
        }
        let init: Vec<f64> = counts
            .iter()
            .map(|&k| (k.max(1) as f64 / n as f64).ln())
            .collect();

        let weights = vec![1u32; n];
        let mut scores: Vec<f64> = (0..n).flat_map(|_| init.iter().copied()).collect();
        let mut probs = vec![0.0; n * c];
        let mut residuals = vec![0.0; n];
        let mut hessians = vec![0.0; n];
        let mut trees = Vec::with_capacity(spec.n_trees * c);
        let newton = (c as f64 - 1.0) / c as f64;

        for round in 0..spec.n_trees {
            for i in 0..n {
                softmax_into(&scores[i * c..(i + 1) * c], &mut probs[i * c..(i + 1) * c]);
            }
            for class in 0..c {
                for i in 0..n {
                    let p = probs[i * c + class];
                    residuals[i] = if labels[i] == class { 1.0 - p } else { -p };
                    hessians[i] = p * (1.0 - p);
                }
                let stream = (round * c + class) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, stream));
                let root = ResidualSums::new(&residuals, &hessians);
                let tree = grow(&columns, &weights, &root, params, &mut rng, |s| {
                    if s.hessian.abs() < 1e-150 {
                        0.0
                    } else {
                        newton * s.sum / s.hessian
                    }
                });
                for (i, row) in x.rows().into_iter().enumerate() {
                    scores[i * c + class] += spec.learning_rate * tree.predict_row(row);
                }
                trees.push(tree);
            }
        }
        Self {
            init,
            learning_rate: spec.learning_rate,
            trees,
            n_classes: c,
        }
    }

    pub(crate) fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        let c = self.n_classes;
        let mut scores: Vec<f64> = (0..x.nrows()).flat_map(|_| self.init.iter().copied()).collect();
        for (t, tree) in self.trees.iter().enumerate() {
            let class = t % c;
            for (r, row) in x.rows().into_iter().enumerate() {
                scores[r * c + class] += self.learning_rate * tree.predict_row(row);
            }
        }
        scores.chunks(c).map(argmax_first).collect()
    }

    #[cfg(test)]
    pub(crate) fn predict_row(&self, row: ArrayView1<f64>) -> usize {
        let mut scores = self.init.clone();
        for (t, tree) in self.trees.iter().enumerate() {
            scores[t % self.n_classes] += self.learning_rate * tree.predict_row(row);
        }
        argmax_first(&scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn softmax_sums_to_one() {
        let mut out = [0.0; 3];
        softmax_into(&[1000.0, 999.0, -5.0], &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(out[0] > out[1] && out[1] > out[2]);
    }

    #[test]
    fn learns_three_intervals() {
        let x = array![[0.0], [0.1], [0.2], [1.0], [1.1], [1.2], [2.0], [2.1], [2.2]];
        let y = [0, 0, 0, 1, 1, 1, 2, 2, 2];
        let b = Boosted::fit(&ClassifierSpec::gradient_boosting(0), x.view(), &y, 3);
        let pred: Vec<usize> = x.rows().into_iter().map(|r| b.predict_row(r)).collect();
        assert_eq!(pred, y);
    }
}
