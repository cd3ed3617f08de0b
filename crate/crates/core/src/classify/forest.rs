use ndarray::ArrayView2;
#[cfg(test)]
use ndarray::ArrayView1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{argmax_first, grow, ClassCounts, GrowParams, SortedColumns, Tree};
use super::{derive_seed, ClassifierSpec};

#[derive(Debug, Clone)]
pub(crate) struct Forest {
    trees: Vec<Tree<usize>>,
    n_classes: usize,
}

impl Forest {
    pub(crate) fn fit(spec: &ClassifierSpec, x: ArrayView2<f64>, labels: &[usize], n_classes: usize) -> Self {
        let n = x.nrows();
        let columns = SortedColumns::new(x);
        let params = GrowParams {
            max_depth: spec.max_depth,
            min_samples_split: spec.min_samples_split,
            max_features: spec.features_per_split.count(columns.n_features()),
        };
        let root = ClassCounts::new(labels, n_classes);
        let trees = (0..spec.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, t as u64));
                let mut weights = vec![0u32; n];
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1;
                }
                grow(&columns, &weights, &root, params, &mut rng, |s| s.majority())
            })
            .collect();
        Self { trees, n_classes }
    }

    #[cfg(test)]
    pub(crate) fn from_trees(trees: Vec<Tree<usize>>, n_classes: usize) -> Self {
        Self { trees, n_classes }
    }

    /// Majority vote per row; ties go to the smallest class index.
    pub(crate) fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        let c = self.n_classes;
        let mut votes = vec![0u32; x.nrows() * c];
        // Tree-major.
        for tree in &self.trees {
            for (r, row) in x.rows().into_iter().enumerate() {
                votes[r * c + tree.predict_row(row)] += 1;
            }
        }
        votes.chunks(c).map(argmax_first).collect()
    }

    #[cfg(test)]
    pub(crate) fn predict_row(&self, row: ArrayView1<f64>) -> usize {
        let mut votes = vec![0u32; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_row(row)] += 1;
        }
        argmax_first(&votes)
    }
}
