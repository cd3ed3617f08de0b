//! Tree ensembles (random forest, gradient boosting) and k-fold
//! cross-validation.

mod boosting;
mod cv;
mod forest;
mod tree;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::NormalizationParams;

pub use cv::{cross_val_score, cv_score, make_folds, CvReport, FoldPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    RandomForest,
    GradientBoosting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturesPerSplit {
    Sqrt,
    All,
}

impl FeaturesPerSplit {
    fn count(self, n_features: usize) -> usize {
        match self {
            FeaturesPerSplit::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            FeaturesPerSplit::All => n_features,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub learning_rate: f64,
    pub features_per_split: FeaturesPerSplit,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn random_forest(seed: u64) -> Self {
        Self {
            kind: ClassifierKind::RandomForest,
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            learning_rate: 1.0,
            features_per_split: FeaturesPerSplit::Sqrt,
            seed,
        }
    }

    pub fn gradient_boosting(seed: u64) -> Self {
        Self {
            kind: ClassifierKind::GradientBoosting,
            n_trees: 100,
            max_depth: Some(3),
            min_samples_split: 2,
            learning_rate: 0.1,
            features_per_split: FeaturesPerSplit::All,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.kind == ClassifierKind::GradientBoosting
            && !(self.learning_rate > 0.0 && self.learning_rate <= 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "learning_rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Ensemble {
    Constant(usize),
    Forest(forest::Forest),
    Boosted(boosting::Boosted),
}

/// A fitted classifier together with its training-side normalization.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    ensemble: Ensemble,
    n_features: usize,
    classes: Vec<usize>,
    normalization: NormalizationParams,
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Class labels seen in training, ascending.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn normalization(&self) -> &NormalizationParams {
        &self.normalization
    }
}

/// Fits normalization and the ensemble on the given rows.
pub fn fit(spec: &ClassifierSpec, features: ArrayView2<f64>, labels: &[usize]) -> Result<TrainedModel> {
    spec.validate()?;
    let (n, p) = features.dim();
    if n == 0 || p == 0 {
        return Err(Error::EmptyFeatures);
    }
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let local: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();

    let normalization = NormalizationParams::fit(features);
    let ensemble = if classes.len() == 1 {
        Ensemble::Constant(0)
    } else {
        let x = normalization.apply(features)?;
        match spec.kind {
            ClassifierKind::RandomForest => Ensemble::Forest(forest::Forest::fit(spec, x.view(), &local, classes.len())),
            ClassifierKind::GradientBoosting => {
                Ensemble::Boosted(boosting::Boosted::fit(spec, x.view(), &local, classes.len()))
            }
        }
    };
    Ok(TrainedModel {
        ensemble,
        n_features: p,
        classes,
        normalization,
    })
}

pub fn predict(model: &TrainedModel, features: ArrayView2<f64>) -> Result<Vec<usize>> {
    if features.ncols() != model.n_features {
        return Err(Error::FeatureCountMismatch {
            expected: model.n_features,
            actual: features.ncols(),
        });
    }
    let x: Array2<f64> = model.normalization.apply(features)?;
    let local: Vec<usize> = match &model.ensemble {
        Ensemble::Constant(c) => vec![*c; x.nrows()],
        Ensemble::Forest(f) => f.predict(x.view()),
        Ensemble::Boosted(b) => b.predict(x.view()),
    };
    Ok(local.into_iter().map(|c| model.classes[c]).collect())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream seed for a (base seed, stream index) pair.
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(base) ^ splitmix64(stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_class_predicts_that_class() {
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let model = fit(&ClassifierSpec::random_forest(0), x.view(), &[4, 4, 4]).unwrap();
        assert_eq!(predict(&model, array![[9.0, -1.0]].view()).unwrap(), vec![4]);
    }

    #[test]
    fn feature_count_checked() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let model = fit(&ClassifierSpec::random_forest(0), x.view(), &[0, 0, 1, 1]).unwrap();
        assert!(matches!(
            predict(&model, array![[0.0, 1.0]].view()),
            Err(Error::FeatureCountMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn empty_features_rejected() {
        let x = Array2::<f64>::zeros((3, 0));
        assert!(matches!(
            fit(&ClassifierSpec::random_forest(0), x.view(), &[0, 1, 0]),
            Err(Error::EmptyFeatures)
        ));
    }

    #[test]
    fn invalid_specs() {
        let mut s = ClassifierSpec::gradient_boosting(0);
        s.learning_rate = 0.0;
        assert!(s.validate().is_err());
        s.learning_rate = 1.0;
        assert!(s.validate().is_ok());
        s.n_trees = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn labels_keep_original_values() {
        let x = array![[0.0], [0.1], [0.2], [5.0], [5.1], [5.2]];
        let y = [3, 3, 3, 7, 7, 7];
        for spec in [ClassifierSpec::random_forest(1), ClassifierSpec::gradient_boosting(1)] {
            let model = fit(&spec, x.view(), &y).unwrap();
            assert_eq!(model.classes(), &[3, 7]);
            assert_eq!(predict(&model, x.view()).unwrap(), y.to_vec());
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }
}
