use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, fit, predict, ClassifierSpec};
use crate::error::{Error, Result};

/// Fold assignment for every sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified folds: each class is shuffled, then dealt round-robin. The
/// dealing position carries over between classes so overall fold sizes also
/// stay within one of each other.
pub fn make_folds(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k = {k}, at least 2 folds are needed")));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    for (class, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < k {
            return Err(Error::TooFewSamplesPerClass {
                class,
                count: m.len(),
                k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut position = 0;
    for mut m in members {
        m.shuffle(&mut rng);
        for i in m {
            assignments[i] = position % k;
            position += 1;
        }
    }
    Ok(FoldPlan { k, assignments })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub cvs: f64,
    /// `confusion[true][predicted]`, summed over folds.
    pub confusion: Vec<Vec<u64>>,
    /// Misclassified test samples over all folds.
    pub wco: u64,
}

/// Mean of the per-fold accuracies.
pub fn cv_score(fold_accuracies: &[f64]) -> f64 {
    fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64
}

const FOLD_STREAM: u64 = 1 << 40;

pub fn cross_val_score(
    features: ArrayView2<f64>,
    labels: &[usize],
    spec: &ClassifierSpec,
    plan: &FoldPlan,
) -> Result<CvReport> {
    if plan.assignments.len() != labels.len() || features.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            actual: plan.assignments.len().min(features.nrows()),
        });
    }
    if plan.k < 2 || plan.assignments.iter().any(|&f| f >= plan.k) {
        return Err(Error::InvalidConfig("fold plan does not match k".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let folds: Vec<Result<(f64, Vec<(usize, usize)>)>> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let train = plan.train_indices(fold);
            let test = plan.test_indices(fold);
            if test.is_empty() || train.is_empty() {
                return Err(Error::InvalidConfig(format!("fold {fold} is empty")));
            }
            let train_y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let fold_spec = spec.with_seed(derive_seed(spec.seed, FOLD_STREAM + fold as u64));
            let model = fit(&fold_spec, features.select(Axis(0), &train).view(), &train_y)?;
            let predicted = predict(&model, features.select(Axis(0), &test).view())?;
            let pairs: Vec<(usize, usize)> = test.iter().map(|&i| labels[i]).zip(predicted).collect();
            let correct = pairs.iter().filter(|(t, p)| t == p).count();
            Ok((correct as f64 / test.len() as f64, pairs))
        })
        .collect();

    let mut fold_accuracies = Vec::with_capacity(plan.k);
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    for fold in folds {
        let (acc, pairs) = fold?;
        fold_accuracies.push(acc);
        for (t, p) in pairs {
            confusion[t][p] += 1;
        }
    }
    let total: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..n_classes).map(|c| confusion[c][c]).sum();
    Ok(CvReport {
        cvs: cv_score(&fold_accuracies),
        fold_accuracies,
        confusion,
        wco: total - trace,
    })
}
