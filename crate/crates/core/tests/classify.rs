use bandsel::classify::*;
use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gaussian-ish blobs around class-specific centers.
fn blobs(n_per_class: usize, n_classes: usize, spread: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_per_class * n_classes;
    let mut x = Array2::zeros((n, 3));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % n_classes;
        y.push(c);
        for j in 0..3 {
            let center = if j == c % 3 { 3.0 * (1 + c / 3) as f64 } else { 0.0 };
            x[[i, j]] = center + spread * (rng.random::<f64>() - 0.5);
        }
    }
    (x, y)
}

#[test]
fn fitting_is_deterministic() {
    let (x, y) = blobs(30, 4, 4.0, 1);
    for spec in [ClassifierSpec::random_forest(9), ClassifierSpec::gradient_boosting(9)] {
        let a = predict(&fit(&spec, x.view(), &y).unwrap(), x.view()).unwrap();
        let b = predict(&fit(&spec, x.view(), &y).unwrap(), x.view()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn both_ensembles_learn_separable_blobs() {
    let (x, y) = blobs(40, 5, 1.0, 2);
    let plan = make_folds(&y, 5, 0).unwrap();
    for spec in [ClassifierSpec::random_forest(0), ClassifierSpec::gradient_boosting(0)] {
        let r = cross_val_score(x.view(), &y, &spec, &plan).unwrap();
        assert_eq!(r.cvs, 1.0, "{:?}", spec.kind);
        assert_eq!(r.wco, 0);
    }
}

#[test]
fn shuffled_labels_score_at_chance() {
    let (x, mut y) = blobs(60, 5, 1.0, 3);
    y.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
    let plan = make_folds(&y, 5, 0).unwrap();
    let mut spec = ClassifierSpec::random_forest(0);
    spec.n_trees = 50;
    let r = cross_val_score(x.view(), &y, &spec, &plan).unwrap();
    assert!((r.cvs - 0.2).abs() <= 0.05, "cvs {}", r.cvs);
}

#[test]
fn normalization_sees_only_training_rows() {
    let (x, y) = blobs(20, 2, 1.0, 5);
    let plan = make_folds(&y, 4, 0).unwrap();
    for fold in 0..4 {
        let train = plan.train_indices(fold);
        let xt = x.select(ndarray::Axis(0), &train);
        let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let model = fit(&ClassifierSpec::random_forest(0), xt.view(), &yt).unwrap();
        for j in 0..3 {
            let mean = train.iter().map(|&i| x[[i, j]]).sum::<f64>() / train.len() as f64;
            assert!((model.normalization().mean[j] - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn confusion_matrix_accounts_for_every_sample() {
    let (x, y) = blobs(25, 3, 8.0, 6);
    let plan = make_folds(&y, 5, 1).unwrap();
    let r = cross_val_score(x.view(), &y, &ClassifierSpec::random_forest(2), &plan).unwrap();
    let total: u64 = r.confusion.iter().flatten().sum();
    let diagonal: u64 = (0..3).map(|c| r.confusion[c][c]).sum();
    assert_eq!(total as usize, y.len());
    assert_eq!(r.wco, total - diagonal);
    let mean = r.fold_accuracies.iter().sum::<f64>() / 5.0;
    assert!((r.cvs - mean).abs() < 1e-12);
}

#[test]
fn score_is_mean_fold_accuracy() {
    assert!((cv_score(&[0.9, 0.8, 1.0, 0.7, 0.6]) - 0.8).abs() < 1e-12);
    assert_eq!(cv_score(&[1.0; 5]), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_partition_and_stratify(counts in prop::collection::vec(5usize..40, 1..6), k in 2usize..6, seed in any::<u64>()) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let plan = make_folds(&labels, k, seed).unwrap();
        let mut seen = vec![0usize; labels.len()];
        for fold in 0..k {
            let test = plan.test_indices(fold);
            let train = plan.train_indices(fold);
            prop_assert_eq!(test.len() + train.len(), labels.len());
            prop_assert!(test.iter().all(|i| !train.contains(i)));
            for &i in &test {
                seen[i] += 1;
            }
            for (c, &n) in counts.iter().enumerate() {
                let in_fold = test.iter().filter(|&&i| labels[i] == c).count();
                prop_assert!(in_fold == n / k || in_fold == n / k + 1);
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        let sizes = plan.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(make_folds(&labels, k, seed).unwrap(), plan);
    }
}

#[test]
fn too_few_samples_per_class() {
    assert!(make_folds(&[0, 0, 0, 1, 1], 3, 0).is_err());
    assert!(make_folds(&[0, 1, 0, 1], 1, 0).is_err());
}
