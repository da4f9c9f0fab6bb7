//! Experiment harness: train / two-fold cross-validation accuracy in the
//! high-dimensional and embedded spaces, the transductive test pipeline and
//! multi-class logloss.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::ClassLabel;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::features::SparseDataset;
use crate::rng::SplitMix64;
use crate::svm::{ovo_train, SvmConfig};
use crate::tsne::{tsne_embed, TsneConfig};

/// Accuracy table for one feature set, high-dimensional vs 2-d.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub feature_set: String,
    pub train_acc_high: f64,
    pub train_acc_low: f64,
    pub cv_acc_high: f64,
    pub cv_acc_low: f64,
    pub seed: u64,
    pub config_summary: String,
    pub caveats: Vec<String>,
}

pub const REPORT_CSV_HEADER: &str =
    "feature_set,train_acc_highd,train_acc_2d,cv_acc_highd,cv_acc_2d,seed,config";

impl ExperimentReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.2},{:.2},{:.2},{:.2},{},{}",
            self.feature_set,
            self.train_acc_high,
            self.train_acc_low,
            self.cv_acc_high,
            self.cv_acc_low,
            self.seed,
            self.config_summary
        )
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "feature set: {}", self.feature_set);
        let _ = writeln!(out, "  config: {}", self.config_summary);
        let _ = writeln!(out, "  seed: {}", self.seed);
        let _ = writeln!(
            out,
            "  training accuracy:   {:>6.2}% (high-d)  {:>6.2}% (2-d)",
            self.train_acc_high, self.train_acc_low
        );
        let _ = writeln!(
            out,
            "  two-fold CV accuracy: {:>6.2}% (high-d)  {:>6.2}% (2-d)",
            self.cv_acc_high, self.cv_acc_low
        );
        for caveat in &self.caveats {
            let _ = writeln!(out, "  note: {caveat}");
        }
        out
    }
}

pub fn write_reports_csv(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for report in reports {
        out.push_str(&report.csv_row());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_reports_text(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let mut out = String::new();
    for report in reports {
        out.push_str(&report.text());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Per-sample class probability rows (each sums to one).
#[derive(Debug, Clone)]
pub struct ProbPredictions {
    pub classes: Vec<ClassLabel>,
    pub sample_ids: Vec<String>,
    pub probs: DenseMatrix,
}

impl ProbPredictions {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("sample_id");
        for c in &self.classes {
            let _ = write!(out, ",p{c}");
        }
        out.push('\n');
        for (i, id) in self.sample_ids.iter().enumerate() {
            let _ = write!(out, "{id}");
            for j in 0..self.classes.len() {
                let _ = write!(out, ",{}", self.probs.get(i, j));
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<ProbPredictions> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let display = path.display().to_string();
        let mut lines = text.lines().enumerate();
        let classes: Vec<ClassLabel> = match lines.next() {
            Some((_, header)) if header.starts_with("sample_id") => header
                .split(',')
                .skip(1)
                .map(|col| {
                    col.strip_prefix('p')
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| Error::parse(&display, 1, format!("bad column {col:?}")))
                })
                .collect::<Result<_>>()?,
            _ => return Err(Error::parse(&display, 1, "expected sample_id,p... header")),
        };
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let line_no = idx + 1;
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != classes.len() + 1 {
                return Err(Error::parse(&display, line_no, "column count mismatch"));
            }
            ids.push(parts[0].to_string());
            let row: Vec<f64> = parts[1..]
                .iter()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::parse(&display, line_no, "bad probability"))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        Ok(ProbPredictions {
            classes,
            sample_ids: ids,
            probs: DenseMatrix::from_rows(&rows)?,
        })
    }
}

/// `100 * matches / total`.
pub fn accuracy(predicted: &[ClassLabel], truth: &[ClassLabel]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::InvalidInput("prediction/label length mismatch".into()));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty set".into()));
    }
    let matches = predicted
        .iter()
        .zip(truth.iter())
        .filter(|(a, b)| a == b)
        .count();
    Ok(100.0 * matches as f64 / truth.len() as f64)
}

/// Classifier run inside the folds.
#[derive(Debug, Clone)]
pub enum Classifier {
    Svm(SvmConfig),
    /// Ignores features, predicts the training fold's majority class.
    Majority,
}

fn stratified_halves(y: &[ClassLabel], seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut by_class: HashMap<ClassLabel, Vec<usize>> = HashMap::new();
    for (i, &label) in y.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }
    let mut classes: Vec<ClassLabel> = by_class.keys().copied().collect();
    classes.sort_unstable();
    let mut fold_a = Vec::new();
    let mut fold_b = Vec::new();
    for class in classes {
        let rows = &by_class[&class];
        if rows.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} sample(s); two-fold CV needs at least 2",
                rows.len()
            )));
        }
        let mut shuffled = rows.clone();
        SplitMix64::substream(seed, class as u64).shuffle(&mut shuffled);
        let half = shuffled.len().div_ceil(2);
        fold_a.extend_from_slice(&shuffled[..half]);
        fold_b.extend_from_slice(&shuffled[half..]);
    }
    fold_a.sort_unstable();
    fold_b.sort_unstable();
    Ok((fold_a, fold_b))
}

fn classify_fold(
    x: &DenseMatrix,
    y: &[ClassLabel],
    train_idx: &[usize],
    test_idx: &[usize],
    classifier: &Classifier,
) -> Result<f64> {
    let truth: Vec<ClassLabel> = test_idx.iter().map(|&i| y[i]).collect();
    let predicted: Vec<ClassLabel> = match classifier {
        Classifier::Majority => {
            let mut counts: HashMap<ClassLabel, usize> = HashMap::new();
            for &i in train_idx {
                *counts.entry(y[i]).or_insert(0) += 1;
            }
            let mut ranked: Vec<(ClassLabel, usize)> = counts.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let majority = ranked[0].0;
            vec![majority; test_idx.len()]
        }
        Classifier::Svm(config) => {
            let train_x = x.select_rows(train_idx);
            let train_y: Vec<ClassLabel> = train_idx.iter().map(|&i| y[i]).collect();
            let model = ovo_train(&train_x, &train_y, config)?;
            test_idx
                .iter()
                .map(|&i| model.predict(x.row(i)))
                .collect::<Result<_>>()?
        }
    };
    accuracy(&predicted, &truth)
}

/// Stratified two-fold cross-validation: train on each half, test on the
/// other, report the mean accuracy. When the surrounding pipeline includes
/// t-SNE the embedding is computed once on the full set and `x` already
/// holds embedded points, matching the transductive usage.
pub fn two_fold_cv(
    x: &DenseMatrix,
    y: &[ClassLabel],
    classifier: &Classifier,
    seed: u64,
) -> Result<f64> {
    if x.n_rows() != y.len() {
        return Err(Error::InvalidInput("rows/labels length mismatch".into()));
    }
    let (fold_a, fold_b) = stratified_halves(y, seed)?;
    let acc_a = classify_fold(x, y, &fold_a, &fold_b, classifier)?;
    let acc_b = classify_fold(x, y, &fold_b, &fold_a, classifier)?;
    Ok((acc_a + acc_b) / 2.0)
}

/// Accuracy of a model trained and evaluated on the full set.
pub fn train_accuracy(x: &DenseMatrix, y: &[ClassLabel], config: &SvmConfig) -> Result<f64> {
    let model = ovo_train(x, y, config)?;
    let predicted: Vec<ClassLabel> = (0..x.n_rows())
        .map(|i| model.predict(x.row(i)))
        .collect::<Result<_>>()?;
    accuracy(&predicted, y)
}

/// Fills the four accuracy cells with the same SVC configuration in both
/// spaces (gamma resolved per space as 1/n_features).
pub fn compare_spaces(
    high: &DenseMatrix,
    low: &DenseMatrix,
    y: &[ClassLabel],
    svm_config: &SvmConfig,
    seed: u64,
    feature_set: &str,
    config_summary: &str,
) -> Result<ExperimentReport> {
    if high.n_rows() != low.n_rows() || high.n_rows() != y.len() {
        return Err(Error::InvalidInput(
            "high-d and 2-d datasets must be row-aligned with the labels".into(),
        ));
    }
    let classifier = Classifier::Svm(svm_config.clone());
    Ok(ExperimentReport {
        feature_set: feature_set.to_string(),
        train_acc_high: train_accuracy(high, y, svm_config)?,
        train_acc_low: train_accuracy(low, y, svm_config)?,
        cv_acc_high: two_fold_cv(high, y, &classifier, seed)?,
        cv_acc_low: two_fold_cv(low, y, &classifier, seed)?,
        seed,
        config_summary: config_summary.to_string(),
        caveats: vec![
            "2-d CV reuses one embedding computed on the full set (transductive); fold leakage is optimistic by construction".to_string(),
        ],
    })
}

/// Transductive test pipeline: embed the union of train and test with t-SNE,
/// fit the calibrated SVC on the embedded train rows only, and return class
/// probabilities for the embedded test rows.
pub fn transductive_predict(
    train: &SparseDataset,
    test: &SparseDataset,
    test_ids: &[String],
    tsne_config: &TsneConfig,
    svm_config: &SvmConfig,
) -> Result<ProbPredictions> {
    if train.dimensionality != test.dimensionality {
        return Err(Error::InvalidInput(format!(
            "train ({}) and test ({}) feature spaces differ",
            train.dimensionality, test.dimensionality
        )));
    }
    if test_ids.len() != test.n_rows() {
        return Err(Error::InvalidInput("test id count mismatch".into()));
    }
    for (i, row) in train.rows.iter().enumerate() {
        if row.label.is_none() {
            return Err(Error::InvalidInput(format!(
                "train row {i} is unlabeled; labeled/unlabeled mix-up"
            )));
        }
    }
    for (i, row) in test.rows.iter().enumerate() {
        if row.label.is_some() {
            return Err(Error::InvalidInput(format!(
                "test row {i} carries a label; labeled/unlabeled mix-up"
            )));
        }
    }

    let union = train.to_dense().vstack(&test.to_dense())?;
    let embedding = tsne_embed(&union, tsne_config)?;
    let n_train = train.n_rows();

    let train_idx: Vec<usize> = (0..n_train).collect();
    let embedded_train = embedding.y.select_rows(&train_idx);
    let train_labels: Vec<ClassLabel> = train.rows.iter().map(|r| r.label.unwrap()).collect();
    let model = ovo_train(&embedded_train, &train_labels, svm_config)?;

    let mut rows = Vec::with_capacity(test.n_rows());
    for i in 0..test.n_rows() {
        rows.push(model.predict_proba(embedding.y.row(n_train + i))?);
    }
    let probs = if rows.is_empty() {
        DenseMatrix::zeros(0, model.classes.len())
    } else {
        DenseMatrix::from_rows(&rows)?
    };
    Ok(ProbPredictions {
        classes: model.classes,
        sample_ids: test_ids.to_vec(),
        probs,
    })
}

/// Multi-class logloss `-(1/N) sum_i sum_j y_ij ln p_ij` with probabilities
/// clipped to `[1e-15, 1 - 1e-15]`.
pub fn logloss(preds: &ProbPredictions, truth: &[ClassLabel]) -> Result<f64> {
    if preds.sample_ids.len() != truth.len() {
        return Err(Error::InvalidInput("prediction/label length mismatch".into()));
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("logloss of an empty set".into()));
    }
    let slot: HashMap<ClassLabel, usize> = preds
        .classes
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i))
        .collect();
    let mut total = 0.0;
    for (i, &label) in truth.iter().enumerate() {
        let Some(&j) = slot.get(&label) else {
            return Err(Error::InvalidInput(format!(
                "label {label} outside the prediction class set"
            )));
        };
        let p = preds.probs.get(i, j).clamp(1e-15, 1.0 - 1e-15);
        total -= p.ln();
    }
    Ok(total / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;
    use crate::svm::Gamma;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 100.0);
        assert_eq!(accuracy(&[1, 1, 1], &[2, 2, 2]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 5]).unwrap(), 75.0);
        assert!(accuracy(&[], &[]).is_err());
    }

    fn uniform_predictions(n: usize, k: usize) -> ProbPredictions {
        ProbPredictions {
            classes: (1..=k as u32).collect(),
            sample_ids: (0..n).map(|i| format!("s{i}")).collect(),
            probs: DenseMatrix::from_vec(n, k, vec![1.0 / k as f64; n * k]).unwrap(),
        }
    }

    #[test]
    fn logloss_uniform_is_ln_9() {
        let preds = uniform_predictions(50, 9);
        let truth: Vec<ClassLabel> = (0..50).map(|i| (i % 9) as u32 + 1).collect();
        let loss = logloss(&preds, &truth).unwrap();
        assert!((loss - 2.1972245773362196).abs() < 1e-12, "{loss}");
    }

    #[test]
    fn logloss_perfect_is_zero() {
        let mut probs = DenseMatrix::zeros(4, 3);
        let truth = [1u32, 2, 3, 2];
        for (i, &t) in truth.iter().enumerate() {
            probs.set(i, (t - 1) as usize, 1.0);
        }
        let preds = ProbPredictions {
            classes: vec![1, 2, 3],
            sample_ids: (0..4).map(|i| format!("s{i}")).collect(),
            probs,
        };
        let loss = logloss(&preds, &truth).unwrap();
        assert!(loss.abs() < 1e-12, "{loss}");
    }

    #[test]
    fn logloss_single_sample_half_probability() {
        let preds = ProbPredictions {
            classes: vec![1, 2],
            sample_ids: vec!["a".into()],
            probs: DenseMatrix::from_vec(1, 2, vec![0.5, 0.5]).unwrap(),
        };
        let loss = logloss(&preds, &[1]).unwrap();
        // -ln(0.5) = ln 2 = 0.693147...
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn logloss_permutation_invariant_and_monotone() {
        let probs = DenseMatrix::from_rows(&[
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let preds = ProbPredictions {
            classes: vec![1, 2, 3],
            sample_ids: vec!["a".into(), "b".into(), "c".into()],
            probs: probs.clone(),
        };
        let truth = [1u32, 2, 3];
        let base = logloss(&preds, &truth).unwrap();

        let permuted = ProbPredictions {
            classes: vec![1, 2, 3],
            sample_ids: vec!["c".into(), "a".into(), "b".into()],
            probs: probs.select_rows(&[2, 0, 1]),
        };
        let loss_perm = logloss(&permuted, &[3, 1, 2]).unwrap();
        assert!((base - loss_perm).abs() < 1e-15);

        // Raising the true-class probability strictly lowers the loss.
        let mut better = probs.clone();
        better.set(2, 2, 0.6);
        better.set(2, 0, 0.2);
        let preds_better = ProbPredictions {
            classes: vec![1, 2, 3],
            sample_ids: preds.sample_ids.clone(),
            probs: better,
        };
        assert!(logloss(&preds_better, &truth).unwrap() < base);
    }

    #[test]
    fn logloss_unknown_label_rejected() {
        let preds = uniform_predictions(2, 3);
        assert!(logloss(&preds, &[1, 9]).is_err());
    }

    #[test]
    fn majority_baseline_on_unbalanced_pair() {
        // Sizes in ratio 2942:42.
        let mut y = vec![3u32; 2942];
        y.extend(vec![5u32; 42]);
        let x = DenseMatrix::zeros(y.len(), 1);
        let acc = two_fold_cv(&x, &y, &Classifier::Majority, 42).unwrap();
        assert!(
            (98.59..=98.61).contains(&acc),
            "majority baseline accuracy {acc}"
        );
    }

    #[test]
    fn majority_cv_equals_majority_fraction_exactly() {
        let mut y = Vec::new();
        for class in 1..=3u32 {
            for _ in 0..(class * 4) {
                y.push(class);
            }
        }
        let x = DenseMatrix::zeros(y.len(), 2);
        let acc = two_fold_cv(&x, &y, &Classifier::Majority, 7).unwrap();
        let majority_fraction = 100.0 * 12.0 / 24.0;
        assert_eq!(acc, majority_fraction);
    }

    #[test]
    fn cv_is_deterministic_and_rejects_singleton_classes() {
        let mut rng = SplitMix64::new(51);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let offset = if i % 2 == 0 { 3.0 } else { -3.0 };
                vec![rng.next_gaussian() + offset, rng.next_gaussian()]
            })
            .collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let y: Vec<ClassLabel> = (0..20).map(|i| (i % 2) as u32 + 1).collect();
        let config = SvmConfig {
            gamma: Gamma::Value(0.5),
            ..SvmConfig::default()
        };
        let a = two_fold_cv(&x, &y, &Classifier::Svm(config.clone()), 9).unwrap();
        let b = two_fold_cv(&x, &y, &Classifier::Svm(config), 9).unwrap();
        assert_eq!(a, b);

        let mut y_bad = y.clone();
        y_bad[0] = 7;
        let err = two_fold_cv(&x, &y_bad, &Classifier::Majority, 9).unwrap_err();
        assert!(err.to_string().contains('7'), "{err}");
    }

    #[test]
    fn identical_halves_make_cv_equal_train_accuracy() {
        // Every class is a set of identical points, so both folds hold the
        // same multiset and CV degenerates to training accuracy.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for class in 1..=3u32 {
            for _ in 0..6 {
                rows.push(vec![class as f64 * 5.0, -(class as f64)]);
                y.push(class);
            }
        }
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let config = SvmConfig {
            gamma: Gamma::Value(1.0),
            ..SvmConfig::default()
        };
        let cv = two_fold_cv(&x, &y, &Classifier::Svm(config.clone()), 3).unwrap();
        let train = train_accuracy(&x, &y, &config).unwrap();
        assert_eq!(cv, train);
        assert_eq!(cv, 100.0);
    }

    fn blob_sparse(
        class: ClassLabel,
        center: f64,
        n: usize,
        rng: &mut SplitMix64,
        labeled: bool,
    ) -> Vec<SparseVector> {
        (0..n)
            .map(|_| {
                let values: Vec<f64> = (0..4)
                    .map(|_| (center + rng.next_gaussian() * 0.1).abs().max(0.05))
                    .collect();
                SparseVector::new(
                    vec![1, 2, 3, 4],
                    values,
                    if labeled { Some(class) } else { None },
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn transductive_duplicate_of_train_point_gets_its_label() {
        let mut rng = SplitMix64::new(61);
        let mut train_rows = Vec::new();
        train_rows.extend(blob_sparse(1, 1.0, 20, &mut rng, true));
        train_rows.extend(blob_sparse(2, 10.0, 20, &mut rng, true));
        let train = SparseDataset::new(train_rows.clone(), 4).unwrap();

        // Test points: exact duplicates of one train point per class.
        let mut test_rows = Vec::new();
        for &src in &[0usize, 20] {
            let mut dup = train_rows[src].clone();
            dup.label = None;
            test_rows.push(dup);
        }
        let test = SparseDataset::new(test_rows, 4).unwrap();
        // Step size scaled to the 42-point problem; the reference 200 is
        // tuned for corpora in the thousands.
        let tsne_config = TsneConfig {
            perplexity: 10.0,
            learning_rate: 20.0,
            ..TsneConfig::default()
        };
        let preds = transductive_predict(
            &train,
            &test,
            &["d1".into(), "d2".into()],
            &tsne_config,
            &SvmConfig::default(),
        )
        .unwrap();
        assert_eq!(preds.probs.n_rows(), 2);
        for i in 0..2 {
            let row: Vec<f64> = (0..preds.classes.len()).map(|j| preds.probs.get(i, j)).collect();
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9, "{row:?}");
            let best = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(preds.classes[best], (i as u32) + 1, "{row:?}");
        }
    }

    #[test]
    fn transductive_empty_test_set_gives_empty_predictions() {
        let mut rng = SplitMix64::new(67);
        let mut train_rows = Vec::new();
        train_rows.extend(blob_sparse(1, 1.0, 10, &mut rng, true));
        train_rows.extend(blob_sparse(2, 8.0, 10, &mut rng, true));
        let train = SparseDataset::new(train_rows, 4).unwrap();
        let test = SparseDataset::new(vec![], 4).unwrap();
        let preds = transductive_predict(
            &train,
            &test,
            &[],
            &TsneConfig {
                perplexity: 5.0,
                n_iter: 100,
                ..TsneConfig::default()
            },
            &SvmConfig::default(),
        )
        .unwrap();
        assert!(preds.sample_ids.is_empty());
        assert_eq!(preds.probs.n_rows(), 0);
    }

    #[test]
    fn transductive_rejects_label_mixups() {
        let mut rng = SplitMix64::new(69);
        let labeled = SparseDataset::new(blob_sparse(1, 1.0, 5, &mut rng, true), 4).unwrap();
        let unlabeled = SparseDataset::new(blob_sparse(1, 1.0, 5, &mut rng, false), 4).unwrap();
        let ids: Vec<String> = (0..5).map(|i| format!("t{i}")).collect();
        let tsne_config = TsneConfig::default();
        let svm_config = SvmConfig::default();
        // Unlabeled rows in the train set.
        assert!(
            transductive_predict(&unlabeled, &unlabeled, &ids, &tsne_config, &svm_config).is_err()
        );
        // Labeled rows in the test set.
        assert!(
            transductive_predict(&labeled, &labeled, &ids, &tsne_config, &svm_config).is_err()
        );
    }

    #[test]
    fn predictions_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("predictions.csv");
        let preds = ProbPredictions {
            classes: vec![2, 3],
            sample_ids: vec!["a".into(), "b".into()],
            probs: DenseMatrix::from_rows(&[vec![0.25, 0.75], vec![0.5, 0.5]]).unwrap(),
        };
        preds.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("sample_id,p2,p3\n"));
        let back = ProbPredictions::read_csv(&path).unwrap();
        assert_eq!(back.classes, preds.classes);
        assert_eq!(back.sample_ids, preds.sample_ids);
        assert_eq!(back.probs, preds.probs);
    }
}
