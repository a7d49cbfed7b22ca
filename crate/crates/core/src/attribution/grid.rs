use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{extract_char_ngrams, FeatureMatrix, FeatureSpace, NgramCounts, RankedNgrams};
use super::metrics::ClassificationReport;
use super::svm::{train_svm, SvmModel};
use crate::corpus::DocumentSet;
use crate::error::{Error, Result};
use crate::seeding::{derive_seed, derived_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub feature_sizes: Vec<usize>,
    pub c_values: Vec<f64>,
    pub cv_folds: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            feature_sizes: vec![5000, 10000, 15000, 30000],
            c_values: vec![1.0, 10.0, 100.0, 1000.0],
            cv_folds: 3,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.feature_sizes.is_empty() || self.c_values.is_empty() {
            return Err(Error::InvalidParameter("grid lists must be non-empty".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidParameter(format!("cv_folds must be at least 2, got {}", self.cv_folds)));
        }
        if let Some(c) = self.c_values.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(format!("C values must be positive, got {c}")));
        }
        Ok(())
    }
}

/// Fold index per document: each author's documents are shuffled and dealt
/// round-robin over `k` folds.
pub fn stratified_folds(labels: &[&str], k: usize, seed: u64) -> Result<Vec<usize>> {
    let mut by_author: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_author.entry(l).or_default().push(i);
    }
    let mut folds = vec![0; labels.len()];
    for (author, mut indices) in by_author {
        if indices.len() < k {
            return Err(Error::TooFewDocuments {
                author: author.to_string(),
                found: indices.len(),
                required: k,
            });
        }
        indices.shuffle(&mut derived_rng(seed, &format!("folds/{author}")));
        for (j, i) in indices.into_iter().enumerate() {
            folds[i] = j % k;
        }
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub max_features: usize,
    pub c: f64,
    pub macro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
}

/// Chosen hyper-parameters with the model refit on all training documents.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_features: usize,
    pub best_c: f64,
    pub attributor: Attributor,
    pub cv_table: Vec<CvRow>,
}

/// A feature space together with the classifier trained over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attributor {
    pub space: FeatureSpace,
    pub model: SvmModel,
}

impl Attributor {
    pub fn fit(train_docs: &DocumentSet, max_features: usize, c: f64, seed: u64) -> Result<Attributor> {
        let counts: Vec<NgramCounts> = train_docs.documents.iter().map(extract_char_ngrams).collect();
        let labels: Vec<String> = train_docs.documents.iter().map(|d| d.author.clone()).collect();
        let refs: Vec<&NgramCounts> = counts.iter().collect();
        fit_counts(&refs, labels, max_features, c, seed)
    }

    pub fn predict_counts(&self, counts: &NgramCounts) -> &str {
        self.model.predict(&super::features::tfidf_transform(counts, &self.space))
    }
}

fn fit_counts(counts: &[&NgramCounts], labels: Vec<String>, max_features: usize, c: f64, seed: u64) -> Result<Attributor> {
    let space = RankedNgrams::from_counts(counts.iter().copied())?.space(max_features);
    let x = FeatureMatrix::from_counts(counts, labels, &space);
    let model = train_svm(&x, c, derive_seed(seed, "svm"))?;
    Ok(Attributor { space, model })
}

/// Stratified k-fold search over (feature size, C) on precomputed n-gram
/// counts. Predictions are pooled over folds before scoring each cell.
pub fn grid_search_counts(counts: &[&NgramCounts], labels: &[String], grid: &GridConfig, seed: u64) -> Result<GridResult> {
    grid.validate()?;
    if counts.len() != labels.len() {
        return Err(Error::InvalidParameter("counts and labels differ in length".into()));
    }
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let folds = stratified_folds(&label_refs, grid.cv_folds, derive_seed(seed, "grid/folds"))?;
    let mut classes = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }

    // predictions[fold][size][c] holds the fold's test predictions
    let per_fold: Vec<Vec<Vec<Vec<String>>>> = (0..grid.cv_folds)
        .into_par_iter()
        .map(|fold| -> Result<Vec<Vec<Vec<String>>>> {
            let train: Vec<usize> = (0..counts.len()).filter(|&i| folds[i] != fold).collect();
            let test: Vec<usize> = (0..counts.len()).filter(|&i| folds[i] == fold).collect();
            let train_counts: Vec<&NgramCounts> = train.iter().map(|&i| counts[i]).collect();
            let test_counts: Vec<&NgramCounts> = test.iter().map(|&i| counts[i]).collect();
            let train_labels: Vec<String> = train.iter().map(|&i| labels[i].clone()).collect();
            let ranked = RankedNgrams::from_counts(train_counts.iter().copied())?;
            grid.feature_sizes
                .par_iter()
                .map(|&size| {
                    let space = ranked.space(size);
                    let x = FeatureMatrix::from_counts(&train_counts, train_labels.clone(), &space);
                    let x_test = FeatureMatrix::from_counts(&test_counts, Vec::new(), &space);
                    grid.c_values
                        .iter()
                        .map(|&c| {
                            let model = train_svm(&x, c, derive_seed(seed, "svm"))?;
                            Ok(x_test.rows.iter().map(|r| model.predict(r).to_string()).collect())
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut cv_table = Vec::with_capacity(grid.feature_sizes.len() * grid.c_values.len());
    for (si, &size) in grid.feature_sizes.iter().enumerate() {
        for (ci, &c) in grid.c_values.iter().enumerate() {
            let mut truth = Vec::with_capacity(counts.len());
            let mut predicted = Vec::with_capacity(counts.len());
            for (fold, preds) in per_fold.iter().enumerate() {
                let test = (0..counts.len()).filter(|&i| folds[i] == fold);
                for (i, p) in test.zip(&preds[si][ci]) {
                    truth.push(labels[i].as_str());
                    predicted.push(p.as_str());
                }
            }
            let report = ClassificationReport::from_predictions(&classes, &truth, &predicted)?;
            cv_table.push(CvRow {
                max_features: size,
                c,
                macro_f1: report.macro_f1,
                macro_precision: report.macro_precision,
                macro_recall: report.macro_recall,
            });
        }
    }

    let best = cv_table
        .iter()
        .reduce(|best, row| {
            let better = row.macro_f1 > best.macro_f1
                || (row.macro_f1 == best.macro_f1
                    && (row.max_features < best.max_features
                        || (row.max_features == best.max_features && row.c < best.c)));
            if better {
                row
            } else {
                best
            }
        })
        .expect("grid is non-empty");
    let (best_features, best_c) = (best.max_features, best.c);
    let attributor = fit_counts(counts, labels.to_vec(), best_features, best_c, seed)?;
    Ok(GridResult {
        best_features,
        best_c,
        attributor,
        cv_table,
    })
}

pub fn grid_search(train_docs: &DocumentSet, grid: &GridConfig, seed: u64) -> Result<GridResult> {
    if train_docs.is_empty() {
        return Err(Error::EmptyInput("grid search needs training documents"));
    }
    let counts: Vec<NgramCounts> = train_docs.documents.par_iter().map(extract_char_ngrams).collect();
    let refs: Vec<&NgramCounts> = counts.iter().collect();
    let labels: Vec<String> = train_docs.documents.iter().map(|d| d.author.clone()).collect();
    grid_search_counts(&refs, &labels, grid, seed)
}
