//! Authorship attribution over tfidf-weighted character n-grams.

mod features;
mod grid;
mod metrics;
mod svm;

use rayon::prelude::*;

pub use features::{
    build_feature_space, extract_char_ngrams, tfidf_transform, FeatureMatrix, FeatureSpace, NgramCounts, RankedNgrams,
    SparseRow, MAX_ORDER, MIN_ORDER,
};
pub use grid::{grid_search, grid_search_counts, stratified_folds, Attributor, CvRow, GridConfig, GridResult};
pub use metrics::{f1_score, ClassScores, ClassificationReport};
pub use svm::{augmented_gram, train_binary, train_binary_gram, train_svm, BinarySvm, SvmModel, GAP_TOLERANCE, MAX_EPOCHS};

use crate::corpus::DocumentSet;
use crate::error::{Error, Result};

/// Predict every test document and score against the training classes.
pub fn evaluate(model: &SvmModel, space: &FeatureSpace, test_docs: &DocumentSet) -> Result<ClassificationReport> {
    if let Some(doc) = test_docs.documents.iter().find(|d| !model.classes.contains(&d.author)) {
        return Err(Error::UnknownAuthor(doc.author.clone()));
    }
    let predicted: Vec<&str> = test_docs
        .documents
        .par_iter()
        .map(|d| model.predict(&tfidf_transform(&extract_char_ngrams(d), space)))
        .collect();
    let truth: Vec<&str> = test_docs.documents.iter().map(|d| d.author.as_str()).collect();
    ClassificationReport::from_predictions(&model.classes, &truth, &predicted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Provenance, Sentence};

    /// Authors write with disjoint alphabets.
    fn disjoint_set(per_author: usize, offset: usize) -> DocumentSet {
        let alphabets = [("p", "abcdef"), ("q", "ghijkl"), ("r", "mnopqr")];
        let mut docs = Vec::new();
        for (author, letters) in alphabets {
            let letters: Vec<char> = letters.chars().collect();
            for d in 0..per_author {
                let sentences = (0..4)
                    .map(|s| {
                        let words: Vec<String> = (0..5)
                            .map(|w| {
                                (0..4)
                                    .map(|c| letters[(d + offset + s * 3 + w * 2 + c * 5) % letters.len()])
                                    .collect()
                            })
                            .collect();
                        Sentence::new(words.join(" "))
                    })
                    .collect();
                docs.push(Document::new(author, Provenance::RealAlpha, sentences));
            }
        }
        DocumentSet::new(docs)
    }

    fn small_grid() -> GridConfig {
        GridConfig {
            feature_sizes: vec![0, 50, 500],
            c_values: vec![1.0, 10.0],
            cv_folds: 3,
        }
    }

    #[test]
    fn separable_authors_score_perfectly() {
        let train = disjoint_set(6, 0);
        let test = disjoint_set(4, 7);
        let result = grid_search(&train, &small_grid(), 3).unwrap();
        assert_eq!(result.cv_table.len(), 6);
        assert!(result.best_features > 0, "an empty feature space must not win");
        let report = evaluate(&result.attributor.model, &result.attributor.space, &test).unwrap();
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.total(), 12);
    }

    #[test]
    fn ties_pick_the_smallest_cell() {
        let train = disjoint_set(6, 0);
        let grid = GridConfig {
            feature_sizes: vec![500, 50],
            c_values: vec![10.0, 1.0],
            cv_folds: 3,
        };
        let result = grid_search(&train, &grid, 3).unwrap();
        assert!(result.cv_table.iter().all(|r| r.macro_f1 == 1.0));
        assert_eq!((result.best_features, result.best_c), (50, 1.0));
    }

    #[test]
    fn space_ignores_test_documents() {
        let train = disjoint_set(6, 0);
        let a = grid_search(&train, &small_grid(), 3).unwrap();
        let b = grid_search(&train, &small_grid(), 3).unwrap();
        assert_eq!(a.attributor, b.attributor);
        let mut test = disjoint_set(4, 7);
        let r1 = evaluate(&a.attributor.model, &a.attributor.space, &test).unwrap();
        test.documents.reverse();
        let r2 = evaluate(&a.attributor.model, &a.attributor.space, &test).unwrap();
        assert_eq!(r1.confusion, r2.confusion);
    }

    #[test]
    fn unknown_test_author_fails() {
        let train = disjoint_set(6, 0);
        let a = grid_search(&train, &small_grid(), 3).unwrap();
        let mut test = disjoint_set(1, 0);
        test.documents[0].author = "zz".into();
        assert!(matches!(
            evaluate(&a.attributor.model, &a.attributor.space, &test),
            Err(Error::UnknownAuthor(x)) if x == "zz"
        ));
    }
}
