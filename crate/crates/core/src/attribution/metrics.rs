use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub author: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-author and macro-averaged scores. `confusion[i][j]` counts documents
/// of author `i` predicted as author `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub authors: Vec<String>,
    pub per_author: Vec<ClassScores>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl ClassificationReport {
    /// Score predictions over the class list `authors` (the training classes).
    pub fn from_predictions(authors: &[String], truth: &[&str], predicted: &[&str]) -> Result<ClassificationReport> {
        if truth.len() != predicted.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let position = |label: &str| {
            authors
                .iter()
                .position(|a| a == label)
                .ok_or_else(|| Error::UnknownAuthor(label.to_string()))
        };
        let k = authors.len();
        let mut confusion = vec![vec![0usize; k]; k];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[position(t)?][position(p)?] += 1;
        }
        Ok(ClassificationReport::from_confusion(authors.to_vec(), confusion))
    }

    pub fn from_confusion(authors: Vec<String>, confusion: Vec<Vec<usize>>) -> ClassificationReport {
        let k = authors.len();
        let per_author: Vec<ClassScores> = (0..k)
            .map(|i| {
                let tp = confusion[i][i];
                let support: usize = confusion[i].iter().sum();
                let predicted: usize = confusion.iter().map(|row| row[i]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                ClassScores {
                    author: authors[i].clone(),
                    precision,
                    recall,
                    f1: f1_score(precision, recall),
                    support,
                }
            })
            .collect();
        let mean = |f: fn(&ClassScores) -> f64| per_author.iter().map(f).sum::<f64>() / k.max(1) as f64;
        ClassificationReport {
            macro_precision: mean(|s| s.precision),
            macro_recall: mean(|s| s.recall),
            macro_f1: mean(|s| s.f1),
            authors,
            per_author,
            confusion,
        }
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let correct: usize = (0..self.authors.len()).map(|i| self.confusion[i][i]).sum();
        ratio(correct, self.total())
    }

    /// Labeled matrix: rows are true authors, columns predicted authors.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for a in &self.authors {
            out.push(',');
            out.push_str(a);
        }
        out.push('\n');
        for (a, row) in self.authors.iter().zip(&self.confusion) {
            out.push_str(a);
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_confusion_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_text(path, &self.confusion_csv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_predictions() {
        let authors = names(&["a", "b"]);
        let r = ClassificationReport::from_predictions(&authors, &["a", "b", "b"], &["a", "b", "b"]).unwrap();
        assert_eq!((r.macro_precision, r.macro_recall, r.macro_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn all_predicted_as_first_class() {
        let r = ClassificationReport::from_confusion(names(&["a", "b"]), vec![vec![5, 0], vec![5, 0]]);
        let a = &r.per_author[0];
        assert_eq!((a.precision, a.recall), (0.5, 1.0));
        assert!((a.f1 - 2.0 / 3.0).abs() < 1e-15);
        let b = &r.per_author[1];
        assert_eq!((b.precision, b.recall, b.f1), (0.0, 0.0, 0.0));
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_author.iter().map(|s| s.support).collect::<Vec<_>>(), vec![5, 5]);
    }

    #[test]
    fn unknown_labels_fail() {
        let authors = names(&["a", "b"]);
        assert!(matches!(
            ClassificationReport::from_predictions(&authors, &["c"], &["a"]),
            Err(Error::UnknownAuthor(c)) if c == "c"
        ));
    }

    #[test]
    fn confusion_csv_layout() {
        let r = ClassificationReport::from_confusion(names(&["a", "b"]), vec![vec![2, 1], vec![0, 3]]);
        assert_eq!(r.confusion_csv(), "true\\predicted,a,b\na,2,1\nb,0,3\n");
        assert_eq!(r.total(), 6);
    }
}
