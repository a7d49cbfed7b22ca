use std::collections::HashMap;

use log::info;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, DocumentSet};
use crate::error::{Error, Result};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 4;

pub type NgramCounts = HashMap<String, u64>;

/// Sparse row: `(feature index, value)` sorted by index.
pub type SparseRow = Vec<(u32, f64)>;

/// Contiguous character 2- to 4-grams inside each sentence.
pub fn extract_char_ngrams(document: &Document) -> NgramCounts {
    let mut counts = NgramCounts::new();
    for sentence in &document.sentences {
        let chars: Vec<char> = sentence.text.chars().collect();
        for n in MIN_ORDER..=MAX_ORDER {
            for window in chars.windows(n) {
                let gram: String = window.iter().collect();
                *counts.entry(gram).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Every training n-gram ordered by total frequency (descending), ties broken
/// lexicographically, together with its document frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedNgrams {
    pub ngrams: Vec<String>,
    pub doc_freq: Vec<usize>,
    pub n_docs: usize,
}

impl RankedNgrams {
    pub fn from_counts<'a>(docs: impl IntoIterator<Item = &'a NgramCounts>) -> Result<RankedNgrams> {
        let mut totals: HashMap<&str, (u64, usize)> = HashMap::new();
        let mut n_docs = 0;
        for counts in docs {
            n_docs += 1;
            for (gram, &c) in counts {
                let entry = totals.entry(gram.as_str()).or_insert((0, 0));
                entry.0 += c;
                entry.1 += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::EmptyInput("feature space needs training documents"));
        }
        let mut ranked: Vec<(&str, u64, usize)> = totals.into_iter().map(|(g, (t, d))| (g, t, d)).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Ok(RankedNgrams {
            ngrams: ranked.iter().map(|r| r.0.to_string()).collect(),
            doc_freq: ranked.iter().map(|r| r.2).collect(),
            n_docs,
        })
    }

    /// The top `max_features` n-grams with smoothed idf weights.
    pub fn space(&self, max_features: usize) -> FeatureSpace {
        let k = max_features.min(self.ngrams.len());
        if k < max_features {
            info!("only {k} distinct n-grams available, {max_features} requested");
        }
        let n = self.n_docs as f64;
        let idf = self.doc_freq[..k]
            .iter()
            .map(|&df| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0)
            .collect();
        FeatureSpace::new(self.ngrams[..k].to_vec(), idf, max_features)
    }
}

/// Frozen vocabulary of n-gram features with idf weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SpaceFile", from = "SpaceFile")]
pub struct FeatureSpace {
    pub ngrams: Vec<String>,
    pub idf: Vec<f64>,
    pub max_features: usize,
    index: HashMap<String, u32>,
}

impl FeatureSpace {
    pub fn new(ngrams: Vec<String>, idf: Vec<f64>, max_features: usize) -> FeatureSpace {
        let index = ngrams.iter().enumerate().map(|(i, g)| (g.clone(), i as u32)).collect();
        FeatureSpace {
            ngrams,
            idf,
            max_features,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn index_of(&self, gram: &str) -> Option<usize> {
        self.index.get(gram).map(|&i| i as usize)
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    ngrams: Vec<String>,
    idf: Vec<f64>,
    max_features: usize,
}

impl From<FeatureSpace> for SpaceFile {
    fn from(s: FeatureSpace) -> SpaceFile {
        SpaceFile {
            ngrams: s.ngrams,
            idf: s.idf,
            max_features: s.max_features,
        }
    }
}

impl From<SpaceFile> for FeatureSpace {
    fn from(f: SpaceFile) -> FeatureSpace {
        FeatureSpace::new(f.ngrams, f.idf, f.max_features)
    }
}

pub fn build_feature_space(train_docs: &DocumentSet, max_features: usize) -> Result<FeatureSpace> {
    let counts: Vec<NgramCounts> = train_docs.documents.iter().map(extract_char_ngrams).collect();
    Ok(RankedNgrams::from_counts(&counts)?.space(max_features))
}

/// `count * idf` over in-space grams, then L2-normalized.
pub fn tfidf_transform(counts: &NgramCounts, space: &FeatureSpace) -> SparseRow {
    let mut row: SparseRow = counts
        .iter()
        .filter_map(|(gram, &c)| {
            space
                .index
                .get(gram)
                .map(|&i| (i, c as f64 * space.idf[i as usize]))
        })
        .collect();
    row.sort_unstable_by_key(|e| e.0);
    let norm = row.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    if norm > 0.0 {
        row.iter_mut().for_each(|e| e.1 /= norm);
    }
    row
}

/// Tfidf rows with their author labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<SparseRow>,
    pub labels: Vec<String>,
    pub dim: usize,
}

impl FeatureMatrix {
    pub fn from_counts(counts: &[&NgramCounts], labels: Vec<String>, space: &FeatureSpace) -> FeatureMatrix {
        FeatureMatrix {
            rows: counts.iter().map(|c| tfidf_transform(c, space)).collect(),
            labels,
            dim: space.len(),
        }
    }

    pub fn from_documents(docs: &DocumentSet, space: &FeatureSpace) -> FeatureMatrix {
        let counts: Vec<NgramCounts> = docs.documents.iter().map(extract_char_ngrams).collect();
        let refs: Vec<&NgramCounts> = counts.iter().collect();
        let labels = docs.documents.iter().map(|d| d.author.clone()).collect();
        FeatureMatrix::from_counts(&refs, labels, space)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Provenance, Sentence};

    fn doc(author: &str, sentences: &[&str]) -> Document {
        Document::new(author, Provenance::RealAlpha, sentences.iter().map(|s| Sentence::new(*s)).collect())
    }

    #[test]
    fn ngram_enumeration() {
        let c = extract_char_ngrams(&doc("a", &["abc"]));
        assert_eq!(c.len(), 3);
        assert_eq!((c["ab"], c["bc"], c["abc"]), (1, 1, 1));
        let c = extract_char_ngrams(&doc("a", &["aaaa"]));
        assert_eq!(c.len(), 3);
        assert_eq!((c["aa"], c["aaa"], c["aaaa"]), (3, 2, 1));
        assert!(extract_char_ngrams(&doc("a", &[])).is_empty());
        // no grams across sentence boundaries, whitespace counts
        let c = extract_char_ngrams(&doc("a", &["ab", "cd e"]));
        assert!(!c.contains_key("bc"));
        assert_eq!(c["d "], 1);
    }

    #[test]
    fn idf_values() {
        let set = DocumentSet::new(vec![doc("a", &["xy"]), doc("b", &["xy zz"])]);
        let space = build_feature_space(&set, 100).unwrap();
        let at = |g: &str| space.idf[space.index_of(g).unwrap()];
        assert_eq!(at("xy"), 1.0);
        assert!((at("zz") - ((1.5f64).ln() + 1.0)).abs() < 1e-15);
        assert!((at("zz") - 1.405).abs() < 1e-3);
    }

    #[test]
    fn selection_by_frequency_then_lexicographic() {
        let set = DocumentSet::new(vec![doc("a", &["abab"]), doc("b", &["cd"])]);
        let space = build_feature_space(&set, 1).unwrap();
        assert_eq!(space.ngrams, vec!["ab".to_string()]);
        // "ba", "cd", "aba", "bab", "abab" all occur once
        let space = build_feature_space(&set, 3).unwrap();
        assert_eq!(space.ngrams, vec!["ab", "aba", "abab"]);
        let all = build_feature_space(&set, 1000).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all.max_features, 1000);
    }

    #[test]
    fn tfidf_rows() {
        let space = FeatureSpace::new(vec!["ab".into(), "cd".into()], vec![1.0, 1.0], 2);
        let counts = |pairs: &[(&str, u64)]| pairs.iter().map(|(g, c)| (g.to_string(), *c)).collect::<NgramCounts>();
        assert!(tfidf_transform(&counts(&[("zz", 4)]), &space).is_empty());
        assert_eq!(tfidf_transform(&counts(&[("cd", 7), ("zz", 1)]), &space), vec![(1, 1.0)]);
        let row = tfidf_transform(&counts(&[("ab", 2), ("cd", 2)]), &space);
        let h = 1.0 / 2f64.sqrt();
        assert!((row[0].1 - h).abs() < 1e-15 && (row[1].1 - h).abs() < 1e-15);
    }

    #[test]
    fn space_json_round_trip() {
        let space = FeatureSpace::new(vec!["ab".into(), "b c".into()], vec![1.0, 1.4], 5);
        let json = serde_json::to_string(&space).unwrap();
        let back: FeatureSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, space);
        assert_eq!(back.index_of("b c"), Some(1));
    }
}
