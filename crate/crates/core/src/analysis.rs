//! PCA of n-gram frequency profiles and Jaccard similarity between authors.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::attribution::{MAX_ORDER, MIN_ORDER};
use crate::corpus::{DocumentSet, Provenance, Sentence};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, fmt_sci};

/// A run of consecutive sentences from one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub sample_id: String,
    pub author: String,
    pub provenance: Provenance,
    pub sentences: Vec<Sentence>,
}

/// Greedily pack each document's sentences into chunks of at least
/// `chunk_words` words; a short remainder is dropped.
pub fn sample_chunks(docs: &DocumentSet, chunk_words: usize) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut doc_index: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs.documents {
        let index = doc_index.entry(doc.author.as_str()).or_insert(0);
        let mut current = Vec::new();
        let mut words = 0;
        let mut n = 0;
        for sentence in &doc.sentences {
            words += sentence.word_count;
            current.push(sentence.clone());
            if words >= chunk_words.max(1) {
                chunks.push(Chunk {
                    sample_id: format!("{}/{}/{}/{}", doc.provenance.as_str(), doc.author, index, n),
                    author: doc.author.clone(),
                    provenance: doc.provenance,
                    sentences: std::mem::take(&mut current),
                });
                words = 0;
                n += 1;
            }
        }
        *index += 1;
    }
    chunks
}

fn char_gram_counts(sentences: &[Sentence]) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for sentence in sentences {
        let chars: Vec<char> = sentence.text.chars().collect();
        for n in MIN_ORDER..=MAX_ORDER {
            for w in chars.windows(n) {
                *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub sample_id: String,
    pub author_id: String,
    pub provenance: Provenance,
    pub freqs: Vec<f64>,
}

/// Relative frequencies (count / all grams in the sample) of the `top_k`
/// grams with the highest pooled count, ties broken lexicographically.
pub fn frequency_profiles(chunks: &[Chunk], top_k: usize) -> (Vec<String>, Vec<FrequencyProfile>) {
    let counts: Vec<HashMap<String, u64>> = chunks.iter().map(|c| char_gram_counts(&c.sentences)).collect();
    let mut pooled: HashMap<&str, u64> = HashMap::new();
    for c in &counts {
        for (g, &n) in c {
            *pooled.entry(g.as_str()).or_insert(0) += n;
        }
    }
    let mut ranked: Vec<(&str, u64)> = pooled.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let grams: Vec<String> = ranked.iter().take(top_k).map(|r| r.0.to_string()).collect();
    let profiles = chunks
        .iter()
        .zip(&counts)
        .map(|(chunk, c)| {
            let total: u64 = c.values().sum();
            let freqs = grams
                .iter()
                .map(|g| {
                    if total == 0 {
                        0.0
                    } else {
                        c.get(g).copied().unwrap_or(0) as f64 / total as f64
                    }
                })
                .collect();
            FrequencyProfile {
                sample_id: chunk.sample_id.clone(),
                author_id: chunk.author.clone(),
                provenance: chunk.provenance,
                freqs,
            }
        })
        .collect();
    (grams, profiles)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// One row per sample, one column per component.
    pub coordinates: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// One row per component, one column per feature.
    pub loadings: Vec<Vec<f64>>,
}

/// Project mean-centered rows onto the leading eigenvectors of their
/// covariance. Each component's largest-magnitude loading is positive.
pub fn pca_project(rows: &[Vec<f64>], components: usize) -> Result<PcaResult> {
    let n = rows.len();
    let d = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParameter("profile rows differ in length".into()));
    }
    let achievable = n.saturating_sub(1).min(d);
    if components == 0 || achievable < components {
        return Err(Error::RankDeficient {
            requested: components,
            achievable,
        });
    }
    let mut x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    for j in 0..d {
        let mean = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = (x.transpose() * &x) / (n - 1) as f64;
    let eigen = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| eigen.eigenvalues[k].max(0.0)).collect();
    let total: f64 = values.iter().sum();

    let mut loadings = Vec::with_capacity(components);
    for &k in order.iter().take(components) {
        let mut v: Vec<f64> = eigen.eigenvectors.column(k).iter().copied().collect();
        let mut lead = 0;
        for (j, value) in v.iter().enumerate() {
            if value.abs() > v[lead].abs() {
                lead = j;
            }
        }
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|e| *e = -*e);
        }
        loadings.push(v);
    }
    let coordinates = (0..n)
        .map(|i| {
            loadings
                .iter()
                .map(|v| x.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let eigenvalues: Vec<f64> = values[..components].to_vec();
    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    Ok(PcaResult {
        coordinates,
        eigenvalues,
        explained_variance_ratio,
        loadings,
    })
}

/// Chunk, profile and project in one go.
pub fn pca_of_documents(
    docs: &DocumentSet,
    chunk_words: usize,
    top_k: usize,
    components: usize,
) -> Result<(Vec<String>, Vec<FrequencyProfile>, PcaResult)> {
    let chunks = sample_chunks(docs, chunk_words);
    if chunks.is_empty() {
        return Err(Error::InvalidParameter(format!("no document holds {chunk_words} words to chunk")));
    }
    let (grams, profiles) = frequency_profiles(&chunks, top_k);
    let rows: Vec<Vec<f64>> = profiles.iter().map(|p| p.freqs.clone()).collect();
    let pca = pca_project(&rows, components)?;
    Ok((grams, profiles, pca))
}

pub fn pca_csv(profiles: &[FrequencyProfile], pca: &PcaResult) -> String {
    let k = pca.loadings.len();
    let mut out = String::from("sample_id,author,provenance");
    for c in 1..=k {
        let _ = write!(out, ",pc{c}");
    }
    out.push('\n');
    for (p, coords) in profiles.iter().zip(&pca.coordinates) {
        let _ = write!(out, "{},{},{}", p.sample_id, p.author_id, p.provenance.as_str());
        for v in coords {
            let _ = write!(out, ",{}", fmt_sci(*v));
        }
        out.push('\n');
    }
    out
}

pub fn loadings_csv(grams: &[String], pca: &PcaResult) -> String {
    let mut out = String::from("gram");
    for c in 1..=pca.loadings.len() {
        let _ = write!(out, ",pc{c}");
    }
    out.push('\n');
    for (j, g) in grams.iter().enumerate() {
        out.push_str(&csv_field(g));
        for v in &pca.loadings {
            let _ = write!(out, ",{}", fmt_sci(v[j]));
        }
        out.push('\n');
    }
    out
}

pub fn variance_csv(pca: &PcaResult) -> String {
    let mut out = String::from("component,eigenvalue,explained_variance_ratio\n");
    for (c, (v, r)) in pca.eigenvalues.iter().zip(&pca.explained_variance_ratio).enumerate() {
        let _ = writeln!(out, "pc{},{},{}", c + 1, fmt_sci(*v), fmt_f64(*r));
    }
    out
}

/// `pca_<tag>.csv`, `pca_<tag>_loadings.csv`, `pca_<tag>_variance.csv`.
pub fn write_pca(dir: &Path, tag: &str, grams: &[String], profiles: &[FrequencyProfile], pca: &PcaResult) -> Result<()> {
    crate::io::write_text(&dir.join(format!("pca_{tag}.csv")), &pca_csv(profiles, pca))?;
    crate::io::write_text(&dir.join(format!("pca_{tag}_loadings.csv")), &loadings_csv(grams, pca))?;
    crate::io::write_text(&dir.join(format!("pca_{tag}_variance.csv")), &variance_csv(pca))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.starts_with(' ') || s.ends_with(' ') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GramKind {
    Char,
    Word,
}

impl GramKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GramKind::Char => "char",
            GramKind::Word => "word",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    MeanNormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaccardMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub normalization: Normalization,
    pub gram_kind: GramKind,
}

/// Type set of all order 2-4 grams of the given kind, within sentences.
pub fn gram_set(docs: &DocumentSet, kind: GramKind) -> HashSet<String> {
    let mut set = HashSet::new();
    for doc in &docs.documents {
        for sentence in &doc.sentences {
            match kind {
                GramKind::Char => {
                    let chars: Vec<char> = sentence.text.chars().collect();
                    for n in MIN_ORDER..=MAX_ORDER {
                        set.extend(chars.windows(n).map(|w| w.iter().collect::<String>()));
                    }
                }
                GramKind::Word => {
                    let words: Vec<&str> = sentence.text.split_whitespace().collect();
                    for n in MIN_ORDER..=MAX_ORDER {
                        set.extend(words.windows(n).map(|w| w.join(" ")));
                    }
                }
            }
        }
    }
    set
}

pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let inter = small.iter().filter(|g| large.contains(*g)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// The `k` authors with the most words in `docs`, ties broken by name.
pub fn most_prolific(docs: &DocumentSet, k: usize) -> Vec<String> {
    let mut words: Vec<(String, usize)> = docs
        .by_author()
        .into_iter()
        .map(|(a, d)| (a.to_string(), d.iter().map(|x| x.word_count).sum()))
        .collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut roster: Vec<String> = words.into_iter().take(k).map(|w| w.0).collect();
    roster.sort();
    roster
}

/// Raw Jaccard similarity between every author of `set_a` (rows) and every
/// author of `set_b` (columns) over `roster`.
pub fn jaccard_matrix(set_a: &DocumentSet, set_b: &DocumentSet, roster: &[String], kind: GramKind) -> Result<JaccardMatrix> {
    let grams = |set: &DocumentSet| -> Result<Vec<HashSet<String>>> {
        roster
            .iter()
            .map(|author| {
                let g = gram_set(&set.for_author(author), kind);
                if g.is_empty() {
                    Err(Error::InvalidParameter(format!("author {author} has no {} grams", kind.as_str())))
                } else {
                    Ok(g)
                }
            })
            .collect()
    };
    let ga = grams(set_a)?;
    let gb = grams(set_b)?;
    let values = ga.iter().map(|a| gb.iter().map(|b| jaccard(a, b)).collect()).collect();
    Ok(JaccardMatrix {
        rows: roster.to_vec(),
        cols: roster.to_vec(),
        values,
        normalization: Normalization::Raw,
        gram_kind: kind,
    })
}

impl JaccardMatrix {
    pub fn grand_mean(&self) -> f64 {
        let n: usize = self.values.iter().map(|r| r.len()).sum();
        self.values.iter().flatten().sum::<f64>() / n.max(1) as f64
    }

    pub fn mean_diagonal(&self) -> f64 {
        let k = self.values.len().min(self.cols.len());
        (0..k).map(|i| self.values[i][i]).sum::<f64>() / k.max(1) as f64
    }

    pub fn mean_off_diagonal(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    sum += v;
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// mean(diagonal) / mean(off-diagonal).
    pub fn diagonal_statistic(&self) -> f64 {
        self.mean_diagonal() / self.mean_off_diagonal()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("author");
        for c in &self.cols {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (r, row) in self.rows.iter().zip(&self.values) {
            out.push_str(r);
            for v in row {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_text(path, &self.to_csv())
    }
}

/// Divide every entry by the grand mean.
pub fn mean_normalize(matrix: &JaccardMatrix) -> Result<JaccardMatrix> {
    let mean = matrix.grand_mean();
    if !(mean > 0.0) {
        return Err(Error::Numeric("cannot mean-normalize an all-zero matrix".into()));
    }
    Ok(JaccardMatrix {
        values: matrix.values.iter().map(|r| r.iter().map(|v| v / mean).collect()).collect(),
        normalization: Normalization::MeanNormalized,
        ..matrix.clone()
    })
}
