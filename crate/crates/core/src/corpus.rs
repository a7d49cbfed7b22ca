//! Corpus ingestion, sentence segmentation, the stratified alpha/omega split
//! and balanced document assembly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::seeding::derived_rng;

/// Texts of one author as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorTexts {
    pub author_id: String,
    pub texts: Vec<String>,
    pub source_paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawCorpus {
    pub authors: Vec<AuthorTexts>,
}

impl RawCorpus {
    pub fn author_ids(&self) -> Vec<&str> {
        self.authors.iter().map(|a| a.author_id.as_str()).collect()
    }

    /// Keep only the listed authors (roster override); order follows `self`.
    pub fn restrict_to(&mut self, roster: &[String]) {
        self.authors.retain(|a| roster.contains(&a.author_id));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub text: String,
    pub word_count: usize,
    pub char_count: usize,
}

impl Sentence {
    /// Build a sentence from already-normalized text.
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let word_count = text.split_whitespace().count();
        let char_count = text.chars().count();
        Sentence {
            text,
            word_count,
            char_count,
        }
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Alpha,
    Omega,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Alpha => "alpha",
            Split::Omega => "omega",
        }
    }

    pub fn provenance(self) -> Provenance {
        match self {
            Split::Alpha => Provenance::RealAlpha,
            Split::Omega => Provenance::RealOmega,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentencePool {
    pub author_id: String,
    pub sentences: Vec<Sentence>,
    pub split: Split,
    /// Source documents whose sentences make up the pool.
    pub sources: Vec<PathBuf>,
}

impl SentencePool {
    pub fn total_words(&self) -> usize {
        self.sentences.iter().map(|s| s.word_count).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RealAlpha,
    RealOmega,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::RealAlpha => "real_alpha",
            Provenance::RealOmega => "real_omega",
            Provenance::Synthetic => "synthetic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub author: String,
    pub provenance: Provenance,
    pub sentences: Vec<Sentence>,
    pub word_count: usize,
    /// Indices into the pool the document was drawn from. Not serialized.
    pub sentence_ids: Vec<usize>,
}

impl Document {
    pub fn new(author: impl Into<String>, provenance: Provenance, sentences: Vec<Sentence>) -> Self {
        let word_count = sentences.iter().map(|s| s.word_count).sum();
        Document {
            author: author.into(),
            provenance,
            sentences,
            word_count,
            sentence_ids: Vec::new(),
        }
    }

    /// Identity used for train/test overlap checks.
    pub(crate) fn fingerprint(&self) -> (&str, Vec<&str>) {
        (
            self.author.as_str(),
            self.sentences.iter().map(|s| s.text.as_str()).collect(),
        )
    }
}

/// A labeled collection of documents, possibly spanning several authors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocumentSet {
    pub documents: Vec<Document>,
}

impl DocumentSet {
    pub fn new(documents: Vec<Document>) -> Self {
        DocumentSet { documents }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn authors(&self) -> BTreeSet<String> {
        self.documents.iter().map(|d| d.author.clone()).collect()
    }

    /// The common provenance of all documents, if there is one.
    pub fn provenance(&self) -> Option<Provenance> {
        let first = self.documents.first()?.provenance;
        self.documents
            .iter()
            .all(|d| d.provenance == first)
            .then_some(first)
    }

    pub fn by_author(&self) -> BTreeMap<&str, Vec<&Document>> {
        let mut map: BTreeMap<&str, Vec<&Document>> = BTreeMap::new();
        for doc in &self.documents {
            map.entry(doc.author.as_str()).or_default().push(doc);
        }
        map
    }

    pub fn for_author(&self, author: &str) -> DocumentSet {
        DocumentSet::new(
            self.documents
                .iter()
                .filter(|d| d.author == author)
                .cloned()
                .collect(),
        )
    }

    /// Concatenate several sets, preserving order.
    pub fn concat<'a>(sets: impl IntoIterator<Item = &'a DocumentSet>) -> DocumentSet {
        DocumentSet::new(
            sets.into_iter()
                .flat_map(|s| s.documents.iter().cloned())
                .collect(),
        )
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let records: Vec<DocumentRecord<'_>> = self
            .documents
            .iter()
            .map(|d| DocumentRecord {
                author: d.author.as_str().into(),
                provenance: d.provenance,
                sentences: d.sentences.iter().map(|s| s.text.as_str().into()).collect(),
            })
            .collect();
        write_jsonl(path, &records)
    }

    pub fn read_jsonl(path: &Path) -> Result<DocumentSet> {
        let records: Vec<DocumentRecord<'static>> = read_jsonl(path)?;
        let documents = records
            .into_iter()
            .map(|r| {
                let sentences = r
                    .sentences
                    .into_iter()
                    .map(|s| Sentence::new(s.into_owned()))
                    .collect();
                Document::new(r.author.into_owned(), r.provenance, sentences)
            })
            .collect();
        Ok(DocumentSet { documents })
    }
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord<'a> {
    author: std::borrow::Cow<'a, str>,
    provenance: Provenance,
    sentences: Vec<std::borrow::Cow<'a, str>>,
}

#[derive(Serialize, Deserialize)]
struct SentenceRecord<'a> {
    text: std::borrow::Cow<'a, str>,
    words: usize,
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", lineno + 1),
        })?;
        records.push(record);
    }
    Ok(records)
}

impl SentencePool {
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let records: Vec<SentenceRecord<'_>> = self
            .sentences
            .iter()
            .map(|s| SentenceRecord {
                text: s.text.as_str().into(),
                words: s.word_count,
            })
            .collect();
        write_jsonl(path, &records)
    }

    pub fn read_jsonl(path: &Path, author_id: &str, split: Split) -> Result<SentencePool> {
        let records: Vec<SentenceRecord<'static>> = read_jsonl(path)?;
        Ok(SentencePool {
            author_id: author_id.to_string(),
            sentences: records
                .into_iter()
                .map(|r| Sentence::new(r.text.into_owned()))
                .collect(),
            split,
            sources: Vec::new(),
        })
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort();
    Ok(entries)
}

/// Read `<root>/<author_id>/<doc>.txt` and keep authors with at least
/// `min_docs` usable documents.
pub fn ingest(corpus_root: &Path, min_docs: usize) -> Result<RawCorpus> {
    let mut authors = Vec::new();
    let mut seen_any = false;
    for author_dir in sorted_entries(corpus_root)? {
        if !author_dir.is_dir() {
            continue;
        }
        seen_any = true;
        let author_id = author_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut texts = Vec::new();
        let mut source_paths = Vec::new();
        for path in sorted_entries(&author_dir)? {
            if path.extension().and_then(|e| e.to_str()) != Some("txt") || !path.is_file() {
                continue;
            }
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let raw = match String::from_utf8(bytes) {
                Ok(raw) => raw,
                Err(err) => {
                    warn!("skipping {}: not valid UTF-8 ({err})", path.display());
                    continue;
                }
            };
            let text: String = raw.nfc().collect();
            if text.trim().is_empty() {
                warn!("skipping {}: empty after trimming", path.display());
                continue;
            }
            texts.push(text);
            source_paths.push(path);
        }
        if texts.len() < min_docs {
            info!(
                "excluding author {author_id}: {} documents < {min_docs}",
                texts.len()
            );
            continue;
        }
        authors.push(AuthorTexts {
            author_id,
            texts,
            source_paths,
        });
    }
    if authors.is_empty() {
        if seen_any {
            warn!("no author under {} has {min_docs} documents", corpus_root.display());
        }
        return Err(Error::NoAuthors(corpus_root.to_path_buf()));
    }
    Ok(RawCorpus { authors })
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | ';')
}

fn collapse_whitespace(fragment: &str) -> String {
    fragment.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Rule-based sentence splitter.
///
/// Splits after `.`, `!`, `?` or `;` when followed by whitespace or the end of
/// the text; internal whitespace runs collapse to one space. Fragments with
/// fewer than two words are merged into the preceding sentence (a leading
/// short fragment merges into the following one).
pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    let mut fragments = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_terminator(c) {
            continue;
        }
        let at_boundary = chars.peek().is_none_or(|&(_, next)| next.is_whitespace());
        if at_boundary {
            let end = i + c.len_utf8();
            fragments.push(&text[start..end]);
            start = end;
        }
    }
    if start < text.len() {
        fragments.push(&text[start..]);
    }

    let mut sentences: Vec<String> = Vec::new();
    for fragment in fragments {
        let fragment = collapse_whitespace(fragment);
        if fragment.is_empty() {
            continue;
        }
        let words = fragment.split_whitespace().count();
        match sentences.last_mut() {
            Some(last) if words < 2 => {
                last.push(' ');
                last.push_str(&fragment);
            }
            _ => sentences.push(fragment),
        }
    }
    if sentences.len() >= 2 && sentences[0].split_whitespace().count() < 2 {
        let head = sentences.remove(0);
        sentences[0] = format!("{head} {}", sentences[0]);
    }
    sentences.into_iter().map(Sentence::new).collect()
}

/// Shuffle each author's documents and deal them alternately into alpha and
/// omega.
pub fn split_alpha_omega(
    corpus: &RawCorpus,
    seed: u64,
) -> Result<BTreeMap<String, (SentencePool, SentencePool)>> {
    let mut out = BTreeMap::new();
    for author in &corpus.authors {
        if author.texts.len() < 2 {
            return Err(Error::TooFewDocuments {
                author: author.author_id.clone(),
                found: author.texts.len(),
                required: 2,
            });
        }
        let mut order: Vec<usize> = (0..author.texts.len()).collect();
        order.shuffle(&mut derived_rng(seed, &format!("split/{}", author.author_id)));

        let mut pools = [Split::Alpha, Split::Omega].map(|split| SentencePool {
            author_id: author.author_id.clone(),
            sentences: Vec::new(),
            split,
            sources: Vec::new(),
        });
        for (position, &doc) in order.iter().enumerate() {
            let pool = &mut pools[position % 2];
            pool.sentences.extend(segment_sentences(&author.texts[doc]));
            pool.sources.push(
                author
                    .source_paths
                    .get(doc)
                    .cloned()
                    .unwrap_or_else(|| PathBuf::from(format!("#{doc}"))),
            );
        }
        let [alpha, omega] = pools;
        out.insert(author.author_id.clone(), (alpha, omega));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyConfig {
    pub n_docs: usize,
    pub min_words: usize,
    /// Reset the without-replacement draw for every document instead of
    /// exhausting the pool globally.
    #[serde(default)]
    pub replacement_across_docs: bool,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            n_docs: 20,
            min_words: 5000,
            replacement_across_docs: false,
        }
    }
}

/// Draw sentences without replacement into documents of at least
/// `min_words` words.
pub fn assemble_documents(
    pool: &SentencePool,
    config: &AssemblyConfig,
    seed: u64,
) -> Result<DocumentSet> {
    if pool.sentences.is_empty() {
        return Err(Error::EmptyInput("sentence pool"));
    }
    if config.min_words == 0 || config.n_docs == 0 {
        return Err(Error::InvalidParameter(
            "n_docs and min_words must be positive".into(),
        ));
    }
    let available = pool.total_words();
    if available < config.min_words {
        return Err(Error::PoolTooSmall {
            author: pool.author_id.clone(),
            required: config.min_words,
            available,
        });
    }

    let mut rng = derived_rng(
        seed,
        &format!("assemble/{}/{}", pool.author_id, pool.split.as_str()),
    );
    let mut order: Vec<usize> = (0..pool.sentences.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    let mut documents = Vec::new();
    'docs: while documents.len() < config.n_docs {
        if config.replacement_across_docs && !documents.is_empty() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let mut ids = Vec::new();
        let mut words = 0;
        while words < config.min_words {
            let Some(&id) = order.get(cursor) else {
                break 'docs;
            };
            cursor += 1;
            words += pool.sentences[id].word_count;
            ids.push(id);
        }
        let sentences = ids.iter().map(|&i| pool.sentences[i].clone()).collect();
        let mut doc = Document::new(pool.author_id.clone(), pool.split.provenance(), sentences);
        doc.sentence_ids = ids;
        documents.push(doc);
    }
    if documents.len() < config.n_docs {
        warn!(
            "{} ({}): pool exhausted after {} of {} documents",
            pool.author_id,
            pool.split.as_str(),
            documents.len(),
            config.n_docs
        );
    }
    Ok(DocumentSet { documents })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(v: &[Sentence]) -> Vec<&str> {
        v.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn one_word_fragments_merge() {
        assert_eq!(texts(&segment_sentences("Ave. Vale.")), vec!["Ave. Vale."]);
    }

    #[test]
    fn splits_on_terminators() {
        assert_eq!(
            texts(&segment_sentences("a b c? d e.")),
            vec!["a b c?", "d e."]
        );
        assert_eq!(
            texts(&segment_sentences("one two; three four! five six")),
            vec!["one two;", "three four!", "five six"]
        );
    }

    #[test]
    fn empty_text_has_no_sentences() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("   \n ").is_empty());
    }

    #[test]
    fn no_split_inside_tokens_and_whitespace_collapses() {
        let s = segment_sentences("pi is 3.14 here.\n\nNext  line\tgoes on.");
        assert_eq!(texts(&s), vec!["pi is 3.14 here.", "Next line goes on."]);
        assert_eq!(s[0].word_count, 4);
        assert_eq!(s[0].char_count, 16);
    }

    #[test]
    fn leading_short_fragment_joins_next() {
        assert_eq!(
            texts(&segment_sentences("Sir. We begin now.")),
            vec!["Sir. We begin now."]
        );
    }

    fn pool_of(words: &[usize]) -> SentencePool {
        SentencePool {
            author_id: "x".into(),
            sentences: words
                .iter()
                .enumerate()
                .map(|(i, &w)| Sentence::new(vec![format!("w{i}"); w].join(" ")))
                .collect(),
            split: Split::Alpha,
            sources: vec![],
        }
    }

    #[test]
    fn small_pool_is_rejected() {
        let err = assemble_documents(&pool_of(&[4999]), &AssemblyConfig::default(), 1).unwrap_err();
        assert!(matches!(
            err,
            Error::PoolTooSmall {
                required: 5000,
                available: 4999,
                ..
            }
        ));
    }

    #[test]
    fn forced_partition() {
        let set = assemble_documents(&pool_of(&[5000, 5000]), &AssemblyConfig::default(), 3).unwrap();
        assert_eq!(set.len(), 2);
        for doc in &set.documents {
            assert_eq!(doc.sentences.len(), 1);
            assert_eq!(doc.word_count, 5000);
        }
    }

    #[test]
    fn partial_document_is_discarded() {
        let config = AssemblyConfig {
            n_docs: 5,
            min_words: 10,
            replacement_across_docs: false,
        };
        let set = assemble_documents(&pool_of(&[6, 6, 6]), &config, 0).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.documents[0].word_count, 12);
    }

    #[test]
    fn replacement_across_docs_reuses_pool() {
        let config = AssemblyConfig {
            n_docs: 4,
            min_words: 10,
            replacement_across_docs: true,
        };
        let set = assemble_documents(&pool_of(&[6, 6, 6]), &config, 0).unwrap();
        assert_eq!(set.len(), 4);
        for doc in &set.documents {
            let unique: BTreeSet<_> = doc.sentence_ids.iter().collect();
            assert_eq!(unique.len(), doc.sentence_ids.len());
        }
    }

    fn corpus_with(counts: &[usize]) -> RawCorpus {
        RawCorpus {
            authors: counts
                .iter()
                .enumerate()
                .map(|(a, &n)| AuthorTexts {
                    author_id: format!("author{a}"),
                    texts: (0..n).map(|d| format!("doc {d} of {a} is here.")).collect(),
                    source_paths: (0..n).map(|d| PathBuf::from(format!("{a}/{d}.txt"))).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn split_counts_and_determinism() {
        let corpus = corpus_with(&[20, 21]);
        let a = split_alpha_omega(&corpus, 9).unwrap();
        let (al, om) = &a["author0"];
        assert_eq!((al.sources.len(), om.sources.len()), (10, 10));
        let (al, om) = &a["author1"];
        assert_eq!((al.sources.len(), om.sources.len()), (11, 10));
        let overlap: BTreeSet<_> = al.sources.iter().filter(|p| om.sources.contains(p)).collect();
        assert!(overlap.is_empty());
        assert_eq!(a, split_alpha_omega(&corpus, 9).unwrap());
        assert_ne!(a, split_alpha_omega(&corpus, 10).unwrap());
    }

    #[test]
    fn split_requires_two_documents() {
        let err = split_alpha_omega(&corpus_with(&[3, 1]), 0).unwrap_err();
        assert!(matches!(err, Error::TooFewDocuments { ref author, found: 1, .. } if author == "author1"));
    }
}
