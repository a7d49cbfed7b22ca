//! Unsmoothed character n-gram language model.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::lm::{CharDistribution, LanguageModel, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContextCounts {
    pub continuations: BTreeMap<u32, u64>,
    pub total: u64,
}

/// Count table keyed by the `order - 1` preceding symbols. Only observed
/// contexts are present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramTable {
    order: usize,
    vocab_size: usize,
    contexts: HashMap<Vec<u32>, ContextCounts>,
}

impl NgramTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    pub fn contexts(&self) -> impl Iterator<Item = (&[u32], &ContextCounts)> {
        self.contexts.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn counts(&self, context: &[u32]) -> Option<&ContextCounts> {
        self.contexts.get(context)
    }

    /// `count(context, w) / total(context)` for every symbol `w`.
    pub fn next_distribution(&self, context: &[u32]) -> Result<CharDistribution> {
        if context.len() != self.order - 1 {
            return Err(Error::InvalidParameter(format!(
                "context length {} does not match order {}",
                context.len(),
                self.order
            )));
        }
        let counts = self
            .contexts
            .get(context)
            .ok_or_else(|| Error::UnseenContext(context.to_vec()))?;
        let mut probs = vec![0.0; self.vocab_size];
        let total = counts.total as f64;
        for (&symbol, &count) in &counts.continuations {
            probs[symbol as usize] = count as f64 / total;
        }
        Ok(CharDistribution { probs })
    }
}

/// Count every n-gram window of `(n-1) x BOS ++ chars ++ EOS` per sentence.
pub fn fit_nglm(sentences: &[Sentence], vocab: &Vocabulary, order: usize) -> Result<NgramTable> {
    if order < 1 {
        return Err(Error::InvalidParameter("n-gram order must be at least 1".into()));
    }
    if sentences.is_empty() {
        return Err(Error::EmptyInput("n-gram model needs at least one sentence"));
    }
    let bos = vocab.bos() as u32;
    let eos = vocab.eos() as u32;
    let mut contexts: HashMap<Vec<u32>, ContextCounts> = HashMap::new();
    let mut padded = Vec::new();
    for sentence in sentences {
        padded.clear();
        padded.extend(std::iter::repeat_n(bos, order - 1));
        padded.extend(vocab.encode(&sentence.text).into_iter().map(|s| s as u32));
        padded.push(eos);
        for window in padded.windows(order) {
            let (prefix, last) = window.split_at(order - 1);
            let entry = match contexts.get_mut(prefix) {
                Some(entry) => entry,
                None => contexts.entry(prefix.to_vec()).or_default(),
            };
            *entry.continuations.entry(last[0]).or_insert(0) += 1;
            entry.total += 1;
        }
    }
    Ok(NgramTable {
        order,
        vocab_size: vocab.size(),
        contexts,
    })
}

/// A fitted table together with its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    pub vocab: Vocabulary,
    pub table: NgramTable,
}

impl NgramModel {
    pub fn fit(sentences: &[Sentence], vocab: Vocabulary, order: usize) -> Result<NgramModel> {
        let table = fit_nglm(sentences, &vocab, order)?;
        Ok(NgramModel { vocab, table })
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    /// The last `order - 1` symbols of `text`, left-padded with BOS.
    pub fn context_for(&self, text: &str) -> Vec<u32> {
        let width = self.table.order - 1;
        let symbols = self.vocab.encode(text);
        let mut context = vec![self.vocab.bos() as u32; width.saturating_sub(symbols.len())];
        let skip = symbols.len().saturating_sub(width);
        context.extend(symbols[skip..].iter().map(|&s| s as u32));
        context
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut contexts: Vec<ContextRecord> = self
            .table
            .contexts
            .iter()
            .map(|(context, counts)| ContextRecord {
                context: context.clone(),
                counts: counts.continuations.iter().map(|(&s, &c)| (s, c)).collect(),
            })
            .collect();
        contexts.sort_by(|a, b| a.context.cmp(&b.context));
        let file = ModelFile {
            kind: "nglm".into(),
            order: self.table.order,
            vocab: self.vocab.clone(),
            contexts,
        };
        crate::io::write_json(path, &file)
    }

    pub fn load(path: &Path) -> Result<NgramModel> {
        let file: ModelFile = crate::io::read_json(path)?;
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        if file.kind != "nglm" || file.order < 1 {
            return Err(bad(format!("not an n-gram model (kind {}, order {})", file.kind, file.order)));
        }
        let vocab_size = file.vocab.size();
        let mut contexts = HashMap::with_capacity(file.contexts.len());
        for record in file.contexts {
            if record.context.len() != file.order - 1 {
                return Err(bad(format!("context {:?} has the wrong length", record.context)));
            }
            let mut counts = ContextCounts::default();
            for (symbol, count) in record.counts {
                if symbol as usize >= vocab_size || count == 0 {
                    return Err(bad(format!("invalid count entry ({symbol}, {count})")));
                }
                counts.continuations.insert(symbol, count);
                counts.total += count;
            }
            contexts.insert(record.context, counts);
        }
        Ok(NgramModel {
            vocab: file.vocab,
            table: NgramTable {
                order: file.order,
                vocab_size,
                contexts,
            },
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ContextRecord {
    context: Vec<u32>,
    counts: Vec<(u32, u64)>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    kind: String,
    order: usize,
    vocab: Vocabulary,
    contexts: Vec<ContextRecord>,
}

impl LanguageModel for NgramModel {
    type State = Vec<u32>;

    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn sentence_start(&self) -> Result<Vec<u32>> {
        Ok(vec![self.vocab.bos() as u32; self.table.order - 1])
    }

    fn distribution(&self, state: &Vec<u32>) -> Result<CharDistribution> {
        self.table.next_distribution(state)
    }

    fn advance(&self, state: &mut Vec<u32>, symbol: usize) -> Result<()> {
        if !state.is_empty() {
            state.remove(0);
            state.push(symbol as u32);
        }
        Ok(())
    }
}
