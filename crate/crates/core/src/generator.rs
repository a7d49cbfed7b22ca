//! Seeded sentence generation and synthetic document assembly.

use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, DocumentSet, Provenance, Sentence, SentencePool};
use crate::error::{Error, Result};
use crate::lm::{apply_temperature, sample_symbol, CharDistribution, GenParams, LanguageModel, SampleMode};
use crate::nglm::NgramModel;
use crate::rnnlm::RnnlmModel;
use crate::seeding::derived_rng;

/// Consecutive rejections after which document generation gives up.
pub const MAX_CONSECUTIVE_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nglm,
    Rnnlm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Nglm => "nglm",
            ModelKind::Rnnlm => "rnnlm",
        }
    }
}

/// How the per-author character cap is derived from the training sentences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum MaxCharsRule {
    #[default]
    Max,
    /// Nearest-rank percentile in (0, 100].
    Percentile(f64),
}

/// Longest training sentence, in characters.
pub fn estimate_max_chars(pool: &SentencePool) -> Result<usize> {
    estimate_max_chars_with(pool, MaxCharsRule::Max)
}

pub fn estimate_max_chars_with(pool: &SentencePool, rule: MaxCharsRule) -> Result<usize> {
    if pool.sentences.is_empty() {
        return Err(Error::EmptyInput("cannot estimate max_chars from an empty pool"));
    }
    let mut lengths: Vec<usize> = pool.sentences.iter().map(|s| s.char_count).collect();
    lengths.sort_unstable();
    let m = match rule {
        MaxCharsRule::Max => *lengths.last().expect("non-empty"),
        MaxCharsRule::Percentile(p) => {
            if !(p > 0.0 && p <= 100.0) {
                return Err(Error::InvalidParameter(format!("percentile {p} not in (0, 100]")));
            }
            let rank = ((p / 100.0) * lengths.len() as f64).ceil() as usize;
            lengths[rank.max(1) - 1]
        }
    };
    Ok(m.max(1))
}

/// Seed conditioning for one model family.
pub trait SeededGeneration: LanguageModel {
    fn kind(&self) -> ModelKind;

    /// State after conditioning on `seed`; emission starts from here.
    fn seed_state(&self, seed: &str) -> Result<Self::State>;

    /// Starting point of a document sentence drawn from `seed`: the state and
    /// any text the sentence already begins with.
    fn document_start(&self, seed: &str) -> Result<(Self::State, String)> {
        Ok((self.seed_state(seed)?, String::new()))
    }

    /// Starting point of the next sentence from the same seed, given the
    /// state right after the accepted sentence's last character.
    fn after_accept(&self, seed: &str, state: Self::State) -> Result<(Self::State, String)>;
}

impl SeededGeneration for NgramModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Nglm
    }

    /// The last `order - 1` symbols of the seed, BOS-padded.
    fn seed_state(&self, seed: &str) -> Result<Vec<u32>> {
        Ok(self.context_for(seed))
    }

    /// The seed's opening `order - 1` characters, read from BOS.
    fn document_start(&self, seed: &str) -> Result<(Vec<u32>, String)> {
        let opening: String = seed.chars().take(self.order() - 1).collect();
        Ok((self.context_for(&opening), opening))
    }

    fn after_accept(&self, seed: &str, _state: Vec<u32>) -> Result<(Vec<u32>, String)> {
        self.document_start(seed)
    }
}

impl SeededGeneration for RnnlmModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Rnnlm
    }

    /// Feed `BOS seed EOS BOS` through the network.
    fn seed_state(&self, seed: &str) -> Result<Self::State> {
        let mut state = self.sentence_start()?;
        let mut symbols = self.vocab.encode(seed);
        symbols.extend([self.vocab.eos(), self.vocab.bos()]);
        self.feed(&mut state, &symbols)?;
        Ok(state)
    }

    fn after_accept(&self, _seed: &str, mut state: Self::State) -> Result<(Self::State, String)> {
        self.feed(&mut state, &[self.vocab.eos(), self.vocab.bos()])?;
        Ok((state, String::new()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    /// `m` characters were emitted without EOS.
    Overlength { chars: usize },
    /// EOS arrived before any word.
    Empty,
    /// The model reached a state it has no distribution for.
    UnseenContext(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SentenceOutcome {
    Accepted(Sentence),
    Rejected(Rejection),
}

struct Emission<S> {
    outcome: SentenceOutcome,
    /// State after the last emitted character, when accepted.
    state: Option<S>,
}

fn generation_distribution(dist: CharDistribution, bos: usize, temperature: f64) -> Result<Option<CharDistribution>> {
    let mut probs = dist.probs;
    probs[bos] = 0.0;
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Ok(None);
    }
    probs.iter_mut().for_each(|p| *p /= total);
    apply_temperature(&CharDistribution { probs }, temperature).map(Some)
}

fn emit<M: SeededGeneration + ?Sized, R: Rng + ?Sized>(
    model: &M,
    mut state: M::State,
    prefix: &str,
    params: &GenParams,
    rng: &mut R,
) -> Result<Emission<M::State>> {
    let vocab = model.vocab();
    let (bos, eos) = (vocab.bos(), vocab.eos());
    let mut text = prefix.to_string();
    let budget = params.max_chars.saturating_sub(prefix.chars().count());
    let rejected = |r| Emission {
        outcome: SentenceOutcome::Rejected(r),
        state: None,
    };
    let mut emitted = 0;
    loop {
        let dist = match model.distribution(&state) {
            Ok(d) => d,
            Err(Error::UnseenContext(context)) => return Ok(rejected(Rejection::UnseenContext(context))),
            Err(e) => return Err(e),
        };
        let Some(dist) = generation_distribution(dist, bos, params.temperature)? else {
            return Ok(rejected(Rejection::Empty));
        };
        let symbol = sample_symbol(&dist, SampleMode::Multinomial, rng);
        if symbol == eos {
            let sentence = Sentence::new(text.trim());
            if sentence.word_count == 0 {
                return Ok(rejected(Rejection::Empty));
            }
            return Ok(Emission {
                outcome: SentenceOutcome::Accepted(sentence),
                state: Some(state),
            });
        }
        if emitted == budget {
            return Ok(rejected(Rejection::Overlength {
                chars: prefix.chars().count() + emitted,
            }));
        }
        text.push(vocab.decode_symbol(symbol).unwrap_or(char::REPLACEMENT_CHARACTER));
        model.advance(&mut state, symbol)?;
        emitted += 1;
    }
}

/// Generate one sentence after conditioning on `seed_context`. The seed text
/// and the closing EOS are not part of the result.
pub fn generate_sentence<M: SeededGeneration + ?Sized, R: Rng + ?Sized>(
    model: &M,
    seed_context: &str,
    params: &GenParams,
    rng: &mut R,
) -> Result<SentenceOutcome> {
    params.validate()?;
    let state = model.seed_state(seed_context)?;
    Ok(emit(model, state, "", params, rng)?.outcome)
}

/// Generate one sentence the way a document's first sentence from `seed` is
/// generated; the result may begin with part of the seed.
pub fn generate_seeded_sentence<M: SeededGeneration + ?Sized, R: Rng + ?Sized>(
    model: &M,
    seed: &str,
    params: &GenParams,
    rng: &mut R,
) -> Result<SentenceOutcome> {
    params.validate()?;
    let (state, prefix) = model.document_start(seed)?;
    Ok(emit(model, state, &prefix, params, rng)?.outcome)
}

/// Counters for one author's generation run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub accepted: usize,
    pub rejected_overlength: usize,
    pub rejected_empty: usize,
    pub rejected_unseen: usize,
    pub seeds_drawn: usize,
    /// Pool index of the seed behind each accepted sentence, in order.
    #[serde(skip)]
    pub seed_log: Vec<usize>,
}

impl GenerationStats {
    pub fn rejected(&self) -> usize {
        self.rejected_overlength + self.rejected_empty + self.rejected_unseen
    }

    pub fn rejection_rate(&self) -> f64 {
        let attempts = self.accepted + self.rejected();
        if attempts == 0 {
            0.0
        } else {
            self.rejected() as f64 / attempts as f64
        }
    }

    fn record(&mut self, rejection: &Rejection) {
        match rejection {
            Rejection::Overlength { .. } => self.rejected_overlength += 1,
            Rejection::Empty => self.rejected_empty += 1,
            Rejection::UnseenContext(context) => {
                warn!("generation reached unseen context {context:?}");
                self.rejected_unseen += 1;
            }
        }
    }
}

/// Draw a seed uniformly from the pool, generate up to `seed_reset` accepted
/// sentences from it, and repeat until the document holds `min_words` words.
pub fn generate_document<M: SeededGeneration + ?Sized, R: Rng + ?Sized>(
    model: &M,
    seed_pool: &SentencePool,
    params: &GenParams,
    min_words: usize,
    rng: &mut R,
    stats: &mut GenerationStats,
) -> Result<Document> {
    params.validate()?;
    if seed_pool.sentences.is_empty() {
        return Err(Error::EmptyInput("seed pool is empty"));
    }
    let mut sentences = Vec::new();
    let mut words = 0;
    let mut consecutive = 0;
    while words < min_words || sentences.is_empty() {
        let seed_index = rng.random_range(0..seed_pool.sentences.len());
        let seed = seed_pool.sentences[seed_index].text.as_str();
        stats.seeds_drawn += 1;
        let (mut state, mut prefix) = model.document_start(seed)?;
        let mut produced = 0;
        while produced < params.seed_reset && (words < min_words || sentences.is_empty()) {
            let emission = emit(model, state.clone(), &prefix, params, rng)?;
            match emission.outcome {
                SentenceOutcome::Accepted(sentence) => {
                    words += sentence.word_count;
                    sentences.push(sentence);
                    stats.accepted += 1;
                    stats.seed_log.push(seed_index);
                    produced += 1;
                    consecutive = 0;
                    let after = emission.state.expect("accepted emissions carry a state");
                    (state, prefix) = model.after_accept(seed, after)?;
                }
                SentenceOutcome::Rejected(rejection) => {
                    stats.record(&rejection);
                    consecutive += 1;
                    if consecutive >= MAX_CONSECUTIVE_REJECTIONS {
                        return Err(Error::GenerationStalled {
                            author: seed_pool.author_id.clone(),
                            rejections: consecutive,
                            accepted: stats.accepted,
                        });
                    }
                }
            }
        }
    }
    Ok(Document::new(seed_pool.author_id.clone(), Provenance::Synthetic, sentences))
}

/// Metadata for one author's synthetic documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRun {
    pub author_id: String,
    pub model_kind: ModelKind,
    pub params: GenParams,
    pub seed: u64,
    pub documents: usize,
    #[serde(flatten)]
    pub stats: GenerationStats,
}

/// Sidecar describing a synthetic document set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetadata {
    pub model_kind: ModelKind,
    pub master_seed: u64,
    pub n_docs: usize,
    pub min_words: usize,
    pub runs: Vec<GenerationRun>,
}

impl GenerationMetadata {
    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<GenerationMetadata> {
        crate::io::read_json(path)
    }
}

/// Generate `n_docs` synthetic documents per author. Authors run in parallel,
/// each on its own RNG stream derived from `master_seed`.
pub fn generate_corpus<M: SeededGeneration + Sync>(
    models: &BTreeMap<String, M>,
    seed_pools: &BTreeMap<String, SentencePool>,
    n_docs: usize,
    min_words: usize,
    params: &BTreeMap<String, GenParams>,
    master_seed: u64,
) -> Result<(DocumentSet, GenerationMetadata)> {
    if n_docs == 0 {
        return Err(Error::InvalidParameter("n_docs must be at least 1".into()));
    }
    let missing: Vec<String> = models
        .keys()
        .filter(|a| !seed_pools.contains_key(*a) || !params.contains_key(*a))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::RosterMismatch(missing));
    }
    let authors: Vec<(&String, &M)> = models.iter().collect();
    let per_author: Vec<Result<(Vec<Document>, GenerationRun)>> = authors
        .par_iter()
        .map(|(author, model)| {
            let seed = crate::seeding::derive_seed(master_seed, &format!("generate/{author}"));
            let mut rng = derived_rng(seed, "");
            let gen = params[*author];
            let mut stats = GenerationStats::default();
            let docs = (0..n_docs)
                .map(|_| generate_document(*model, &seed_pools[*author], &gen, min_words, &mut rng, &mut stats))
                .collect::<Result<Vec<_>>>()?;
            info!(
                "{author}: {} documents, {} sentences accepted, rejection rate {:.3}",
                docs.len(),
                stats.accepted,
                stats.rejection_rate()
            );
            Ok((
                docs,
                GenerationRun {
                    author_id: (*author).clone(),
                    model_kind: model.kind(),
                    params: gen,
                    seed,
                    documents: n_docs,
                    stats,
                },
            ))
        })
        .collect();
    let mut documents = Vec::new();
    let mut runs = Vec::new();
    for result in per_author {
        let (docs, run) = result?;
        documents.extend(docs);
        runs.push(run);
    }
    let model_kind = runs.first().map_or(ModelKind::Nglm, |r| r.model_kind);
    Ok((
        DocumentSet::new(documents),
        GenerationMetadata {
            model_kind,
            master_seed,
            n_docs,
            min_words,
            runs,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use crate::lm::Vocabulary;
    use crate::seeding::rng;

    fn nglm(texts: &[&str], order: usize) -> NgramModel {
        let sentences: Vec<Sentence> = texts.iter().map(|t| Sentence::new(*t)).collect();
        let vocab = Vocabulary::build(&sentences, 1).unwrap();
        NgramModel::fit(&sentences, vocab, order).unwrap()
    }

    fn pool(texts: &[&str]) -> SentencePool {
        SentencePool {
            author_id: "x".into(),
            sentences: texts.iter().map(|t| Sentence::new(*t)).collect(),
            split: Split::Alpha,
            sources: Vec::new(),
        }
    }

    fn params(seed_reset: usize, max_chars: usize) -> GenParams {
        GenParams {
            temperature: 1.0,
            seed_reset,
            max_chars,
        }
    }

    /// Always emits the first character, never EOS.
    struct Babbler(Vocabulary);

    impl LanguageModel for Babbler {
        type State = ();
        fn vocab(&self) -> &Vocabulary {
            &self.0
        }
        fn sentence_start(&self) -> Result<()> {
            Ok(())
        }
        fn distribution(&self, _: &()) -> Result<CharDistribution> {
            let mut probs = vec![0.0; self.0.size()];
            probs[0] = 1.0;
            Ok(CharDistribution { probs })
        }
        fn advance(&self, _: &mut (), _: usize) -> Result<()> {
            Ok(())
        }
    }

    impl SeededGeneration for Babbler {
        fn kind(&self) -> ModelKind {
            ModelKind::Nglm
        }
        fn seed_state(&self, _: &str) -> Result<()> {
            Ok(())
        }
        fn after_accept(&self, _: &str, _: ()) -> Result<((), String)> {
            Ok(((), String::new()))
        }
    }

    #[test]
    fn max_chars_rules() {
        let p = pool(&[&"a".repeat(40), &"b".repeat(90), &"c".repeat(73)]);
        assert_eq!(estimate_max_chars(&p).unwrap(), 90);
        assert_eq!(estimate_max_chars(&pool(&[&"z".repeat(10)])).unwrap(), 10);
        assert_eq!(estimate_max_chars_with(&p, MaxCharsRule::Percentile(50.0)).unwrap(), 73);
        assert!(estimate_max_chars(&pool(&[])).is_err());
        let mut reversed = p.clone();
        reversed.sentences.reverse();
        assert_eq!(estimate_max_chars(&reversed).unwrap(), 90);
    }

    #[test]
    fn deterministic_chain_from_seed() {
        let m = nglm(&["ab"], 2);
        let out = generate_sentence(&m, "a", &params(1, 10), &mut rng(0)).unwrap();
        assert_eq!(out, SentenceOutcome::Accepted(Sentence::new("b")));
    }

    #[test]
    fn immediate_eos_is_rejected() {
        let m = nglm(&["ab"], 2);
        let out = generate_sentence(&m, "ab", &params(1, 10), &mut rng(0)).unwrap();
        assert_eq!(out, SentenceOutcome::Rejected(Rejection::Empty));
    }

    #[test]
    fn endless_model_is_rejected_at_cap() {
        let b = Babbler(Vocabulary::from_chars(vec!['a', 'b']));
        let out = generate_sentence(&b, "", &params(1, 3), &mut rng(0)).unwrap();
        assert_eq!(out, SentenceOutcome::Rejected(Rejection::Overlength { chars: 3 }));
        let mut stats = GenerationStats::default();
        let err = generate_document(&b, &pool(&["a b"]), &params(1, 3), 10, &mut rng(0), &mut stats).unwrap_err();
        assert!(matches!(err, Error::GenerationStalled { rejections: 1000, accepted: 0, .. }));
    }

    #[test]
    fn document_stops_once_min_words_reached() {
        let m = nglm(&["a b c d e."], 11);
        let mut stats = GenerationStats::default();
        let doc = generate_document(&m, &pool(&["a b c d e."]), &params(1, 20), 10, &mut rng(1), &mut stats).unwrap();
        assert_eq!(doc.sentences.len(), 2);
        assert_eq!(doc.word_count, 10);
        assert_eq!(doc.provenance, Provenance::Synthetic);
        assert_eq!(stats.seeds_drawn, 2);
    }

    #[test]
    fn accepted_sentences_respect_cap() {
        let texts = ["the cat sat on the mat.", "a dog ran far away.", "cats and dogs sat."];
        let m = nglm(&texts, 3);
        let p = pool(&texts);
        let mut stats = GenerationStats::default();
        let doc = generate_document(&m, &p, &params(1, 19), 200, &mut rng(2), &mut stats).unwrap();
        assert!(doc.sentences.iter().all(|s| s.char_count <= 19 && s.word_count >= 1));
        assert_eq!(stats.rejected_unseen, 0);
        assert!(stats.rejected_overlength > 0);
    }

    #[test]
    fn rnnlm_seed_redrawn_every_ten_accepted() {
        use crate::rnnlm::{init_params, Architecture, TrainConfig};
        let texts = ["the cat sat on the mat.", "a dog ran far away.", "cats and dogs sat."];
        let p = pool(&texts);
        let vocab = Vocabulary::build(&p.sentences, 1).unwrap();
        let arch = Architecture {
            embedding_dim: 3,
            hidden_dim: 4,
            layers: 2,
            ..Architecture::default()
        };
        let params_ = init_params(vocab.size(), &arch, &mut rng(4)).unwrap();
        let config = TrainConfig { arch, ..TrainConfig::default() };
        let m = RnnlmModel::new(vocab, config, params_).unwrap();
        let mut stats = GenerationStats::default();
        let doc = generate_document(&m, &p, &params(10, 400), 150, &mut rng(3), &mut stats).unwrap();
        assert_eq!(stats.accepted, doc.sentences.len());
        assert_eq!(stats.seeds_drawn, stats.accepted.div_ceil(10));
        for chunk in stats.seed_log.chunks(10) {
            assert!(chunk.iter().all(|&s| s == chunk[0]));
        }
    }

    #[test]
    fn corpus_is_reproducible() {
        let texts = ["the cat sat on the mat.", "a dog ran far away.", "cats and dogs sat."];
        let mut models = BTreeMap::new();
        let mut pools = BTreeMap::new();
        let mut gen = BTreeMap::new();
        for author in ["p", "q", "r"] {
            models.insert(author.to_string(), nglm(&texts, 3));
            let mut pl = pool(&texts);
            pl.author_id = author.into();
            pools.insert(author.to_string(), pl);
            gen.insert(author.to_string(), params(1, 30));
        }
        let (a, meta) = generate_corpus(&models, &pools, 2, 30, &gen, 9).unwrap();
        let (b, _) = generate_corpus(&models, &pools, 2, 30, &gen, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert!(a.documents.iter().all(|d| d.word_count >= 30));
        assert_eq!(meta.runs.len(), 3);
        assert_eq!(meta.runs[0].params.temperature, 1.0);
        let (c, _) = generate_corpus(&models, &pools, 2, 30, &gen, 10).unwrap();
        assert_ne!(a, c);
    }
}
