//! The language-model contract shared by the n-gram and LSTM families:
//! vocabulary, next-character distributions, temperature, sampling and
//! perplexity.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

const BOS_NAME: &str = "<bos>";
const EOS_NAME: &str = "<eos>";
const UNK_NAME: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Char(char),
    Bos,
    Eos,
    Unk,
}

/// Character inventory plus the BOS/EOS/UNK markers.
///
/// Characters are indexed by first occurrence; the three markers follow in
/// the order BOS, EOS, UNK.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl Vocabulary {
    pub fn build(sentences: &[Sentence], min_count: usize) -> Result<Vocabulary> {
        if sentences.is_empty() {
            return Err(Error::EmptyInput("vocabulary needs at least one sentence"));
        }
        let mut order = Vec::new();
        let mut counts: HashMap<char, usize> = HashMap::new();
        for c in sentences.iter().flat_map(|s| s.text.chars()) {
            let count = counts.entry(c).or_insert(0);
            if *count == 0 {
                order.push(c);
            }
            *count += 1;
        }
        let chars = order
            .into_iter()
            .filter(|c| counts[c] >= min_count)
            .collect();
        Ok(Vocabulary::from_chars(chars))
    }

    pub fn from_chars(chars: Vec<char>) -> Vocabulary {
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Vocabulary { chars, index }
    }

    pub fn size(&self) -> usize {
        self.chars.len() + 3
    }

    pub fn bos(&self) -> usize {
        self.chars.len()
    }

    pub fn eos(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn unk(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn encode_char(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(self.unk())
    }

    /// Characters of `text`, without markers.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        text.chars().map(|c| self.encode_char(c)).collect()
    }

    pub fn symbol(&self, index: usize) -> Option<Symbol> {
        match index.checked_sub(self.chars.len()) {
            None => Some(Symbol::Char(self.chars[index])),
            Some(0) => Some(Symbol::Bos),
            Some(1) => Some(Symbol::Eos),
            Some(2) => Some(Symbol::Unk),
            Some(_) => None,
        }
    }

    /// Printable form of a symbol; UNK decodes to U+FFFD, BOS/EOS to nothing.
    pub fn decode_symbol(&self, index: usize) -> Option<char> {
        match self.symbol(index)? {
            Symbol::Char(c) => Some(c),
            Symbol::Unk => Some(char::REPLACEMENT_CHARACTER),
            Symbol::Bos | Symbol::Eos => None,
        }
    }

    pub fn symbol_names(&self) -> Vec<String> {
        self.chars
            .iter()
            .map(|c| c.to_string())
            .chain([BOS_NAME, EOS_NAME, UNK_NAME].map(String::from))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    symbols: Vec<String>,
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        VocabularyRepr {
            symbols: self.symbol_names(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = VocabularyRepr::deserialize(deserializer)?;
        let n = repr.symbols.len();
        if n < 3 || repr.symbols[n - 3..] != [BOS_NAME, EOS_NAME, UNK_NAME] {
            return Err(D::Error::custom("vocabulary must end with <bos>, <eos>, <unk>"));
        }
        let mut chars = Vec::with_capacity(n - 3);
        for s in &repr.symbols[..n - 3] {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(D::Error::custom(format!("symbol {s:?} is not one character"))),
            }
        }
        let vocab = Vocabulary::from_chars(chars);
        if vocab.index.len() != vocab.chars.len() {
            return Err(D::Error::custom("duplicate vocabulary symbol"));
        }
        Ok(vocab)
    }
}

/// A probability vector over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct CharDistribution {
    pub probs: Vec<f64>,
}

impl CharDistribution {
    pub fn new(probs: Vec<f64>) -> Result<CharDistribution> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("distribution"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Numeric("distribution has a negative or non-finite entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!("distribution sums to {total}")));
        }
        Ok(CharDistribution { probs })
    }

    pub fn uniform(size: usize) -> CharDistribution {
        CharDistribution {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Generation hyper-parameters: temperature, seed-reset interval and the
/// per-sentence character cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub temperature: f64,
    pub seed_reset: usize,
    pub max_chars: usize,
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.seed_reset == 0 || self.max_chars == 0 {
            return Err(Error::InvalidParameter(
                "seed_reset and max_chars must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `p_i^(1/tau) / sum_j p_j^(1/tau)`, evaluated in log space.
pub fn apply_temperature(dist: &CharDistribution, temperature: f64) -> Result<CharDistribution> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if temperature == 1.0 {
        return Ok(dist.clone());
    }
    let exponent = 1.0 / temperature;
    let max_log = dist
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    if max_log == f64::NEG_INFINITY {
        return Err(Error::Numeric("distribution has no positive entry".into()));
    }
    let mut probs: Vec<f64> = dist
        .probs
        .iter()
        .map(|&p| {
            if p > 0.0 {
                ((p.ln() - max_log) * exponent).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(CharDistribution { probs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Multinomial,
    Argmax,
}

/// Draw a symbol index. Multinomial uses one uniform variate and the inverse
/// CDF; argmax returns the lowest index attaining the maximum.
pub fn sample_symbol<R: Rng + ?Sized>(dist: &CharDistribution, mode: SampleMode, rng: &mut R) -> usize {
    match mode {
        SampleMode::Argmax => argmax(&dist.probs),
        SampleMode::Multinomial => {
            let u: f64 = rng.random();
            let mut cumulative = 0.0;
            let mut last_positive = 0;
            for (i, &p) in dist.probs.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                last_positive = i;
                cumulative += p;
                if u < cumulative {
                    return i;
                }
            }
            last_positive
        }
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Anything that yields a next-character distribution from a state.
pub trait LanguageModel {
    type State: Clone;

    fn vocab(&self) -> &Vocabulary;

    /// State at the beginning of a sentence (after BOS).
    fn sentence_start(&self) -> Result<Self::State>;

    fn distribution(&self, state: &Self::State) -> Result<CharDistribution>;

    fn advance(&self, state: &mut Self::State, symbol: usize) -> Result<()>;
}

/// `exp(-(1/N) sum ln p)` over every character and the closing EOS of each
/// sentence. Returns `f64::INFINITY` when any scored event has probability 0
/// (including contexts the model never observed).
pub fn perplexity<M: LanguageModel + ?Sized>(model: &M, sentences: &[Sentence]) -> Result<f64> {
    if sentences.is_empty() {
        return Err(Error::EmptyInput("perplexity needs at least one sentence"));
    }
    let vocab = model.vocab();
    let mut log_likelihood = 0.0;
    let mut events = 0usize;
    for sentence in sentences {
        let mut state = model.sentence_start()?;
        let symbols = vocab.encode(&sentence.text);
        for symbol in symbols.into_iter().chain(std::iter::once(vocab.eos())) {
            let p = match model.distribution(&state) {
                Ok(dist) => dist.probs[symbol],
                Err(Error::UnseenContext(_)) => 0.0,
                Err(e) => return Err(e),
            };
            if p <= 0.0 {
                return Ok(f64::INFINITY);
            }
            log_likelihood += p.ln();
            events += 1;
            if symbol != vocab.eos() {
                model.advance(&mut state, symbol)?;
            }
        }
    }
    Ok((-log_likelihood / events as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng;

    fn sentences(texts: &[&str]) -> Vec<Sentence> {
        texts.iter().map(|t| Sentence::new(*t)).collect()
    }

    #[test]
    fn vocabulary_by_first_occurrence() {
        let v = Vocabulary::build(&sentences(&["ab", "ba"]), 1).unwrap();
        assert_eq!(v.size(), 5);
        assert_eq!(v.symbol_names(), vec!["a", "b", "<bos>", "<eos>", "<unk>"]);
        assert_eq!(v.encode("ba"), vec![1, 0]);
        assert_eq!(v, Vocabulary::build(&sentences(&["ab", "ba"]), 1).unwrap());
    }

    #[test]
    fn rare_characters_become_unk() {
        let v = Vocabulary::build(&sentences(&["ab", "ba"]), 3).unwrap();
        assert_eq!(v.size(), 3);
        assert_eq!(v.encode("a"), vec![v.unk()]);
    }

    #[test]
    fn empty_vocabulary_input() {
        assert!(Vocabulary::build(&[], 1).is_err());
    }

    #[test]
    fn vocabulary_json() {
        let v = Vocabulary::build(&sentences(&["x<y"]), 1).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"symbols":["x","<","y","<bos>","<eos>","<unk>"]}"#);
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<Vocabulary>(r#"{"symbols":["ab","<bos>","<eos>","<unk>"]}"#).is_err());
    }

    #[test]
    fn temperature_worked_example() {
        let d = CharDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let t = apply_temperature(&d, 0.5).unwrap();
        let expected = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        for (a, b) in t.probs.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn temperature_edge_cases() {
        let d = CharDistribution::new(vec![0.2, 0.0, 0.8]).unwrap();
        assert_eq!(apply_temperature(&d, 1.0).unwrap(), d);
        assert_eq!(apply_temperature(&d, 3.0).unwrap().probs[1], 0.0);
        assert!(apply_temperature(&d, 0.0).is_err());
        assert!(apply_temperature(&d, -1.0).is_err());
        let u = CharDistribution::uniform(4);
        for tau in [0.1, 0.7, 5.0] {
            for p in apply_temperature(&u, tau).unwrap().probs {
                assert!((p - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sampling_rules() {
        let mut r = rng(5);
        let certain = CharDistribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        for _ in 0..100 {
            assert_eq!(sample_symbol(&certain, SampleMode::Multinomial, &mut r), 1);
        }
        let d = CharDistribution::new(vec![0.3, 0.3, 0.4]).unwrap();
        assert_eq!(sample_symbol(&d, SampleMode::Argmax, &mut r), 2);
        let tie = CharDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(sample_symbol(&tie, SampleMode::Argmax, &mut r), 0);
    }

    #[test]
    fn gen_params_validation() {
        let ok = GenParams {
            temperature: 1.0,
            seed_reset: 10,
            max_chars: 100,
        };
        assert!(ok.validate().is_ok());
        assert!(GenParams { temperature: 0.0, ..ok }.validate().is_err());
        assert!(GenParams { seed_reset: 0, ..ok }.validate().is_err());
        assert!(GenParams { max_chars: 0, ..ok }.validate().is_err());
    }
}
