//! Character-level LSTM language model.

mod lstm;
mod optim;
mod params;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use lstm::{backward_window, forward_step, forward_window, window_nll, ForwardCache, LstmState};
pub use optim::{adam_update, clip_gradients, global_norm, AdamMoments, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use params::{init_params, Architecture, CellActivation, LayerParams, RnnlmParams};
pub use train::{holdout_split, train_rnnlm, EpochLog, TrainConfig, TrainLog};

use crate::error::{Error, Result};
use crate::lm::{CharDistribution, LanguageModel, Vocabulary};

/// Trained weights with the vocabulary and configuration they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnlmModel {
    pub vocab: Vocabulary,
    pub config: TrainConfig,
    pub params: RnnlmParams,
}

/// Recurrent state plus the distribution over the next symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnState {
    pub lstm: LstmState,
    pub next: CharDistribution,
}

#[derive(Serialize, Deserialize)]
struct Tensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    kind: String,
    config: TrainConfig,
    vocab: Vocabulary,
    tensors: Vec<Tensor>,
}

impl RnnlmModel {
    pub fn new(vocab: Vocabulary, config: TrainConfig, params: RnnlmParams) -> Result<RnnlmModel> {
        params.check_shapes()?;
        if params.vocab_size() != vocab.size() {
            return Err(Error::InvalidParameter(format!(
                "parameters cover {} symbols, vocabulary has {}",
                params.vocab_size(),
                vocab.size()
            )));
        }
        Ok(RnnlmModel { vocab, config, params })
    }

    pub fn zero_state(&self) -> LstmState {
        LstmState::for_params(&self.params, 1)
    }

    /// Feed one symbol; returns the distribution over what follows.
    pub fn step(&self, state: &LstmState, symbol: usize) -> Result<(CharDistribution, LstmState)> {
        forward_step(&self.params, self.config.arch.cell_activation, state, symbol, None)
    }

    /// Feed a symbol sequence into `state`.
    pub fn feed(&self, state: &mut RnnState, symbols: &[usize]) -> Result<()> {
        for &symbol in symbols {
            self.advance(state, symbol)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tensors = self
            .params
            .layout()
            .into_iter()
            .zip(self.params.slices())
            .map(|((name, shape), data)| Tensor {
                name,
                shape,
                data: data.to_vec(),
            })
            .collect();
        let checkpoint = Checkpoint {
            kind: "rnnlm".into(),
            config: self.config,
            vocab: self.vocab.clone(),
            tensors,
        };
        crate::io::write_json(path, &checkpoint)
    }

    pub fn load(path: &Path) -> Result<RnnlmModel> {
        let checkpoint: Checkpoint = crate::io::read_json(path)?;
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        if checkpoint.kind != "rnnlm" {
            return Err(bad(format!("not an RNN checkpoint (kind {})", checkpoint.kind)));
        }
        let tensors = checkpoint
            .tensors
            .into_iter()
            .map(|t| (t.name, t.shape, t.data))
            .collect();
        let params = RnnlmParams::from_tensors(tensors).map_err(|e| bad(e.to_string()))?;
        if params.layers.len() != checkpoint.config.arch.layers || params.hidden_dim() != checkpoint.config.arch.hidden_dim {
            return Err(bad("tensor shapes disagree with the recorded architecture".into()));
        }
        RnnlmModel::new(checkpoint.vocab, checkpoint.config, params).map_err(|e| bad(e.to_string()))
    }
}

impl LanguageModel for RnnlmModel {
    type State = RnnState;

    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn sentence_start(&self) -> Result<RnnState> {
        let (next, lstm) = self.step(&self.zero_state(), self.vocab.bos())?;
        Ok(RnnState { lstm, next })
    }

    fn distribution(&self, state: &RnnState) -> Result<CharDistribution> {
        Ok(state.next.clone())
    }

    fn advance(&self, state: &mut RnnState, symbol: usize) -> Result<()> {
        let (next, lstm) = self.step(&state.lstm, symbol)?;
        *state = RnnState { lstm, next };
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sentence;
    use crate::lm::perplexity;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 2,
            tbptt_steps: 8,
            dropout: 0.1,
            validation_fraction: 0.25,
            seed: 3,
            arch: Architecture {
                embedding_dim: 3,
                hidden_dim: 6,
                layers: 2,
                ..Architecture::default()
            },
            ..TrainConfig::default()
        }
    }

    fn sentences() -> Vec<Sentence> {
        ["the cat sat.", "a dog ran.", "the dog sat.", "a cat ran."]
            .iter()
            .map(|t| Sentence::new(*t))
            .collect()
    }

    #[test]
    fn training_is_deterministic_and_logs_every_epoch() {
        let s = sentences();
        let vocab = Vocabulary::build(&s, 1).unwrap();
        let (a, log_a) = train_rnnlm(&s, &vocab, &tiny_config()).unwrap();
        let (b, log_b) = train_rnnlm(&s, &vocab, &tiny_config()).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(log_a.len(), 2);
        assert_eq!(
            log_a.epochs.iter().map(|e| e.train_perplexity).collect::<Vec<_>>(),
            log_b.epochs.iter().map(|e| e.train_perplexity).collect::<Vec<_>>()
        );
        assert!(log_a.to_csv().starts_with("epoch,train_ppl,val_ppl,grad_norm_mean,seconds\n"));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let s = sentences();
        let vocab = Vocabulary::build(&s, 1).unwrap();
        let (model, _) = train_rnnlm(&s, &vocab, &tiny_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        model.save(&path).unwrap();
        let loaded = RnnlmModel::load(&path).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(perplexity(&loaded, &s).unwrap(), perplexity(&model, &s).unwrap());
    }

    #[test]
    fn bad_training_inputs_are_rejected() {
        let s = sentences();
        let vocab = Vocabulary::build(&s, 1).unwrap();
        let mut config = tiny_config();
        config.validation_fraction = 0.0;
        assert!(train_rnnlm(&s, &vocab, &config).is_err());
        config.validation_fraction = 0.1;
        assert!(train_rnnlm(&s[..1], &vocab, &config).is_err());
        config.dropout = 1.0;
        assert!(train_rnnlm(&s, &vocab, &config).is_err());
    }
}
