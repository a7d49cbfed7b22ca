use std::path::Path;
use std::time::Instant;

use log::info;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{backward_window, forward_window, window_nll, LstmState};
use super::optim::{adam_update, clip_gradients, AdamMoments};
use super::params::{init_params, Architecture};
use super::RnnlmModel;
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::lm::{perplexity, Vocabulary};
use crate::seeding::{derived_rng, Rng as SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub tbptt_steps: usize,
    pub dropout: f64,
    pub validation_fraction: f64,
    pub seed: u64,
    pub arch: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            learning_rate: 0.001,
            batch_size: 50,
            clip_norm: 5.0,
            tbptt_steps: 50,
            dropout: 0.3,
            validation_fraction: 0.1,
            seed: 0,
            arch: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.epochs > 0
            && self.learning_rate > 0.0
            && self.batch_size > 0
            && self.clip_norm > 0.0
            && self.tbptt_steps > 0;
        if !positive {
            return Err(Error::InvalidParameter(
                "epochs, learning_rate, batch_size, clip_norm and tbptt_steps must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParameter(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "validation_fraction {} not in (0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_perplexity: f64,
    pub validation_perplexity: f64,
    pub grad_norm_mean: f64,
    pub grad_norm_max: f64,
    pub updates: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_ppl,val_ppl,grad_norm_mean,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{:.3}\n",
                e.epoch,
                crate::io::fmt_f64(e.train_perplexity),
                crate::io::fmt_f64(e.validation_perplexity),
                crate::io::fmt_f64(e.grad_norm_mean),
                e.seconds
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_text(path, &self.to_csv())
    }
}

/// Hold out a validation share of the sentences; returns (train, validation).
pub fn holdout_split<'a>(
    sentences: &'a [Sentence],
    fraction: f64,
    rng: &mut SeededRng,
) -> Result<(Vec<&'a Sentence>, Vec<&'a Sentence>)> {
    let n = sentences.len();
    let n_val = (fraction * n as f64).ceil() as usize;
    if n == 0 || n_val == 0 {
        return Err(Error::EmptyInput("validation split is empty"));
    }
    if n_val >= n {
        return Err(Error::EmptyInput("validation split leaves no training sentences"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let validation = order[..n_val].iter().map(|&i| &sentences[i]).collect();
    let train = order[n_val..].iter().map(|&i| &sentences[i]).collect();
    Ok((train, validation))
}

/// `BOS chars EOS` per sentence, concatenated.
fn encode_stream(sentences: &[&Sentence], vocab: &Vocabulary) -> Vec<usize> {
    let mut stream = Vec::new();
    for sentence in sentences {
        stream.push(vocab.bos());
        stream.extend(vocab.encode(&sentence.text));
        stream.push(vocab.eos());
    }
    stream
}

fn dropout_masks(rng: &mut SeededRng, layers: usize, rows: usize, hidden: usize, p: f64) -> Vec<Array2<f64>> {
    let keep = 1.0 / (1.0 - p);
    (0..layers)
        .map(|_| Array2::from_shape_simple_fn((rows, hidden), || if rng.random::<f64>() < p { 0.0 } else { keep }))
        .collect()
}

/// Train a character LSTM with truncated BPTT, global-norm clipping and Adam.
pub fn train_rnnlm(sentences: &[Sentence], vocab: &Vocabulary, config: &TrainConfig) -> Result<(RnnlmModel, TrainLog)> {
    config.validate()?;
    let (train, validation) = holdout_split(
        sentences,
        config.validation_fraction,
        &mut derived_rng(config.seed, "rnnlm/holdout"),
    )?;
    let params = init_params(vocab.size(), &config.arch, &mut derived_rng(config.seed, "rnnlm/init"))?;
    let mut model = RnnlmModel {
        vocab: vocab.clone(),
        config: *config,
        params,
    };
    let activation = config.arch.cell_activation;
    let layers = config.arch.layers;
    let hidden = config.arch.hidden_dim;
    let mut moments = AdamMoments::new(&model.params);
    let mut dropout_rng = derived_rng(config.seed, "rnnlm/dropout");
    let mut step = 0u64;
    let mut log = TrainLog::default();

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let mut order = train.clone();
        order.shuffle(&mut derived_rng(config.seed, &format!("rnnlm/epoch/{epoch}")));
        let stream = encode_stream(&order, vocab);

        let batch = config.batch_size.min(stream.len() / 2).max(1);
        let length = stream.len() / batch;
        if length < 2 {
            return Err(Error::EmptyInput("training stream shorter than two symbols"));
        }
        let mut state = LstmState::zeros(layers, batch, hidden);
        let (mut nll, mut scored) = (0.0, 0usize);
        let mut norms = Vec::new();

        let mut start = 0;
        while start + 1 < length {
            let steps = config.tbptt_steps.min(length - 1 - start);
            let mut inputs = Vec::with_capacity(steps * batch);
            let mut targets = Vec::with_capacity(steps * batch);
            for t in 0..steps {
                for b in 0..batch {
                    let pos = b * length + start + t;
                    inputs.push(stream[pos]);
                    let next = stream[pos + 1];
                    targets.push((next != vocab.bos()).then_some(next));
                }
            }
            let masks = (config.dropout > 0.0)
                .then(|| dropout_masks(&mut dropout_rng, layers, steps * batch, hidden, config.dropout));
            let (cache, next_state) =
                forward_window(&model.params, activation, &state, &inputs, batch, masks.as_deref())
                    .map_err(|e| Error::Numeric(format!("epoch {epoch}, update {}: {e}", step + 1)))?;
            let (window_loss, count) = window_nll(&cache, &targets);
            if !window_loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss at epoch {epoch}, update {}",
                    step + 1
                )));
            }
            nll += window_loss;
            scored += count;

            let mut grads = backward_window(&model.params, &cache, &targets);
            norms.push(clip_gradients(&mut grads, config.clip_norm));
            step += 1;
            adam_update(&mut model.params, &grads, &mut moments, step, config.learning_rate);
            state = next_state;
            start += steps;
        }
        if !model.params.is_finite() {
            return Err(Error::Numeric(format!("non-finite parameters after epoch {epoch}")));
        }

        let validation_sentences: Vec<Sentence> = validation.iter().map(|s| (*s).clone()).collect();
        let entry = EpochLog {
            epoch,
            train_perplexity: (nll / scored.max(1) as f64).exp(),
            validation_perplexity: perplexity(&model, &validation_sentences)?,
            grad_norm_mean: norms.iter().sum::<f64>() / norms.len().max(1) as f64,
            grad_norm_max: norms.iter().copied().fold(0.0, f64::max),
            updates: norms.len(),
            seconds: started.elapsed().as_secs_f64(),
        };
        info!(
            "epoch {epoch}: train ppl {:.4}, val ppl {:.4}, {} updates, {:.1}s",
            entry.train_perplexity, entry.validation_perplexity, entry.updates, entry.seconds
        );
        log.epochs.push(entry);
    }
    Ok((model, log))
}
