use styloforge::corpus::Sentence;
use styloforge::rnnlm::{Architecture, TrainConfig};

pub fn toy_corpus() -> Vec<Sentence> {
    [
        "the quick brown fox jumps over the lazy dog.",
        "a small cat sleeps on the warm mat.",
        "rain falls softly over the quiet town.",
        "old ships sail past the northern light.",
        "every child loves a bright red kite.",
    ]
    .iter()
    .map(|t| Sentence::new(*t))
    .collect()
}

pub fn memorization_config() -> TrainConfig {
    TrainConfig {
        epochs: 500,
        learning_rate: 0.005,
        batch_size: 1,
        tbptt_steps: 50,
        dropout: 0.0,
        validation_fraction: 0.1,
        seed: 5,
        arch: Architecture {
            hidden_dim: 32,
            ..Architecture::default()
        },
        ..TrainConfig::default()
    }
}

