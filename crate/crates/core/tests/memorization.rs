mod common;

use std::time::Instant;

use common::toy::{memorization_config, toy_corpus};
use styloforge::lm::Vocabulary;
use styloforge::rnnlm::train_rnnlm;

#[test]
fn lstm_memorizes_a_toy_corpus() {
    let sentences = toy_corpus();
    let vocab = Vocabulary::build(&sentences, 1).unwrap();
    let started = Instant::now();
    let (_, log) = train_rnnlm(&sentences, &vocab, &memorization_config()).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let ppl: Vec<f64> = log.epochs.iter().map(|e| e.train_perplexity).collect();
    assert_eq!(ppl.len(), 500);
    assert!(ppl.windows(2).take(4).all(|w| w[1] <= w[0]), "first epochs {:?}", &ppl[..5]);
    assert!(ppl[4] < ppl[0]);
    let best = ppl.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(best < 1.3, "best training perplexity {best}");
    assert!(elapsed < 120.0, "took {elapsed:.1}s");
}
