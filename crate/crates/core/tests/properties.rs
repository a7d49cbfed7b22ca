use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use styloforge::analysis::{jaccard_matrix, pca_project, GramKind};
use styloforge::attribution::{build_feature_space, extract_char_ngrams, tfidf_transform, train_svm, FeatureMatrix};
use styloforge::corpus::{assemble_documents, segment_sentences, AssemblyConfig, Document, DocumentSet, Provenance, Sentence, SentencePool, Split};
use styloforge::lm::{apply_temperature, CharDistribution, Vocabulary};
use styloforge::nglm::NgramModel;
use styloforge::rnnlm::{clip_gradients, global_norm, init_params, Architecture, CellActivation};

fn distribution() -> impl Strategy<Value = CharDistribution> {
    prop::collection::vec(0.0f64..1.0, 2..12).prop_filter_map("needs mass", |raw| {
        let total: f64 = raw.iter().sum();
        (total > 1e-3).then(|| CharDistribution {
            probs: raw.iter().map(|p| p / total).collect(),
        })
    })
}

fn argmax_set(p: &[f64]) -> Vec<usize> {
    let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..p.len()).filter(|&i| p[i] == max).collect()
}

fn sentence_text() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-d]{1,4}", 1..5).prop_map(|w| w.join(" "))
}

fn author_docs(author: &'static str, alphabet: &'static str) -> impl Strategy<Value = Vec<Document>> {
    let word = prop::collection::vec(prop::sample::select(alphabet.chars().collect::<Vec<_>>()), 1..5)
        .prop_map(|c| c.into_iter().collect::<String>());
    let sentence = prop::collection::vec(word, 2..6).prop_map(|w| Sentence::new(w.join(" ")));
    prop::collection::vec(prop::collection::vec(sentence, 1..4), 3..5).prop_map(move |docs| {
        docs.into_iter()
            .map(|s| Document::new(author, Provenance::RealAlpha, s))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn temperature_keeps_argmax_and_mass(dist in distribution(), tau in 0.05f64..8.0) {
        let out = apply_temperature(&dist, tau).unwrap();
        let total: f64 = out.probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(out.probs.iter().all(|p| *p >= 0.0));
        let before = argmax_set(&dist.probs);
        let after = argmax_set(&out.probs);
        prop_assert!(after.iter().all(|i| before.contains(i)));
        prop_assert!(after.contains(&before[0]));
    }

    #[test]
    fn unit_temperature_is_identity(dist in distribution()) {
        let out = apply_temperature(&dist, 1.0).unwrap();
        for (a, b) in out.probs.iter().zip(&dist.probs) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nglm_distributions_sum_to_one(texts in prop::collection::vec(sentence_text(), 1..6), order in 1usize..5) {
        let sentences: Vec<Sentence> = texts.iter().map(Sentence::new).collect();
        let vocab = Vocabulary::build(&sentences, 1).unwrap();
        let model = NgramModel::fit(&sentences, vocab, order).unwrap();
        for (context, _) in model.table.contexts() {
            let dist = model.table.next_distribution(context).unwrap();
            prop_assert!((dist.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clipping_never_increases_the_norm(scale in 0.0f64..10.0, max_norm in 0.1f64..5.0, seed in any::<u64>()) {
        let arch = Architecture { embedding_dim: 3, hidden_dim: 4, layers: 2, cell_activation: CellActivation::Tanh };
        let mut grads = init_params(6, &arch, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for s in grads.slices_mut() {
            s.iter_mut().for_each(|g| *g *= scale);
        }
        let before = grads.clone();
        let norm = clip_gradients(&mut grads, max_norm);
        prop_assert!(global_norm(&grads) <= norm * (1.0 + 1e-12));
        if norm <= max_norm {
            prop_assert_eq!(grads, before);
        } else {
            prop_assert!((global_norm(&grads) - max_norm).abs() < 1e-9);
        }
    }

    #[test]
    fn segmentation_yields_clean_sentences(text in "[a-z .!?;\n]{0,80}") {
        for s in segment_sentences(&text) {
            prop_assert!(s.word_count >= 1);
            prop_assert_eq!(s.text.trim(), s.text.as_str());
            prop_assert!(!s.text.contains("  "));
        }
    }

    #[test]
    fn assembly_never_reuses_a_sentence(
        lengths in prop::collection::vec(1usize..30, 5..80),
        n_docs in 1usize..6,
        min_words in 10usize..60,
        seed in any::<u64>(),
    ) {
        let sentences: Vec<Sentence> = lengths
            .iter()
            .enumerate()
            .map(|(i, &n)| Sentence::new((0..n).map(|w| format!("s{i}w{w}")).collect::<Vec<_>>().join(" ")))
            .collect();
        let pool = SentencePool { author_id: "a".into(), sentences, split: Split::Alpha, sources: vec![] };
        let config = AssemblyConfig { n_docs, min_words, replacement_across_docs: false };
        match assemble_documents(&pool, &config, seed) {
            Ok(set) => {
                prop_assert!(set.len() <= n_docs);
                let mut seen = HashSet::new();
                for doc in &set.documents {
                    prop_assert!(doc.word_count >= min_words);
                    for id in &doc.sentence_ids {
                        prop_assert!(seen.insert(*id), "sentence {} reused", id);
                    }
                }
            }
            Err(_) => prop_assert!(lengths.iter().sum::<usize>() < min_words),
        }
    }

    #[test]
    fn tfidf_rows_are_unit_or_empty(docs in author_docs("p", "abcxyz")) {
        let set = DocumentSet::new(docs);
        let space = build_feature_space(&set, 40).unwrap();
        for doc in &set.documents {
            let row = tfidf_transform(&extract_char_ngrams(doc), &space);
            let norm = row.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            prop_assert!(norm.abs() < 1e-9 || (norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn jaccard_is_bounded_and_symmetric(p in author_docs("p", "abcd"), q in author_docs("q", "cdef")) {
        let set = DocumentSet::new(p.into_iter().chain(q).collect());
        let roster = vec!["p".to_string(), "q".to_string()];
        let m = jaccard_matrix(&set, &set, &roster, GramKind::Char).unwrap();
        prop_assert_eq!(m.values[0][0], 1.0);
        prop_assert_eq!(m.values[1][1], 1.0);
        prop_assert_eq!(m.values[0][1], m.values[1][0]);
        prop_assert!(m.values.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn pca_ratios_decrease_and_survive_reordering(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 4..9),
        rotate in 1usize..4,
    ) {
        let Ok(pca) = pca_project(&rows, 2) else { return Ok(()); };
        let r = &pca.explained_variance_ratio;
        prop_assert!(r[0] + 1e-12 >= r[1]);
        prop_assert!(r.iter().sum::<f64>() <= 1.0 + 1e-9);
        // Distinct leading eigenvalues make the components well defined.
        prop_assume!((pca.eigenvalues[0] - pca.eigenvalues[1]).abs() > 1e-6);
        let mut shuffled = rows.clone();
        shuffled.rotate_left(rotate % rows.len());
        let other = pca_project(&shuffled, 2).unwrap();
        let n = rows.len();
        for i in 0..n {
            let j = (i + n - rotate % n) % n;
            prop_assert!((pca.coordinates[i][0].abs() - other.coordinates[j][0].abs()).abs() < 1e-6);
        }
    }

    #[test]
    fn svm_ignores_row_order_and_duplication(p in author_docs("p", "abcd"), q in author_docs("q", "efgh"), seed in any::<u64>()) {
        let set = DocumentSet::new(p.into_iter().chain(q).collect());
        let space = build_feature_space(&set, 200).unwrap();
        let x = FeatureMatrix::from_documents(&set, &space);
        let model = train_svm(&x, 100.0, seed).unwrap();
        let mut reversed = x.clone();
        reversed.rows.reverse();
        reversed.labels.reverse();
        let doubled = FeatureMatrix {
            rows: x.rows.iter().chain(&x.rows).cloned().collect(),
            labels: x.labels.iter().chain(&x.labels).cloned().collect(),
            dim: x.dim,
        };
        for other in [train_svm(&reversed, 100.0, seed).unwrap(), train_svm(&doubled, 100.0, seed).unwrap()] {
            for row in &x.rows {
                prop_assert_eq!(model.predict(row), other.predict(row));
            }
        }
    }
}
