// Copyright 2026 The aspectval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Randomized invariants of the metrics, expansion and baselines.

use aspectval::baselines::{agglomerative_cluster, Clustering, Linkage};
use aspectval::corpus::{Corpus, CorpusBuilder, ParseSpan, PhraseKind, WordLabel};
use aspectval::eval::{muc_score, tree_expand};
use aspectval::generator::sample_dirichlet;
use aspectval::inference::softmax_in_place;
use aspectval::model::DirichletFactor;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn clustering(labels: &[u8]) -> Clustering {
    Clustering::from_labels("t", labels.iter().enumerate().map(|(i, &l)| (format!("x{i:02}"), l)))
}

fn partitions() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    (1usize..16).prop_flat_map(|n| (prop::collection::vec(0u8..5, n), prop::collection::vec(0u8..5, n)))
}

fn label() -> impl Strategy<Value = WordLabel> {
    prop_oneof![Just(WordLabel::A), Just(WordLabel::V), Just(WordLabel::B)]
}

fn kind() -> impl Strategy<Value = PhraseKind> {
    prop_oneof![Just(PhraseKind::Np), Just(PhraseKind::Adjp), Just(PhraseKind::Advp)]
}

/// Labels, spans inside them, and tags (some of them function tags).
fn expansion_case() -> impl Strategy<Value = (Vec<WordLabel>, Vec<ParseSpan>, Vec<&'static str>)> {
    (1usize..10).prop_flat_map(|n| {
        let spans = prop::collection::vec((0..n, 1..=n, kind()), 0..6).prop_map(move |raw| {
            raw.into_iter()
                .filter_map(|(a, b, kind)| (a < b).then_some(ParseSpan { start: a, end: b, kind }))
                .collect::<Vec<_>>()
        });
        let tags = prop::collection::vec(prop::sample::select(vec!["NN", "JJ", "DT", "CC", ",", "RB"]), n);
        (prop::collection::vec(label(), n), spans, tags)
    })
}

fn text_corpus(docs: &[Vec<u8>]) -> Corpus {
    let mut b = CorpusBuilder::new();
    for (i, doc) in docs.iter().enumerate() {
        let tokens: Vec<(String, &str)> = doc.iter().map(|w| (format!("w{w}"), "NN")).collect();
        b.push("e", &format!("d{i:02}"), &tokens).unwrap();
    }
    b.build()
}

proptest! {
    #[test]
    fn muc_swaps_precision_and_recall((a, b) in partitions()) {
        let ab = muc_score(&clustering(&a), &clustering(&b)).unwrap();
        let ba = muc_score(&clustering(&b), &clustering(&a)).unwrap();
        prop_assert_eq!(ab.precision_counts, ba.recall_counts);
        prop_assert_eq!(ab.recall_counts, ba.precision_counts);
        prop_assert_eq!(ab.f1, ba.f1);
        prop_assert!((0.0..=1.0).contains(&ab.f1));
    }

    #[test]
    fn muc_of_a_partition_with_itself((a, _) in partitions()) {
        let c = clustering(&a);
        let m = muc_score(&c, &c).unwrap();
        prop_assert_eq!(m.precision_counts.num, m.precision_counts.den);
        if m.precision_counts.den > 0 {
            prop_assert_eq!(m.f1, 1.0);
        }
    }

    #[test]
    fn muc_ignores_cluster_names((a, b) in partitions(), shift in 1u8..5) {
        let renamed: Vec<u8> = b.iter().map(|l| (l + shift) % 5).collect();
        let m1 = muc_score(&clustering(&a), &clustering(&b)).unwrap();
        let m2 = muc_score(&clustering(&a), &clustering(&renamed)).unwrap();
        prop_assert_eq!(m1, m2);
    }

    #[test]
    fn tree_expand_is_idempotent((labels, spans, tags) in expansion_case()) {
        let once = tree_expand(&labels, &spans, &tags);
        let twice = tree_expand(&once, &spans, &tags);
        prop_assert_eq!(&once, &twice);
        for i in 0..labels.len() {
            // Only background words change, and never function words.
            if labels[i] != WordLabel::B || matches!(tags[i], "DT" | "CC" | ",") {
                prop_assert_eq!(once[i], labels[i]);
            }
        }
    }

    #[test]
    fn tree_expand_without_spans_is_identity((labels, _, tags) in expansion_case()) {
        prop_assert_eq!(tree_expand(&labels, &[], &tags), labels);
    }

    #[test]
    fn softmax_normalizes_and_keeps_order(scores in prop::collection::vec(-800.0f64..800.0, 1..8)) {
        let mut q = scores.clone();
        softmax_in_place(&mut q);
        let total: f64 = q.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for i in 0..q.len() {
            prop_assert!(q[i].is_finite() && q[i] >= 0.0);
            for j in 0..q.len() {
                if scores[i] > scores[j] {
                    prop_assert!(q[i] >= q[j]);
                }
            }
        }
    }

    #[test]
    fn expected_log_is_negative_and_ordered(alpha in prop::collection::vec(0.01f64..50.0, 2..6)) {
        let f = DirichletFactor::from_prior(alpha.clone());
        for i in 0..alpha.len() {
            prop_assert!(f.expected_log(i) < 0.0);
            // Jensen: E[ln p] <= ln E[p].
            prop_assert!(f.expected_log(i) <= f.mean(i).ln() + 1e-12);
            for j in 0..alpha.len() {
                if alpha[i] > alpha[j] {
                    prop_assert!(f.expected_log(i) > f.expected_log(j));
                }
            }
        }
    }

    #[test]
    fn dirichlet_samples_are_distributions(alpha in prop::collection::vec(0.01f64..10.0, 1..12), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = sample_dirichlet(&mut rng, &alpha);
        prop_assert_eq!(p.len(), alpha.len());
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clustering_ignores_input_order(
        docs in prop::collection::vec(prop::collection::vec(0u8..6, 1..5), 2..9),
        target in 1usize..4,
        order in any::<u64>(),
    ) {
        let corpus = text_corpus(&docs);
        let target = target.min(docs.len());
        let forward: Vec<usize> = (0..docs.len()).collect();
        let mut shuffled = forward.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(order);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        for linkage in [Linkage::Single, Linkage::Average, Linkage::Complete] {
            let a = agglomerative_cluster(&corpus, &forward, false, target, linkage, "e").unwrap();
            let b = agglomerative_cluster(&corpus, &shuffled, false, target, linkage, "e").unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.clusters().iter().filter(|c| !c.is_empty()).count(), target);
        }
    }
}
