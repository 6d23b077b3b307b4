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

//! File formats: writing then loading keeps everything, and bad input is
//! reported with its line.

use std::path::Path;

use aspectval::baselines::{cluster_baseline, ClusterScope, Linkage};
use aspectval::corpus::{
    load_corpus, load_gold, load_label_tsv, load_parse_spans, load_seed_lexicon, load_word_labels, write_corpus,
    Corpus, CorpusBuilder, GoldPaths, PhraseKind, ValueTypes, WordLabel,
};
use aspectval::generator::{sample_corpus, CorpusShape};
use aspectval::inference::run_inference;
use aspectval::model::{Hyperparameters, VariationalState};
use aspectval::Error;
use tempfile::TempDir;

fn small_synthetic(seed: u64) -> (Hyperparameters, aspectval::generator::SyntheticCorpus) {
    let hp = Hyperparameters {
        num_aspects: 3,
        ..Hyperparameters::default()
    };
    let shape = CorpusShape {
        entities: 4,
        snippets_per_entity: 12,
        vocab_size: 80,
        seed_words_per_value: 4,
        seed_mass: 0.3,
        ..CorpusShape::default()
    };
    let syn = sample_corpus(&hp, &shape, seed).unwrap();
    (hp, syn)
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn two_snippets() -> Corpus {
    let mut b = CorpusBuilder::new();
    b.push("r1", "s1", &[("The", "DT"), ("pizza", "NN"), ("was", "VBD"), ("great", "JJ")])
        .unwrap();
    b.push("r2", "s2", &[("slow", "JJ"), ("service", "NN")]).unwrap();
    b.build()
}

#[test]
fn corpus_round_trip_keeps_indices_and_tokens() {
    let dir = TempDir::new().unwrap();
    let (_, syn) = small_synthetic(3);
    let path = dir.path().join("corpus.jsonl");
    write_corpus(&syn.corpus, &path).unwrap();
    let reloaded = load_corpus(&path).unwrap();
    assert_eq!(reloaded, syn.corpus);

    // And a second trip produces the same bytes.
    let again = dir.path().join("again.jsonl");
    write_corpus(&reloaded, &again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn synthetic_directory_loads_back() {
    let dir = TempDir::new().unwrap();
    let (hp, syn) = small_synthetic(11);
    syn.write(dir.path(), &hp).unwrap();
    let corpus = load_corpus(dir.path().join("corpus.jsonl")).unwrap();
    assert_eq!(corpus, syn.corpus);

    let values = hp.value_types();
    let clusters = dir.path().join("gold_clusters.tsv");
    let polarity = dir.path().join("gold_polarity.tsv");
    let words = dir.path().join("gold_word_labels.jsonl");
    let gold = load_gold(
        &GoldPaths {
            clusters: Some(&clusters),
            polarity: Some(&polarity),
            word_labels: Some(&words),
            parse_spans: None,
        },
        &corpus,
        &values,
    )
    .unwrap();
    assert_eq!(gold, syn.gold);

    let seeds = load_seed_lexicon(dir.path().join("seeds.txt"), &corpus, &values).unwrap();
    assert_eq!(seeds, syn.seeds());
}

#[test]
fn label_tsv_checks_entity_and_id() {
    let dir = TempDir::new().unwrap();
    let corpus = two_snippets();
    let ok = write(dir.path(), "ok.tsv", "r1\ts1\tfood\n\nr2\ts2\tservice\n");
    let labels = load_label_tsv(&ok, &corpus).unwrap();
    assert_eq!(labels["s1"], "food");
    assert_eq!(labels["s2"], "service");

    let wrong_entity = write(dir.path(), "we.tsv", "r1\ts1\tfood\nr1\ts2\tservice\n");
    assert!(matches!(load_label_tsv(&wrong_entity, &corpus), Err(Error::Parse { line: 2, .. })));

    let unknown = write(dir.path(), "un.tsv", "r1\ts9\tfood\n");
    assert!(matches!(load_label_tsv(&unknown, &corpus), Err(Error::Parse { line: 1, .. })));

    let columns = write(dir.path(), "col.tsv", "r1\ts1\n");
    assert!(matches!(load_label_tsv(&columns, &corpus), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn unknown_polarity_label_is_rejected() {
    let dir = TempDir::new().unwrap();
    let corpus = two_snippets();
    let path = write(dir.path(), "pol.tsv", "r1\ts1\tpositive\nr2\ts2\tmeh\n");
    let values = ValueTypes::default_for(2);
    let err = load_gold(
        &GoldPaths {
            polarity: Some(&path),
            ..GoldPaths::default()
        },
        &corpus,
        &values,
    )
    .unwrap_err();
    assert!(err.to_string().contains("meh"), "{err}");
}

#[test]
fn word_labels_must_match_token_count() {
    let dir = TempDir::new().unwrap();
    let corpus = two_snippets();
    let ok = write(
        dir.path(),
        "ok.jsonl",
        "{\"id\":\"s1\",\"labels\":[\"B\",\"A\",\"B\",\"V\"]}\n{\"id\":\"s2\",\"labels\":[\"V\",\"A\"]}\n",
    );
    let labels = load_word_labels(&ok, &corpus).unwrap();
    assert_eq!(labels["s1"], vec![WordLabel::B, WordLabel::A, WordLabel::B, WordLabel::V]);

    let short = write(dir.path(), "short.jsonl", "{\"id\":\"s2\",\"labels\":[\"V\"]}\n");
    assert!(matches!(load_word_labels(&short, &corpus), Err(Error::Parse { line: 1, .. })));

    let bad = write(dir.path(), "bad.jsonl", "{\"id\":\"s2\",\"labels\":[\"V\",\"X\"]}\n");
    assert!(load_word_labels(&bad, &corpus).is_err());
}

#[test]
fn parse_spans_are_bounds_checked() {
    let dir = TempDir::new().unwrap();
    let corpus = two_snippets();
    let ok = write(dir.path(), "ok.tsv", "s1\t0\t2\tNP\ns1\t3\t4\tADJP\ns2\t0\t2\tNP\n");
    let spans = load_parse_spans(&ok, &corpus).unwrap();
    assert_eq!(spans["s1"].len(), 2);
    assert_eq!(spans["s1"][1].kind, PhraseKind::Adjp);
    assert_eq!((spans["s2"][0].start, spans["s2"][0].end), (0, 2));

    for (name, text, line) in [
        ("past.tsv", "s2\t0\t3\tNP\n", 1),
        ("empty.tsv", "s1\t0\t2\tNP\ns1\t2\t2\tNP\n", 2),
        ("kind.tsv", "s1\t0\t2\tVP\n", 1),
        ("num.tsv", "s1\tx\t2\tNP\n", 1),
    ] {
        let path = write(dir.path(), name, text);
        match load_parse_spans(&path, &corpus) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{name}"),
            other => panic!("{name}: {other:?}"),
        }
    }
}

#[test]
fn cluster_tsv_reloads_as_same_partition() {
    let dir = TempDir::new().unwrap();
    let (_, syn) = small_synthetic(5);
    let clustering = cluster_baseline(&syn.corpus, ClusterScope::Corpus, false, 4, Linkage::Average).unwrap();
    let path = dir.path().join("clusters.tsv");
    clustering.write_tsv(&path, &syn.corpus).unwrap();
    let labels = load_label_tsv(&path, &syn.corpus).unwrap();
    assert_eq!(labels.len(), clustering.len());
    for (id, label) in &labels {
        assert_eq!(*label, format!("c{}", clustering.assignments[id]));
    }
}

#[test]
fn fitted_state_file_round_trip() {
    let dir = TempDir::new().unwrap();
    let (mut hp, syn) = small_synthetic(7);
    hp.max_iters = 5;
    let fit = run_inference(&hp, &syn.corpus, &syn.seeds()).unwrap();
    let path = dir.path().join("state.json");
    fit.state.save(&path).unwrap();
    let loaded = VariationalState::load(&path).unwrap();
    assert_eq!(loaded.to_json().unwrap(), fit.state.to_json().unwrap());
    assert_eq!(loaded.q_word, fit.state.q_word);
    loaded.check_compatible(&syn.corpus).unwrap();

    // A different corpus is refused.
    assert!(loaded.check_compatible(&two_snippets()).is_err());
}

#[test]
fn missing_files_are_io_errors() {
    let corpus = two_snippets();
    let missing = Path::new("/nonexistent/aspectval/file");
    assert!(matches!(load_corpus(missing), Err(Error::Io { .. })));
    assert!(matches!(load_label_tsv(missing, &corpus), Err(Error::Io { .. })));
    assert!(matches!(
        load_seed_lexicon(missing, &corpus, &ValueTypes::default_for(2)),
        Err(Error::Io { .. })
    ));
}
