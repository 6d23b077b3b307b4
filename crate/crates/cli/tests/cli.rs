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

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aspectval"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn aspectval")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "aspectval {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&read(path)).expect("json")
}

const SMALL_CONFIG: &str = "K = 3\nN = 2\nmax_iters = 8\nuse_pos = true\n";

/// A small generated corpus with config, in a fresh directory.
fn generated(extra: &[&str]) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("config.txt"), SMALL_CONFIG).unwrap();
    let mut args = vec![
        "generate",
        "--config",
        "config.txt",
        "--out",
        "gen",
        "--entities",
        "4",
        "--snippets",
        "12",
        "--vocab",
        "300",
        "--seed-words",
        "5",
        "--seed-mass",
        "0.3",
        "--seed",
        "7",
    ];
    args.extend_from_slice(extra);
    ok(dir.path(), &args);
    let gen = dir.path().join("gen");
    (dir, gen)
}

#[test]
fn generate_is_deterministic() {
    let (a, ga) = generated(&[]);
    let (_b, gb) = generated(&[]);
    for file in ["corpus.jsonl", "gold_clusters.tsv", "gold_polarity.tsv", "gold_word_labels.jsonl", "seeds.txt"] {
        assert_eq!(read(ga.join(file)), read(gb.join(file)), "{file}");
    }
    let manifest = json(ga.join("manifest.json"));
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["rng_seed"], 7);
    assert_eq!(manifest["inputs"][0]["role"], "config");
    assert!(manifest["outputs"].as_array().unwrap().len() >= 5);
    drop(a);
}

#[test]
fn separated_generation_passes_the_audit() {
    let (_dir, gen) = generated(&["--separation", "1.0"]);
    // Independent re-check: A-labeled words never appear under two clusters
    // of the same entity.
    let clusters: BTreeMap<String, (String, String)> = read(gen.join("gold_clusters.tsv"))
        .lines()
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            (c[1].to_owned(), (c[0].to_owned(), c[2].to_owned()))
        })
        .collect();
    let corpus: BTreeMap<String, Vec<String>> = read(gen.join("corpus.jsonl"))
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            let words = v["tokens"].as_array().unwrap().iter().map(|t| t[0].as_str().unwrap().to_owned()).collect();
            (v["id"].as_str().unwrap().to_owned(), words)
        })
        .collect();
    let mut owner: BTreeMap<(String, String), String> = BTreeMap::new();
    for line in read(gen.join("gold_word_labels.jsonl")).lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let id = v["id"].as_str().unwrap();
        let (entity, cluster) = &clusters[id];
        for (word, label) in corpus[id].iter().zip(v["labels"].as_array().unwrap()) {
            if label == "A" {
                let prev = owner.insert((entity.clone(), word.clone()), cluster.clone());
                assert!(prev.is_none() || prev.as_ref() == Some(cluster), "{word} shared across clusters");
            }
        }
    }
    assert!(!owner.is_empty());
}

#[test]
fn fit_is_thread_independent_and_logs_free_energy() {
    let (dir, _gen) = generated(&[]);
    let d = dir.path();
    let fit = |threads: &str, out: &str| {
        ok(
            d,
            &[
                "fit", "--config", "config.txt", "--corpus", "gen/corpus.jsonl", "--seeds", "gen/seeds.txt", "--out", out,
                "--threads", threads,
            ],
        );
    };
    fit("1", "one.json");
    fit("8", "eight.json");
    assert_eq!(read(d.join("one.json")), read(d.join("eight.json")));
    let log = read(d.join("one.json.fe.tsv"));
    assert_eq!(log.lines().next(), Some("iteration\tfree_energy"));
    assert!(log.lines().count() >= 2);
    let manifest = json(d.join("eight.json.manifest.json"));
    assert_eq!(manifest["threads"], 8);
    let roles: Vec<&str> = manifest["inputs"].as_array().unwrap().iter().map(|i| i["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["config", "corpus", "seeds"]);
    // Same inputs, same input hash.
    assert_eq!(manifest["input_hash"], json(d.join("one.json.manifest.json"))["input_hash"]);
}

#[test]
fn rerun_from_manifest_arguments_is_byte_identical() {
    let (dir, _gen) = generated(&[]);
    let d = dir.path();
    ok(d, &["fit", "--config", "config.txt", "--corpus", "gen/corpus.jsonl", "--out", "a.json", "--seed", "3"]);
    let manifest = json(d.join("a.json.manifest.json"));
    let first = read(d.join("a.json"));
    let args: Vec<String> = manifest["arguments"].as_array().unwrap().iter().map(|a| a.as_str().unwrap().to_owned()).collect();
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(d, &args);
    assert_eq!(first, read(d.join("a.json")));
}

#[test]
fn medical_style_config_fits_without_values() {
    let (dir, _gen) = generated(&[]);
    let d = dir.path();
    std::fs::write(
        d.join("medical.txt"),
        "K = 30\nN = 0\nuse_ignore = true\nshared_aspects = true\nshared_aspect_multinomial = true\nmax_iters = 3\n",
    )
    .unwrap();
    ok(d, &["fit", "--config", "medical.txt", "--corpus", "gen/corpus.jsonl", "--out", "m.json"]);
    let state = json(d.join("m.json"));
    assert_eq!(state["q_value"].as_array().unwrap().len(), 0);
    assert_eq!(state["aspect_words"].as_array().unwrap().len(), 1);
}

#[test]
fn muc_of_gold_against_itself_is_one() {
    let (dir, _gen) = generated(&[]);
    let out = ok(
        dir.path(),
        &[
            "eval", "--metric", "muc", "--corpus", "gen/corpus.jsonl", "--clusters", "gen/gold_clusters.tsv",
            "--gold-clusters", "gen/gold_clusters.tsv",
        ],
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["metric"], "muc");
    assert_eq!(v[0]["f1"], 1.0);
    assert!(dir.path().join("eval.manifest.json").exists());
}

/// Four snippets of one entity, each "blackened/JJ chicken/NN".
fn hand_corpus(dir: &Path) {
    let mut text = String::new();
    for i in 0..4 {
        text.push_str(&format!(
            "{{\"entity\":\"r\",\"id\":\"s{i}\",\"tokens\":[[\"blackened\",\"JJ\"],[\"chicken\",\"NN\"]]}}\n"
        ));
    }
    std::fs::write(dir.join("corpus.jsonl"), text).unwrap();
}

#[test]
fn sentiment_split_credit() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    hand_corpus(d);
    std::fs::write(d.join("gold.tsv"), "r\ts0\tpositive\nr\ts1\tpositive\nr\ts2\tnegative\nr\ts3\tnegative\n").unwrap();
    std::fs::write(d.join("pred.tsv"), "r\ts0\tpositive\nr\ts1\tsplit\nr\ts2\tnegative\nr\ts3\tsplit\n").unwrap();
    ok(
        d,
        &[
            "eval", "--metric", "sentiment", "--corpus", "corpus.jsonl", "--predictions", "pred.tsv", "--gold-polarity",
            "gold.tsv", "--out", "m.json",
        ],
    );
    assert_eq!(json(d.join("m.json"))[0]["accuracy"], 0.75);
    assert!(d.join("m.json.manifest.json").exists());
}

#[test]
fn word_prf_with_tree_expansion_reports_both() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    hand_corpus(d);
    let mut gold = String::new();
    let mut pred = String::new();
    let mut spans = String::new();
    for i in 0..4 {
        gold.push_str(&format!("{{\"id\":\"s{i}\",\"labels\":[\"A\",\"A\"]}}\n"));
        pred.push_str(&format!("{{\"id\":\"s{i}\",\"labels\":[\"B\",\"A\"]}}\n"));
        spans.push_str(&format!("s{i}\t0\t2\tNP\n"));
    }
    std::fs::write(d.join("gold.jsonl"), gold).unwrap();
    std::fs::write(d.join("pred.jsonl"), pred).unwrap();
    std::fs::write(d.join("spans.tsv"), spans).unwrap();
    let out = ok(
        d,
        &[
            "eval", "--metric", "word-prf", "--tree-expand", "--corpus", "corpus.jsonl", "--word-labels", "pred.jsonl",
            "--gold-word-labels", "gold.jsonl", "--parse-spans", "spans.tsv",
        ],
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    let find = |scope: &str, metric: &str| {
        rows.iter()
            .find(|r| r["scope"] == scope && r["metric"].as_str().unwrap().contains(metric))
            .unwrap_or_else(|| panic!("no {scope} {metric} row in {v}"))
    };
    assert_eq!(find("raw", ":A")["recall"], 0.5);
    assert_eq!(find("raw", ":A")["precision"], 1.0);
    assert_eq!(find("tree-expanded", ":A")["recall"], 1.0);
    assert_eq!(find("tree-expanded", ":A")["f1"], 1.0);
}

fn cluster_file(path: &Path) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for line in read(path).lines() {
        let c: Vec<&str> = line.split('\t').collect();
        out.entry(c[0].to_owned()).or_default().insert(c[2].to_owned());
    }
    out
}

#[test]
fn cluster_baselines_follow_scope() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--out", "gen", "--entities", "3", "--snippets", "40", "--vocab", "300", "--seed", "1"]);
    ok(
        d,
        &[
            "baseline", "--variant", "cluster-noun", "--clusters", "10", "--scope", "entity", "--corpus", "gen/corpus.jsonl",
            "--out", "noun.tsv",
        ],
    );
    let per_entity = cluster_file(&d.join("noun.tsv"));
    assert_eq!(per_entity.len(), 3);
    assert!(per_entity.values().all(|labels| labels.len() == 10));
    // Entity clusterings do not share labels.
    let all: BTreeSet<&String> = per_entity.values().flatten().collect();
    assert_eq!(all.len(), 30);

    ok(
        d,
        &[
            "baseline", "--variant", "cluster-all", "--clusters", "30", "--scope", "corpus", "--corpus", "gen/corpus.jsonl",
            "--out", "all.tsv",
        ],
    );
    let labels: BTreeSet<String> = cluster_file(&d.join("all.tsv")).into_values().flatten().collect();
    assert_eq!(labels.len(), 30);
    assert!(d.join("all.tsv.manifest.json").exists());
}

#[test]
fn seed_and_majority_baselines() {
    let (dir, _gen) = generated(&[]);
    let d = dir.path();
    let seed = |out: &str| {
        ok(d, &["baseline", "--variant", "seed", "--corpus", "gen/corpus.jsonl", "--seeds", "gen/seeds.txt", "--out", out]);
    };
    seed("a.tsv");
    seed("b.tsv");
    let a = read(d.join("a.tsv"));
    assert_eq!(a, read(d.join("b.tsv")));
    assert!(a.lines().all(|l| ["positive", "negative", "split"].contains(&l.split('\t').nth(2).unwrap())));

    ok(
        d,
        &["baseline", "--variant", "majority", "--corpus", "gen/corpus.jsonl", "--labels", "gen/gold_polarity.tsv", "--out", "m.tsv"],
    );
    let labels: BTreeSet<String> = read(d.join("m.tsv")).lines().map(|l| l.split('\t').nth(2).unwrap().to_owned()).collect();
    assert_eq!(labels.len(), 1);
}

#[test]
fn report_top_word_and_transition_rows() {
    let (dir, _gen) = generated(&[]);
    let d = dir.path();
    ok(d, &["fit", "--config", "config.txt", "--corpus", "gen/corpus.jsonl", "--out", "s.json"]);
    ok(d, &["report", "--state", "s.json", "--corpus", "gen/corpus.jsonl", "--top-words", "1", "--json", "--out", "r.json"]);
    let r = json(d.join("r.json"));
    for entity in r["entities"].as_array().unwrap() {
        for cluster in entity["clusters"].as_array().unwrap() {
            assert_eq!(cluster["top_words"].as_array().unwrap().len(), 1);
            assert!(!cluster["members"].as_array().unwrap().is_empty());
        }
    }
    for (i, row) in r["transitions"].as_array().unwrap().iter().enumerate() {
        let sum: f64 = row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-6, "row {i} sums to {sum}");
    }
    let text = ok(d, &["report", "--state", "s.json", "--corpus", "gen/corpus.jsonl"]);
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.contains("== transitions =="));
    assert!(text.contains("[aspect "));
}

#[test]
fn exit_codes() {
    let (dir, _gen) = generated(&[]);
    let d = dir.path();
    assert_eq!(run(d, &["fit", "--corpus", "gen/corpus.jsonl"]).status.code(), Some(2));
    assert_eq!(run(d, &["fit", "--corpus", "missing.jsonl", "--out", "x.json"]).status.code(), Some(3));
    std::fs::write(d.join("bad.txt"), "K = 0\n").unwrap();
    assert_eq!(
        run(d, &["fit", "--config", "bad.txt", "--corpus", "gen/corpus.jsonl", "--out", "x.json"]).status.code(),
        Some(2)
    );
    std::fs::write(d.join("broken.jsonl"), "{not json\n").unwrap();
    assert_eq!(run(d, &["fit", "--corpus", "broken.jsonl", "--out", "x.json"]).status.code(), Some(3));
    assert!(!d.join("x.json").exists());
}
