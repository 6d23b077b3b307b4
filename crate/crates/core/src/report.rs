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

//! Human-readable aggregation of a fitted state: snippets grouped by aspect
//! under their top words, with value counts and the learned transitions.

use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::inference::extract_posteriors;
use crate::model::VariationalState;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberSnippet {
    pub id: String,
    pub value: Option<usize>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AspectCluster {
    pub aspect: usize,
    /// Highest posterior-mean words with their probabilities.
    pub top_words: Vec<(String, f64)>,
    pub members: Vec<MemberSnippet>,
    /// Member count per value type.
    pub value_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityReport {
    pub entity: String,
    pub clusters: Vec<AspectCluster>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub value_names: Vec<String>,
    pub entities: Vec<EntityReport>,
    /// Row labels of the transition table (`START` then topics).
    pub transition_rows: Vec<String>,
    /// Column labels (topics then `END`).
    pub transition_columns: Vec<String>,
    pub transitions: Vec<Vec<f64>>,
}

/// Builds the report, reading only the state and the corpus.
pub fn build_report(state: &VariationalState, corpus: &Corpus, top_k: usize) -> Result<Report> {
    if top_k == 0 {
        return Err(Error::Config("top_words must be at least 1".into()));
    }
    state.check_compatible(corpus)?;
    let posteriors = extract_posteriors(state, corpus);
    let k = state.num_aspects();
    let n = state.num_values();
    let shared = state.hyperparameters.shared_aspects;

    let entities = (0..corpus.num_entities())
        .map(|e| {
            let scope = if shared { 0 } else { e };
            let mut clusters: Vec<AspectCluster> = (0..k)
                .map(|a| AspectCluster {
                    aspect: a,
                    top_words: top_words(state, corpus, scope, a, top_k),
                    members: Vec::new(),
                    value_counts: vec![0; n],
                })
                .collect();
            for &s in corpus.entity_snippets(e) {
                let snippet = corpus.snippet(s);
                let post = &posteriors[s];
                let cluster = &mut clusters[post.aspect];
                if let Some(v) = post.value {
                    cluster.value_counts[v] += 1;
                }
                cluster.members.push(MemberSnippet {
                    id: snippet.id.clone(),
                    value: post.value,
                    text: corpus.text(snippet),
                });
            }
            clusters.retain(|c| !c.members.is_empty());
            EntityReport {
                entity: corpus.entities()[e].clone(),
                clusters,
            }
        })
        .collect();

    let topics: Vec<String> = state.topics.topics().iter().map(|t| t.short().to_owned()).collect();
    let mut transition_rows = vec!["START".to_owned()];
    transition_rows.extend(topics.iter().cloned());
    let mut transition_columns = topics;
    transition_columns.push("END".to_owned());
    Ok(Report {
        value_names: state.value_names.clone(),
        entities,
        transition_rows,
        transition_columns,
        transitions: state.transitions.mean_table(),
    })
}

fn top_words(state: &VariationalState, corpus: &Corpus, scope: usize, aspect: usize, k: usize) -> Vec<(String, f64)> {
    let factor = &state.aspect_words[scope][aspect];
    let vocab = &state.scope_vocab[scope];
    let mut ranked: Vec<(u32, f64)> = vocab.iter().enumerate().map(|(l, &w)| (w, factor.mean(l))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(w, p)| (corpus.vocabulary().get(w).unwrap_or("?").to_owned(), p))
        .collect()
}

impl Report {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for entity in &self.entities {
            let _ = writeln!(out, "== {} ==", entity.entity);
            for cluster in &entity.clusters {
                let words: Vec<&str> = cluster.top_words.iter().map(|(w, _)| w.as_str()).collect();
                let _ = write!(out, "\n[aspect {}] {}", cluster.aspect, words.join(" "));
                if !self.value_names.is_empty() {
                    let counts: Vec<String> = cluster
                        .value_counts
                        .iter()
                        .zip(&self.value_names)
                        .map(|(c, name)| format!("{c} {name}"))
                        .collect();
                    let _ = write!(out, "  ({})", counts.join(" / "));
                }
                out.push('\n');
                for m in &cluster.members {
                    let mark = m.value.map(|v| mark(&self.value_names, v)).unwrap_or_default();
                    let _ = writeln!(out, "  {mark}{}", m.text);
                }
            }
            out.push('\n');
        }

        out.push_str("== transitions ==\n");
        let _ = write!(out, "{:>8}", "");
        for c in &self.transition_columns {
            let _ = write!(out, "{c:>8}");
        }
        out.push('\n');
        for (label, row) in self.transition_rows.iter().zip(&self.transitions) {
            let _ = write!(out, "{label:>8}");
            for p in row {
                let _ = write!(out, "{p:>8.4}");
            }
            out.push('\n');
        }
        out
    }
}

fn mark(names: &[String], v: usize) -> String {
    match names.get(v).map(String::as_str) {
        Some("positive") => "+ ".to_owned(),
        Some("negative") => "- ".to_owned(),
        Some(name) => format!("[{name}] "),
        None => String::new(),
    }
}
