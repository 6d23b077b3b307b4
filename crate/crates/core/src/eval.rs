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

//! Scoring against gold annotations: MUC, sentiment accuracy and per-word
//! label precision/recall, with optional parse-tree expansion.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::baselines::{ClusterScope, Clustering, Prediction};
use crate::corpus::{Corpus, ParseSpan, PhraseKind, WordLabel};
use crate::error::{Error, Result};

/// An exact ratio; `den == 0` is read as 1 by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn value(self) -> f64 {
        if self.den == 0 {
            1.0
        } else {
            self.num as f64 / self.den as f64
        }
    }

    fn normalized(self) -> (u64, u64) {
        if self.den == 0 {
            (1, 1)
        } else {
            (self.num, self.den)
        }
    }
}

/// Harmonic mean of two ratios `a/b` and `c/d`, as `2ac / (ad + cb)` with a
/// single rounding.
pub fn harmonic_mean(p: Ratio, r: Ratio) -> f64 {
    let (a, b) = p.normalized();
    let (c, d) = r.normalized();
    let num = 2 * a as u128 * c as u128;
    let den = a as u128 * d as u128 + c as u128 * b as u128;
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MucResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_counts: Ratio,
    pub recall_counts: Ratio,
}

fn muc_links(key: &Clustering, other: &Clustering) -> Ratio {
    let mut num = 0u64;
    let mut den = 0u64;
    for members in key.clusters() {
        if members.is_empty() {
            continue;
        }
        let parts: BTreeSet<usize> = members.iter().map(|id| other.assignments[*id]).collect();
        num += (members.len() - parts.len()) as u64;
        den += (members.len() - 1) as u64;
    }
    Ratio { num, den }
}

/// Link-based MUC score of `response` against `gold`.
///
/// Both clusterings must cover exactly the same snippets.
pub fn muc_score(gold: &Clustering, response: &Clustering) -> Result<MucResult> {
    if !gold.assignments.keys().eq(response.assignments.keys()) {
        let missing = gold
            .assignments
            .keys()
            .find(|k| !response.assignments.contains_key(*k))
            .or_else(|| response.assignments.keys().find(|k| !gold.assignments.contains_key(*k)));
        return Err(Error::Data(format!(
            "gold and response cover different snippets (first difference: {})",
            missing.map(String::as_str).unwrap_or("?")
        )));
    }
    let recall = muc_links(gold, response);
    let precision = muc_links(response, gold);
    Ok(MucResult {
        precision: precision.value(),
        recall: recall.value(),
        f1: harmonic_mean(precision, recall),
        precision_counts: precision,
        recall_counts: recall,
    })
}

/// Gold clusters as a clustering. In entity scope cluster labels are local to
/// their entity, so equal labels under different entities stay apart.
pub fn gold_clustering(corpus: &Corpus, labels: &BTreeMap<String, String>, scope: ClusterScope) -> Result<Clustering> {
    let rows = labels
        .iter()
        .map(|(id, label)| {
            let s = corpus
                .snippet_index(id)
                .ok_or_else(|| Error::Data(format!("gold snippet {id} is not in the corpus")))?;
            let entity = corpus.snippet(s).entity;
            let key = match scope {
                ClusterScope::Entity => (entity, label.clone()),
                ClusterScope::Corpus => (0, label.clone()),
            };
            Ok((id.clone(), key))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Clustering::from_labels(scope_name(scope), rows))
}

/// Clustering from a hard aspect choice per snippet (indexed like the corpus).
pub fn aspect_clustering(corpus: &Corpus, aspects: &[usize], scope: ClusterScope) -> Clustering {
    let rows = corpus.snippets().iter().zip(aspects).map(|(s, &a)| {
        let key = match scope {
            ClusterScope::Entity => (s.entity, a),
            ClusterScope::Corpus => (0, a),
        };
        (s.id.clone(), key)
    });
    Clustering::from_labels(scope_name(scope), rows)
}

fn scope_name(scope: ClusterScope) -> &'static str {
    match scope {
        ClusterScope::Entity => "entity",
        ClusterScope::Corpus => "corpus",
    }
}

/// `(correct + splits / 2) / total` over gold-labeled snippets.
pub fn sentiment_accuracy(predictions: &BTreeMap<String, Prediction>, gold: &BTreeMap<String, usize>) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::Data("no gold polarity labels".into()));
    }
    let mut credit = 0.0;
    for (id, &truth) in gold {
        match predictions.get(id) {
            Some(Prediction::Value(v)) if *v == truth => credit += 1.0,
            Some(Prediction::Value(_)) => {}
            Some(Prediction::Split) => credit += 0.5,
            None => return Err(Error::Data(format!("no prediction for snippet {id}"))),
        }
    }
    Ok(credit / gold.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfResult {
    pub aspect: ClassPrf,
    pub value: ClassPrf,
}

/// Running counts for per-word label scoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    /// `[A, V]` true positives, predicted totals and gold totals.
    pub hits: [u64; 2],
    pub predicted: [u64; 2],
    pub gold: [u64; 2],
}

fn class_index(label: WordLabel) -> Option<usize> {
    match label {
        WordLabel::A => Some(0),
        WordLabel::V => Some(1),
        WordLabel::B => None,
    }
}

impl LabelCounts {
    pub fn add(&mut self, predicted: &[WordLabel], gold: &[WordLabel]) -> Result<()> {
        if predicted.len() != gold.len() {
            return Err(Error::Data(format!(
                "label arrays differ in length ({} vs {})",
                predicted.len(),
                gold.len()
            )));
        }
        for (&p, &g) in predicted.iter().zip(gold) {
            if let Some(i) = class_index(p) {
                self.predicted[i] += 1;
                if p == g {
                    self.hits[i] += 1;
                }
            }
            if let Some(i) = class_index(g) {
                self.gold[i] += 1;
            }
        }
        Ok(())
    }

    pub fn result(&self) -> PrfResult {
        let class = |i: usize| {
            let p = Ratio {
                num: self.hits[i],
                den: self.predicted[i],
            };
            let r = Ratio {
                num: self.hits[i],
                den: self.gold[i],
            };
            ClassPrf {
                precision: p.value(),
                recall: r.value(),
                f1: harmonic_mean(p, r),
            }
        };
        PrfResult {
            aspect: class(0),
            value: class(1),
        }
    }
}

pub fn word_label_prf(predicted: &[WordLabel], gold: &[WordLabel]) -> Result<PrfResult> {
    let mut counts = LabelCounts::default();
    counts.add(predicted, gold)?;
    Ok(counts.result())
}

/// Tags never relabeled by expansion: punctuation, determiners, conjunctions.
pub fn is_function_tag(tag: &str) -> bool {
    tag == "DT" || tag == "CC" || !tag.chars().any(char::is_alphanumeric)
}

fn permitted(label: WordLabel, kind: PhraseKind) -> bool {
    match label {
        WordLabel::A => kind == PhraseKind::Np,
        WordLabel::V => true,
        WordLabel::B => false,
    }
}

/// Extends each labeled word to the largest permitted phrase around it that
/// holds no opposite label. Repeats until nothing changes, so applying it
/// again is a no-op.
pub fn tree_expand<T: AsRef<str>>(labels: &[WordLabel], spans: &[ParseSpan], tags: &[T]) -> Vec<WordLabel> {
    let mut out = labels.to_vec();
    loop {
        let mut changed = false;
        for anchor in 0..out.len() {
            let label = out[anchor];
            let Some(opposite) = label.opposite() else {
                continue;
            };
            let best = spans
                .iter()
                .filter(|s| s.start <= anchor && anchor < s.end && s.end <= out.len())
                .filter(|s| permitted(label, s.kind))
                .filter(|s| out[s.start..s.end].iter().all(|&l| l != opposite))
                .min_by_key(|s| (std::cmp::Reverse(s.end - s.start), s.start));
            if let Some(span) = best {
                for i in span.start..span.end {
                    let function = tags.get(i).is_some_and(|t| is_function_tag(t.as_ref()));
                    if out[i] == WordLabel::B && !function {
                        out[i] = label;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

/// One line of the metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub metric: String,
    pub scope: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

impl MetricEntry {
    pub fn prf(metric: impl Into<String>, scope: impl Into<String>, p: f64, r: f64, f: f64) -> Self {
        MetricEntry {
            metric: metric.into(),
            scope: scope.into(),
            precision: Some(p),
            recall: Some(r),
            f1: Some(f),
            accuracy: None,
        }
    }

    pub fn accuracy(metric: impl Into<String>, scope: impl Into<String>, accuracy: f64) -> Self {
        MetricEntry {
            metric: metric.into(),
            scope: scope.into(),
            precision: None,
            recall: None,
            f1: None,
            accuracy: Some(accuracy),
        }
    }

    pub fn from_muc(scope: impl Into<String>, m: &MucResult) -> Self {
        Self::prf("muc", scope, m.precision, m.recall, m.f1)
    }

    pub fn from_word_prf(metric: &str, scope: &str, r: &PrfResult) -> [Self; 2] {
        [
            Self::prf(format!("{metric}:A"), scope, r.aspect.precision, r.aspect.recall, r.aspect.f1),
            Self::prf(format!("{metric}:V"), scope, r.value.precision, r.value.recall, r.value.f1),
        ]
    }
}
