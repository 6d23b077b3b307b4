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

//! TF-IDF agglomerative clustering and the seed-count and majority sentiment
//! baselines.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Corpus, SeedLexicon};
use crate::error::{Error, Result};

/// Sparse TF-IDF vector, sorted by term index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedVector {
    pub terms: Vec<(u32, f64)>,
}

impl WeightedVector {
    pub fn weight(&self, term: u32) -> f64 {
        self.terms
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.terms[i].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.terms.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &WeightedVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (self.terms[i], other.terms[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1 * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Cosine similarity; 0 when either side is the zero vector.
pub fn cosine(a: &WeightedVector, b: &WeightedVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(b) / denom
    }
}

pub fn is_noun_tag(tag: &str) -> bool {
    matches!(tag, "NN" | "NNS" | "NNP" | "NNPS")
}

/// TF-IDF vectors for the given snippets, with idf computed over exactly
/// these snippets.
pub fn tfidf_vectors(corpus: &Corpus, snippets: &[usize], noun_only: bool) -> Vec<WeightedVector> {
    let counts: Vec<BTreeMap<u32, usize>> = snippets
        .iter()
        .map(|&s| {
            let mut tf = BTreeMap::new();
            for &token in &corpus.snippet(s).tokens {
                if !noun_only || is_noun_tag(corpus.tag(token)) {
                    *tf.entry(token.word).or_insert(0) += 1;
                }
            }
            tf
        })
        .collect();
    let mut df: BTreeMap<u32, usize> = BTreeMap::new();
    for tf in &counts {
        for &term in tf.keys() {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let n = snippets.len() as f64;
    counts
        .into_iter()
        .map(|tf| WeightedVector {
            terms: tf
                .into_iter()
                .map(|(term, c)| (term, c as f64 * (n / df[&term] as f64).ln()))
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Single,
    Complete,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" => Ok(Linkage::Average),
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            other => Err(Error::Config(format!("unknown linkage {other:?}"))),
        }
    }
}

/// A hard partition of snippets, keyed by snippet id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    pub scope: String,
    pub assignments: BTreeMap<String, usize>,
    pub num_clusters: usize,
}

impl Clustering {
    /// Dense cluster indices from arbitrary labels, numbered in label order.
    pub fn from_labels<I, L>(scope: impl Into<String>, labels: I) -> Self
    where
        I: IntoIterator<Item = (String, L)>,
        L: Ord,
    {
        let labels: Vec<(String, L)> = labels.into_iter().collect();
        let distinct: BTreeSet<&L> = labels.iter().map(|(_, l)| l).collect();
        let index: BTreeMap<&L, usize> = distinct.into_iter().enumerate().map(|(i, l)| (l, i)).collect();
        let assignments = labels.iter().map(|(id, l)| (id.clone(), index[l])).collect();
        Clustering {
            scope: scope.into(),
            assignments,
            num_clusters: index.len(),
        }
    }

    /// Concatenates disjoint clusterings, offsetting cluster indices.
    pub fn merge(scope: impl Into<String>, parts: impl IntoIterator<Item = Clustering>) -> Result<Self> {
        let mut out = Clustering {
            scope: scope.into(),
            assignments: BTreeMap::new(),
            num_clusters: 0,
        };
        for part in parts {
            for (id, c) in part.assignments {
                if out.assignments.insert(id.clone(), out.num_clusters + c).is_some() {
                    return Err(Error::Data(format!("snippet {id} appears in two clusterings")));
                }
            }
            out.num_clusters += part.num_clusters;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Member ids of each cluster.
    pub fn clusters(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (id, &c) in &self.assignments {
            out[c].push(id.as_str());
        }
        out
    }

    /// Keeps only the listed snippets. Missing ids are an error.
    pub fn restrict<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut kept = BTreeMap::new();
        for id in ids {
            let c = self
                .assignments
                .get(id)
                .ok_or_else(|| Error::Data(format!("snippet {id} has no cluster assignment")))?;
            kept.insert(id.to_owned(), *c);
        }
        Ok(Clustering::from_labels(self.scope.clone(), kept))
    }

    /// Writes in the gold-cluster TSV format with labels `c0`, `c1`, ...
    pub fn write_tsv(&self, path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
        corpus::write_label_tsv(
            path,
            corpus,
            self.assignments.iter().map(|(id, c)| (id.as_str(), format!("c{c}"))),
        )
    }
}

/// Packed upper-triangular similarity matrix.
struct Triangle {
    n: usize,
    data: Vec<f64>,
}

impl Triangle {
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.data[k] = v;
    }
}

fn better(sim: f64, j: usize, best: (f64, usize)) -> bool {
    sim > best.0 || (sim == best.0 && j < best.1)
}

/// Bottom-up clustering of `vectors` (already in canonical order) into
/// `target` clusters. Returns the cluster of each input, numbered by the
/// position of each cluster's first member.
///
/// Each cluster is known by the lowest index among its members; ties in
/// similarity go to the lowest `(i, j)` pair.
pub fn agglomerate(vectors: &[WeightedVector], target: usize, linkage: Linkage) -> Result<Vec<usize>> {
    let n = vectors.len();
    if target == 0 {
        return Err(Error::Config("target cluster count must be at least 1".into()));
    }
    if target > n {
        return Err(Error::Config(format!(
            "cannot form {target} clusters from {n} snippets"
        )));
    }
    let norms: Vec<f64> = vectors.iter().map(WeightedVector::norm).collect();
    let mut sim = Triangle {
        n,
        data: vec![0.0; n * n.saturating_sub(1) / 2],
    };
    for i in 0..n {
        for j in i + 1..n {
            let d = norms[i] * norms[j];
            if d > 0.0 {
                sim.set(i, j, vectors[i].dot(&vectors[j]) / d);
            }
        }
    }

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut parent: Vec<usize> = (0..n).collect();
    let best_of = |i: usize, active: &[bool], sim: &Triangle| -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for j in (0..n).filter(|&j| j != i && active[j]) {
            let s = sim.get(i, j);
            if better(s, j, best) {
                best = (s, j);
            }
        }
        best
    };
    let mut best: Vec<(f64, usize)> = (0..n).map(|i| best_of(i, &active, &sim)).collect();

    for _ in 0..n - target {
        let mut pick = usize::MAX;
        for i in (0..n).filter(|&i| active[i]) {
            if pick == usize::MAX || best[i].0 > best[pick].0 {
                pick = i;
            }
        }
        let other = best[pick].1;
        let (keep, gone) = if pick < other { (pick, other) } else { (other, pick) };

        for k in (0..n).filter(|&k| active[k] && k != keep && k != gone) {
            let (a, b) = (sim.get(keep, k), sim.get(gone, k));
            let merged = match linkage {
                Linkage::Average => {
                    (size[keep] as f64 * a + size[gone] as f64 * b) / (size[keep] + size[gone]) as f64
                }
                Linkage::Single => a.max(b),
                Linkage::Complete => a.min(b),
            };
            sim.set(keep, k, merged);
        }
        active[gone] = false;
        size[keep] += size[gone];
        parent[gone] = keep;

        best[keep] = best_of(keep, &active, &sim);
        for k in (0..n).filter(|&k| active[k] && k != keep) {
            if best[k].1 == keep || best[k].1 == gone {
                best[k] = best_of(k, &active, &sim);
            } else {
                let s = sim.get(k, keep);
                if better(s, keep, best[k]) {
                    best[k] = (s, keep);
                }
            }
        }
    }

    let root = |mut i: usize| {
        while parent[i] != i {
            i = parent[i];
        }
        i
    };
    let mut label = BTreeMap::new();
    Ok((0..n)
        .map(|i| {
            let r = root(i);
            let next = label.len();
            *label.entry(r).or_insert(next)
        })
        .collect())
}

/// Clusters the given snippets by TF-IDF cosine similarity. Snippets are
/// ordered by id first, so the result does not depend on input order.
pub fn agglomerative_cluster(
    corpus: &Corpus,
    snippets: &[usize],
    noun_only: bool,
    target: usize,
    linkage: Linkage,
    scope: impl Into<String>,
) -> Result<Clustering> {
    let mut ordered = snippets.to_vec();
    ordered.sort_by(|&a, &b| corpus.snippet(a).id.cmp(&corpus.snippet(b).id));
    ordered.dedup();
    let vectors = tfidf_vectors(corpus, &ordered, noun_only);
    let labels = agglomerate(&vectors, target, linkage)?;
    Ok(Clustering {
        scope: scope.into(),
        assignments: ordered
            .iter()
            .zip(labels)
            .map(|(&s, c)| (corpus.snippet(s).id.clone(), c))
            .collect(),
        num_clusters: target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterScope {
    Entity,
    Corpus,
}

impl std::str::FromStr for ClusterScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "entity" => Ok(ClusterScope::Entity),
            "corpus" => Ok(ClusterScope::Corpus),
            other => Err(Error::Config(format!("unknown scope {other:?}"))),
        }
    }
}

/// CLUSTER-ALL (`noun_only = false`) or CLUSTER-NOUN over the whole corpus.
///
/// In entity scope an entity with fewer snippets than `target` is split into
/// singletons.
pub fn cluster_baseline(
    corpus: &Corpus,
    scope: ClusterScope,
    noun_only: bool,
    target: usize,
    linkage: Linkage,
) -> Result<Clustering> {
    match scope {
        ClusterScope::Corpus => {
            let all: Vec<usize> = (0..corpus.num_snippets()).collect();
            agglomerative_cluster(corpus, &all, noun_only, target, linkage, "corpus")
        }
        ClusterScope::Entity => {
            let mut parts = Vec::with_capacity(corpus.num_entities());
            for (e, name) in corpus.entities().iter().enumerate() {
                let members = corpus.entity_snippets(e);
                let c = target.min(members.len());
                if c < target {
                    warn!("entity {name} has {} snippets, using {c} clusters", members.len());
                }
                parts.push(agglomerative_cluster(corpus, members, noun_only, c, linkage, name.clone())?);
            }
            Clustering::merge("entity", parts)
        }
    }
}

/// Outcome of a sentiment predictor for one snippet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prediction {
    Value(usize),
    Split,
}

/// Counts seed tokens of each value type; a strict maximum wins.
pub fn seed_sentiment(corpus: &Corpus, snippet: usize, seeds: &SeedLexicon) -> Prediction {
    let mut counts = vec![0usize; seeds.num_values()];
    for token in &corpus.snippet(snippet).tokens {
        for (v, c) in counts.iter_mut().enumerate() {
            if seeds.contains(v, token.word) {
                *c += 1;
            }
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let winners: Vec<usize> = (0..counts.len()).filter(|&v| counts[v] == max).collect();
    if max > 0 && winners.len() == 1 {
        Prediction::Value(winners[0])
    } else {
        Prediction::Split
    }
}

/// Most frequent label, ties to the lowest index.
pub fn majority_sentiment(labels: impl IntoIterator<Item = usize>) -> Result<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let max = counts.values().copied().max().ok_or_else(|| Error::Data("no labeled examples".into()))?;
    Ok(counts.into_iter().find(|&(_, c)| c == max).map(|(l, _)| l).expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusBuilder;

    fn vector(terms: &[(u32, f64)]) -> WeightedVector {
        WeightedVector { terms: terms.to_vec() }
    }

    #[test]
    fn tfidf_examples() {
        let mut b = CorpusBuilder::new();
        b.push("r", "s1", &[("pizza", "NN"), ("pizza", "NN"), ("the", "DT")]).unwrap();
        b.push("r", "s2", &[("the", "DT"), ("staff", "NN")]).unwrap();
        b.push("r", "s3", &[("the", "DT"), ("was", "VBD"), ("rude", "JJ")]).unwrap();
        b.push("r", "s4", &[("the", "DT"), ("food", "NN")]).unwrap();
        let c = b.build();
        let v = tfidf_vectors(&c, &[0, 1, 2, 3], false);
        let pizza = c.vocabulary().index_of("pizza").unwrap();
        let the = c.vocabulary().index_of("the").unwrap();
        assert_eq!(v[0].weight(pizza), 2.0 * 4f64.ln());
        assert_eq!(v[0].weight(the), 0.0);
        assert_eq!(v[1].weight(pizza), 0.0);
        let nouns = tfidf_vectors(&c, &[2], true);
        assert!(nouns[0].terms.is_empty());
    }

    #[test]
    fn cosine_of_zero_vector_is_zero() {
        assert_eq!(cosine(&vector(&[]), &vector(&[(1, 2.0)])), 0.0);
        assert!((cosine(&vector(&[(1, 2.0)]), &vector(&[(1, 5.0)])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_singletons_when_target_is_n() {
        let v = vec![vector(&[(0, 1.0)]), vector(&[(0, 1.0)]), vector(&[(1, 1.0)])];
        assert_eq!(agglomerate(&v, 3, Linkage::Average).unwrap(), vec![0, 1, 2]);
        assert!(agglomerate(&v, 4, Linkage::Average).is_err());
        assert!(agglomerate(&v, 0, Linkage::Average).is_err());
    }

    #[test]
    fn identical_vectors_merge_first() {
        let v = vec![
            vector(&[(0, 1.0), (1, 1.0)]),
            vector(&[(2, 1.0), (3, 0.5)]),
            vector(&[(1, 1.0), (4, 1.0)]),
            vector(&[(2, 1.0), (3, 0.5)]),
        ];
        assert_eq!(agglomerate(&v, 3, Linkage::Average).unwrap(), vec![0, 1, 2, 1]);
    }

    #[test]
    fn hand_enumerated_average_link() {
        // cos(0,1) = 0.8, cos(2,3) = 0.6, everything else 0 except cos(1,2) = 0.36.
        let v = vec![
            vector(&[(0, 0.6), (1, 0.8)]),
            vector(&[(1, 0.6), (2, 0.8)]),
            vector(&[(2, 0.45), (3, 0.6), (4, 0.8 * 0.8)]),
            vector(&[(3, 0.6), (5, 0.8)]),
        ];
        // First merge {0,1}; then compare avg({0,1},2) against cos(2,3).
        let after_two = agglomerate(&v, 2, Linkage::Average).unwrap();
        let s12 = cosine(&v[1], &v[2]);
        let s23 = cosine(&v[2], &v[3]);
        let s02 = cosine(&v[0], &v[2]);
        let expected = if (s02 + s12) / 2.0 > s23 { vec![0, 0, 0, 1] } else { vec![0, 0, 1, 1] };
        assert_eq!(after_two, expected);
    }

    #[test]
    fn zero_similarity_ties_go_to_lowest_pair() {
        let v = vec![vector(&[]), vector(&[]), vector(&[]), vector(&[])];
        assert_eq!(agglomerate(&v, 3, Linkage::Average).unwrap(), vec![0, 0, 1, 2]);
        assert_eq!(agglomerate(&v, 1, Linkage::Single).unwrap(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn majority_rules() {
        assert_eq!(majority_sentiment([0, 1, 1]).unwrap(), 1);
        assert_eq!(majority_sentiment([1, 0]).unwrap(), 0);
        assert!(majority_sentiment(std::iter::empty()).is_err());
    }

    #[test]
    fn clustering_merge_and_restrict() {
        let a = Clustering::from_labels("x", [("s1".to_string(), "b"), ("s2".to_string(), "a")]);
        assert_eq!(a.assignments["s2"], 0);
        let b = Clustering::from_labels("y", [("s3".to_string(), "z")]);
        let m = Clustering::merge("all", [a, b]).unwrap();
        assert_eq!(m.num_clusters, 3);
        assert_eq!(m.assignments["s3"], 2);
        let r = m.restrict(["s1", "s3"]).unwrap();
        assert_eq!(r.num_clusters, 2);
        assert!(m.restrict(["nope"]).is_err());
    }
}
