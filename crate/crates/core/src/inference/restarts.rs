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

//! Greedy aspect assignment and per-entity restarts.
//!
//! Mean-field updates started near the uniform aspect posterior tend to put
//! all of an entity's snippets in one aspect, and once snippets are split the
//! sparse aspect-word prior makes each snippet hold on to its current aspect.
//! Two things help. The start is a sequential hard assignment: each snippet
//! joins the aspect whose words explain it best so far. Later, with word
//! topics and values held fixed, snippet aspects interact only through the
//! factors of their aspect scope (one entity, or the whole corpus with shared
//! aspects), so each scope is searched on its own from several greedy orders
//! and the assignment with the best local bound wins.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::updates::softmax_in_place;
use crate::corpus::Corpus;
use crate::model::{snippet_seed, DirichletFactor, Layout, VariationalState, WordTopic};

/// Aspect posterior mass on the chosen aspect after a greedy pass.
const GREEDY_CONFIDENCE: f64 = 0.6;

/// Coordinate ascent sweeps per candidate in the entity search.
const POLISH_SWEEPS: usize = 20;

/// Relative bound gain a restart needs to replace the current assignment.
const IMPROVEMENT_TOL: f64 = 1e-10;

struct SnippetView {
    /// `(aspect-scope word, q(A))` per token.
    words: Vec<(usize, f64)>,
    q_value: Vec<f64>,
}

fn snippet_views(state: &VariationalState, corpus: &Corpus, layout: &Layout, members: &[usize]) -> Vec<SnippetView> {
    let t = state.num_topics();
    let a_slot = state.topics.slot(WordTopic::Aspect).expect("aspect topic");
    members
        .iter()
        .map(|&s| {
            let tokens = &corpus.snippet(s).tokens;
            SnippetView {
                words: layout
                    .tokens(s)
                    .zip(tokens)
                    .map(|(ti, tok)| (layout.aspect_word(ti, tok.word), state.q_word[ti * t + a_slot]))
                    .collect(),
                q_value: state.value_q(s).to_vec(),
            }
        })
        .collect()
}

/// Visiting order for a group: snippet ids sorted, then shuffled by `rng`.
fn shuffled_order(corpus: &Corpus, members: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut ids: Vec<(&str, usize)> = members
        .iter()
        .enumerate()
        .map(|(i, &s)| (corpus.snippet(s).id.as_str(), i))
        .collect();
    ids.sort_unstable();
    ids.shuffle(rng);
    ids.into_iter().map(|(_, i)| i).collect()
}

/// Sequential hard assignment of `views` in `order`, scoring each aspect by
/// the predictive probability of the snippet's aspect-weighted words under
/// the words already placed there. Returns the flat `q(Z_A)` rows.
fn greedy_partition(views: &[SnippetView], order: &[usize], k: usize, prior: &DirichletFactor) -> Vec<f64> {
    let alpha = prior.prior();
    let alpha_total = alpha.iter().sum::<f64>() + prior.implicit_mass();
    let mut counts = vec![vec![0.0; alpha.len()]; k];
    let mut totals = vec![0.0; k];
    let rest = if k > 1 { (1.0 - GREEDY_CONFIDENCE) / (k - 1) as f64 } else { 0.0 };
    let mut q = vec![0.0; views.len() * k];
    for &s in order {
        let view = &views[s];
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for a in 0..k {
            let score: f64 = view
                .words
                .iter()
                .map(|&(w, pa)| pa * ((counts[a][w] + alpha[w]) / (totals[a] + alpha_total)).ln())
                .sum();
            if score > best_score {
                best_score = score;
                best = a;
            }
        }
        for &(w, pa) in &view.words {
            counts[best][w] += pa;
            totals[best] += pa;
        }
        let row = &mut q[s * k..(s + 1) * k];
        row.fill(rest);
        row[best] = if k > 1 { GREEDY_CONFIDENCE } else { 1.0 };
    }
    q
}

/// Snippets of each aspect scope with the scope index.
fn scope_groups(corpus: &Corpus, layout: &Layout) -> Vec<(usize, Vec<usize>)> {
    if layout.shared_aspects {
        vec![(0, (0..corpus.num_snippets()).collect())]
    } else {
        (0..corpus.num_entities())
            .map(|e| (e, corpus.entity_snippets(e).to_vec()))
            .filter(|(_, m)| !m.is_empty())
            .collect()
    }
}

/// Generator for a group, keyed by its smallest snippet id so it does not
/// depend on corpus order.
fn group_rng(corpus: &Corpus, members: &[usize], seed: u64) -> ChaCha8Rng {
    let first = members.iter().map(|&s| corpus.snippet(s).id.as_str()).min().unwrap_or("");
    ChaCha8Rng::seed_from_u64(snippet_seed(seed, first))
}

/// Replaces `q(Z_A)` by a greedy pass over each aspect scope.
pub(crate) fn greedy_aspects(state: &mut VariationalState, corpus: &Corpus, layout: &Layout) {
    let k = state.num_aspects();
    let seed = state.hyperparameters.rng_seed;
    for (scope, members) in scope_groups(corpus, layout) {
        let views = snippet_views(state, corpus, layout, &members);
        let mut rng = group_rng(corpus, &members, seed);
        let order = shuffled_order(corpus, &members, &mut rng);
        let q = greedy_partition(&views, &order, k, &state.aspect_words[scope][0]);
        for (i, &s) in members.iter().enumerate() {
            state.q_aspect[s * k..(s + 1) * k].copy_from_slice(&q[i * k..(i + 1) * k]);
        }
    }
}

/// The aspect part of the bound for one aspect scope.
struct ScopeProblem<'a> {
    views: Vec<SnippetView>,
    /// Position in `mixtures` of each view's aspect multinomial.
    mixture_of: Vec<usize>,
    mixtures: Vec<&'a DirichletFactor>,
    aspect_words: &'a [DirichletFactor],
    aspect_values: &'a [DirichletFactor],
}

struct Solution {
    q: Vec<f64>,
    bound: f64,
}

struct ScopeFactors {
    mixtures: Vec<DirichletFactor>,
    words: Vec<DirichletFactor>,
    values: Vec<DirichletFactor>,
}

fn with_counts(prior: &DirichletFactor, counts: &[f64]) -> DirichletFactor {
    let mut f = prior.clone();
    f.set_counts(counts);
    f
}

impl<'a> ScopeProblem<'a> {
    fn new(state: &'a VariationalState, corpus: &Corpus, layout: &Layout, scope: usize, members: &[usize]) -> Self {
        let mut slots: Vec<usize> = Vec::new();
        let mixture_of = members
            .iter()
            .map(|&s| {
                let m = layout.mixture_of(corpus.snippet(s).entity);
                match slots.iter().position(|&x| x == m) {
                    Some(i) => i,
                    None => {
                        slots.push(m);
                        slots.len() - 1
                    }
                }
            })
            .collect();
        ScopeProblem {
            views: snippet_views(state, corpus, layout, members),
            mixture_of,
            mixtures: slots.iter().map(|&m| &state.mixtures[m]).collect(),
            aspect_words: &state.aspect_words[scope],
            aspect_values: state.aspect_values.get(scope).map_or(&[], Vec::as_slice),
        }
    }

    fn k(&self) -> usize {
        self.aspect_words.len()
    }

    fn factors(&self, q: &[f64]) -> ScopeFactors {
        let k = self.k();
        let size = self.aspect_words[0].len();
        let n = self.aspect_values.first().map_or(0, DirichletFactor::len);
        let mut mix = vec![vec![0.0; k]; self.mixtures.len()];
        let mut words = vec![vec![0.0; size]; k];
        let mut values = vec![vec![0.0; n]; k];
        for (s, view) in self.views.iter().enumerate() {
            let mix = &mut mix[self.mixture_of[s]];
            for (a, &p) in q[s * k..(s + 1) * k].iter().enumerate() {
                mix[a] += p;
                for &(w, pa) in &view.words {
                    words[a][w] += p * pa;
                }
                for (v, &pv) in view.q_value.iter().enumerate() {
                    values[a][v] += p * pv;
                }
            }
        }
        ScopeFactors {
            mixtures: self.mixtures.iter().zip(&mix).map(|(f, c)| with_counts(f, c)).collect(),
            words: self.aspect_words.iter().zip(&words).map(|(f, c)| with_counts(f, c)).collect(),
            values: self.aspect_values.iter().zip(&values).map(|(f, c)| with_counts(f, c)).collect(),
        }
    }

    fn score(&self, s: usize, a: usize, f: &ScopeFactors) -> f64 {
        let view = &self.views[s];
        let mut score = f.mixtures[self.mixture_of[s]].expected_log(a);
        for &(w, pa) in &view.words {
            score += pa * f.words[a].expected_log(w);
        }
        if let Some(av) = f.values.get(a) {
            for (v, &pv) in view.q_value.iter().enumerate() {
                score += pv * av.expected_log(v);
            }
        }
        score
    }

    /// Coordinate ascent from `q`, then the local bound.
    fn polish(&self, mut q: Vec<f64>) -> Solution {
        let k = self.k();
        let mut scores = vec![0.0; k];
        for _ in 0..POLISH_SWEEPS {
            let f = self.factors(&q);
            for s in 0..self.views.len() {
                for (a, out) in scores.iter_mut().enumerate() {
                    *out = self.score(s, a, &f);
                }
                softmax_in_place(&mut scores);
                q[s * k..(s + 1) * k].copy_from_slice(&scores);
            }
        }
        let f = self.factors(&q);
        let mut bound = -f.mixtures.iter().map(DirichletFactor::kl_from_prior).sum::<f64>();
        bound -= f.words.iter().map(DirichletFactor::kl_from_prior).sum::<f64>();
        bound -= f.values.iter().map(DirichletFactor::kl_from_prior).sum::<f64>();
        for s in 0..self.views.len() {
            for a in 0..k {
                let p = q[s * k + a];
                if p > 0.0 {
                    bound += p * (self.score(s, a, &f) - p.ln());
                }
            }
        }
        Solution { q, bound }
    }
}

/// Searches each aspect scope's assignment from `restarts` greedy orders and
/// keeps the best by the scope's bound; the current assignment, polished,
/// competes too. Parameter factors are left stale for the caller to refresh.
///
/// With shared aspects the whole corpus is one scope.
pub(crate) fn refine_aspects(state: &mut VariationalState, corpus: &Corpus, layout: &Layout, restarts: usize) {
    if restarts == 0 {
        return;
    }
    let k = state.num_aspects();
    let seed = state.hyperparameters.rng_seed;
    let groups = scope_groups(corpus, layout);
    let shared: &VariationalState = state;
    let results: Vec<Vec<f64>> = groups
        .par_iter()
        .map(|(scope, members)| {
            let problem = ScopeProblem::new(shared, corpus, layout, *scope, members);
            let current: Vec<f64> = members.iter().flat_map(|&s| shared.aspect_q(s).iter().copied()).collect();
            let mut best = problem.polish(current);
            let mut rng = group_rng(corpus, members, seed ^ 0x5eed);
            for _ in 0..restarts {
                let order = shuffled_order(corpus, members, &mut rng);
                let candidate = problem.polish(greedy_partition(&problem.views, &order, k, &problem.aspect_words[0]));
                // Relabelings of one partition tie up to roundoff, so only
                // a clear improvement replaces the incumbent.
                if candidate.bound > best.bound + IMPROVEMENT_TOL * best.bound.abs() {
                    best = candidate;
                }
            }
            best.q
        })
        .collect();
    for ((_, members), q) in groups.iter().zip(results) {
        for (i, &s) in members.iter().enumerate() {
            state.q_aspect[s * k..(s + 1) * k].copy_from_slice(&q[i * k..(i + 1) * k]);
        }
    }
}
