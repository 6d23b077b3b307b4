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

//! Expected-count accumulation and parameter-factor updates.
//!
//! Each entity produces its own partial counts over its local vocabulary.
//! Global factors are then summed entity by entity in index order, so the
//! result does not depend on how entities were spread over threads.

use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::model::{Layout, VariationalState, WordTopic};

/// Expected counts from the snippets of one entity.
#[derive(Debug, Clone)]
pub(crate) struct EntityCounts {
    pub mixture: Vec<f64>,
    /// `K x N`
    pub aspect_values: Vec<f64>,
    /// `K x |local vocab|`
    pub aspect_words: Vec<f64>,
    pub background: Vec<f64>,
    /// `N x |local vocab|`
    pub values: Vec<f64>,
    pub ignore: Vec<f64>,
    pub start: Vec<f64>,
    /// `T x (T + 1)`
    pub transitions: Vec<f64>,
    /// `T x |tags|`
    pub tags: Vec<f64>,
}

pub(crate) fn entity_counts(
    corpus: &Corpus,
    layout: &Layout,
    state: &VariationalState,
    entity: usize,
) -> EntityCounts {
    let k = layout.num_aspects;
    let n = layout.num_values;
    let t = layout.num_topics();
    let local = layout.entity_vocab[entity].len();
    let topics = &layout.topics;
    let a_slot = topics.slot(WordTopic::Aspect).expect("aspect topic");
    let v_slot = topics.slot(WordTopic::Value);
    let b_slot = topics.slot(WordTopic::Background).expect("background topic");
    let i_slot = topics.slot(WordTopic::Ignore);
    let use_tags = !state.tags.is_empty();

    let mut c = EntityCounts {
        mixture: vec![0.0; k],
        aspect_values: vec![0.0; k * n],
        aspect_words: vec![0.0; k * local],
        background: vec![0.0; local],
        values: vec![0.0; n * local],
        ignore: if i_slot.is_some() { vec![0.0; local] } else { Vec::new() },
        start: vec![0.0; t],
        transitions: vec![0.0; t * (t + 1)],
        tags: if use_tags { vec![0.0; t * layout.num_tags] } else { Vec::new() },
    };

    for &s in corpus.entity_snippets(entity) {
        let qa = state.aspect_q(s);
        let qv = state.value_q(s);
        for (a, &p) in qa.iter().enumerate() {
            c.mixture[a] += p;
            for (v, &pv) in qv.iter().enumerate() {
                c.aspect_values[a * n + v] += p * pv;
            }
        }

        let range = layout.tokens(s);
        let tokens = &corpus.snippet(s).tokens;
        for (w, token) in tokens.iter().enumerate() {
            let ti = range.start + w;
            let qw = state.word_q(ti);
            let lw = layout.local_word[ti] as usize;

            let pa = qw[a_slot];
            for (a, &p) in qa.iter().enumerate() {
                c.aspect_words[a * local + lw] += p * pa;
            }
            if let Some(v_slot) = v_slot {
                let pv = qw[v_slot];
                for (v, &p) in qv.iter().enumerate() {
                    c.values[v * local + lw] += p * pv;
                }
            }
            c.background[lw] += qw[b_slot];
            if let Some(i_slot) = i_slot {
                c.ignore[lw] += qw[i_slot];
            }
            if use_tags {
                for (slot, &p) in qw.iter().enumerate() {
                    c.tags[slot * layout.num_tags + token.tag as usize] += p;
                }
            }

            if w == 0 {
                for (slot, &p) in qw.iter().enumerate() {
                    c.start[slot] += p;
                }
            }
            if w + 1 < tokens.len() {
                let qn = state.word_q(ti + 1);
                for (from, &p) in qw.iter().enumerate() {
                    for (to, &pn) in qn.iter().enumerate() {
                        c.transitions[from * (t + 1) + to] += p * pn;
                    }
                }
            } else {
                for (from, &p) in qw.iter().enumerate() {
                    c.transitions[from * (t + 1) + t] += p;
                }
            }
        }
    }
    c
}

/// Sets every parameter factor to prior plus expected counts under the
/// current latent factors.
pub(crate) fn apply_counts(corpus: &Corpus, layout: &Layout, state: &mut VariationalState) {
    let partials: Vec<EntityCounts> = (0..corpus.num_entities())
        .into_par_iter()
        .map(|e| entity_counts(corpus, layout, state, e))
        .collect();
    merge_counts(layout, state, &partials);
}

pub(crate) fn merge_counts(layout: &Layout, state: &mut VariationalState, partials: &[EntityCounts]) {
    let k = layout.num_aspects;
    let n = layout.num_values;
    let t = layout.num_topics();
    let vocab = layout.vocab_size;

    let mut background = vec![0.0; vocab];
    let mut values = vec![0.0; n * vocab];
    let mut ignore = vec![0.0; if state.ignore.is_some() { vocab } else { 0 }];
    let mut start = vec![0.0; t];
    let mut transitions = vec![0.0; t * (t + 1)];
    let mut tags = vec![0.0; if state.tags.is_empty() { 0 } else { t * layout.num_tags }];
    let mut shared_words = vec![0.0; if layout.shared_aspects { k * vocab } else { 0 }];
    let mut shared_av = vec![0.0; if layout.shared_aspects { k * n } else { 0 }];
    let mut shared_mixture = vec![0.0; if layout.shared_mixture { k } else { 0 }];

    for (entity, c) in partials.iter().enumerate() {
        let ev = &layout.entity_vocab[entity];
        let local = ev.len();
        for (l, &g) in ev.iter().enumerate() {
            let g = g as usize;
            background[g] += c.background[l];
            for v in 0..n {
                values[v * vocab + g] += c.values[v * local + l];
            }
            if !ignore.is_empty() {
                ignore[g] += c.ignore[l];
            }
        }
        add(&mut start, &c.start);
        add(&mut transitions, &c.transitions);
        add(&mut tags, &c.tags);

        if layout.shared_aspects {
            for a in 0..k {
                for (l, &g) in ev.iter().enumerate() {
                    shared_words[a * vocab + g as usize] += c.aspect_words[a * local + l];
                }
            }
            add(&mut shared_av, &c.aspect_values);
        } else {
            for a in 0..k {
                state.aspect_words[entity][a].set_counts(&c.aspect_words[a * local..(a + 1) * local]);
                if n > 0 {
                    state.aspect_values[entity][a].set_counts(&c.aspect_values[a * n..(a + 1) * n]);
                }
            }
        }
        if layout.shared_mixture {
            add(&mut shared_mixture, &c.mixture);
        } else {
            state.mixtures[entity].set_counts(&c.mixture);
        }
    }

    state.background.set_counts(&background);
    for (v, f) in state.values.iter_mut().enumerate() {
        f.set_counts(&values[v * vocab..(v + 1) * vocab]);
    }
    if let Some(f) = state.ignore.as_mut() {
        f.set_counts(&ignore);
    }
    state.transitions.set_counts(&start, &transitions);
    for (slot, f) in state.tags.iter_mut().enumerate() {
        f.set_counts(&tags[slot * layout.num_tags..(slot + 1) * layout.num_tags]);
    }
    if layout.shared_aspects {
        for a in 0..k {
            state.aspect_words[0][a].set_counts(&shared_words[a * vocab..(a + 1) * vocab]);
            if n > 0 {
                state.aspect_values[0][a].set_counts(&shared_av[a * n..(a + 1) * n]);
            }
        }
    }
    if layout.shared_mixture {
        state.mixtures[0].set_counts(&shared_mixture);
    }
}

fn add(acc: &mut [f64], x: &[f64]) {
    for (a, &b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}
