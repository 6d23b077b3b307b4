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

//! Variational free energy, `E_Q[log Q] - E_Q[log P(params, Z, s)]`.
//!
//! The parameter part is the sum of Dirichlet KL divergences from the priors;
//! the latent part is computed per snippet from the cached expected logs. The
//! configured log topic weights enter as an extra log-potential on each word
//! topic, matching the word-topic update.

use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::model::{DirichletFactor, Layout, VariationalState, WordTopic};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyReport {
    pub iteration: usize,
    /// Negative evidence lower bound, in nats.
    pub value: f64,
}

#[inline]
fn neg_entropy(q: &[f64]) -> f64 {
    q.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum()
}

fn kl_sum<'a>(factors: impl IntoIterator<Item = &'a DirichletFactor>) -> f64 {
    factors.into_iter().map(DirichletFactor::kl_from_prior).sum()
}

pub(crate) fn free_energy_with_layout(corpus: &Corpus, layout: &Layout, state: &VariationalState) -> f64 {
    let mut global = state.background.kl_from_prior();
    global += kl_sum(&state.values);
    global += kl_sum(state.ignore.iter());
    global += state.transitions.kl_from_prior();
    global += kl_sum(&state.tags);
    if layout.shared_aspects {
        global += kl_sum(state.aspect_words.iter().flatten());
        global += kl_sum(state.aspect_values.iter().flatten());
    }
    if layout.shared_mixture {
        global += kl_sum(&state.mixtures);
    }

    let per_entity: Vec<f64> = (0..corpus.num_entities())
        .into_par_iter()
        .map(|e| entity_free_energy(corpus, layout, state, e))
        .collect();
    per_entity.into_iter().fold(global, |acc, x| acc + x)
}

fn entity_free_energy(corpus: &Corpus, layout: &Layout, state: &VariationalState, entity: usize) -> f64 {
    let scope = layout.scope_of(entity);
    let mut total = 0.0;
    if !layout.shared_aspects {
        total += kl_sum(&state.aspect_words[entity]);
        total += kl_sum(&state.aspect_values[entity]);
    }
    if !layout.shared_mixture {
        total += state.mixtures[entity].kl_from_prior();
    }

    let mixture = &state.mixtures[layout.mixture_of(entity)];
    let trans = &state.transitions;
    let hp = &state.hyperparameters;
    let t = layout.num_topics();

    for &s in corpus.entity_snippets(entity) {
        let qa = state.aspect_q(s);
        let qv = state.value_q(s);
        let mut term = neg_entropy(qa) + neg_entropy(qv);
        for (a, &p) in qa.iter().enumerate() {
            term -= p * mixture.expected_log(a);
            if !qv.is_empty() {
                let av = &state.aspect_values[scope][a];
                for (v, &pv) in qv.iter().enumerate() {
                    term -= p * pv * av.expected_log(v);
                }
            }
        }

        let range = layout.tokens(s);
        let tokens = &corpus.snippet(s).tokens;
        for (w, token) in tokens.iter().enumerate() {
            let ti = range.start + w;
            let qw = state.word_q(ti);
            term += neg_entropy(qw);
            if w == 0 {
                for (slot, &p) in qw.iter().enumerate() {
                    term -= p * trans.start_log(slot);
                }
            }
            if w + 1 < tokens.len() {
                let qn = state.word_q(ti + 1);
                for (from, &p) in qw.iter().enumerate() {
                    for (to, &pn) in qn.iter().enumerate() {
                        term -= p * pn * trans.log(from, to);
                    }
                }
            } else {
                for (from, &p) in qw.iter().enumerate() {
                    term -= p * trans.end_log(from);
                }
            }

            let word = token.word as usize;
            for slot in 0..t {
                let p = qw[slot];
                if p == 0.0 {
                    continue;
                }
                let topic = layout.topics.topic(slot);
                let mut ll = hp.topic_log_prior(topic);
                ll += match topic {
                    WordTopic::Aspect => {
                        let key = layout.aspect_word(ti, token.word);
                        qa.iter()
                            .zip(&state.aspect_words[scope])
                            .map(|(&pa, f)| pa * f.expected_log(key))
                            .sum::<f64>()
                    }
                    WordTopic::Value => qv
                        .iter()
                        .zip(&state.values)
                        .map(|(&pv, f)| pv * f.expected_log(word))
                        .sum::<f64>(),
                    WordTopic::Background => state.background.expected_log(word),
                    WordTopic::Ignore => state.ignore.as_ref().expect("ignore factor").expected_log(word),
                };
                if let Some(tags) = state.tags.get(slot) {
                    ll += tags.expected_log(token.tag as usize);
                }
                term -= p * ll;
            }
        }
        total += term;
    }
    total
}
