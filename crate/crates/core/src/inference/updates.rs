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

//! Coordinate updates for the latent factors of one snippet.

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::{Layout, VariationalState, WordTopic};

/// Normalizes log-scores into a distribution in place.
pub fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Read access to a state for computing latent updates.
///
/// The public `update_*` methods read the latent factors stored in `state`
/// (the previous pass under the batch schedule). The crate-internal
/// `*_scores` functions take the neighbouring latent factors explicitly so the
/// sequential schedule can feed fresh values.
pub struct UpdateContext<'a> {
    pub corpus: &'a Corpus,
    pub layout: &'a Layout,
    pub state: &'a VariationalState,
}

impl<'a> UpdateContext<'a> {
    pub fn new(corpus: &'a Corpus, layout: &'a Layout, state: &'a VariationalState) -> Self {
        UpdateContext { corpus, layout, state }
    }

    fn snippet_word_q(&self, snippet: usize) -> &'a [f64] {
        let t = self.layout.num_topics();
        let r = self.layout.tokens(snippet);
        &self.state.q_word[r.start * t..r.end * t]
    }

    /// New `q(Z_A)` for a snippet.
    pub fn update_snippet_aspect(&self, snippet: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.num_aspects];
        self.aspect_scores(
            snippet,
            self.snippet_word_q(snippet),
            self.state.value_q(snippet),
            &mut out,
        );
        out
    }

    /// New `q(Z_V)` for a snippet. Fails when the value component is disabled.
    pub fn update_snippet_value(&self, snippet: usize) -> Result<Vec<f64>> {
        if self.layout.num_values == 0 {
            return Err(Error::Config("value update requested with N = 0".into()));
        }
        let mut out = vec![0.0; self.layout.num_values];
        self.value_scores(
            snippet,
            self.state.aspect_q(snippet),
            self.snippet_word_q(snippet),
            &mut out,
        );
        Ok(out)
    }

    /// New `q(Z_W)` for word `w` of a snippet, over the enabled topics.
    pub fn update_word_topic(&self, snippet: usize, w: usize) -> Vec<f64> {
        let t = self.layout.num_topics();
        let q = self.snippet_word_q(snippet);
        let len = q.len() / t;
        let prev = (w > 0).then(|| &q[(w - 1) * t..w * t]);
        let next = (w + 1 < len).then(|| &q[(w + 1) * t..(w + 2) * t]);
        let mut out = vec![0.0; t];
        self.word_scores(
            snippet,
            w,
            self.state.aspect_q(snippet),
            self.state.value_q(snippet),
            prev,
            next,
            &mut out,
        );
        out
    }

    /// `sum_a q(Z_A = a) E log theta_A^a(word)` for one token.
    #[inline]
    fn aspect_emission(&self, scope: usize, key: usize, q_aspect: &[f64]) -> f64 {
        let factors = &self.state.aspect_words[scope];
        q_aspect
            .iter()
            .zip(factors)
            .map(|(&qa, f)| qa * f.expected_log(key))
            .sum()
    }

    #[inline]
    fn value_emission(&self, word: usize, q_value: &[f64]) -> f64 {
        q_value
            .iter()
            .zip(&self.state.values)
            .map(|(&qv, f)| qv * f.expected_log(word))
            .sum()
    }

    /// Writes the normalized aspect posterior into `out`.
    pub(crate) fn aspect_scores(&self, snippet: usize, q_word: &[f64], q_value: &[f64], out: &mut [f64]) {
        let entity = self.corpus.snippet(snippet).entity;
        let scope = self.layout.scope_of(entity);
        let mixture = &self.state.mixtures[self.layout.mixture_of(entity)];
        let t = self.layout.num_topics();
        let a_slot = self.layout.topics.slot(WordTopic::Aspect).expect("aspect topic");
        let base = self.layout.token_offset[snippet];
        let tokens = &self.corpus.snippet(snippet).tokens;

        for (a, score) in out.iter_mut().enumerate() {
            let words = &self.state.aspect_words[scope][a];
            let mut s = mixture.expected_log(a);
            for (w, token) in tokens.iter().enumerate() {
                let key = self.layout.aspect_word(base + w, token.word);
                s += q_word[w * t + a_slot] * words.expected_log(key);
            }
            if !q_value.is_empty() {
                let av = &self.state.aspect_values[scope][a];
                for (v, &qv) in q_value.iter().enumerate() {
                    s += qv * av.expected_log(v);
                }
            }
            *score = s;
        }
        softmax_in_place(out);
    }

    pub(crate) fn value_scores(&self, snippet: usize, q_aspect: &[f64], q_word: &[f64], out: &mut [f64]) {
        let entity = self.corpus.snippet(snippet).entity;
        let scope = self.layout.scope_of(entity);
        let t = self.layout.num_topics();
        let v_slot = self.layout.topics.slot(WordTopic::Value).expect("value topic");
        let tokens = &self.corpus.snippet(snippet).tokens;

        for (v, score) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (a, &qa) in q_aspect.iter().enumerate() {
                s += qa * self.state.aspect_values[scope][a].expected_log(v);
            }
            let words = &self.state.values[v];
            for (w, token) in tokens.iter().enumerate() {
                s += q_word[w * t + v_slot] * words.expected_log(token.word as usize);
            }
            *score = s;
        }
        softmax_in_place(out);
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn word_scores(
        &self,
        snippet: usize,
        w: usize,
        q_aspect: &[f64],
        q_value: &[f64],
        prev: Option<&[f64]>,
        next: Option<&[f64]>,
        out: &mut [f64],
    ) {
        let entity = self.corpus.snippet(snippet).entity;
        let scope = self.layout.scope_of(entity);
        let token = self.corpus.snippet(snippet).tokens[w];
        let token_index = self.layout.token_offset[snippet] + w;
        let trans = &self.state.transitions;
        let hp = &self.state.hyperparameters;
        let word = token.word as usize;

        for (slot, score) in out.iter_mut().enumerate() {
            let topic = self.layout.topics.topic(slot);
            let mut s = hp.topic_log_prior(topic);
            s += match prev {
                None => trans.start_log(slot),
                Some(qp) => qp.iter().enumerate().map(|(from, &q)| q * trans.log(from, slot)).sum(),
            };
            s += match next {
                None => trans.end_log(slot),
                Some(qn) => qn.iter().enumerate().map(|(to, &q)| q * trans.log(slot, to)).sum(),
            };
            s += match topic {
                WordTopic::Aspect => {
                    self.aspect_emission(scope, self.layout.aspect_word(token_index, token.word), q_aspect)
                }
                WordTopic::Value => self.value_emission(word, q_value),
                WordTopic::Background => self.state.background.expected_log(word),
                WordTopic::Ignore => self
                    .state
                    .ignore
                    .as_ref()
                    .expect("ignore factor")
                    .expected_log(word),
            };
            if let Some(tags) = self.state.tags.get(slot) {
                s += tags.expected_log(token.tag as usize);
            }
            *score = s;
        }
        softmax_in_place(out);
    }
}
