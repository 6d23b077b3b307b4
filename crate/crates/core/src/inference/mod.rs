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

//! Mean-field coordinate descent.
//!
//! A pass updates every snippet's `q(Z_A)`, `q(Z_V)` and `q(Z_W)`, then sets
//! all parameter factors from the new expected counts in one step. Under
//! [`Schedule::Batch`] every latent update reads the previous pass, so
//! entities are processed in parallel; under [`Schedule::Sequential`] each
//! update reads the freshest values and the free energy cannot increase.

pub(crate) mod counts;
mod free_energy;
pub(crate) mod restarts;
mod updates;

use std::time::Instant;

use log::info;
use rayon::prelude::*;

pub use free_energy::FreeEnergyReport;
pub use updates::{softmax_in_place, UpdateContext};

use crate::corpus::{Corpus, SeedLexicon};
use crate::error::{Error, Result};
use crate::model::{init_state, Hyperparameters, Layout, Schedule, VariationalState, WordTopic};

/// Run-time options that do not affect results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for the batch schedule; 0 uses the global rayon pool.
    pub threads: usize,
}

/// Result of [`run_inference`].
#[derive(Debug, Clone)]
pub struct Fit {
    pub state: VariationalState,
    pub free_energy: Vec<FreeEnergyReport>,
    /// Whether the q-change threshold stopped the run before `max_iters`.
    pub converged: bool,
}

/// Fits the model from [`init_state`].
pub fn run_inference(hp: &Hyperparameters, corpus: &Corpus, seeds: &SeedLexicon) -> Result<Fit> {
    run_inference_with(hp, corpus, seeds, &RunOptions::default())
}

pub fn run_inference_with(
    hp: &Hyperparameters,
    corpus: &Corpus,
    seeds: &SeedLexicon,
    options: &RunOptions,
) -> Result<Fit> {
    hp.validate()?;
    let layout = Layout::new(corpus, hp);
    let state = init_state(hp, corpus, seeds)?;
    let engine = Engine::new(corpus, &layout);
    if options.threads == 0 {
        return engine.fit(state);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    pool.install(|| engine.fit(state))
}

/// Inference driver bound to one corpus.
pub struct Engine<'a> {
    corpus: &'a Corpus,
    layout: &'a Layout,
}

/// New latent factors for one entity's snippets, in `entity_snippets` order.
struct EntityUpdate {
    q_aspect: Vec<f64>,
    q_value: Vec<f64>,
    q_word: Vec<f64>,
}

impl<'a> Engine<'a> {
    pub fn new(corpus: &'a Corpus, layout: &'a Layout) -> Self {
        Engine { corpus, layout }
    }

    pub fn fit(&self, mut state: VariationalState) -> Result<Fit> {
        let hp = state.hyperparameters.clone();
        let mut reports = Vec::with_capacity(hp.max_iters);
        let mut converged = false;
        let started = Instant::now();
        let search_at = hp.max_iters / 2;
        let mut searched = hp.aspect_restarts == 0;
        for iteration in 0..hp.max_iters {
            if !searched && iteration == search_at {
                self.search_aspects(&mut state);
                searched = true;
            }
            let delta = match hp.schedule {
                Schedule::Batch => self.batch_latent_pass(&mut state),
                Schedule::Sequential => self.sequential_latent_pass(&mut state),
            };
            self.update_parameters(&mut state);
            let value = self.free_energy(&state);
            if !value.is_finite() {
                return Err(Error::Numeric(format!("free energy is {value} at iteration {iteration}")));
            }
            info!(
                "iteration {iteration}: free energy {value:.6}, max q change {delta:.3e}, {:.2}s",
                started.elapsed().as_secs_f64()
            );
            reports.push(FreeEnergyReport { iteration, value });
            if hp.convergence_tol > 0.0 && delta < hp.convergence_tol {
                if !searched {
                    // Converged before the scheduled search: search now and
                    // keep iterating from the new assignment.
                    self.search_aspects(&mut state);
                    searched = true;
                    continue;
                }
                converged = true;
                break;
            }
        }
        Ok(Fit {
            state,
            free_energy: reports,
            converged,
        })
    }

    /// Per-entity aspect search; never raises the free energy.
    fn search_aspects(&self, state: &mut VariationalState) {
        let restarts = state.hyperparameters.aspect_restarts;
        restarts::refine_aspects(state, self.corpus, self.layout, restarts);
        self.update_parameters(state);
    }

    /// Jacobi-style pass; returns the largest change of any q component.
    pub fn batch_latent_pass(&self, state: &mut VariationalState) -> f64 {
        let updates: Vec<EntityUpdate> = {
            let ctx = UpdateContext::new(self.corpus, self.layout, state);
            (0..self.corpus.num_entities())
                .into_par_iter()
                .map(|e| self.entity_batch_update(&ctx, e))
                .collect()
        };
        let k = self.layout.num_aspects;
        let n = self.layout.num_values;
        let t = self.layout.num_topics();
        let mut delta: f64 = 0.0;
        for (e, u) in updates.into_iter().enumerate() {
            let (mut ao, mut vo, mut wo) = (0, 0, 0);
            for &s in self.corpus.entity_snippets(e) {
                delta = delta.max(copy_tracking(&mut state.q_aspect[s * k..(s + 1) * k], &u.q_aspect[ao..ao + k]));
                ao += k;
                if n > 0 {
                    delta = delta.max(copy_tracking(&mut state.q_value[s * n..(s + 1) * n], &u.q_value[vo..vo + n]));
                    vo += n;
                }
                let r = self.layout.tokens(s);
                let len = (r.end - r.start) * t;
                delta = delta.max(copy_tracking(&mut state.q_word[r.start * t..r.end * t], &u.q_word[wo..wo + len]));
                wo += len;
            }
        }
        delta
    }

    fn entity_batch_update(&self, ctx: &UpdateContext<'_>, entity: usize) -> EntityUpdate {
        let k = self.layout.num_aspects;
        let n = self.layout.num_values;
        let t = self.layout.num_topics();
        let snippets = self.corpus.entity_snippets(entity);
        let mut out = EntityUpdate {
            q_aspect: Vec::with_capacity(snippets.len() * k),
            q_value: Vec::with_capacity(snippets.len() * n),
            q_word: Vec::new(),
        };
        let state = ctx.state;
        let mut qa = vec![0.0; k];
        let mut qv = vec![0.0; n];
        let mut qw = vec![0.0; t];
        for &s in snippets {
            let r = self.layout.tokens(s);
            let words = &state.q_word[r.start * t..r.end * t];
            ctx.aspect_scores(s, words, state.value_q(s), &mut qa);
            out.q_aspect.extend_from_slice(&qa);
            if n > 0 {
                ctx.value_scores(s, state.aspect_q(s), words, &mut qv);
                out.q_value.extend_from_slice(&qv);
            }
            let len = r.end - r.start;
            for w in 0..len {
                let prev = (w > 0).then(|| &words[(w - 1) * t..w * t]);
                let next = (w + 1 < len).then(|| &words[(w + 1) * t..(w + 2) * t]);
                ctx.word_scores(s, w, state.aspect_q(s), state.value_q(s), prev, next, &mut qw);
                out.q_word.extend_from_slice(&qw);
            }
        }
        out
    }

    /// Gauss-Seidel pass in entity, snippet and word order.
    pub fn sequential_latent_pass(&self, state: &mut VariationalState) -> f64 {
        let k = self.layout.num_aspects;
        let n = self.layout.num_values;
        let t = self.layout.num_topics();
        let mut qa = vec![0.0; k];
        let mut qv = vec![0.0; n];
        let mut qw = vec![0.0; t];
        let mut delta: f64 = 0.0;
        for e in 0..self.corpus.num_entities() {
            for &s in self.corpus.entity_snippets(e) {
                let r = self.layout.tokens(s);
                {
                    let ctx = UpdateContext::new(self.corpus, self.layout, state);
                    ctx.aspect_scores(s, &state.q_word[r.start * t..r.end * t], state.value_q(s), &mut qa);
                }
                delta = delta.max(copy_tracking(&mut state.q_aspect[s * k..(s + 1) * k], &qa));
                if n > 0 {
                    {
                        let ctx = UpdateContext::new(self.corpus, self.layout, state);
                        ctx.value_scores(s, state.aspect_q(s), &state.q_word[r.start * t..r.end * t], &mut qv);
                    }
                    delta = delta.max(copy_tracking(&mut state.q_value[s * n..(s + 1) * n], &qv));
                }
                let len = r.end - r.start;
                for w in 0..len {
                    {
                        let ctx = UpdateContext::new(self.corpus, self.layout, state);
                        let words = &state.q_word[r.start * t..r.end * t];
                        let prev = (w > 0).then(|| &words[(w - 1) * t..w * t]);
                        let next = (w + 1 < len).then(|| &words[(w + 1) * t..(w + 2) * t]);
                        ctx.word_scores(s, w, state.aspect_q(s), state.value_q(s), prev, next, &mut qw);
                    }
                    let at = (r.start + w) * t;
                    delta = delta.max(copy_tracking(&mut state.q_word[at..at + t], &qw));
                }
            }
        }
        delta
    }

    pub fn update_parameters(&self, state: &mut VariationalState) {
        counts::apply_counts(self.corpus, self.layout, state);
    }

    pub fn free_energy(&self, state: &VariationalState) -> f64 {
        free_energy::free_energy_with_layout(self.corpus, self.layout, state)
    }
}

fn copy_tracking(dst: &mut [f64], src: &[f64]) -> f64 {
    let mut delta: f64 = 0.0;
    for (d, &s) in dst.iter_mut().zip(src) {
        delta = delta.max((*d - s).abs());
        *d = s;
    }
    delta
}

/// Sets all parameter factors to prior plus expected counts.
pub fn update_parameters(state: &mut VariationalState, corpus: &Corpus) {
    let layout = Layout::new(corpus, &state.hyperparameters);
    counts::apply_counts(corpus, &layout, state);
}

pub fn compute_free_energy(state: &VariationalState, corpus: &Corpus) -> f64 {
    let layout = Layout::new(corpus, &state.hyperparameters);
    free_energy::free_energy_with_layout(corpus, &layout, state)
}

/// Hard assignments read off a fitted state.
#[derive(Debug, Clone, PartialEq)]
pub struct SnippetPosterior {
    pub aspect: usize,
    pub value: Option<usize>,
    pub word_topics: Vec<WordTopic>,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in q.iter().enumerate() {
        if x > q[best] {
            best = i;
        }
    }
    best
}

pub fn extract_posteriors(state: &VariationalState, corpus: &Corpus) -> Vec<SnippetPosterior> {
    let t = state.num_topics();
    let mut token = 0;
    corpus
        .snippets()
        .iter()
        .enumerate()
        .map(|(s, snippet)| {
            let word_topics = (0..snippet.len())
                .map(|w| state.topics.topic(argmax(&state.q_word[(token + w) * t..(token + w + 1) * t])))
                .collect();
            token += snippet.len();
            SnippetPosterior {
                aspect: argmax(state.aspect_q(s)),
                value: (state.num_values() > 0).then(|| argmax(state.value_q(s))),
                word_topics,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusBuilder;
    use crate::model::build_priors;

    fn tiny() -> Corpus {
        let mut b = CorpusBuilder::new();
        b.push("r1", "s1", &[("great", "JJ"), ("pizza", "NN")]).unwrap();
        b.build()
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[1.0]), 0);
    }

    #[test]
    fn single_support_collapses_after_one_pass() {
        let hp = Hyperparameters {
            num_aspects: 1,
            num_values: 1,
            max_iters: 1,
            ..Hyperparameters::default()
        };
        let fit = run_inference(&hp, &tiny(), &SeedLexicon::empty(1)).unwrap();
        assert_eq!(fit.state.q_aspect, vec![1.0]);
        assert_eq!(fit.state.q_value, vec![1.0]);
        assert_eq!(fit.free_energy.len(), 1);
    }

    #[test]
    fn value_update_disabled_without_values() {
        let hp = Hyperparameters {
            num_values: 0,
            ..Hyperparameters::default()
        };
        let c = tiny();
        let state = build_priors(&hp, &c, &SeedLexicon::empty(0)).unwrap();
        let layout = Layout::new(&c, &hp);
        let ctx = UpdateContext::new(&c, &layout, &state);
        assert!(ctx.update_snippet_value(0).is_err());
    }

    #[test]
    fn empty_corpus_free_energy_is_zero() {
        let c = CorpusBuilder::new().build();
        let state = build_priors(&Hyperparameters::default(), &c, &SeedLexicon::empty(2)).unwrap();
        assert_eq!(compute_free_energy(&state, &c), 0.0);
    }

    #[test]
    fn symmetric_aspect_scores_are_uniform() {
        let hp = Hyperparameters {
            num_aspects: 4,
            ..Hyperparameters::default()
        };
        let c = tiny();
        let state = build_priors(&hp, &c, &SeedLexicon::empty(2)).unwrap();
        let layout = Layout::new(&c, &hp);
        let q = UpdateContext::new(&c, &layout, &state).update_snippet_aspect(0);
        assert!(q.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn zero_iterations_of_counts_reproduce_priors() {
        let c = tiny();
        let hp = Hyperparameters::default();
        let state = build_priors(&hp, &c, &SeedLexicon::empty(2)).unwrap();
        for f in state.factors() {
            assert_eq!(f.prior(), f.concentration());
        }
    }
}
