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

//! The full mean-field state: parameter factors plus per-snippet and per-word
//! latent factors.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dirichlet::{DirichletFactor, TransitionFactor};
use super::hyperparams::Hyperparameters;
use super::topics::{TopicSet, WordTopic};
use crate::corpus::{Corpus, SeedLexicon};
use crate::error::{Error, Result};

pub const STATE_FORMAT_VERSION: u32 = 1;

/// Corpus-derived indexing shared by inference and reporting.
///
/// Entity-specific aspect distributions are stored over the words the entity
/// actually uses (`entity_vocab`, first-appearance order); all other word
/// distributions span the full vocabulary.
#[derive(Debug, Clone)]
pub struct Layout {
    pub topics: TopicSet,
    pub num_aspects: usize,
    pub num_values: usize,
    pub vocab_size: usize,
    pub num_tags: usize,
    pub shared_aspects: bool,
    pub shared_mixture: bool,
    /// `token_offset[s]..token_offset[s + 1]` are the tokens of snippet `s`.
    pub token_offset: Vec<usize>,
    /// Per token, the word's index in its entity's vocabulary.
    pub local_word: Vec<u32>,
    pub entity_vocab: Vec<Vec<u32>>,
}

impl Layout {
    pub fn new(corpus: &Corpus, hp: &Hyperparameters) -> Self {
        let mut token_offset = Vec::with_capacity(corpus.num_snippets() + 1);
        let mut local_word = vec![0u32; corpus.num_tokens()];
        let mut offset = 0;
        for snippet in corpus.snippets() {
            token_offset.push(offset);
            offset += snippet.len();
        }
        token_offset.push(offset);

        let vocab_size = corpus.vocabulary().len();
        let mut entity_vocab = Vec::with_capacity(corpus.num_entities());
        let mut local_of = vec![u32::MAX; vocab_size];
        for entity in 0..corpus.num_entities() {
            let mut vocab = Vec::new();
            for &s in corpus.entity_snippets(entity) {
                let base = token_offset[s];
                for (w, token) in corpus.snippet(s).tokens.iter().enumerate() {
                    let slot = &mut local_of[token.word as usize];
                    if *slot == u32::MAX {
                        *slot = vocab.len() as u32;
                        vocab.push(token.word);
                    }
                    local_word[base + w] = *slot;
                }
            }
            for &word in &vocab {
                local_of[word as usize] = u32::MAX;
            }
            entity_vocab.push(vocab);
        }

        Layout {
            topics: TopicSet::new(hp.num_values > 0, hp.use_ignore),
            num_aspects: hp.num_aspects,
            num_values: hp.num_values,
            vocab_size,
            num_tags: corpus.tag_set().len(),
            shared_aspects: hp.shared_aspects,
            shared_mixture: hp.shared_aspects && hp.shared_aspect_multinomial,
            token_offset,
            local_word,
            entity_vocab,
        }
    }

    pub fn num_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn tokens(&self, snippet: usize) -> std::ops::Range<usize> {
        self.token_offset[snippet]..self.token_offset[snippet + 1]
    }

    /// Index into `aspect_words` for an entity.
    pub fn scope_of(&self, entity: usize) -> usize {
        if self.shared_aspects {
            0
        } else {
            entity
        }
    }

    /// Index into `mixtures` for an entity.
    pub fn mixture_of(&self, entity: usize) -> usize {
        if self.shared_mixture {
            0
        } else {
            entity
        }
    }

    /// Index of a token's word within its aspect scope's support.
    #[inline]
    pub fn aspect_word(&self, token_index: usize, global_word: u32) -> usize {
        if self.shared_aspects {
            global_word as usize
        } else {
            self.local_word[token_index] as usize
        }
    }
}

/// All variational factors of the model.
///
/// Latent factors are flat arrays: `q_aspect[s * K + a]`,
/// `q_value[s * N + v]` and `q_word[t * T + slot]` where `t` is a global
/// token index and `slot` indexes the enabled topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub format_version: u32,
    pub hyperparameters: Hyperparameters,
    pub value_names: Vec<String>,
    pub topics: TopicSet,
    pub background: DirichletFactor,
    pub values: Vec<DirichletFactor>,
    pub ignore: Option<DirichletFactor>,
    pub transitions: TransitionFactor,
    /// Tag distributions per enabled topic; empty unless `use_pos`.
    pub tags: Vec<DirichletFactor>,
    /// `aspect_words[scope][a]`, over `scope_vocab[scope]`.
    pub aspect_words: Vec<Vec<DirichletFactor>>,
    /// `aspect_values[scope][a]` over value types; empty when `N = 0`.
    pub aspect_values: Vec<Vec<DirichletFactor>>,
    /// Aspect multinomials, per entity or a single shared one.
    pub mixtures: Vec<DirichletFactor>,
    /// Global word ids of each aspect scope's support.
    pub scope_vocab: Vec<Vec<u32>>,
    pub q_aspect: Vec<f64>,
    pub q_value: Vec<f64>,
    pub q_word: Vec<f64>,
}

/// Prior-only state with uniform latent factors.
pub fn build_priors(hp: &Hyperparameters, corpus: &Corpus, seeds: &SeedLexicon) -> Result<VariationalState> {
    hp.validate()?;
    let layout = Layout::new(corpus, hp);
    build_priors_with_layout(hp, corpus, seeds, &layout)
}

fn build_priors_with_layout(
    hp: &Hyperparameters,
    corpus: &Corpus,
    seeds: &SeedLexicon,
    layout: &Layout,
) -> Result<VariationalState> {
    let k = hp.num_aspects;
    let n = hp.num_values;
    if !seeds.is_empty() {
        if n == 0 {
            return Err(Error::Config("seed words given but N = 0 disables value types".into()));
        }
        if seeds.num_values() != n {
            return Err(Error::Config(format!(
                "seed lexicon has {} value types, model has N = {n}",
                seeds.num_values()
            )));
        }
    }
    let vocab = corpus.vocabulary().len();
    let topics = layout.topics.clone();
    let t = topics.len();

    let values = (0..n)
        .map(|v| {
            let mut prior = vec![hp.epsilon_value; vocab];
            if v < seeds.num_values() {
                for &w in seeds.seeds(v) {
                    prior[w as usize] += hp.lambda_seed;
                }
            }
            DirichletFactor::from_prior(prior)
        })
        .collect();

    let boosts: Vec<f64> = topics
        .topics()
        .iter()
        .map(|&tp| match tp {
            WordTopic::Ignore => hp.gamma_ignore,
            _ => hp.gamma_self,
        })
        .collect();
    let transitions = TransitionFactor::from_prior(t, hp.lambda_transition, &boosts);

    let tags = if hp.use_pos {
        (0..t)
            .map(|_| DirichletFactor::symmetric(layout.num_tags, hp.lambda_tag))
            .collect()
    } else {
        Vec::new()
    };

    let scope_vocab: Vec<Vec<u32>> = if hp.shared_aspects {
        vec![(0..vocab as u32).collect()]
    } else {
        layout.entity_vocab.clone()
    };
    let aspect_words = scope_vocab
        .iter()
        .map(|sv| {
            let implicit = (vocab - sv.len()) as f64 * hp.lambda_aspect;
            (0..k)
                .map(|_| DirichletFactor::with_implicit(vec![hp.lambda_aspect; sv.len()], implicit))
                .collect()
        })
        .collect();
    let aspect_values = scope_vocab
        .iter()
        .map(|_| {
            if n == 0 {
                Vec::new()
            } else {
                (0..k)
                    .map(|_| DirichletFactor::symmetric(n, hp.lambda_aspect_value))
                    .collect()
            }
        })
        .collect();
    let num_mixtures = if layout.shared_mixture { 1 } else { corpus.num_entities() };
    let mixtures = (0..num_mixtures)
        .map(|_| DirichletFactor::symmetric(k, hp.lambda_mixture))
        .collect();

    let s = corpus.num_snippets();
    let tokens = corpus.num_tokens();
    Ok(VariationalState {
        format_version: STATE_FORMAT_VERSION,
        hyperparameters: hp.clone(),
        value_names: hp.value_types().names().to_vec(),
        topics,
        background: DirichletFactor::symmetric(vocab, hp.lambda_background),
        values,
        ignore: hp
            .use_ignore
            .then(|| DirichletFactor::symmetric(vocab, hp.lambda_ignore)),
        transitions,
        tags,
        aspect_words,
        aspect_values,
        mixtures,
        scope_vocab,
        q_aspect: vec![1.0 / k as f64; s * k],
        q_value: if n == 0 { Vec::new() } else { vec![1.0 / n as f64; s * n] },
        q_word: vec![1.0 / t as f64; tokens * t],
    })
}

/// Share of each token's initial word-topic posterior placed on the aspect
/// topic. Starting from a uniform split lets the corpus-wide background
/// absorb every word before any aspect distribution has data.
const INITIAL_ASPECT_WEIGHT: f64 = 0.7;

/// Starting point for inference.
///
/// Word topics lean towards the aspect topic. Snippet aspects come from a
/// greedy pass over each scope (see [`crate::inference`]) and values from
/// the uniform posterior with seeded noise. Parameter factors are then set
/// to prior plus the counts those latent factors imply.
///
/// All randomness is keyed by `(rng_seed, snippet id)` or
/// `(rng_seed, entity name)`, so it does not depend on corpus order or
/// thread count.
pub fn init_state(hp: &Hyperparameters, corpus: &Corpus, seeds: &SeedLexicon) -> Result<VariationalState> {
    hp.validate()?;
    let layout = Layout::new(corpus, hp);
    let mut state = build_priors_with_layout(hp, corpus, seeds, &layout)?;
    perturb(&mut state, corpus);
    lean_to_aspects(&mut state);
    crate::inference::restarts::greedy_aspects(&mut state, corpus, &layout);
    crate::inference::counts::apply_counts(corpus, &layout, &mut state);
    Ok(state)
}

fn lean_to_aspects(state: &mut VariationalState) {
    let t = state.num_topics();
    let a_slot = state.topics.slot(WordTopic::Aspect).expect("aspect topic");
    let rest = (1.0 - INITIAL_ASPECT_WEIGHT) / (t - 1) as f64;
    for q in state.q_word.chunks_mut(t) {
        for (slot, x) in q.iter_mut().enumerate() {
            *x = if slot == a_slot { INITIAL_ASPECT_WEIGHT } else { rest };
        }
    }
}

fn perturb(state: &mut VariationalState, corpus: &Corpus) {
    let k = state.hyperparameters.num_aspects;
    let n = state.hyperparameters.num_values;
    let seed = state.hyperparameters.rng_seed;
    for (s, snippet) in corpus.snippets().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(snippet_seed(seed, &snippet.id));
        perturb_simplex(&mut state.q_aspect[s * k..(s + 1) * k], &mut rng);
        if n > 0 {
            perturb_simplex(&mut state.q_value[s * n..(s + 1) * n], &mut rng);
        }
    }
}

fn perturb_simplex(q: &mut [f64], rng: &mut impl Rng) {
    for x in q.iter_mut() {
        *x *= rng.random_range(0.95..=1.05);
    }
    let sum: f64 = q.iter().sum();
    for x in q.iter_mut() {
        *x /= sum;
    }
}

/// FNV-1a over the id, mixed with the run seed.
pub(crate) fn snippet_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

impl VariationalState {
    pub fn num_aspects(&self) -> usize {
        self.hyperparameters.num_aspects
    }

    pub fn num_values(&self) -> usize {
        self.hyperparameters.num_values
    }

    pub fn num_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn aspect_q(&self, snippet: usize) -> &[f64] {
        let k = self.num_aspects();
        &self.q_aspect[snippet * k..(snippet + 1) * k]
    }

    pub fn value_q(&self, snippet: usize) -> &[f64] {
        let n = self.num_values();
        &self.q_value[snippet * n..(snippet + 1) * n]
    }

    pub fn word_q(&self, token: usize) -> &[f64] {
        let t = self.num_topics();
        &self.q_word[token * t..(token + 1) * t]
    }

    /// Every parameter factor, in a fixed order.
    pub fn factors(&self) -> impl Iterator<Item = &DirichletFactor> {
        std::iter::once(&self.background)
            .chain(self.values.iter())
            .chain(self.ignore.iter())
            .chain(std::iter::once(self.transitions.start_row()))
            .chain((0..self.transitions.num_topics()).map(|r| self.transitions.row(r)))
            .chain(self.tags.iter())
            .chain(self.aspect_words.iter().flatten())
            .chain(self.aspect_values.iter().flatten())
            .chain(self.mixtures.iter())
    }

    /// Checks array sizes against a corpus.
    pub fn check_compatible(&self, corpus: &Corpus) -> Result<()> {
        let k = self.num_aspects();
        let n = self.num_values();
        let ok = self.q_aspect.len() == corpus.num_snippets() * k
            && self.q_value.len() == corpus.num_snippets() * n
            && self.q_word.len() == corpus.num_tokens() * self.num_topics()
            && self.background.len() == corpus.vocabulary().len();
        if ok {
            Ok(())
        } else {
            Err(Error::Data("state does not match the corpus".into()))
        }
    }

    pub(crate) fn refresh_caches(&mut self) {
        self.topics.rebuild();
        self.background.refresh();
        self.values.iter_mut().for_each(DirichletFactor::refresh);
        if let Some(f) = self.ignore.as_mut() {
            f.refresh();
        }
        self.transitions.refresh();
        self.tags.iter_mut().for_each(DirichletFactor::refresh);
        self.aspect_words.iter_mut().flatten().for_each(DirichletFactor::refresh);
        self.aspect_values.iter_mut().flatten().for_each(DirichletFactor::refresh);
        self.mixtures.iter_mut().for_each(DirichletFactor::refresh);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut state: VariationalState = serde_json::from_str(text)?;
        if state.format_version != STATE_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported state format version {}",
                state.format_version
            )));
        }
        state.refresh_caches();
        Ok(state)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusBuilder;

    fn corpus() -> Corpus {
        let mut b = CorpusBuilder::new();
        b.push("r1", "s1", &[("the", "DT"), ("delicious", "JJ"), ("pizza", "NN")]).unwrap();
        b.push("r1", "s2", &[("bland", "JJ"), ("pasta", "NN")]).unwrap();
        b.push("r2", "s3", &[("great", "JJ"), ("sushi", "NN")]).unwrap();
        b.build()
    }

    #[test]
    fn seed_prior_mass() {
        let c = corpus();
        let seeds = SeedLexicon::from_words(&c, &[vec!["delicious"], vec!["bland"]]);
        let state = build_priors(&Hyperparameters::default(), &c, &seeds).unwrap();
        let delicious = c.vocabulary().index_of("delicious").unwrap() as usize;
        let pizza = c.vocabulary().index_of("pizza").unwrap() as usize;
        assert!((state.values[0].prior()[delicious] - 0.225).abs() < 1e-15);
        assert_eq!(state.values[0].prior()[pizza], 0.075);
        assert_eq!(state.values[1].prior()[delicious], 0.075);
    }

    #[test]
    fn transition_priors() {
        let c = corpus();
        let hp = Hyperparameters {
            use_ignore: true,
            ..Hyperparameters::default()
        };
        let state = build_priors(&hp, &c, &SeedLexicon::empty(2)).unwrap();
        let a = state.topics.slot(WordTopic::Aspect).unwrap();
        let b = state.topics.slot(WordTopic::Background).unwrap();
        let i = state.topics.slot(WordTopic::Ignore).unwrap();
        assert_eq!(state.transitions.row(a).prior()[a], 2.0);
        assert_eq!(state.transitions.row(a).prior()[b], 1.0);
        assert_eq!(state.transitions.row(i).prior()[i], 6.0);
        assert_eq!(state.transitions.start_row().len(), 4);
    }

    #[test]
    fn seeds_without_values_rejected() {
        let c = corpus();
        let seeds = SeedLexicon::from_words(&c, &[vec!["delicious"]]);
        let hp = Hyperparameters {
            num_values: 0,
            ..Hyperparameters::default()
        };
        assert!(matches!(build_priors(&hp, &c, &seeds), Err(Error::Config(_))));
    }

    #[test]
    fn value_free_model_has_no_value_factors() {
        let c = corpus();
        let state = build_priors(&Hyperparameters::medical(), &c, &SeedLexicon::empty(0)).unwrap();
        assert!(state.values.is_empty());
        assert!(state.q_value.is_empty());
        assert!(state.aspect_values.iter().all(Vec::is_empty));
        assert!(!state.topics.contains(WordTopic::Value));
        assert_eq!(state.aspect_words.len(), 1);
        assert_eq!(state.mixtures.len(), 1);
    }

    #[test]
    fn entity_vocab_is_local() {
        let c = corpus();
        let hp = Hyperparameters::default();
        let layout = Layout::new(&c, &hp);
        assert_eq!(layout.entity_vocab[0].len(), 5);
        assert_eq!(layout.entity_vocab[1].len(), 2);
        // "great" is the first word of r2's only snippet.
        assert_eq!(layout.local_word[5], 0);
        let state = build_priors(&hp, &c, &SeedLexicon::empty(2)).unwrap();
        let f = &state.aspect_words[1][0];
        assert_eq!(f.len(), 2);
        assert!((f.total() - 0.075 * 7.0).abs() < 1e-12);
    }

    #[test]
    fn single_aspect_init_is_exact() {
        let c = corpus();
        let hp = Hyperparameters {
            num_aspects: 1,
            rng_seed: 17,
            ..Hyperparameters::default()
        };
        let state = init_state(&hp, &c, &SeedLexicon::empty(2)).unwrap();
        assert!(state.q_aspect.iter().all(|&q| q == 1.0));
    }

    #[test]
    fn init_noise_bounds_and_determinism() {
        let c = corpus();
        let hp = Hyperparameters {
            rng_seed: 5,
            ..Hyperparameters::default()
        };
        let a = init_state(&hp, &c, &SeedLexicon::empty(2)).unwrap();
        let b = init_state(&hp, &c, &SeedLexicon::empty(2)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let (lo, hi) = (0.95 / 2.1, 1.05 / 1.9);
        assert!(a.q_value.iter().all(|&q| (lo..=hi).contains(&q)));
        let rest = 0.4 / 9.0;
        for s in 0..c.num_snippets() {
            let q = a.aspect_q(s);
            assert_eq!(q.iter().filter(|&&x| x == 0.6).count(), 1);
            assert!(q.iter().all(|&x| x == 0.6 || (x - rest).abs() < 1e-15));
        }
        let t = a.num_topics();
        for tok in 0..c.num_tokens() {
            assert_eq!(a.word_q(tok)[0], 0.7);
            assert!((a.word_q(tok).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(a.word_q(tok).len(), t);
        }
        let other = init_state(&Hyperparameters { rng_seed: 6, ..hp }, &c, &SeedLexicon::empty(2)).unwrap();
        assert_ne!(a.q_value, other.q_value);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let c = corpus();
        let state = init_state(&Hyperparameters::default(), &c, &SeedLexicon::empty(2)).unwrap();
        let back = VariationalState::from_json(&state.to_json().unwrap()).unwrap();
        assert_eq!(back, state);
        assert_eq!(back.background.expected_logs(), state.background.expected_logs());
        assert_eq!(back.topics.slot(WordTopic::Background), Some(2));
    }
}
