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

//! Forward sampling of synthetic corpora from the generative model.
//!
//! Every latent variable is recorded, so fitted posteriors can be scored
//! against the truth.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Corpus, CorpusBuilder, GoldAnnotations, SeedLexicon, WordLabel};
use crate::error::{Error, Result};
use crate::model::{Hyperparameters, TopicSet, WordTopic};

/// Tags used by synthetic corpora.
pub const SYNTHETIC_TAGS: [&str; 5] = ["NN", "JJ", "VB", "DT", "RB"];

#[derive(Debug, Clone, PartialEq)]
pub enum LengthModel {
    /// Poisson length, resampled until it falls in `1..=max`.
    Poisson { mean: f64, max: usize },
    /// Run the chain until it emits `end`, stopping early at `max` words.
    UntilEnd { max: usize },
    /// Every snippet has exactly this many words.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransitionSpec {
    /// Draw the transition matrix from its prior.
    FromPrior,
    /// Use this matrix: the start row then one row per enabled topic, each
    /// over the enabled topics followed by `end`. Rows need not be normalized.
    Fixed(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusShape {
    pub entities: usize,
    pub snippets_per_entity: usize,
    pub vocab_size: usize,
    pub length: LengthModel,
    pub transitions: TransitionSpec,
    /// Seed words chosen per value type.
    pub seed_words_per_value: usize,
    /// Fraction of each true value distribution moved onto its seed words.
    pub seed_mass: f64,
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape {
            entities: 10,
            snippets_per_entity: 40,
            vocab_size: 2000,
            length: LengthModel::Poisson { mean: 8.0, max: 30 },
            transitions: TransitionSpec::FromPrior,
            seed_words_per_value: 0,
            seed_mass: 0.0,
        }
    }
}

/// The sampled multinomials (all normalized, over the full vocabulary).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParameters {
    pub topics: Vec<WordTopic>,
    pub background: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub ignore: Option<Vec<f64>>,
    /// Start row then topic rows, columns are topics then `end`.
    pub transitions: Vec<Vec<f64>>,
    pub tags: Vec<Vec<f64>>,
    /// `[scope][aspect]` word distributions.
    pub aspect_words: Vec<Vec<Vec<f64>>>,
    pub aspect_values: Vec<Vec<Vec<f64>>>,
    pub mixtures: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub gold: GoldAnnotations,
    /// Seed words per value type, by surface form.
    pub seed_words: Vec<Vec<String>>,
    /// Gold topic of every token, per snippet.
    pub word_topics: Vec<Vec<WordTopic>>,
    /// Gold aspect of every snippet.
    pub aspects: Vec<usize>,
    pub true_parameters: TrueParameters,
}

impl SyntheticCorpus {
    pub fn seeds(&self) -> SeedLexicon {
        SeedLexicon::from_words(&self.corpus, &self.seed_words)
    }

    /// Writes corpus, gold files, seeds and true parameters into `dir`.
    pub fn write(&self, dir: &Path, hp: &Hyperparameters) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        corpus::write_corpus(&self.corpus, dir.join("corpus.jsonl"))?;
        corpus::write_label_tsv(
            dir.join("gold_clusters.tsv"),
            &self.corpus,
            self.gold.clusters.iter().map(|(id, l)| (id.as_str(), l.clone())),
        )?;
        let values = hp.value_types();
        if !self.gold.polarity.is_empty() {
            corpus::write_label_tsv(
                dir.join("gold_polarity.tsv"),
                &self.corpus,
                self.gold
                    .polarity
                    .iter()
                    .map(|(id, &v)| (id.as_str(), values.name(v).to_owned())),
            )?;
        }
        corpus::write_word_labels(
            dir.join("gold_word_labels.jsonl"),
            self.corpus.snippets().iter().map(|s| {
                (
                    s.id.as_str(),
                    self.gold.word_labels[&s.id].as_slice(),
                )
            }),
        )?;
        if self.seed_words.iter().any(|s| !s.is_empty()) {
            corpus::write_seed_lexicon(&self.seeds(), &self.corpus, &values, dir.join("seeds.txt"))?;
        }
        let path = dir.join("true_parameters.json");
        let json = serde_json::to_string(&self.true_parameters)?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

/// Cumulative table for repeated categorical draws.
struct Categorical {
    cdf: Vec<f64>,
}

impl Categorical {
    fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|&w| {
                acc += w;
                acc
            })
            .collect();
        Categorical { cdf }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cdf.last().expect("non-empty categorical");
        let u = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

/// `log X` for `X ~ Gamma(shape, 1)`, stable for small shapes.
fn log_gamma_sample(rng: &mut impl Rng, shape: f64) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("valid gamma").sample(rng).ln()
    } else {
        let boosted = Gamma::new(shape + 1.0, 1.0).expect("valid gamma").sample(rng).ln();
        let u: f64 = 1.0 - rng.random::<f64>();
        boosted + u.ln() / shape
    }
}

pub fn sample_dirichlet(rng: &mut impl Rng, alpha: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = alpha.iter().map(|&a| log_gamma_sample(rng, a)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for x in &mut out {
        *x /= sum;
    }
    out
}

fn tag_prior(topic: WordTopic) -> [f64; 5] {
    // NN, JJ, VB, DT, RB
    match topic {
        WordTopic::Aspect => [9.0, 1.0, 1.0, 1.0, 1.0],
        WordTopic::Value => [1.0, 9.0, 1.0, 1.0, 3.0],
        WordTopic::Background => [1.0, 1.0, 5.0, 5.0, 1.0],
        WordTopic::Ignore => [1.0; 5],
    }
}

pub fn word_name(index: usize) -> String {
    format!("w{index:05}")
}

/// Samples a corpus from the generative story.
pub fn sample_corpus(hp: &Hyperparameters, shape: &CorpusShape, rng_seed: u64) -> Result<SyntheticCorpus> {
    generate(hp, shape, 0.0, rng_seed)
}

/// Like [`sample_corpus`], but each aspect word distribution is pulled onto
/// its own block of the vocabulary: `(1 - s) * theta + s * theta|block`.
/// At `separation = 1` aspects never share a word; at 0 this is exactly
/// `sample_corpus`.
pub fn make_separable(
    hp: &Hyperparameters,
    shape: &CorpusShape,
    separation: f64,
    rng_seed: u64,
) -> Result<SyntheticCorpus> {
    if !(0.0..=1.0).contains(&separation) {
        return Err(Error::Config(format!("separation must be in [0, 1], got {separation}")));
    }
    if shape.vocab_size < hp.num_aspects {
        return Err(Error::Config(format!(
            "vocabulary of {} words cannot hold {} disjoint aspect blocks",
            shape.vocab_size, hp.num_aspects
        )));
    }
    generate(hp, shape, separation, rng_seed)
}

/// Vocabulary block `[lo, hi)` reserved for aspect `a`.
pub fn aspect_block(vocab_size: usize, num_aspects: usize, aspect: usize) -> (usize, usize) {
    let size = vocab_size / num_aspects;
    let lo = aspect * size;
    let hi = if aspect + 1 == num_aspects { vocab_size } else { lo + size };
    (lo, hi)
}

fn separate(theta: &mut [f64], block: (usize, usize), separation: f64) {
    if separation == 0.0 {
        return;
    }
    let inside: f64 = theta[block.0..block.1].iter().sum();
    let width = (block.1 - block.0) as f64;
    for (w, x) in theta.iter_mut().enumerate() {
        let restricted = if (block.0..block.1).contains(&w) {
            if inside > 0.0 {
                *x / inside
            } else {
                1.0 / width
            }
        } else {
            0.0
        };
        *x = (1.0 - separation) * *x + separation * restricted;
    }
}

fn validate_shape(hp: &Hyperparameters, shape: &CorpusShape, topics: &TopicSet) -> Result<()> {
    if shape.entities == 0 || shape.snippets_per_entity == 0 || shape.vocab_size == 0 {
        return Err(Error::Config("corpus shape must be positive".into()));
    }
    match shape.length {
        LengthModel::Poisson { mean, max } if !(mean > 0.0) || max == 0 => {
            return Err(Error::Config("snippet length model must be positive".into()))
        }
        LengthModel::UntilEnd { max: 0 } | LengthModel::Fixed(0) => {
            return Err(Error::Config("snippet length must be positive".into()))
        }
        _ => {}
    }
    if let TransitionSpec::Fixed(rows) = &shape.transitions {
        let t = topics.len();
        let ok = rows.len() == t + 1
            && rows[0].len() >= t
            && rows[1..].iter().all(|r| r.len() == t + 1)
            && rows.iter().flatten().all(|&x| x >= 0.0)
            && rows.iter().all(|r| r[..t].iter().sum::<f64>() > 0.0);
        if !ok {
            return Err(Error::Config("fixed transition matrix has the wrong shape".into()));
        }
    }
    if shape.seed_words_per_value > 0 && hp.num_values == 0 {
        return Err(Error::Config("seed words need N >= 1".into()));
    }
    if shape.seed_words_per_value * hp.num_values > shape.vocab_size {
        return Err(Error::Config("vocabulary too small for the requested seed words".into()));
    }
    if !(0.0..=1.0).contains(&shape.seed_mass) {
        return Err(Error::Config("seed_mass must be in [0, 1]".into()));
    }
    Ok(())
}

fn generate(hp: &Hyperparameters, shape: &CorpusShape, separation: f64, rng_seed: u64) -> Result<SyntheticCorpus> {
    hp.validate()?;
    let topics = TopicSet::new(hp.num_values > 0, hp.use_ignore);
    validate_shape(hp, shape, &topics)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let v_size = shape.vocab_size;
    let k = hp.num_aspects;
    let n = hp.num_values;
    let t = topics.len();

    // Seed words: distinct across value types.
    let mut pool: Vec<usize> = (0..v_size).collect();
    let mut seed_ids: Vec<Vec<usize>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut ids = Vec::with_capacity(shape.seed_words_per_value);
        for _ in 0..shape.seed_words_per_value {
            let pick = rng.random_range(0..pool.len());
            ids.push(pool.swap_remove(pick));
        }
        ids.sort_unstable();
        seed_ids.push(ids);
    }

    let background = sample_dirichlet(&mut rng, &vec![hp.lambda_background; v_size]);
    let values: Vec<Vec<f64>> = seed_ids
        .iter()
        .map(|ids| {
            let mut alpha = vec![hp.epsilon_value; v_size];
            for &w in ids {
                alpha[w] += hp.lambda_seed;
            }
            let mut theta = sample_dirichlet(&mut rng, &alpha);
            if shape.seed_mass > 0.0 && !ids.is_empty() {
                for x in &mut theta {
                    *x *= 1.0 - shape.seed_mass;
                }
                for &w in ids {
                    theta[w] += shape.seed_mass / ids.len() as f64;
                }
            }
            theta
        })
        .collect();
    let ignore = hp
        .use_ignore
        .then(|| sample_dirichlet(&mut rng, &vec![hp.lambda_ignore; v_size]));

    let transitions: Vec<Vec<f64>> = match &shape.transitions {
        TransitionSpec::FromPrior => {
            let mut rows = vec![{
                let mut r = sample_dirichlet(&mut rng, &vec![hp.lambda_transition; t]);
                r.push(0.0);
                r
            }];
            for from in 0..t {
                let mut alpha = vec![hp.lambda_transition; t + 1];
                alpha[from] += match topics.topic(from) {
                    WordTopic::Ignore => hp.gamma_ignore,
                    _ => hp.gamma_self,
                };
                rows.push(sample_dirichlet(&mut rng, &alpha));
            }
            rows
        }
        TransitionSpec::Fixed(rows) => rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut r = r.clone();
                if i == 0 {
                    r.truncate(t);
                    r.push(0.0);
                }
                let sum: f64 = r.iter().sum();
                r.iter().map(|x| x / sum).collect()
            })
            .collect(),
    };
    let tags: Vec<Vec<f64>> = topics
        .topics()
        .iter()
        .map(|&topic| {
            let alpha: Vec<f64> = tag_prior(topic).iter().map(|a| a * hp.lambda_tag).collect();
            sample_dirichlet(&mut rng, &alpha)
        })
        .collect();

    let scopes = if hp.shared_aspects { 1 } else { shape.entities };
    let mixtures_count = if hp.shared_aspects && hp.shared_aspect_multinomial { 1 } else { shape.entities };
    let mut aspect_words = Vec::with_capacity(scopes);
    let mut aspect_values = Vec::with_capacity(scopes);
    for _ in 0..scopes {
        let words: Vec<Vec<f64>> = (0..k)
            .map(|a| {
                let mut theta = sample_dirichlet(&mut rng, &vec![hp.lambda_aspect; v_size]);
                separate(&mut theta, aspect_block(v_size, k, a), separation);
                theta
            })
            .collect();
        let av: Vec<Vec<f64>> = if n == 0 {
            Vec::new()
        } else {
            (0..k)
                .map(|_| sample_dirichlet(&mut rng, &vec![hp.lambda_aspect_value; n]))
                .collect()
        };
        aspect_words.push(words);
        aspect_values.push(av);
    }
    let mixtures: Vec<Vec<f64>> = (0..mixtures_count)
        .map(|_| sample_dirichlet(&mut rng, &vec![hp.lambda_mixture; k]))
        .collect();

    let bg_table = Categorical::new(&background);
    let value_tables: Vec<Categorical> = values.iter().map(|v| Categorical::new(v)).collect();
    let ignore_table = ignore.as_ref().map(|v| Categorical::new(v));
    let start_table = Categorical::new(&transitions[0][..t]);
    let row_tables: Vec<Categorical> = transitions[1..].iter().map(|r| Categorical::new(r)).collect();
    let row_topic_tables: Vec<Categorical> = transitions[1..].iter().map(|r| Categorical::new(&r[..t])).collect();
    let tag_tables: Vec<Categorical> = tags.iter().map(|r| Categorical::new(r)).collect();
    let aspect_tables: Vec<Vec<Categorical>> = aspect_words
        .iter()
        .map(|scope| scope.iter().map(|r| Categorical::new(r)).collect())
        .collect();
    let av_tables: Vec<Vec<Categorical>> = aspect_values
        .iter()
        .map(|scope| scope.iter().map(|r| Categorical::new(r)).collect())
        .collect();
    let mixture_tables: Vec<Categorical> = mixtures.iter().map(|r| Categorical::new(r)).collect();
    let poisson = match shape.length {
        LengthModel::Poisson { mean, .. } => Some(Poisson::new(mean).map_err(|e| Error::Config(e.to_string()))?),
        LengthModel::UntilEnd { .. } | LengthModel::Fixed(_) => None,
    };

    let mut builder = CorpusBuilder::new();
    let mut gold = GoldAnnotations::default();
    let mut word_topics = Vec::new();
    let mut aspects = Vec::new();
    for e in 0..shape.entities {
        let entity_id = format!("e{e:03}");
        let scope = if hp.shared_aspects { 0 } else { e };
        let mixture = &mixture_tables[if mixtures_count == 1 { 0 } else { e }];
        for j in 0..shape.snippets_per_entity {
            let id = format!("{entity_id}-s{j:03}");
            let aspect = mixture.sample(&mut rng);
            let value = (n > 0).then(|| av_tables[scope][aspect].sample(&mut rng));

            let chain = sample_chain(
                &mut rng,
                &shape.length,
                poisson.as_ref(),
                &start_table,
                &row_tables,
                &row_topic_tables,
                t,
            );
            let mut tokens = Vec::with_capacity(chain.len());
            let mut chain_topics = Vec::with_capacity(chain.len());
            for &slot in &chain {
                let topic = topics.topic(slot);
                let word = match topic {
                    WordTopic::Aspect => aspect_tables[scope][aspect].sample(&mut rng),
                    WordTopic::Value => value_tables[value.expect("value drawn")].sample(&mut rng),
                    WordTopic::Background => bg_table.sample(&mut rng),
                    WordTopic::Ignore => ignore_table.as_ref().expect("ignore table").sample(&mut rng),
                };
                let tag = tag_tables[slot].sample(&mut rng);
                tokens.push((word_name(word), SYNTHETIC_TAGS[tag]));
                chain_topics.push(topic);
            }
            builder.push(&entity_id, &id, &tokens)?;
            gold.clusters.insert(id.clone(), format!("a{aspect}"));
            if let Some(v) = value {
                gold.polarity.insert(id.clone(), v);
            }
            gold.word_labels
                .insert(id.clone(), chain_topics.iter().map(|t| t.label()).collect::<Vec<WordLabel>>());
            word_topics.push(chain_topics);
            aspects.push(aspect);
        }
    }

    let corpus = builder.build();
    let seed_words = seed_ids
        .iter()
        .map(|ids| ids.iter().map(|&w| word_name(w)).collect())
        .collect();
    Ok(SyntheticCorpus {
        corpus,
        gold,
        seed_words,
        word_topics,
        aspects,
        true_parameters: TrueParameters {
            topics: topics.topics().to_vec(),
            background,
            values,
            ignore,
            transitions,
            tags,
            aspect_words,
            aspect_values,
            mixtures,
        },
    })
}

fn sample_chain(
    rng: &mut impl Rng,
    length: &LengthModel,
    poisson: Option<&Poisson<f64>>,
    start: &Categorical,
    rows: &[Categorical],
    rows_without_end: &[Categorical],
    num_topics: usize,
) -> Vec<usize> {
    match *length {
        LengthModel::Fixed(len) => chain_of_length(rng, start, rows_without_end, len),
        LengthModel::Poisson { max, .. } => {
            let poisson = poisson.expect("poisson length");
            let len = loop {
                let draw = poisson.sample(rng) as usize;
                if (1..=max).contains(&draw) {
                    break draw;
                }
            };
            chain_of_length(rng, start, rows_without_end, len)
        }
        LengthModel::UntilEnd { max } => {
            let mut chain = vec![start.sample(rng)];
            while chain.len() < max {
                let next = rows[*chain.last().unwrap()].sample(rng);
                if next == num_topics {
                    break;
                }
                chain.push(next);
            }
            chain
        }
    }
}

/// Chain of exactly `len` topics with `end` excluded.
fn chain_of_length(rng: &mut impl Rng, start: &Categorical, rows_without_end: &[Categorical], len: usize) -> Vec<usize> {
    let mut chain = vec![start.sample(rng)];
    while chain.len() < len {
        let prev = *chain.last().unwrap();
        chain.push(rows_without_end[prev].sample(rng));
    }
    chain
}

/// Words seen under each gold aspect, per entity (or globally when aspects
/// are shared).
pub fn aspect_vocabularies(synthetic: &SyntheticCorpus) -> BTreeMap<(usize, usize), Vec<u32>> {
    let mut out: BTreeMap<(usize, usize), Vec<u32>> = BTreeMap::new();
    for (s, snippet) in synthetic.corpus.snippets().iter().enumerate() {
        for (token, &topic) in snippet.tokens.iter().zip(&synthetic.word_topics[s]) {
            if topic == WordTopic::Aspect {
                out.entry((snippet.entity, synthetic.aspects[s])).or_default().push(token.word);
            }
        }
    }
    for words in out.values_mut() {
        words.sort_unstable();
        words.dedup();
    }
    out
}
