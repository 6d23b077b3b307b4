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

//! `aspectval` command line: generate, fit, eval, baseline and report.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numeric failure.

mod manifest;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use aspectval::baselines::{
    cluster_baseline, majority_sentiment, seed_sentiment, ClusterScope, Clustering, Linkage, Prediction,
};
use aspectval::corpus::{
    load_corpus, load_gold, load_label_tsv, load_seed_lexicon, load_word_labels, write_label_tsv, Corpus, GoldPaths,
    SeedLexicon, ValueTypes, WordLabel,
};
use aspectval::eval::{
    aspect_clustering, gold_clustering, muc_score, sentiment_accuracy, tree_expand, LabelCounts, MetricEntry,
};
use aspectval::generator::{make_separable, sample_corpus, CorpusShape, LengthModel, TransitionSpec};
use aspectval::inference::{extract_posteriors, run_inference_with, RunOptions};
use aspectval::model::{Hyperparameters, VariationalState};
use aspectval::report::build_report;
use aspectval::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use manifest::ManifestBuilder;

#[derive(Debug, Parser)]
#[command(name = "aspectval", version, about = "Joint aspect clustering and value assignment for opinion snippets")]
struct Cli {
    /// Seed for all randomness; overrides `rng_seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `fit` (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Where to write the run manifest. Defaults to `<output>.manifest.json`.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a synthetic corpus with gold files.
    Generate(GenerateArgs),
    /// Fit the model to a corpus.
    Fit(FitArgs),
    /// Score a fitted state or prediction files against gold files.
    Eval(EvalArgs),
    /// Run a clustering or sentiment baseline.
    Baseline(BaselineArgs),
    /// Group snippets by aspect under their top words.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Model config; K, N, use_ignore and the priors shape the generator.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    entities: usize,
    #[arg(long, default_value_t = 40)]
    snippets: usize,
    #[arg(long, default_value_t = 2000)]
    vocab: usize,
    /// Mean snippet length (Poisson).
    #[arg(long, default_value_t = 8.0)]
    length_mean: f64,
    #[arg(long, default_value_t = 30)]
    max_length: usize,
    /// Pull aspect word distributions onto disjoint vocabulary blocks.
    #[arg(long)]
    separation: Option<f64>,
    /// Seed words per value type.
    #[arg(long, default_value_t = 0)]
    seed_words: usize,
    /// Share of each value distribution moved onto its seed words.
    #[arg(long, default_value_t = 0.0)]
    seed_mass: f64,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    /// Seed lexicon with `[value:<name>]` sections.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Fitted state (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Free-energy log; defaults to `<out>.fe.tsv`.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Muc,
    Sentiment,
    WordPrf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scope {
    Entity,
    Corpus,
}

impl From<Scope> for ClusterScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Entity => ClusterScope::Entity,
            Scope::Corpus => ClusterScope::Corpus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LinkageArg {
    Average,
    Single,
    Complete,
}

impl From<LinkageArg> for Linkage {
    fn from(l: LinkageArg) -> Self {
        match l {
            LinkageArg::Average => Linkage::Average,
            LinkageArg::Single => Linkage::Single,
            LinkageArg::Complete => Linkage::Complete,
        }
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    metric: Metric,
    #[arg(long)]
    corpus: PathBuf,
    /// Fitted state to read predictions from.
    #[arg(long, conflicts_with_all = ["clusters", "predictions", "word_labels"])]
    state: Option<PathBuf>,
    /// Predicted clusters (`entity  snippet  label` TSV).
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Predicted polarity (`entity  snippet  value-name|split` TSV).
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Predicted word labels (JSONL).
    #[arg(long)]
    word_labels: Option<PathBuf>,
    #[arg(long)]
    gold_clusters: Option<PathBuf>,
    #[arg(long)]
    gold_polarity: Option<PathBuf>,
    #[arg(long)]
    gold_word_labels: Option<PathBuf>,
    #[arg(long)]
    parse_spans: Option<PathBuf>,
    /// Also score word labels after parse-tree expansion.
    #[arg(long)]
    tree_expand: bool,
    #[arg(long, value_enum, default_value = "entity")]
    scope: Scope,
    /// Config naming the value types when no state is given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Metrics JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    ClusterAll,
    ClusterNoun,
    Seed,
    Majority,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    variant: Variant,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Target cluster count.
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    #[arg(long, value_enum, default_value = "entity")]
    scope: Scope,
    #[arg(long, value_enum, default_value = "average")]
    linkage: LinkageArg,
    /// Seed lexicon for `seed`.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Labeled polarity TSV whose most frequent value `majority` predicts.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Config naming the value types.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    top_words: usize,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Numeric(_) => 4,
        _ => 3,
    }
}

fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let threads = match cli.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    };
    let (name, worker_threads) = match &cli.command {
        Command::Generate(_) => ("generate", 1),
        Command::Fit(_) => ("fit", threads),
        Command::Eval(_) => ("eval", 1),
        Command::Baseline(_) => ("baseline", 1),
        Command::Report(_) => ("report", 1),
    };
    let mut m = ManifestBuilder::new(name, worker_threads);
    let default_manifest = match &cli.command {
        Command::Generate(a) => cmd_generate(cli, a, &mut m)?,
        Command::Fit(a) => cmd_fit(cli, a, threads, &mut m)?,
        Command::Eval(a) => cmd_eval(a, &mut m)?,
        Command::Baseline(a) => cmd_baseline(a, &mut m)?,
        Command::Report(a) => cmd_report(a, &mut m)?,
    };
    let path = cli.manifest.clone().unwrap_or(default_manifest);
    m.finish(started.elapsed().as_millis()).write(&path)
}

/// `<path>.manifest.json`
fn manifest_next_to(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn load_config(path: Option<&Path>, seed: Option<u64>, m: &mut ManifestBuilder) -> Result<Hyperparameters> {
    let mut hp = match path {
        Some(p) => {
            let hp = Hyperparameters::load(p)?;
            m.config(p)?;
            hp
        }
        None => Hyperparameters::default(),
    };
    if let Some(s) = seed {
        hp.rng_seed = s;
    }
    Ok(hp)
}

fn read_corpus(path: &Path, m: &mut ManifestBuilder) -> Result<Corpus> {
    let corpus = load_corpus(path)?;
    m.input("corpus", path)?;
    Ok(corpus)
}

fn write_text(path: Option<&Path>, text: &str, m: &mut ManifestBuilder) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|source| Error::Io {
                path: p.to_owned(),
                source,
            })?;
            m.output(p);
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| Error::Data(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs, m: &mut ManifestBuilder) -> Result<PathBuf> {
    let hp = load_config(a.config.as_deref(), cli.seed, m)?;
    m.seed(hp.rng_seed);
    let shape = CorpusShape {
        entities: a.entities,
        snippets_per_entity: a.snippets,
        vocab_size: a.vocab,
        length: LengthModel::Poisson {
            mean: a.length_mean,
            max: a.max_length,
        },
        transitions: TransitionSpec::FromPrior,
        seed_words_per_value: a.seed_words,
        seed_mass: a.seed_mass,
    };
    let syn = match a.separation {
        Some(s) => make_separable(&hp, &shape, s, hp.rng_seed)?,
        None => sample_corpus(&hp, &shape, hp.rng_seed)?,
    };
    syn.write(&a.out, &hp)?;
    let written = [
        "corpus.jsonl",
        "gold_clusters.tsv",
        "gold_polarity.tsv",
        "gold_word_labels.jsonl",
        "seeds.txt",
        "true_parameters.json",
    ];
    for file in written {
        let p = a.out.join(file);
        if p.exists() {
            m.output(&p);
        }
    }
    if a.separation == Some(1.0) {
        audit_disjoint(&a.out)?;
        info!("audit: aspect vocabularies are disjoint");
    }
    Ok(a.out.join("manifest.json"))
}

/// Re-reads the written files and checks that within each entity no word is
/// labeled A under two gold clusters.
fn audit_disjoint(dir: &Path) -> Result<()> {
    let corpus = load_corpus(dir.join("corpus.jsonl"))?;
    let clusters = load_label_tsv(&dir.join("gold_clusters.tsv"), &corpus)?;
    let labels = load_word_labels(&dir.join("gold_word_labels.jsonl"), &corpus)?;
    let mut owner: BTreeMap<(usize, u32), &str> = BTreeMap::new();
    for (id, cluster) in &clusters {
        let snippet = corpus.snippet(corpus.snippet_index(id).expect("loaded id"));
        let Some(word_labels) = labels.get(id) else {
            continue;
        };
        for (tok, label) in snippet.tokens.iter().zip(word_labels) {
            if *label != WordLabel::A {
                continue;
            }
            match owner.insert((snippet.entity, tok.word), cluster) {
                Some(other) if other != cluster => {
                    return Err(Error::Data(format!(
                        "audit failed: {:?} is an aspect word of clusters {other} and {cluster} in entity {}",
                        corpus.word(*tok),
                        corpus.entities()[snippet.entity]
                    )));
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn cmd_fit(cli: &Cli, a: &FitArgs, threads: usize, m: &mut ManifestBuilder) -> Result<PathBuf> {
    let hp = load_config(a.config.as_deref(), cli.seed, m)?;
    m.seed(hp.rng_seed);
    let corpus = read_corpus(&a.corpus, m)?;
    let seeds = match &a.seeds {
        Some(p) => {
            m.input("seeds", p)?;
            load_seed_lexicon(p, &corpus, &hp.value_types())?
        }
        None => SeedLexicon::empty(hp.num_values),
    };
    let fit = run_inference_with(&hp, &corpus, &seeds, &RunOptions { threads })?;
    fit.state.save(&a.out)?;
    m.output(&a.out);
    let log_path = a.log.clone().unwrap_or_else(|| with_suffix(&a.out, ".fe.tsv"));
    let mut log = String::from("iteration\tfree_energy\n");
    for r in &fit.free_energy {
        log.push_str(&format!("{}\t{:?}\n", r.iteration, r.value));
    }
    write_text(Some(&log_path), &log, m)?;
    info!(
        "{} iterations, converged: {}, final free energy {:?}",
        fit.free_energy.len(),
        fit.converged,
        fit.free_energy.last().map(|r| r.value)
    );
    Ok(manifest_next_to(&a.out))
}

fn load_state(path: &Path, corpus: &Corpus, m: &mut ManifestBuilder) -> Result<VariationalState> {
    let state = VariationalState::load(path)?;
    m.input("state", path)?;
    state.check_compatible(corpus)?;
    Ok(state)
}

fn value_types(state: Option<&VariationalState>, config: Option<&Path>, m: &mut ManifestBuilder) -> Result<ValueTypes> {
    match state {
        Some(s) => Ok(ValueTypes::new(s.value_names.clone())),
        None => Ok(load_config(config, None, m)?.value_types()),
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("{flag} is required for this metric")))
}

fn cmd_eval(a: &EvalArgs, m: &mut ManifestBuilder) -> Result<PathBuf> {
    let corpus = read_corpus(&a.corpus, m)?;
    let state = a.state.as_deref().map(|p| load_state(p, &corpus, m)).transpose()?;
    let values = value_types(state.as_ref(), a.config.as_deref(), m)?;
    let posteriors = state.as_ref().map(|s| extract_posteriors(s, &corpus));
    let scope = ClusterScope::from(a.scope);
    let scope_name = match a.scope {
        Scope::Entity => "entity",
        Scope::Corpus => "corpus",
    };

    let mut entries = Vec::new();
    match a.metric {
        Metric::Muc => {
            let gold_path = required(&a.gold_clusters, "--gold-clusters")?;
            m.input("gold_clusters", gold_path)?;
            let gold = load_gold(
                &GoldPaths {
                    clusters: Some(gold_path),
                    ..GoldPaths::default()
                },
                &corpus,
                &values,
            )?;
            let gold = gold_clustering(&corpus, &gold.clusters, scope)?;
            let response = match (&posteriors, &a.clusters) {
                (Some(post), _) => {
                    let aspects: Vec<usize> = post.iter().map(|p| p.aspect).collect();
                    aspect_clustering(&corpus, &aspects, scope)
                }
                (None, Some(p)) => {
                    m.input("clusters", p)?;
                    clusters_from_file(&corpus, p, a.scope)?
                }
                (None, None) => return Err(Error::Config("give --state or --clusters".into())),
            };
            // Gold annotations may cover a subset of the corpus.
            let response = response.restrict(gold.assignments.keys().map(String::as_str))?;
            entries.push(MetricEntry::from_muc(scope_name, &muc_score(&gold, &response)?));
        }
        Metric::Sentiment => {
            let gold_path = required(&a.gold_polarity, "--gold-polarity")?;
            m.input("gold_polarity", gold_path)?;
            let gold = load_gold(
                &GoldPaths {
                    polarity: Some(gold_path),
                    ..GoldPaths::default()
                },
                &corpus,
                &values,
            )?;
            let predictions: BTreeMap<String, Prediction> = match (&posteriors, &a.predictions) {
                (Some(post), _) => corpus
                    .snippets()
                    .iter()
                    .zip(post)
                    .filter_map(|(s, p)| p.value.map(|v| (s.id.clone(), Prediction::Value(v))))
                    .collect(),
                (None, Some(p)) => {
                    m.input("predictions", p)?;
                    predictions_from_file(&corpus, p, &values)?
                }
                (None, None) => return Err(Error::Config("give --state or --predictions".into())),
            };
            entries.push(MetricEntry::accuracy(
                "sentiment",
                "snippet",
                sentiment_accuracy(&predictions, &gold.polarity)?,
            ));
        }
        Metric::WordPrf => {
            let gold_path = required(&a.gold_word_labels, "--gold-word-labels")?;
            m.input("gold_word_labels", gold_path)?;
            let spans_path = if a.tree_expand {
                let p = required(&a.parse_spans, "--parse-spans")?;
                m.input("parse_spans", p)?;
                Some(p)
            } else {
                None
            };
            let gold = load_gold(
                &GoldPaths {
                    word_labels: Some(gold_path),
                    parse_spans: spans_path,
                    ..GoldPaths::default()
                },
                &corpus,
                &values,
            )?;
            let predicted: BTreeMap<String, Vec<WordLabel>> = match (&posteriors, &a.word_labels) {
                (Some(post), _) => corpus
                    .snippets()
                    .iter()
                    .zip(post)
                    .map(|(s, p)| (s.id.clone(), p.word_topics.iter().map(|t| t.label()).collect()))
                    .collect(),
                (None, Some(p)) => {
                    m.input("word_labels", p)?;
                    load_word_labels(p, &corpus)?
                }
                (None, None) => return Err(Error::Config("give --state or --word-labels".into())),
            };
            let mut raw = LabelCounts::default();
            let mut expanded = LabelCounts::default();
            for (id, gold_labels) in &gold.word_labels {
                let labels = predicted
                    .get(id)
                    .ok_or_else(|| Error::Data(format!("no predicted word labels for snippet {id}")))?;
                raw.add(labels, gold_labels)?;
                if a.tree_expand {
                    let snippet = corpus.snippet(corpus.snippet_index(id).expect("gold id"));
                    let tags: Vec<&str> = snippet.tokens.iter().map(|&t| corpus.tag(t)).collect();
                    let spans = gold.parse_spans.get(id).map_or(&[][..], Vec::as_slice);
                    expanded.add(&tree_expand(labels, spans, &tags), gold_labels)?;
                }
            }
            entries.extend(MetricEntry::from_word_prf("word-prf", "raw", &raw.result()));
            if a.tree_expand {
                entries.extend(MetricEntry::from_word_prf("word-prf", "tree-expanded", &expanded.result()));
            }
        }
    }
    let json = serde_json::to_string_pretty(&entries)? + "\n";
    write_text(a.out.as_deref(), &json, m)?;
    Ok(a.out.as_deref().map_or_else(|| PathBuf::from("eval.manifest.json"), manifest_next_to))
}

fn clusters_from_file(corpus: &Corpus, path: &Path, scope: Scope) -> Result<Clustering> {
    let labels = load_label_tsv(path, corpus)?;
    Ok(match scope {
        Scope::Entity => Clustering::from_labels(
            "entity",
            labels.into_iter().map(|(id, l)| {
                let e = corpus.snippet(corpus.snippet_index(&id).expect("loaded id")).entity;
                (id, (e, l))
            }),
        ),
        Scope::Corpus => Clustering::from_labels("corpus", labels),
    })
}

fn predictions_from_file(corpus: &Corpus, path: &Path, values: &ValueTypes) -> Result<BTreeMap<String, Prediction>> {
    load_label_tsv(path, corpus)?
        .into_iter()
        .map(|(id, label)| {
            let p = if label == "split" {
                Prediction::Split
            } else {
                Prediction::Value(
                    values
                        .resolve(&label)
                        .ok_or_else(|| Error::Data(format!("{}: unknown value {label:?}", path.display())))?,
                )
            };
            Ok((id, p))
        })
        .collect()
}

fn prediction_label(values: &ValueTypes, p: Prediction) -> String {
    match p {
        Prediction::Value(v) => values.name(v).to_owned(),
        Prediction::Split => "split".to_owned(),
    }
}

fn cmd_baseline(a: &BaselineArgs, m: &mut ManifestBuilder) -> Result<PathBuf> {
    let corpus = read_corpus(&a.corpus, m)?;
    match a.variant {
        Variant::ClusterAll | Variant::ClusterNoun => {
            let noun_only = a.variant == Variant::ClusterNoun;
            let c = cluster_baseline(&corpus, a.scope.into(), noun_only, a.clusters, a.linkage.into())?;
            c.write_tsv(&a.out, &corpus)?;
        }
        Variant::Seed => {
            let values = load_config(a.config.as_deref(), None, m)?.value_types();
            let path = a.seeds.as_deref().ok_or_else(|| Error::Config("--seeds is required for seed".into()))?;
            m.input("seeds", path)?;
            let seeds = load_seed_lexicon(path, &corpus, &values)?;
            write_label_tsv(
                &a.out,
                &corpus,
                corpus
                    .snippets()
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.id.as_str(), prediction_label(&values, seed_sentiment(&corpus, i, &seeds)))),
            )?;
        }
        Variant::Majority => {
            let values = load_config(a.config.as_deref(), None, m)?.value_types();
            let path = a
                .labels
                .as_deref()
                .ok_or_else(|| Error::Config("--labels is required for majority".into()))?;
            m.input("labels", path)?;
            let gold = load_gold(
                &GoldPaths {
                    polarity: Some(path),
                    ..GoldPaths::default()
                },
                &corpus,
                &values,
            )?;
            let majority = majority_sentiment(gold.polarity.values().copied())?;
            let name = values.name(majority).to_owned();
            write_label_tsv(&a.out, &corpus, corpus.snippets().iter().map(|s| (s.id.as_str(), name.clone())))?;
        }
    }
    m.output(&a.out);
    Ok(manifest_next_to(&a.out))
}

fn cmd_report(a: &ReportArgs, m: &mut ManifestBuilder) -> Result<PathBuf> {
    let corpus = read_corpus(&a.corpus, m)?;
    let state = load_state(&a.state, &corpus, m)?;
    let report = build_report(&state, &corpus, a.top_words)?;
    let text = if a.json {
        serde_json::to_string_pretty(&report)? + "\n"
    } else {
        report.render()
    };
    write_text(a.out.as_deref(), &text, m)?;
    Ok(a.out.as_deref().map_or_else(|| PathBuf::from("report.manifest.json"), manifest_next_to))
}
