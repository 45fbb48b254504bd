//! Command-line driver: corpus management, feature extraction, model
//! training, explanation, statistics, enrichment, and report generation,
//! all configured from one TOML file with seed overrides from the command
//! line or the SEEDSCOPE_SEED environment variable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use seedscope_core::corpus::{load_corpus, split_corpus, synth_corpus, write_corpus, Split, SynthSpec};
use seedscope_core::enrich::{
    class_token_lists, enrich_and_compare, rank_tokens, stable_top_tokens, stable_tokens_csv,
    TokenAttentionRanking,
};
use seedscope_core::explain::{
    lam_explain, lrp_explain, read_explanations, write_explanations, Explanation,
};
use seedscope_core::features::{
    build_incidence, extract_features, FeatureRegistry, LexiconSet,
};
use seedscope_core::models::{
    accuracy, train_ensemble, train_logreg, train_neural, LogRegModel, LogRegPredictor,
    NeuralModel,
};
use seedscope_core::pipeline::{run_pipeline, PipelineConfig};
use seedscope_core::report::{export_boxplot_data, render_attention_map, Palette};
use seedscope_core::stats::{
    bootstrap_ci, characterize_distribution, select_equivalent_from_accuracies, SelectionMode,
};

/// Environment variable overriding the configured master seed.
const SEED_ENV: &str = "SEEDSCOPE_SEED";

#[derive(Parser)]
#[command(name = "seedscope", version, about = "Seeded text-classifier ensembles, \
token-level explanations, and explanation-stability statistics")]
struct Cli {
    /// Pipeline configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides both the config file and SEEDSCOPE_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or split corpora.
    Corpus {
        #[command(subcommand)]
        cmd: CorpusCmd,
    },
    /// Extract linguistic feature vectors.
    Features {
        #[command(subcommand)]
        cmd: FeaturesCmd,
    },
    /// Train classifiers.
    Train {
        #[command(subcommand)]
        cmd: TrainCmd,
    },
    /// Produce token-level explanations.
    Explain {
        #[command(subcommand)]
        cmd: ExplainCmd,
    },
    /// Equivalence, correlation, and distribution statistics.
    Stats {
        #[command(subcommand)]
        cmd: StatsCmd,
    },
    /// Attention-driven feature enrichment.
    Enrich {
        #[command(subcommand)]
        cmd: EnrichCmd,
    },
    /// Render attention maps and box-plot data.
    Report {
        #[command(subcommand)]
        cmd: ReportCmd,
    },
    /// Run every stage end to end.
    Pipeline {
        #[command(subcommand)]
        cmd: PipelineCmd,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Generate the synthetic corpus from the master seed.
    Gen {
        /// Documents per class (defaults to the configured value).
        #[arg(long)]
        docs_per_class: Option<usize>,
    },
    /// Assign train/validation/test splits to a corpus.
    Split {
        /// Corpus JSONL to split.
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegistryChoice {
    Baseline,
    Enriched,
}

impl RegistryChoice {
    fn registry(self) -> FeatureRegistry {
        match self {
            RegistryChoice::Baseline => FeatureRegistry::baseline(),
            RegistryChoice::Enriched => FeatureRegistry::enriched(),
        }
    }
}

#[derive(Subcommand)]
enum FeaturesCmd {
    /// Write per-document feature vectors as CSV.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = RegistryChoice::Baseline)]
        registry: RegistryChoice,
    },
}

#[derive(Subcommand)]
enum TrainCmd {
    /// Train the feature-based logistic regression on the train split.
    Logreg {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = RegistryChoice::Baseline)]
        registry: RegistryChoice,
    },
    /// Train one surrogate network.
    Neural {
        #[arg(long)]
        input: PathBuf,
        /// Training seed (defaults to the master seed).
        #[arg(long)]
        train_seed: Option<u64>,
    },
    /// Train the full seeded ensemble.
    Ensemble {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum ExplainCmd {
    /// Attention maps from the feature model.
    Lam {
        #[arg(long)]
        input: PathBuf,
        /// Trained logistic model (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Document id; all test documents when omitted.
        #[arg(long)]
        doc: Option<String>,
        #[arg(long, value_enum, default_value_t = RegistryChoice::Baseline)]
        registry: RegistryChoice,
    },
    /// Relevance propagation through a surrogate network.
    Lrp {
        #[arg(long)]
        input: PathBuf,
        /// Trained surrogate model (JSON); repeatable.
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        /// Document id; all test documents when omitted.
        #[arg(long)]
        doc: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeChoice {
    Closest,
    MostAccurate,
}

#[derive(Subcommand)]
enum StatsCmd {
    /// Select an accuracy-equivalent subset from an accuracies CSV.
    Equiv {
        /// CSV with a seed column and a test_accuracy column.
        #[arg(long)]
        accuracies: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ModeChoice::Closest)]
        mode: ModeChoice,
        /// Test-set size behind the accuracies.
        #[arg(long)]
        n: usize,
    },
    /// Split-half correlation with bootstrap interval for one document.
    Correlate {
        /// Explanation JSONL (one document, several models).
        #[arg(long)]
        explanations: PathBuf,
        #[arg(long)]
        doc: Option<String>,
    },
    /// Per-token distribution summary for one document.
    Characterize {
        #[arg(long)]
        explanations: PathBuf,
        /// Corpus JSONL supplying the token surfaces.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        doc: Option<String>,
    },
}

#[derive(Subcommand)]
enum EnrichCmd {
    /// Rank tokens by mean attention, per model and class.
    Rank {
        #[arg(long)]
        explanations: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Stable high-attention tokens across model rankings.
    Stable {
        /// rankings.json produced by `enrich rank`.
        #[arg(long)]
        rankings: PathBuf,
    },
    /// Compare baseline vs enriched feature models.
    Compare {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PaletteChoice {
    Orange,
    Blue,
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Render one explained document as an HTML attention map.
    Map {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        explanations: PathBuf,
        #[arg(long)]
        doc: String,
        /// Model id to render; first matching explanation when omitted.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, value_enum, default_value_t = PaletteChoice::Blue)]
        palette: PaletteChoice,
    },
    /// Export box-plot CSV for one document's explanation set.
    Boxplot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        explanations: PathBuf,
        #[arg(long)]
        doc: Option<String>,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Execute split → train → select → explain → stats → enrich → report.
    Run,
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Ok(val) = std::env::var(SEED_ENV) {
        config.master_seed = val
            .parse()
            .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got {val:?}"))?;
    }
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn ensure_out(config: &PipelineConfig) -> Result<&Path> {
    std::fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating {}", config.output_dir.display()))?;
    Ok(&config.output_dir)
}

fn load_split_corpus(path: &Path) -> Result<seedscope_core::corpus::CorpusStore> {
    load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn select_docs<'a>(
    corpus: &'a seedscope_core::corpus::CorpusStore,
    doc: &Option<String>,
) -> Result<Vec<&'a seedscope_core::corpus::AnnotatedDocument>> {
    match doc {
        Some(id) => {
            let d = corpus
                .get(id)
                .with_context(|| format!("document {id:?} not in corpus"))?;
            Ok(vec![d])
        }
        None => Ok(corpus.split_docs(Split::Test)?),
    }
}

fn filter_doc(explanations: Vec<Explanation>, doc: &Option<String>) -> Result<Vec<Explanation>> {
    let filtered: Vec<Explanation> = match doc {
        Some(id) => explanations.into_iter().filter(|e| &e.doc_id == id).collect(),
        None => {
            let ids: std::collections::BTreeSet<&str> =
                explanations.iter().map(|e| e.doc_id.as_str()).collect();
            if ids.len() > 1 {
                bail!(
                    "explanations cover {} documents; pass --doc to pick one",
                    ids.len()
                );
            }
            explanations
        }
    };
    if filtered.is_empty() {
        bail!("no explanations left after filtering");
    }
    Ok(filtered)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = effective_config(&cli)?;
    match &cli.command {
        Command::Corpus { cmd } => run_corpus(cmd, &config),
        Command::Features { cmd } => run_features(cmd, &config),
        Command::Train { cmd } => run_train(cmd, &config),
        Command::Explain { cmd } => run_explain(cmd, &config),
        Command::Stats { cmd } => run_stats(cmd, &config),
        Command::Enrich { cmd } => run_enrich(cmd, &config),
        Command::Report { cmd } => run_report(cmd, &config),
        Command::Pipeline { cmd: PipelineCmd::Run } => {
            let manifest = run_pipeline(&config)?;
            println!(
                "pipeline complete: {} artifacts in {}",
                manifest.artifacts.len(),
                config.output_dir.display()
            );
            Ok(())
        }
    }
}

fn run_corpus(cmd: &CorpusCmd, config: &PipelineConfig) -> Result<()> {
    let out = ensure_out(config)?;
    match cmd {
        CorpusCmd::Gen { docs_per_class } => {
            let spec = SynthSpec {
                docs_per_class: docs_per_class.unwrap_or(config.synth_docs_per_class),
                ..SynthSpec::default()
            };
            let corpus = synth_corpus(&spec, config.master_seed)?;
            let path = out.join("corpus.jsonl");
            write_corpus(&corpus, &path)?;
            println!("wrote {} documents to {}", corpus.documents().len(), path.display());
        }
        CorpusCmd::Split { input } => {
            let corpus = load_split_corpus(input)?;
            let split = split_corpus(&corpus, config.split.ratios, config.split.seed)?;
            let path = out.join("corpus_split.jsonl");
            write_corpus(&split, &path)?;
            for s in Split::ALL {
                println!("{}: {} documents", s.as_str(), split.split_docs(s)?.len());
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run_features(cmd: &FeaturesCmd, config: &PipelineConfig) -> Result<()> {
    let out = ensure_out(config)?;
    let FeaturesCmd::Extract { input, registry } = cmd;
    let corpus = load_split_corpus(input)?;
    let registry = registry.registry();
    let lexicons = LexiconSet::demo();
    let mut csv = String::from("id,label");
    for def in registry.definitions() {
        csv.push(',');
        csv.push_str(&def.id);
    }
    csv.push('\n');
    for doc in corpus.documents() {
        let fv = extract_features(doc, &registry, &lexicons)?;
        csv.push_str(&format!("{},{}", doc.id, doc.label));
        for v in &fv.values {
            csv.push_str(&format!(",{v:.16e}"));
        }
        csv.push('\n');
    }
    let path = out.join("features.csv");
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run_train(cmd: &TrainCmd, config: &PipelineConfig) -> Result<()> {
    let out = ensure_out(config)?;
    match cmd {
        TrainCmd::Logreg { input, registry } => {
            let corpus = load_split_corpus(input)?;
            let registry = registry.registry();
            let lexicons = LexiconSet::demo();
            let train = corpus.split_docs(Split::Train)?;
            let labels: Vec<_> = train.iter().map(|d| d.label).collect();
            let features = train
                .iter()
                .map(|d| extract_features(d, &registry, &lexicons))
                .collect::<seedscope_core::Result<Vec<_>>>()?;
            let model = train_logreg(&features, &labels, &config.logreg)?;
            let predictor = LogRegPredictor { model: &model, registry: &registry, lexicons: &lexicons };
            let test_acc = accuracy(&predictor, &corpus.split_docs(Split::Test)?)?;
            let path = out.join("logreg.json");
            model.save(&path)?;
            println!("test accuracy {test_acc:.4}; wrote {}", path.display());
        }
        TrainCmd::Neural { input, train_seed } => {
            let corpus = load_split_corpus(input)?;
            let seed = train_seed.unwrap_or(config.master_seed);
            let model = train_neural(&corpus, seed, &config.neural)?;
            let test_acc = accuracy(&model, &corpus.split_docs(Split::Test)?)?;
            let path = out.join(format!("neural_seed{seed}.json"));
            model.save(&path)?;
            println!("seed {seed}: test accuracy {test_acc:.4}; wrote {}", path.display());
        }
        TrainCmd::Ensemble { input } => {
            let corpus = load_split_corpus(input)?;
            let seeds: Vec<u64> = (0..config.ensemble.seed_count as u64)
                .map(|i| config.ensemble.seed_start + i)
                .collect();
            let ensemble = train_ensemble(&corpus, &seeds, &config.neural)?;
            let mut csv = String::from("seed,validation_accuracy,test_accuracy\n");
            for m in &ensemble.members {
                let path = out.join(format!("neural_seed{}.json", m.seed));
                m.model.save(&path)?;
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e}\n",
                    m.seed, m.validation_accuracy, m.test_accuracy
                ));
            }
            let path = out.join("accuracies.csv");
            std::fs::write(&path, csv)?;
            println!("trained {} models; wrote {}", ensemble.len(), path.display());
        }
    }
    Ok(())
}

fn run_explain(cmd: &ExplainCmd, config: &PipelineConfig) -> Result<()> {
    let out = ensure_out(config)?;
    match cmd {
        ExplainCmd::Lam { input, model, doc, registry } => {
            let corpus = load_split_corpus(input)?;
            let model = LogRegModel::load(model)?;
            let registry = registry.registry();
            let lexicons = LexiconSet::demo();
            let docs = select_docs(&corpus, doc)?;
            let mut explanations = Vec::new();
            for d in docs {
                let fv = extract_features(d, &registry, &lexicons)?;
                let incidence = build_incidence(d, &registry, &lexicons)?;
                explanations.push(lam_explain(&model, d, &fv, &incidence)?);
            }
            let path = out.join("explanations_lam.jsonl");
            write_explanations(&path, &explanations, &corpus)?;
            println!("wrote {} explanations to {}", explanations.len(), path.display());
        }
        ExplainCmd::Lrp { input, model, doc } => {
            let corpus = load_split_corpus(input)?;
            let docs = select_docs(&corpus, doc)?;
            let mut explanations = Vec::new();
            for path in model {
                let m = NeuralModel::load(path)?;
                for d in &docs {
                    explanations.push(lrp_explain(&m, d)?);
                }
            }
            let path = out.join("explanations_lrp.jsonl");
            write_explanations(&path, &explanations, &corpus)?;
            println!("wrote {} explanations to {}", explanations.len(), path.display());
        }
    }
    Ok(())
}

fn read_accuracies(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty accuracies file")?;
    let col = header
        .split(',')
        .position(|h| h.trim() == "test_accuracy")
        .context("accuracies file has no test_accuracy column")?;
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .nth(col)
                .with_context(|| format!("short row {l:?}"))?
                .trim()
                .parse()
                .with_context(|| format!("bad accuracy in row {l:?}"))
        })
        .collect()
}

fn run_stats(cmd: &StatsCmd, config: &PipelineConfig) -> Result<()> {
    let out = ensure_out(config)?;
    match cmd {
        StatsCmd::Equiv { accuracies, k, mode, n } => {
            let accs = read_accuracies(accuracies)?;
            let mode = match mode {
                ModeChoice::Closest => SelectionMode::Closest,
                ModeChoice::MostAccurate => SelectionMode::MostAccurate,
            };
            let set = select_equivalent_from_accuracies(&accs, *k, mode, *n)?;
            let csv = seedscope_core::stats::equivalence_csv(std::slice::from_ref(&set));
            let path = out.join("equivalence.csv");
            std::fs::write(&path, csv)?;
            println!(
                "{} k={}: accuracy [{:.4}, {:.4}], epsilon {:.4}, z {:.3}, p {:.4}, equivalent: {}",
                mode.as_str(), k, set.min_accuracy, set.max_accuracy, set.epsilon, set.z, set.p,
                set.equivalent
            );
            println!("wrote {}", path.display());
        }
        StatsCmd::Correlate { explanations, doc } => {
            let set = filter_doc(read_explanations(explanations)?, doc)?;
            let report = bootstrap_ci(
                &set,
                config.master_seed,
                config.stats.resamples,
                config.stats.confidence_level,
            )?;
            println!(
                "r {:.4} [{:.4}, {:.4}] at level {} over {} resamples",
                report.r, report.interval.0, report.interval.1, report.level, report.resamples
            );
        }
        StatsCmd::Characterize { explanations, input, doc } => {
            let corpus = load_split_corpus(input)?;
            let set = filter_doc(read_explanations(explanations)?, doc)?;
            let doc_id = set[0].doc_id.clone();
            let d = corpus
                .get(&doc_id)
                .with_context(|| format!("document {doc_id:?} not in corpus"))?;
            let dist = characterize_distribution(&set)?;
            let surfaces: Vec<String> = d.tokens.iter().map(|t| t.surface.clone()).collect();
            let path = out.join(format!("boxplot_{doc_id}.csv"));
            export_boxplot_data(&path, &dist, &surfaces)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run_enrich(cmd: &EnrichCmd, config: &PipelineConfig) -> Result<()> {
    let out = ensure_out(config)?;
    match cmd {
        EnrichCmd::Rank { explanations, input } => {
            let corpus = load_split_corpus(input)?;
            let all = read_explanations(explanations)?;
            // One ranking pair per model id, in sorted model order.
            let mut by_model: BTreeMap<String, Vec<Explanation>> = BTreeMap::new();
            for e in all {
                by_model.entry(e.model_id.clone()).or_default().push(e);
            }
            let mut rankings: Vec<(String, Vec<TokenAttentionRanking>)> = Vec::new();
            for (model_id, maps) in by_model {
                rankings.push((
                    model_id,
                    rank_tokens(&maps, &corpus, config.stats.min_count)?,
                ));
            }
            let path = out.join("rankings.json");
            std::fs::write(&path, serde_json::to_string_pretty(&rankings)?)?;
            println!("wrote rankings for {} models to {}", rankings.len(), path.display());
        }
        EnrichCmd::Stable { rankings } => {
            let text = std::fs::read_to_string(rankings)
                .with_context(|| format!("reading {}", rankings.display()))?;
            let parsed: Vec<(String, Vec<TokenAttentionRanking>)> = serde_json::from_str(&text)?;
            let news: Vec<TokenAttentionRanking> =
                parsed.iter().map(|(_, r)| r[0].clone()).collect();
            let opinion: Vec<TokenAttentionRanking> =
                parsed.iter().map(|(_, r)| r[1].clone()).collect();
            let min_models = config.stats.min_models.min(parsed.len());
            let news = stable_top_tokens(&news, config.stats.top_k, min_models)?;
            let opinion = stable_top_tokens(&opinion, config.stats.top_k, min_models)?;
            let (news, opinion) = class_token_lists(&news, &opinion, 50);
            for (name, list) in [("news", &news), ("opinion", &opinion)] {
                let path = out.join(format!("stable_tokens_{name}.csv"));
                std::fs::write(&path, stable_tokens_csv(list))?;
                println!("{}: {} stable tokens; wrote {}", name, list.len(), path.display());
            }
        }
        EnrichCmd::Compare { input } => {
            let corpus = load_split_corpus(input)?;
            let lexicons = LexiconSet::demo();
            let test_docs = corpus.split_docs(Split::Test)?;
            let report = enrich_and_compare(
                &corpus,
                &FeatureRegistry::baseline(),
                &FeatureRegistry::enriched(),
                &lexicons,
                &[("test".to_string(), test_docs)],
                &config.logreg,
            )?;
            let mut csv =
                String::from("test_set,baseline_accuracy,enriched_accuracy,z,p,significant\n");
            for c in &report.comparisons {
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    c.name, c.baseline_accuracy, c.enriched_accuracy, c.z, c.p, c.significant
                ));
                println!(
                    "{}: baseline {:.4}, enriched {:.4}, z {:.3}, significant: {}",
                    c.name, c.baseline_accuracy, c.enriched_accuracy, c.z, c.significant
                );
            }
            let path = out.join("enrichment.csv");
            std::fs::write(&path, csv)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run_report(cmd: &ReportCmd, config: &PipelineConfig) -> Result<()> {
    let out = ensure_out(config)?;
    match cmd {
        ReportCmd::Map { input, explanations, doc, model, palette } => {
            let corpus = load_split_corpus(input)?;
            let d = corpus
                .get(doc)
                .with_context(|| format!("document {doc:?} not in corpus"))?;
            let all = read_explanations(explanations)?;
            let expl = all
                .iter()
                .find(|e| {
                    &e.doc_id == doc && model.as_ref().is_none_or(|m| &e.model_id == m)
                })
                .context("no matching explanation")?;
            let palette = match palette {
                PaletteChoice::Orange => Palette::Orange,
                PaletteChoice::Blue => Palette::Blue,
            };
            let html = render_attention_map(d, expl, palette)?;
            let path = out.join(format!("map_{doc}.html"));
            std::fs::write(&path, html)?;
            println!("wrote {}", path.display());
        }
        ReportCmd::Boxplot { input, explanations, doc } => {
            run_stats(
                &StatsCmd::Characterize {
                    explanations: explanations.clone(),
                    input: input.clone(),
                    doc: doc.clone(),
                },
                config,
            )?;
        }
    }
    Ok(())
}
