//! End-to-end orchestration: load or generate a corpus, split it, train the
//! seeded ensemble and the feature model, select an accuracy-equivalent
//! subset, explain concordant documents, run the correlation/distribution
//! statistics and the enrichment comparison, and emit a digest manifest of
//! every artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    load_corpus, split_corpus, synth_corpus, write_corpus, AnnotatedDocument, CorpusStore, Label,
    Split, SynthSpec,
};
use crate::enrich::{
    class_token_lists, enrich_and_compare, rank_tokens, stable_top_tokens, stable_tokens_csv,
    TokenAttentionRanking, DEFAULT_EQUIVALENT_MODELS,
};
use crate::error::{Error, Result};
use crate::explain::{lam_explain, lrp_explain, write_explanations, Explanation};
use crate::features::{
    build_incidence, extract_features, FeatureRegistry, Lexicon, LexiconKind, LexiconSet,
};
use crate::models::{train_ensemble, train_logreg, TrainConfig};
use crate::report::{export_boxplot_data, render_attention_map, Palette};
use crate::stats::{
    bootstrap_ci, characterize_distribution, concordant_inputs, equivalence_csv,
    select_equivalent, SelectionMode,
};

/// One lexicon file reference in the configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexiconPath {
    pub path: PathBuf,
    pub kind: LexiconKind,
}

/// Split-stage settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSettings {
    pub ratios: (f64, f64, f64),
    pub seed: u64,
}

impl Default for SplitSettings {
    fn default() -> Self {
        SplitSettings { ratios: (0.8, 0.1, 0.1), seed: 0 }
    }
}

/// Which seeds the surrogate ensemble trains with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub seed_start: u64,
    pub seed_count: usize,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        EnsembleSettings { seed_start: 0, seed_count: 20 }
    }
}

/// Parameters of the statistics stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsSettings {
    /// Size of the accuracy-equivalent subset.
    pub equivalent_k: usize,
    pub selection_mode: SelectionMode,
    /// Minimum token occurrences for the attention ranking.
    pub min_count: usize,
    /// Ranking depth per model for stable-token selection.
    pub top_k: usize,
    /// Minimum supporting models for a stable token.
    pub min_models: usize,
    pub resamples: usize,
    pub confidence_level: f64,
    /// How many concordant documents get the full per-document treatment.
    pub max_explained_docs: usize,
}

impl Default for StatsSettings {
    fn default() -> Self {
        StatsSettings {
            equivalent_k: 10,
            selection_mode: SelectionMode::Closest,
            min_count: 5,
            top_k: 100,
            min_models: 5,
            resamples: 1000,
            confidence_level: 0.95,
            max_explained_docs: 3,
        }
    }
}

/// Full pipeline configuration, loadable from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Corpus JSONL to load; when absent a synthetic corpus is generated
    /// from the master seed.
    pub corpus: Option<PathBuf>,
    /// Documents per class for the generated corpus (ignored when a corpus
    /// path is given).
    pub synth_docs_per_class: usize,
    /// Named lexicon files; when absent the built-in demo set is used.
    pub lexicons: Option<BTreeMap<String, LexiconPath>>,
    pub output_dir: PathBuf,
    /// Seed for corpus generation and partition statistics; overridable
    /// from the command line or environment.
    pub master_seed: u64,
    pub split: SplitSettings,
    pub ensemble: EnsembleSettings,
    pub neural: TrainConfig,
    pub logreg: TrainConfig,
    pub stats: StatsSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            synth_docs_per_class: 100,
            lexicons: None,
            output_dir: PathBuf::from("out"),
            master_seed: 0,
            split: SplitSettings::default(),
            ensemble: EnsembleSettings::default(),
            neural: TrainConfig::default(),
            logreg: TrainConfig::default(),
            stats: StatsSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }

    /// Fail-fast validation: every referenced path must resolve and every
    /// count must be usable before any stage runs.
    pub fn validate(&self) -> Result<()> {
        if let Some(corpus) = &self.corpus {
            if !corpus.is_file() {
                return Err(Error::Config(format!(
                    "corpus path {} does not exist",
                    corpus.display()
                )));
            }
        } else if self.synth_docs_per_class == 0 {
            return Err(Error::Config("synth_docs_per_class must be positive".into()));
        }
        if let Some(lexicons) = &self.lexicons {
            for (name, entry) in lexicons {
                if !entry.path.is_file() {
                    return Err(Error::Config(format!(
                        "lexicon {name:?} path {} does not exist",
                        entry.path.display()
                    )));
                }
            }
        }
        let (t, v, s) = self.split.ratios;
        if ((t + v + s) - 1.0).abs() > 1e-9 || t <= 0.0 || v < 0.0 || s <= 0.0 {
            return Err(Error::Config(format!(
                "split ratios {:?} must be non-negative and sum to 1 with train and test nonzero",
                self.split.ratios
            )));
        }
        if self.ensemble.seed_count < 2 {
            return Err(Error::Config("ensemble needs at least 2 seeds".into()));
        }
        if self.stats.equivalent_k == 0 || self.stats.equivalent_k > self.ensemble.seed_count {
            return Err(Error::Config(format!(
                "equivalent_k {} out of range for {} ensemble seeds",
                self.stats.equivalent_k, self.ensemble.seed_count
            )));
        }
        if self.stats.min_models == 0 || self.stats.top_k == 0 || self.stats.max_explained_docs == 0
        {
            return Err(Error::Config("stats counts must be positive".into()));
        }
        if self.stats.resamples < 100 {
            return Err(Error::Config("resamples must be at least 100".into()));
        }
        if !(0.0 < self.stats.confidence_level && self.stats.confidence_level < 1.0) {
            return Err(Error::Config("confidence_level must lie in (0, 1)".into()));
        }
        self.neural.validate()?;
        self.logreg.validate()?;
        Ok(())
    }

    fn lexicon_set(&self) -> Result<LexiconSet> {
        match &self.lexicons {
            None => Ok(LexiconSet::demo()),
            Some(paths) => {
                let mut set = LexiconSet::demo();
                for (name, entry) in paths {
                    set.insert(Lexicon::load(name.clone(), entry.kind, &entry.path)?);
                }
                Ok(set)
            }
        }
    }
}

/// One produced file with its content digest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Every artifact a pipeline run produced, digest included, sorted by path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

struct ArtifactWriter {
    out_dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactWriter {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex_digest(bytes),
        });
        Ok(())
    }

    /// Register a file that was produced directly on disk.
    fn register(&mut self, name: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex_digest(&bytes),
        });
        Ok(())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Run every stage against the configuration and return the artifact
/// manifest (also written to `manifest.json` in the output directory).
/// On any stage failure a `.partial` marker naming the failed stage is left
/// next to whatever artifacts were already produced.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::io(config.output_dir.display().to_string(), e))?;
    let mut writer = ArtifactWriter {
        out_dir: config.output_dir.clone(),
        entries: Vec::new(),
    };
    match run_stages(config, &mut writer) {
        Ok(()) => {
            let marker = config.output_dir.join(".partial");
            if marker.exists() {
                let _ = std::fs::remove_file(&marker);
            }
            writer.entries.sort_by(|a, b| a.path.cmp(&b.path));
            let manifest = Manifest { artifacts: writer.entries };
            let json = serde_json::to_string_pretty(&manifest)
                .map_err(|e| Error::Data(e.to_string()))?;
            let path = config.output_dir.join("manifest.json");
            std::fs::write(&path, json).map_err(|e| Error::io(path.display().to_string(), e))?;
            Ok(manifest)
        }
        Err(err) => {
            let marker = config.output_dir.join(".partial");
            let _ = std::fs::write(&marker, format!("{err}\n"));
            Err(err)
        }
    }
}

fn run_stages(config: &PipelineConfig, w: &mut ArtifactWriter) -> Result<()> {
    let lexicons = config.lexicon_set().map_err(|e| e.in_stage("lexicons"))?;

    // Corpus: load or generate, then split.
    let corpus = (|| -> Result<CorpusStore> {
        let base = match &config.corpus {
            Some(path) => load_corpus(path)?,
            None => synth_corpus(
                &SynthSpec {
                    docs_per_class: config.synth_docs_per_class,
                    ..SynthSpec::default()
                },
                config.master_seed,
            )?,
        };
        let split = split_corpus(&base, config.split.ratios, config.split.seed)?;
        write_corpus(&split, w.out_dir.join("corpus.jsonl"))?;
        Ok(split)
    })()
    .map_err(|e| e.in_stage("corpus"))?;
    w.register("corpus.jsonl").map_err(|e| e.in_stage("corpus"))?;

    // Surrogate ensemble across the configured seed range.
    let seeds: Vec<u64> = (0..config.ensemble.seed_count as u64)
        .map(|i| config.ensemble.seed_start + i)
        .collect();
    let ensemble = train_ensemble(&corpus, &seeds, &config.neural)
        .map_err(|e| e.in_stage("train-ensemble"))?;
    let mut acc_csv = String::from("seed,validation_accuracy,test_accuracy\n");
    for m in &ensemble.members {
        acc_csv.push_str(&format!(
            "{},{:.16e},{:.16e}\n",
            m.seed, m.validation_accuracy, m.test_accuracy
        ));
    }
    w.write("accuracies.csv", acc_csv.as_bytes())
        .map_err(|e| e.in_stage("train-ensemble"))?;

    // Equivalent-subset selection against the test split size.
    let test_docs = corpus
        .split_docs(Split::Test)
        .map_err(|e| e.in_stage("select-equivalent"))?;
    let (subset, equiv_csv) = (|| {
        let full = select_equivalent(
            &ensemble,
            ensemble.len(),
            config.stats.selection_mode,
            test_docs.len(),
        )?;
        let subset = select_equivalent(
            &ensemble,
            config.stats.equivalent_k,
            config.stats.selection_mode,
            test_docs.len(),
        )?;
        let csv = equivalence_csv(&[full, subset.clone()]);
        Ok::<_, Error>((subset, csv))
    })()
    .map_err(|e| e.in_stage("select-equivalent"))?;
    w.write("equivalence.csv", equiv_csv.as_bytes())
        .map_err(|e| e.in_stage("select-equivalent"))?;

    // Concordance among the equivalent members (capped, even count so the
    // split-half correlation is defined).
    let mut member_idx = subset.member_indices.clone();
    member_idx.truncate(DEFAULT_EQUIVALENT_MODELS);
    if member_idx.len() % 2 == 1 {
        member_idx.pop();
    }
    let members: Vec<&crate::models::NeuralModel> = member_idx
        .iter()
        .map(|&i| &ensemble.members[i].model)
        .collect();
    let concordant = (|| {
        let refs: Vec<&dyn crate::models::Predictor> = members
            .iter()
            .map(|m| *m as &dyn crate::models::Predictor)
            .collect();
        concordant_inputs(&refs, &test_docs)
    })()
    .map_err(|e| e.in_stage("concordance"))?;
    if concordant.len() < 2 {
        return Err(Error::Data(format!(
            "only {} concordant test documents; need at least 2",
            concordant.len()
        ))
        .in_stage("concordance"));
    }
    w.write("concordant.txt", (concordant.join("\n") + "\n").as_bytes())
        .map_err(|e| e.in_stage("concordance"))?;

    // Per-document explanation statistics on the leading concordant docs.
    let explained: Vec<&AnnotatedDocument> = concordant
        .iter()
        .take(config.stats.max_explained_docs)
        .map(|id| corpus.get(id).expect("concordant doc exists"))
        .collect();
    let mut corr_csv =
        String::from("doc_id,r,interval_lo,interval_hi,level,resamples\n");
    let mut all_expl: Vec<Explanation> = Vec::new();
    for doc in &explained {
        let per_model: Vec<Explanation> = members
            .iter()
            .map(|m| lrp_explain(m, doc))
            .collect::<Result<_>>()
            .map_err(|e| e.in_stage("explain-lrp"))?;
        let report = bootstrap_ci(
            &per_model,
            config.master_seed,
            config.stats.resamples,
            config.stats.confidence_level,
        )
        .map_err(|e| e.in_stage("correlate"))?;
        corr_csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{},{}\n",
            doc.id, report.r, report.interval.0, report.interval.1, report.level, report.resamples
        ));
        let dist =
            characterize_distribution(&per_model).map_err(|e| e.in_stage("characterize"))?;
        let surfaces: Vec<String> = doc.tokens.iter().map(|t| t.surface.clone()).collect();
        let name = format!("boxplot_{}.csv", doc.id);
        export_boxplot_data(w.out_dir.join(&name), &dist, &surfaces)
            .map_err(|e| e.in_stage("characterize"))?;
        w.register(&name).map_err(|e| e.in_stage("characterize"))?;
        let html = render_attention_map(doc, &per_model[0], Palette::Blue)
            .map_err(|e| e.in_stage("report"))?;
        w.write(&format!("map_lrp_{}.html", doc.id), html.as_bytes())
            .map_err(|e| e.in_stage("report"))?;
        all_expl.extend(per_model);
    }
    w.write("correlation.csv", corr_csv.as_bytes())
        .map_err(|e| e.in_stage("correlate"))?;
    write_explanations(w.out_dir.join("explanations_lrp.jsonl"), &all_expl, &corpus)
        .map_err(|e| e.in_stage("explain-lrp"))?;
    w.register("explanations_lrp.jsonl")
        .map_err(|e| e.in_stage("explain-lrp"))?;

    // Feature model and its attention map for the first concordant doc.
    let registry = FeatureRegistry::baseline();
    let lam_html = (|| {
        let train = corpus.split_docs(Split::Train)?;
        let labels: Vec<Label> = train.iter().map(|d| d.label).collect();
        let features = train
            .iter()
            .map(|d| extract_features(d, &registry, &lexicons))
            .collect::<Result<Vec<_>>>()?;
        let model = train_logreg(&features, &labels, &config.logreg)?;
        let doc = explained[0];
        let fv = extract_features(doc, &registry, &lexicons)?;
        let incidence = build_incidence(doc, &registry, &lexicons)?;
        let expl = lam_explain(&model, doc, &fv, &incidence)?;
        render_attention_map(doc, &expl, Palette::Orange)
    })()
    .map_err(|e| e.in_stage("explain-lam"))?;
    w.write(
        &format!("map_lam_{}.html", explained[0].id),
        lam_html.as_bytes(),
    )
    .map_err(|e| e.in_stage("explain-lam"))?;

    // Enrichment: stable high-attention tokens, then baseline vs enriched.
    (|| {
        let mut news_rankings: Vec<TokenAttentionRanking> = Vec::new();
        let mut opinion_rankings: Vec<TokenAttentionRanking> = Vec::new();
        for m in &members {
            let maps: Vec<Explanation> = test_docs
                .iter()
                .map(|d| lrp_explain(m, d))
                .collect::<Result<_>>()?;
            let mut rankings = rank_tokens(&maps, &corpus, config.stats.min_count)?;
            opinion_rankings.push(rankings.pop().expect("opinion ranking"));
            news_rankings.push(rankings.pop().expect("news ranking"));
        }
        let min_models = config.stats.min_models.min(members.len());
        let news = stable_top_tokens(&news_rankings, config.stats.top_k, min_models)?;
        let opinion = stable_top_tokens(&opinion_rankings, config.stats.top_k, min_models)?;
        let (news, opinion) = class_token_lists(&news, &opinion, 50);
        w.write("stable_tokens_news.csv", stable_tokens_csv(&news).as_bytes())?;
        w.write(
            "stable_tokens_opinion.csv",
            stable_tokens_csv(&opinion).as_bytes(),
        )?;

        let report = enrich_and_compare(
            &corpus,
            &registry,
            &FeatureRegistry::enriched(),
            &lexicons,
            &[("test".to_string(), test_docs.clone())],
            &config.logreg,
        )?;
        let mut csv =
            String::from("test_set,baseline_accuracy,enriched_accuracy,z,p,significant\n");
        for c in &report.comparisons {
            csv.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                c.name, c.baseline_accuracy, c.enriched_accuracy, c.z, c.p, c.significant
            ));
        }
        w.write("enrichment.csv", csv.as_bytes())
    })()
    .map_err(|e| e.in_stage("enrich"))?;

    Ok(())
}
