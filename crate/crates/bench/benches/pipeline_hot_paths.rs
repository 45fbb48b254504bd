//! Benchmarks for the pipeline's hot paths: feature extraction, surrogate
//! training, relevance propagation, and the bootstrap correlation estimate.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use seedscope_core::corpus::{split_corpus, synth_corpus, CorpusStore, Split, SynthSpec};
use seedscope_core::explain::{lrp_explain, Explanation};
use seedscope_core::features::{extract_features, FeatureRegistry, LexiconSet};
use seedscope_core::models::{train_neural, NeuralModel, TrainConfig};
use seedscope_core::stats::{bootstrap_ci, z_statistic};

fn bench_corpus() -> CorpusStore {
    let spec = SynthSpec {
        docs_per_class: 60,
        ..SynthSpec::default()
    };
    let corpus = synth_corpus(&spec, 7).expect("synthetic corpus");
    split_corpus(&corpus, (0.8, 0.1, 0.1), 0).expect("split")
}

fn bench_config() -> TrainConfig {
    TrainConfig {
        epochs: 20,
        embedding_dim: 8,
        hidden_dim: 6,
        vocab_buckets: 512,
        ..TrainConfig::default()
    }
}

fn feature_extraction(c: &mut Criterion) {
    let corpus = bench_corpus();
    let registry = FeatureRegistry::baseline();
    let lexicons = LexiconSet::demo();
    let doc = &corpus.documents()[0];
    c.bench_function("extract_features/baseline-19", |b| {
        b.iter(|| extract_features(black_box(doc), &registry, &lexicons).unwrap())
    });
}

fn surrogate_training(c: &mut Criterion) {
    let corpus = bench_corpus();
    let config = bench_config();
    c.bench_function("train_neural/120-docs-20-epochs", |b| {
        b.iter(|| train_neural(black_box(&corpus), 0, &config).unwrap())
    });
}

fn relevance_propagation(c: &mut Criterion) {
    let corpus = bench_corpus();
    let model = train_neural(&corpus, 0, &bench_config()).expect("training");
    let doc = &corpus.documents()[0];
    c.bench_function("lrp_explain/one-doc", |b| {
        b.iter(|| lrp_explain(black_box(&model), doc).unwrap())
    });
}

fn correlation_bootstrap(c: &mut Criterion) {
    let corpus = bench_corpus();
    let config = bench_config();
    let models: Vec<NeuralModel> = (0..10)
        .map(|seed| train_neural(&corpus, seed, &config).expect("training"))
        .collect();
    let doc = corpus.split_docs(Split::Test).expect("test split")[0];
    let explanations: Vec<Explanation> = models
        .iter()
        .map(|m| lrp_explain(m, doc).expect("explanation"))
        .collect();
    c.bench_function("bootstrap_ci/10-maps-1000-resamples", |b| {
        b.iter(|| bootstrap_ci(black_box(&explanations), 0, 1000, 0.95).unwrap())
    });
}

fn accuracy_z_test(c: &mut Criterion) {
    c.bench_function("z_statistic", |b| {
        b.iter(|| z_statistic(black_box(0.957), black_box(0.950), 1000).unwrap())
    });
}

criterion_group!(
    benches,
    feature_extraction,
    surrogate_training,
    relevance_propagation,
    correlation_bootstrap,
    accuracy_z_test
);
criterion_main!(benches);
