//! Synthetic corpus generator: a desk-scale, fully deterministic stand-in
//! for the press corpora the models are meant to be trained on.

use rand::Rng;

use super::{AnnotatedDocument, CorpusStore, Label, Token};
use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// A class-discriminative token planted with class-conditional occurrence
/// probabilities.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PlantedToken {
    pub surface: String,
    pub p_opinion: f64,
    pub p_news: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SynthSpec {
    pub docs_per_class: usize,
    pub vocab_size: usize,
    /// Inclusive bounds on the number of filler tokens per document.
    pub tokens_per_doc: (usize, usize),
    pub planted: Vec<PlantedToken>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            docs_per_class: 50,
            vocab_size: 200,
            tokens_per_doc: (20, 40),
            planted: vec![
                PlantedToken {
                    surface: "certes".into(),
                    p_opinion: 0.9,
                    p_news: 0.05,
                },
                PlantedToken {
                    surface: "imaginez".into(),
                    p_opinion: 0.8,
                    p_news: 0.05,
                },
                PlantedToken {
                    surface: "selon".into(),
                    p_opinion: 0.05,
                    p_news: 0.9,
                },
            ],
        }
    }
}

const FILLER_POS: [&str; 5] = ["NOUN", "VERB", "ADJ", "DET", "ADV"];

fn filler_word(i: usize) -> String {
    format!("mot{i:03}")
}

/// Generate a balanced corpus where each planted token appears with its
/// class-conditional probability. Byte-identical output for a given
/// (spec, seed) pair.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<CorpusStore> {
    if spec.vocab_size == 0 {
        return Err(Error::Config("synthetic vocabulary is empty".into()));
    }
    if spec.tokens_per_doc.0 > spec.tokens_per_doc.1 || spec.tokens_per_doc.0 == 0 {
        return Err(Error::Config(format!(
            "invalid tokens_per_doc range {:?}",
            spec.tokens_per_doc
        )));
    }
    for p in &spec.planted {
        for prob in [p.p_opinion, p.p_news] {
            if !(0.0..=1.0).contains(&prob) {
                return Err(Error::Config(format!(
                    "planted token {:?} has probability {prob} outside [0, 1]",
                    p.surface
                )));
            }
        }
    }

    let mut documents = Vec::with_capacity(spec.docs_per_class * 2);
    for label in [Label::News, Label::Opinion] {
        let mut rng = derive_rng(seed, &format!("synth/{label}"));
        for doc_idx in 0..spec.docs_per_class {
            let n_filler = rng.random_range(spec.tokens_per_doc.0..=spec.tokens_per_doc.1);
            let mut words: Vec<(String, String)> = (0..n_filler)
                .map(|_| {
                    let v = rng.random_range(0..spec.vocab_size);
                    (filler_word(v), FILLER_POS[v % FILLER_POS.len()].to_string())
                })
                .collect();
            for p in &spec.planted {
                let prob = match label {
                    Label::Opinion => p.p_opinion,
                    Label::News => p.p_news,
                };
                if rng.random_bool(prob) {
                    let at = rng.random_range(0..=words.len());
                    words.insert(at, (p.surface.clone(), "ADV".to_string()));
                }
            }
            words.push((".".to_string(), "PUNCT".to_string()));

            let mut tokens = Vec::with_capacity(words.len());
            let mut offset = 0usize;
            for (surface, pos) in words {
                let len = surface.len();
                tokens.push(Token::new(surface, pos, None, (offset, offset + len), 1));
                offset += len + 1;
            }
            documents.push(AnnotatedDocument::new(
                format!("{label}-{doc_idx:04}"),
                tokens,
                label,
                "synth",
            )?);
        }
    }
    CorpusStore::new(documents)
}
