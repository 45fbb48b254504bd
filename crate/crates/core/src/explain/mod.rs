//! Token-level explanations: linguistic attention maps for the feature
//! model, relevance propagation for the surrogate network, and subtoken
//! aggregation for upstream piece-level relevance arrays.

mod lam;
mod lrp;
mod subtoken;

pub use lam::lam_explain;
pub use lrp::{lrp_explain, lrp_explain_detailed, LrpDiagnostics, LRP_EPSILON};
pub use subtoken::{aggregate_subtokens, SubtokenAggregation, SubtokenSpanMap};

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::corpus::{CorpusStore, Label};
use crate::error::{Error, Result};

/// Per-token relevance scores for one (model, document, prediction) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub doc_id: String,
    pub model_id: String,
    pub predicted: Label,
    /// Relevance A_i per token index.
    pub relevances: Vec<f64>,
    /// Per-feature breakdown A_ij (token × feature), kept for LAM.
    pub per_feature: Option<Vec<Vec<f64>>>,
}

impl Explanation {
    /// Count of tokens whose relevance exceeds the threshold; the toolkit's
    /// minimality metric.
    pub fn minimality(&self, threshold: f64) -> usize {
        self.relevances.iter().filter(|&&r| r > threshold).count()
    }
}

#[derive(Debug, Deserialize)]
struct ExplanationRecord {
    model_id: String,
    doc_id: String,
    predicted: Label,
    #[allow(dead_code)]
    #[serde(default)]
    tokens: Vec<String>,
    relevances: Vec<f64>,
}

/// 17-significant-digit float formatting, so serialized explanations diff
/// meaningfully and round-trip exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSONL serialization, one record per (model id, doc id) with the token
/// and relevance arrays.
pub fn write_explanations(
    path: impl AsRef<Path>,
    explanations: &[Explanation],
    corpus: &CorpusStore,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    for e in explanations {
        let doc = corpus.get(&e.doc_id).ok_or_else(|| {
            Error::Contract(format!("explanation references unknown document {:?}", e.doc_id))
        })?;
        if doc.len() != e.relevances.len() {
            return Err(Error::Contract(format!(
                "document {:?} has {} tokens but the explanation {} relevances",
                e.doc_id,
                doc.len(),
                e.relevances.len()
            )));
        }
        let tokens = doc
            .tokens
            .iter()
            .map(|t| serde_json::to_string(&t.surface).expect("string serializes"))
            .collect::<Vec<_>>()
            .join(",");
        let relevances = e
            .relevances
            .iter()
            .map(|&v| fmt_f64(v))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(
            w,
            "{{\"model_id\":{},\"doc_id\":{},\"predicted\":\"{}\",\"tokens\":[{}],\"relevances\":[{}]}}",
            serde_json::to_string(&e.model_id).expect("string serializes"),
            serde_json::to_string(&e.doc_id).expect("string serializes"),
            e.predicted,
            tokens,
            relevances,
        )
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_explanations(path: impl AsRef<Path>) -> Result<Vec<Explanation>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ExplanationRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        out.push(Explanation {
            doc_id: record.doc_id,
            model_id: record.model_id,
            predicted: record.predicted,
            relevances: record.relevances,
            per_feature: None,
        });
    }
    Ok(out)
}
