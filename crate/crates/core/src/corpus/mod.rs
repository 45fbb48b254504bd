//! Labeled document collections: ingestion, tokenization, splitting, and
//! synthetic corpus generation.

mod synth;
mod tokenize;

pub use synth::{synth_corpus, PlantedToken, SynthSpec};
pub use tokenize::{tokenize_fallback, tokenize_with_lexicon, TagLexicon};

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// A single token with its annotation and byte span in the raw text.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub surface: String,
    /// Case-folded surface, precomputed once.
    pub lower: String,
    /// Open POS tag ("ADJ", "VERB", "PUNCT", "NUM", ...); may be empty.
    pub pos: String,
    pub lemma: Option<String>,
    /// Byte offsets (start, end) into the raw document.
    pub char_span: (usize, usize),
    /// Number of sub-word pieces this token was split into upstream.
    pub subtoken_count: usize,
}

impl Token {
    pub fn new(
        surface: impl Into<String>,
        pos: impl Into<String>,
        lemma: Option<String>,
        char_span: (usize, usize),
        subtoken_count: usize,
    ) -> Self {
        let surface = surface.into();
        let lower = surface.to_lowercase();
        Token {
            surface,
            lower,
            pos: pos.into(),
            lemma,
            char_span,
            subtoken_count,
        }
    }

    /// Key used for lexicon lookup: the case-folded lemma when present,
    /// otherwise the case-folded surface.
    pub fn lookup_key(&self) -> String {
        match &self.lemma {
            Some(l) => l.to_lowercase(),
            None => self.lower.clone(),
        }
    }

    pub fn is_punct(&self) -> bool {
        self.pos == "PUNCT"
    }
}

/// Document class. Encoded as news = −1, opinion = +1, so that
/// sign(prediction) is well defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    News,
    Opinion,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::News => -1.0,
            Label::Opinion => 1.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "news" => Ok(Label::News),
            "opinion" => Ok(Label::Opinion),
            other => Err(Error::Label(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::News => "news",
            Label::Opinion => "opinion",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labeled text as an ordered sequence of annotated tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDocument {
    pub id: String,
    pub tokens: Vec<Token>,
    pub label: Label,
    pub source: String,
}

impl AnnotatedDocument {
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<Token>,
        label: Label,
        source: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(Error::Integrity(format!("document {id} has no tokens")));
        }
        let mut prev_end = 0usize;
        for (i, t) in tokens.iter().enumerate() {
            if t.char_span.0 >= t.char_span.1 {
                return Err(Error::Integrity(format!(
                    "document {id}: token {i} has empty span"
                )));
            }
            if t.char_span.0 < prev_end {
                return Err(Error::Integrity(format!(
                    "document {id}: token {i} span overlaps predecessor"
                )));
            }
            prev_end = t.char_span.1;
        }
        Ok(AnnotatedDocument {
            id,
            tokens,
            label,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Corpus partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// An immutable collection of documents, optionally carrying a split
/// assignment. Safe to share across workers.
#[derive(Debug, Clone)]
pub struct CorpusStore {
    documents: Vec<AnnotatedDocument>,
    split_assignment: Option<HashMap<String, Split>>,
    index: HashMap<String, usize>,
}

impl CorpusStore {
    pub fn new(documents: Vec<AnnotatedDocument>) -> Result<Self> {
        let mut index = HashMap::with_capacity(documents.len());
        for (i, d) in documents.iter().enumerate() {
            if index.insert(d.id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate document id {:?}", d.id)));
            }
        }
        Ok(CorpusStore {
            documents,
            split_assignment: None,
            index,
        })
    }

    pub fn documents(&self) -> &[AnnotatedDocument] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AnnotatedDocument> {
        self.index.get(id).map(|&i| &self.documents[i])
    }

    pub fn split_assignment(&self) -> Option<&HashMap<String, Split>> {
        self.split_assignment.as_ref()
    }

    /// Documents of one split, in corpus order. Errors when no split
    /// assignment has been made.
    pub fn split_docs(&self, split: Split) -> Result<Vec<&AnnotatedDocument>> {
        let assignment = self
            .split_assignment
            .as_ref()
            .ok_or_else(|| Error::Contract("corpus has no split assignment".into()))?;
        Ok(self
            .documents
            .iter()
            .filter(|d| assignment.get(&d.id) == Some(&split))
            .collect())
    }

    fn class_docs(&self, label: Label) -> Vec<&AnnotatedDocument> {
        self.documents.iter().filter(|d| d.label == label).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TokenRecord {
    surface: String,
    #[serde(default)]
    pos: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lemma: Option<String>,
    start: usize,
    end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subtoken_count: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: String,
    label: String,
    #[serde(default)]
    source: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    tokens: Option<Vec<TokenRecord>>,
    #[serde(default)]
    split: Option<Split>,
}

#[derive(Debug, Serialize)]
struct OutRecord<'a> {
    id: &'a str,
    label: &'a str,
    source: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
    tokens: Vec<TokenRecord>,
}

/// Load a JSONL corpus. Records carrying only raw `text` are tokenized with
/// [`tokenize_fallback`].
pub fn load_corpus(path: impl AsRef<Path>) -> Result<CorpusStore> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = std::io::BufReader::new(file);
    let mut documents = Vec::new();
    let mut assignment: HashMap<String, Split> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let label = Label::parse(&record.label)?;
        let tokens = match (record.tokens, record.text) {
            (Some(recs), _) => recs
                .into_iter()
                .map(|t| {
                    Token::new(
                        t.surface,
                        t.pos,
                        t.lemma,
                        (t.start, t.end),
                        t.subtoken_count.unwrap_or(1),
                    )
                })
                .collect(),
            (None, Some(text)) => tokenize_fallback(&text),
            (None, None) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: "record has neither \"text\" nor \"tokens\"".into(),
                })
            }
        };
        if let Some(split) = record.split {
            assignment.insert(record.id.clone(), split);
        }
        documents.push(AnnotatedDocument::new(record.id, tokens, label, record.source)?);
    }
    let mut corpus = CorpusStore::new(documents)?;
    // Split tags in the file restore the assignment, but only when every
    // record carries one; a partial assignment is indistinguishable from a
    // truncated write.
    if !assignment.is_empty() {
        if assignment.len() != corpus.documents.len() {
            return Err(Error::Integrity(format!(
                "{} of {} records carry a split tag; expected none or all",
                assignment.len(),
                corpus.documents.len()
            )));
        }
        corpus.split_assignment = Some(assignment);
    }
    Ok(corpus)
}

/// Write a corpus as JSONL, always emitting pre-annotated tokens so that a
/// round trip reproduces token sequences, labels and spans exactly.
pub fn write_corpus(corpus: &CorpusStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    for doc in corpus.documents() {
        let record = OutRecord {
            id: &doc.id,
            label: doc.label.as_str(),
            source: &doc.source,
            split: corpus
                .split_assignment
                .as_ref()
                .and_then(|a| a.get(&doc.id).copied()),
            tokens: doc
                .tokens
                .iter()
                .map(|t| TokenRecord {
                    surface: t.surface.clone(),
                    pos: t.pos.clone(),
                    lemma: t.lemma.clone(),
                    start: t.char_span.0,
                    end: t.char_span.1,
                    subtoken_count: if t.subtoken_count == 1 {
                        None
                    } else {
                        Some(t.subtoken_count)
                    },
                })
                .collect(),
        };
        let json = serde_json::to_string(&record).map_err(|e| Error::Integrity(e.to_string()))?;
        writeln!(w, "{json}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Stratified, seeded split. Per class, a seeded shuffle assigns documents to
/// validation and test (floor of the ratio-implied counts); the remainder
/// goes to train, so rounding favors the training split.
pub fn split_corpus(
    corpus: &CorpusStore,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<CorpusStore> {
    let (r_train, r_val, r_test) = ratios;
    for r in [r_train, r_val, r_test] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Config(format!("split ratio {r} outside [0, 1]")));
        }
    }
    if ((r_train + r_val + r_test) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split ratios {ratios:?} do not sum to 1"
        )));
    }

    let mut assignment = HashMap::with_capacity(corpus.len());
    for label in [Label::News, Label::Opinion] {
        let docs = corpus.class_docs(label);
        if docs.is_empty() {
            continue;
        }
        let n = docs.len();
        let n_val = (n as f64 * r_val).floor() as usize;
        let n_test = (n as f64 * r_test).floor() as usize;
        let n_train = n - n_val - n_test;
        for (count, ratio, name) in [
            (n_train, r_train, "train"),
            (n_val, r_val, "validation"),
            (n_test, r_test, "test"),
        ] {
            if ratio > 0.0 && count == 0 {
                return Err(Error::Data(format!(
                    "class {label} has too few documents ({n}) for a non-empty {name} split"
                )));
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = derive_rng(seed, &format!("split/{label}"));
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for (rank, &i) in order.iter().enumerate() {
            let split = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            };
            assignment.insert(docs[i].id.clone(), split);
        }
    }

    let mut out = corpus.clone();
    out.split_assignment = Some(assignment);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, label: Label, words: &[&str]) -> AnnotatedDocument {
        let mut tokens = Vec::new();
        let mut pos = 0;
        for w in words {
            tokens.push(Token::new(*w, "", None, (pos, pos + w.len()), 1));
            pos += w.len() + 1;
        }
        AnnotatedDocument::new(id, tokens, label, "test").unwrap()
    }

    #[test]
    fn load_two_valid_records() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"d1","label":"news","source":"t","text":"un deux"}}"#).unwrap();
        writeln!(f, r#"{{"id":"d2","label":"opinion","source":"t","text":"trois"}}"#).unwrap();
        let corpus = load_corpus(f.path()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.get("d1").unwrap().label, Label::News);
    }

    #[test]
    fn duplicate_id_is_integrity_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"d1","label":"news","text":"a"}}"#).unwrap();
        writeln!(f, r#"{{"id":"d1","label":"news","text":"b"}}"#).unwrap();
        assert!(matches!(load_corpus(f.path()), Err(Error::Integrity(_))));
    }

    #[test]
    fn unknown_label_is_label_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"d1","label":"editorial","text":"a"}}"#).unwrap();
        assert!(matches!(load_corpus(f.path()), Err(Error::Label(_))));
    }

    #[test]
    fn malformed_record_names_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"d1","label":"news","text":"a"}}"#).unwrap();
        writeln!(f, "not json").unwrap();
        match load_corpus(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_tokens_labels_spans() {
        let docs = vec![
            doc("d1", Label::News, &["Bonjour", "le", "monde"]),
            doc("d2", Label::Opinion, &["certes", "!"]),
        ];
        let corpus = CorpusStore::new(docs).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_corpus(&corpus, f.path()).unwrap();
        let back = load_corpus(f.path()).unwrap();
        assert_eq!(back.documents(), corpus.documents());
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let mut docs = Vec::new();
        for i in 0..10 {
            docs.push(doc(&format!("n{i}"), Label::News, &["a", "b"]));
            docs.push(doc(&format!("o{i}"), Label::Opinion, &["a", "b"]));
        }
        let corpus = CorpusStore::new(docs).unwrap();
        let s1 = split_corpus(&corpus, (0.8, 0.1, 0.1), 0).unwrap();
        let s2 = split_corpus(&corpus, (0.8, 0.1, 0.1), 0).unwrap();
        assert_eq!(s1.split_assignment(), s2.split_assignment());
        for label in [Label::News, Label::Opinion] {
            let count = |split| {
                s1.split_docs(split)
                    .unwrap()
                    .iter()
                    .filter(|d| d.label == label)
                    .count()
            };
            assert_eq!(count(Split::Train), 8);
            assert_eq!(count(Split::Validation), 1);
            assert_eq!(count(Split::Test), 1);
        }
    }

    #[test]
    fn split_partitions_ids() {
        let mut docs = Vec::new();
        for i in 0..23 {
            docs.push(doc(&format!("n{i}"), Label::News, &["a"]));
            docs.push(doc(&format!("o{i}"), Label::Opinion, &["a"]));
        }
        let corpus = CorpusStore::new(docs).unwrap();
        let s = split_corpus(&corpus, (0.8, 0.1, 0.1), 3).unwrap();
        let total: usize = Split::ALL
            .iter()
            .map(|&sp| s.split_docs(sp).unwrap().len())
            .sum();
        assert_eq!(total, corpus.len());
    }

    #[test]
    fn bad_ratios_rejected() {
        let corpus = CorpusStore::new(vec![doc("d", Label::News, &["a"])]).unwrap();
        assert!(matches!(
            split_corpus(&corpus, (0.5, 0.5, 0.5), 0),
            Err(Error::Config(_))
        ));
    }
}
