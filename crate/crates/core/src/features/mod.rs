//! Linguistic feature extraction: the 19 baseline features, the 9 enrichment
//! features, and the per-token incidence weights behind them.

mod lexicon;
mod wordlists;

pub use lexicon::{Lexicon, LexiconKind, LexiconSet};

use crate::corpus::{AnnotatedDocument, Token};
use crate::error::{Error, Result};

/// Document-level features that attribute no weight to any token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalFeature {
    /// Carroll's corrected type-token ratio, T/√(2N).
    Cttr,
    /// Mean character count over non-punctuation tokens.
    AvgWordLength,
}

/// How a feature matches (or weighs) a token.
#[derive(Debug, Clone, PartialEq)]
pub enum Matcher {
    /// POS tag equality.
    Pos(&'static str),
    /// Membership in a fixed word list, matched on lemma-or-lower.
    WordList(Vec<String>),
    /// Exact surface match (punctuation marks).
    Surface(Vec<String>),
    /// Numeric tokens (NUM tag or digit surface).
    Number,
    /// Non-punctuation tokens longer than the given character count.
    LongerThan(usize),
    /// Membership in a named lexicon.
    LexiconMembership(String),
    /// Real-valued weight from a named scalar lexicon.
    LexiconScalar(String),
    /// Whole-document accumulator; contributes no token weight.
    Global(GlobalFeature),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    TokenIncidence,
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDefinition {
    pub id: String,
    pub matcher: Matcher,
}

impl FeatureDefinition {
    pub fn new(id: impl Into<String>, matcher: Matcher) -> Self {
        FeatureDefinition {
            id: id.into(),
            matcher,
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self.matcher {
            Matcher::Global(_) => FeatureKind::Global,
            _ => FeatureKind::TokenIncidence,
        }
    }

    /// Name of the lexicon this feature reads from, if any.
    pub fn lexicon(&self) -> Option<&str> {
        match &self.matcher {
            Matcher::LexiconMembership(n) | Matcher::LexiconScalar(n) => Some(n),
            _ => None,
        }
    }

    /// Per-token incidence weight w_ij. Global features always weigh 0.
    fn token_weight(&self, token: &Token, lexicons: &LexiconSet) -> Result<f64> {
        let w = match &self.matcher {
            Matcher::Pos(tag) => f64::from(token.pos == *tag),
            Matcher::WordList(words) => f64::from(words.contains(&token.lookup_key())),
            Matcher::Surface(surfaces) => f64::from(surfaces.contains(&token.surface)),
            Matcher::Number => f64::from(is_number(token)),
            Matcher::LongerThan(n) => {
                f64::from(!token.is_punct() && token.surface.chars().count() > *n)
            }
            Matcher::LexiconMembership(name) => {
                f64::from(lexicons.require(name)?.get(&token.lookup_key()).is_some())
            }
            Matcher::LexiconScalar(name) => lexicons
                .require(name)?
                .get(&token.lookup_key())
                .unwrap_or(0.0),
            Matcher::Global(_) => 0.0,
        };
        Ok(w)
    }
}

fn is_number(token: &Token) -> bool {
    token.pos == "NUM"
        || (!token.surface.is_empty()
            && token.surface.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.')
            && token.surface.chars().any(|c| c.is_ascii_digit()))
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Ordered feature list; the order fixes coefficient indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRegistry {
    version: String,
    definitions: Vec<FeatureDefinition>,
}

impl FeatureRegistry {
    pub fn custom(version: impl Into<String>, definitions: Vec<FeatureDefinition>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for d in &definitions {
            if !seen.insert(d.id.clone()) {
                return Err(Error::Config(format!("duplicate feature id {:?}", d.id)));
            }
        }
        Ok(FeatureRegistry {
            version: version.into(),
            definitions,
        })
    }

    /// The 19 baseline features (LING-LR).
    pub fn baseline() -> Self {
        use wordlists::*;
        let defs = vec![
            FeatureDefinition::new("adjectives", Matcher::Pos("ADJ")),
            FeatureDefinition::new("verbs", Matcher::Pos("VERB")),
            FeatureDefinition::new("pron_first_person", Matcher::WordList(words(FIRST_PERSON_PRONOUNS))),
            FeatureDefinition::new("det_first_person", Matcher::WordList(words(FIRST_PERSON_DETERMINERS))),
            FeatureDefinition::new("pron_relative", Matcher::WordList(words(RELATIVE_PRONOUNS))),
            FeatureDefinition::new("indefinite_on", Matcher::WordList(vec!["on".into()])),
            FeatureDefinition::new("semicolons", Matcher::Surface(vec![";".into()])),
            FeatureDefinition::new("exclamation_marks", Matcher::Surface(vec!["!".into()])),
            FeatureDefinition::new("question_marks", Matcher::Surface(vec!["?".into()])),
            FeatureDefinition::new("inverted_commas", Matcher::Surface(words(INVERTED_COMMAS))),
            FeatureDefinition::new("numbers", Matcher::Number),
            FeatureDefinition::new("negation_words", Matcher::WordList(words(NEGATION_WORDS))),
            FeatureDefinition::new("long_words", Matcher::LongerThan(7)),
            FeatureDefinition::new("sentiment_positive", Matcher::LexiconMembership("sentiment_positive".into())),
            FeatureDefinition::new("sentiment_negative", Matcher::LexiconMembership("sentiment_negative".into())),
            FeatureDefinition::new("nrc_words", Matcher::LexiconMembership("nrc".into())),
            FeatureDefinition::new("user_lexicon", Matcher::LexiconMembership("user".into())),
            FeatureDefinition::new("cttr", Matcher::Global(GlobalFeature::Cttr)),
            FeatureDefinition::new("avg_word_length", Matcher::Global(GlobalFeature::AvgWordLength)),
        ];
        let reg = FeatureRegistry::custom("baseline-19", defs).expect("ids unique");
        debug_assert_eq!(reg.len(), 19);
        reg
    }

    /// Baseline plus the 9 enrichment features (LING-LR-E).
    pub fn enriched() -> Self {
        let mut defs = FeatureRegistry::baseline().definitions;
        for name in [
            "deictic_temporal",
            "nondeictic_temporal",
            "thinking_verbs",
            "quoting_verbs",
            "passive_verbs",
            "discourse_markers",
        ] {
            defs.push(FeatureDefinition::new(
                name,
                Matcher::LexiconMembership(name.into()),
            ));
        }
        for name in ["concreteness", "imageability", "subjective_frequency"] {
            defs.push(FeatureDefinition::new(
                name,
                Matcher::LexiconScalar(name.into()),
            ));
        }
        let reg = FeatureRegistry::custom("enriched-28", defs).expect("ids unique");
        debug_assert_eq!(reg.len(), 28);
        reg
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn definitions(&self) -> &[FeatureDefinition] {
        &self.definitions
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.definitions.iter().position(|d| d.id == id)
    }
}

/// Registry-ordered per-document feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub registry_version: String,
    pub values: Vec<f64>,
}

/// Per-token contribution weights w_ij (token i × feature j).
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    pub doc_id: String,
    pub registry_version: String,
    /// Row per token, column per feature.
    weights: Vec<Vec<f64>>,
}

impl IncidenceMatrix {
    pub fn n_tokens(&self) -> usize {
        self.weights.len()
    }

    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn weight(&self, token: usize, feature: usize) -> f64 {
        self.weights[token][feature]
    }

    pub fn column_sum(&self, feature: usize) -> f64 {
        self.weights.iter().map(|row| row[feature]).sum()
    }

    /// w_ij / Σ_i w_ij, or 0 when no token carries weight for the feature.
    pub fn normalized_share(&self, token: usize, feature: usize) -> f64 {
        let total = self.column_sum(feature);
        if total > 0.0 {
            self.weights[token][feature] / total
        } else {
            0.0
        }
    }
}

/// Carroll's corrected type-token ratio, T/√(2N), over case-folded types.
pub fn cttr(doc: &AnnotatedDocument) -> Result<f64> {
    if doc.is_empty() {
        return Err(Error::Data(format!("document {} is empty", doc.id)));
    }
    let types: std::collections::HashSet<&str> =
        doc.tokens.iter().map(|t| t.lower.as_str()).collect();
    let n = doc.len() as f64;
    Ok(types.len() as f64 / (2.0 * n).sqrt())
}

/// Mean character count over tokens whose POS is not PUNCT.
pub fn avg_word_length(doc: &AnnotatedDocument) -> Result<f64> {
    let lengths: Vec<f64> = doc
        .tokens
        .iter()
        .filter(|t| !t.is_punct())
        .map(|t| t.surface.chars().count() as f64)
        .collect();
    if lengths.is_empty() {
        return Err(Error::Data(format!(
            "document {} contains only punctuation",
            doc.id
        )));
    }
    Ok(lengths.iter().sum::<f64>() / lengths.len() as f64)
}

/// Compute the registry's feature values for one document. Incidence
/// features are the proportion of matching tokens (mean lexicon value over
/// matching tokens for scalar features); global features use their own
/// accumulator.
pub fn extract_features(
    doc: &AnnotatedDocument,
    registry: &FeatureRegistry,
    lexicons: &LexiconSet,
) -> Result<FeatureVector> {
    if doc.is_empty() {
        return Err(Error::Data(format!("document {} is empty", doc.id)));
    }
    let n = doc.len() as f64;
    let mut values = Vec::with_capacity(registry.len());
    for def in registry.definitions() {
        let value = match &def.matcher {
            Matcher::Global(GlobalFeature::Cttr) => cttr(doc)?,
            Matcher::Global(GlobalFeature::AvgWordLength) => avg_word_length(doc)?,
            Matcher::LexiconScalar(_) => {
                let mut sum = 0.0;
                let mut matched = 0usize;
                for token in &doc.tokens {
                    let w = def.token_weight(token, lexicons)?;
                    if w != 0.0 {
                        sum += w;
                        matched += 1;
                    }
                }
                if matched > 0 {
                    sum / matched as f64
                } else {
                    0.0
                }
            }
            _ => {
                let mut count = 0.0;
                for token in &doc.tokens {
                    count += def.token_weight(token, lexicons)?;
                }
                count / n
            }
        };
        if !value.is_finite() {
            return Err(Error::numeric(
                "extract_features",
                format!("feature {} is non-finite for document {}", def.id, doc.id),
            ));
        }
        values.push(value);
    }
    Ok(FeatureVector {
        registry_version: registry.version().to_string(),
        values,
    })
}

/// Build the w_ij incidence matrix: 1 per matching token for categorical
/// features, the token's lexicon value for scalar features, all-zero columns
/// for global features.
pub fn build_incidence(
    doc: &AnnotatedDocument,
    registry: &FeatureRegistry,
    lexicons: &LexiconSet,
) -> Result<IncidenceMatrix> {
    if doc.is_empty() {
        return Err(Error::Data(format!("document {} is empty", doc.id)));
    }
    let mut weights = Vec::with_capacity(doc.len());
    for token in &doc.tokens {
        let mut row = Vec::with_capacity(registry.len());
        for def in registry.definitions() {
            row.push(def.token_weight(token, lexicons)?);
        }
        weights.push(row);
    }
    Ok(IncidenceMatrix {
        doc_id: doc.id.clone(),
        registry_version: registry.version().to_string(),
        weights,
    })
}
