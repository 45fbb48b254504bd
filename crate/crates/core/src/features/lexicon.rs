use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

use super::wordlists;

/// Membership lexicons hold a word set (value 1); scalar lexicons map words
/// to real values (concreteness, imageability, subjective frequency).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconKind {
    Membership,
    Scalar,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    pub name: String,
    pub kind: LexiconKind,
    entries: HashMap<String, f64>,
}

impl Lexicon {
    pub fn new(
        name: impl Into<String>,
        kind: LexiconKind,
        entries: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self> {
        let name = name.into();
        let mut folded = HashMap::new();
        for (word, value) in entries {
            if !value.is_finite() {
                return Err(Error::Config(format!(
                    "lexicon {name}: non-finite value for {word:?}"
                )));
            }
            folded.insert(word.to_lowercase(), value);
        }
        Ok(Lexicon {
            name,
            kind,
            entries: folded,
        })
    }

    pub fn from_words(name: impl Into<String>, words: &[&str]) -> Self {
        Lexicon::new(
            name,
            LexiconKind::Membership,
            words.iter().map(|w| (w.to_string(), 1.0)),
        )
        .expect("membership values are finite")
    }

    /// One entry per line, `word<TAB>value`; the value is optional and
    /// defaults to 1.0.
    pub fn load(name: impl Into<String>, kind: LexiconKind, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut entries = Vec::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let (word, value) = match line.split_once('\t') {
                Some((w, v)) => {
                    let value: f64 = v.trim().parse().map_err(|_| Error::Parse {
                        line: lineno + 1,
                        message: format!("bad lexicon value {v:?}"),
                    })?;
                    (w.to_string(), value)
                }
                None => (line.to_string(), 1.0),
            };
            entries.push((word, value));
        }
        Lexicon::new(name, kind, entries)
    }

    /// Case-folded lookup.
    pub fn get(&self, key: &str) -> Option<f64> {
        self.entries.get(&key.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Named lexicons available to a feature registry.
#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    lexicons: HashMap<String, Lexicon>,
}

impl LexiconSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lexicon: Lexicon) {
        self.lexicons.insert(lexicon.name.clone(), lexicon);
    }

    pub fn get(&self, name: &str) -> Option<&Lexicon> {
        self.lexicons.get(name)
    }

    pub fn require(&self, name: &str) -> Result<&Lexicon> {
        self.get(name)
            .ok_or_else(|| Error::Config(format!("missing lexicon {name:?}")))
    }

    /// Bundled demonstration lexicons covering every slot of the enriched
    /// registry. The user slot is present but empty.
    pub fn demo() -> Self {
        let mut set = LexiconSet::new();
        for (name, words) in [
            ("sentiment_positive", wordlists::DEMO_SENTIMENT_POSITIVE),
            ("sentiment_negative", wordlists::DEMO_SENTIMENT_NEGATIVE),
            ("nrc", wordlists::DEMO_NRC),
            ("user", &[] as &[&str]),
            ("deictic_temporal", wordlists::DEMO_DEICTIC_TEMPORAL),
            ("nondeictic_temporal", wordlists::DEMO_NONDEICTIC_TEMPORAL),
            ("thinking_verbs", wordlists::DEMO_THINKING_VERBS),
            ("quoting_verbs", wordlists::DEMO_QUOTING_VERBS),
            ("passive_verbs", wordlists::DEMO_PASSIVE_VERBS),
            ("discourse_markers", wordlists::DEMO_DISCOURSE_MARKERS),
        ] {
            set.insert(Lexicon::from_words(name, words));
        }
        for (name, pairs) in [
            ("concreteness", wordlists::DEMO_CONCRETENESS),
            ("imageability", wordlists::DEMO_IMAGEABILITY),
            ("subjective_frequency", wordlists::DEMO_SUBJECTIVE_FREQUENCY),
        ] {
            set.insert(
                Lexicon::new(
                    name,
                    LexiconKind::Scalar,
                    pairs.iter().map(|&(w, v)| (w.to_string(), v)),
                )
                .unwrap(),
            );
        }
        set
    }
}
