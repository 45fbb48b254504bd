//! Whitespace tokenizer with punctuation detachment, the fallback for
//! records that arrive without upstream annotation.

use std::collections::HashMap;

use super::Token;

/// Optional word → POS-tag lookup applied to non-punctuation tokens.
#[derive(Debug, Clone, Default)]
pub struct TagLexicon {
    entries: HashMap<String, String>,
}

impl TagLexicon {
    pub fn new(entries: HashMap<String, String>) -> Self {
        TagLexicon {
            entries: entries
                .into_iter()
                .map(|(k, v)| (k.to_lowercase(), v))
                .collect(),
        }
    }

    fn tag(&self, lower: &str) -> Option<&str> {
        self.entries.get(lower).map(String::as_str)
    }
}

fn is_detachable_punct(c: char) -> bool {
    // ASCII punctuation plus the French typographic marks; apostrophes and
    // hyphens stay attached (l'Europe, porte-parole).
    if c == '\'' || c == '-' || c == '’' {
        return false;
    }
    c.is_ascii_punctuation() || matches!(c, '«' | '»' | '“' | '”' | '…' | '—' | '–' | '¿' | '¡')
}

fn classify(surface: &str) -> &'static str {
    let mut chars = surface.chars();
    if surface.chars().all(is_detachable_punct) && !surface.is_empty() {
        "PUNCT"
    } else if chars.all(|c| c.is_ascii_digit() || c == ',' || c == '.')
        && surface.chars().any(|c| c.is_ascii_digit())
    {
        "NUM"
    } else {
        ""
    }
}

/// Split on whitespace and detach punctuation marks into their own tokens.
/// Spans are byte offsets into `raw`. Punctuation and number tokens get a
/// structural tag; everything else is tagged from `lexicon` when supplied,
/// empty otherwise.
pub fn tokenize_with_lexicon(raw: &str, lexicon: Option<&TagLexicon>) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut push = |surface: &str, start: usize| {
        if surface.is_empty() {
            return;
        }
        let structural = classify(surface);
        let pos = if structural.is_empty() {
            lexicon
                .and_then(|l| l.tag(&surface.to_lowercase()))
                .unwrap_or("")
                .to_string()
        } else {
            structural.to_string()
        };
        tokens.push(Token::new(
            surface,
            pos,
            None,
            (start, start + surface.len()),
            1,
        ));
    };

    let mut word_start: Option<usize> = None;
    let mut last = 0;
    for (i, c) in raw.char_indices() {
        last = i + c.len_utf8();
        if c.is_whitespace() {
            if let Some(s) = word_start.take() {
                flush_word(&raw[s..i], s, &mut push);
            }
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        flush_word(&raw[s..last], s, &mut push);
    }
    tokens
}

/// Peel detachable punctuation off both ends of a whitespace-delimited chunk,
/// emitting each mark as its own token.
fn flush_word(chunk: &str, offset: usize, push: &mut impl FnMut(&str, usize)) {
    let mut start = 0;
    let mut end = chunk.len();
    let mut leading = Vec::new();
    let mut trailing = Vec::new();
    for (i, c) in chunk.char_indices() {
        if i != start || !is_detachable_punct(c) {
            break;
        }
        leading.push((i, c.len_utf8()));
        start = i + c.len_utf8();
    }
    while start < end {
        let c = chunk[start..end].chars().next_back().unwrap();
        if !is_detachable_punct(c) {
            break;
        }
        end -= c.len_utf8();
        trailing.push((end, c.len_utf8()));
    }
    for &(i, len) in &leading {
        push(&chunk[i..i + len], offset + i);
    }
    if start < end {
        push(&chunk[start..end], offset + start);
    }
    for &(i, len) in trailing.iter().rev() {
        push(&chunk[i..i + len], offset + i);
    }
}

/// [`tokenize_with_lexicon`] without a tagging lexicon.
pub fn tokenize_fallback(raw: &str) -> Vec<Token> {
    tokenize_with_lexicon(raw, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    #[test]
    fn punctuation_is_detached() {
        let tokens = tokenize_fallback("Bonjour, monde !");
        assert_eq!(surfaces(&tokens), ["Bonjour", ",", "monde", "!"]);
        assert_eq!(tokens[1].pos, "PUNCT");
        assert_eq!(tokens[3].pos, "PUNCT");
        assert_eq!(tokens[0].pos, "");
    }

    #[test]
    fn empty_text_yields_no_tokens() {
        assert!(tokenize_fallback("").is_empty());
        assert!(tokenize_fallback("   ").is_empty());
    }

    #[test]
    fn double_space_spans_index_into_raw() {
        let raw = "a  b";
        let tokens = tokenize_fallback(raw);
        assert_eq!(surfaces(&tokens), ["a", "b"]);
        assert_eq!(tokens[0].char_span, (0, 1));
        assert_eq!(tokens[1].char_span, (3, 4));
        for t in &tokens {
            assert_eq!(&raw[t.char_span.0..t.char_span.1], t.surface);
        }
    }

    #[test]
    fn guillemets_and_apostrophes() {
        let raw = "« L'Europe »";
        let tokens = tokenize_fallback(raw);
        assert_eq!(surfaces(&tokens), ["«", "L'Europe", "»"]);
        for t in &tokens {
            assert_eq!(&raw[t.char_span.0..t.char_span.1], t.surface);
        }
    }

    #[test]
    fn numbers_get_num_tag() {
        let tokens = tokenize_fallback("En 2021, 3,5 %");
        let nums: Vec<_> = tokens.iter().filter(|t| t.pos == "NUM").collect();
        assert_eq!(nums.len(), 2);
    }

    #[test]
    fn tag_lexicon_assigns_pos() {
        let lex = TagLexicon::new(
            [("manger".to_string(), "VERB".to_string())]
                .into_iter()
                .collect(),
        );
        let tokens = tokenize_with_lexicon("Manger vite", Some(&lex));
        assert_eq!(tokens[0].pos, "VERB");
        assert_eq!(tokens[1].pos, "");
    }
}
