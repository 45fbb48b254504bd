//! Static report artifacts: HTML attention-map renderings of explained
//! documents and CSV exports of per-token distribution summaries.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedDocument;
use crate::error::{Error, Result};
use crate::explain::Explanation;
use crate::stats::{distribution_csv, TokenDistribution};

/// Hue used for the shading; one per model family by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    Orange,
    Blue,
}

impl Palette {
    fn rgb(self) -> (u8, u8, u8) {
        match self {
            Palette::Orange => (255, 140, 0),
            Palette::Blue => (40, 110, 220),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Palette::Orange => "orange",
            Palette::Blue => "blue",
        }
    }
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Render one explained document as a static HTML page. Each token's
/// background opacity is its relevance divided by the document's maximum
/// relevance (zero or negative relevance renders unshaded); the numeric
/// value sits in the tooltip.
pub fn render_attention_map(
    doc: &AnnotatedDocument,
    explanation: &Explanation,
    palette: Palette,
) -> Result<String> {
    if doc.len() != explanation.relevances.len() {
        return Err(Error::Contract(format!(
            "document {:?} has {} tokens but the explanation {} relevances",
            doc.id,
            doc.len(),
            explanation.relevances.len()
        )));
    }
    let max = explanation
        .relevances
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let (r, g, b) = palette.rgb();
    let mut body = String::new();
    for (token, &rel) in doc.tokens.iter().zip(&explanation.relevances) {
        let opacity = if max > 0.0 { (rel / max).clamp(0.0, 1.0) } else { 0.0 };
        body.push_str(&format!(
            "<span class=\"tok\" style=\"background-color: rgba({r}, {g}, {b}, {opacity})\" \
             title=\"{rel:.6e}\">{}</span> ",
            escape_html(&token.surface)
        ));
    }
    Ok(format!(
        "<!DOCTYPE html>\n<html lang=\"fr\">\n<head>\n<meta charset=\"utf-8\">\n\
         <title>{id}</title>\n\
         <style>body {{ font-family: serif; max-width: 48em; margin: 2em auto; \
         line-height: 1.8; }} .tok {{ padding: 0 0.1em; border-radius: 0.15em; }}</style>\n\
         </head>\n<body>\n\
         <p class=\"meta\">document {id} · model {model} · predicted {pred}</p>\n\
         <p class=\"text\">{body}</p>\n</body>\n</html>\n",
        id = escape_html(&doc.id),
        model = escape_html(&explanation.model_id),
        pred = explanation.predicted,
    ))
}

/// Write a TokenDistribution as CSV (one row per token, document order).
pub fn export_boxplot_data(
    path: impl AsRef<Path>,
    distribution: &TokenDistribution,
    surfaces: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let csv_text = distribution_csv(distribution, surfaces)?;
    std::fs::write(path, csv_text).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Token};
    use crate::stats::characterize_distribution;

    fn doc_of(words: &[&str]) -> AnnotatedDocument {
        let mut tokens = Vec::new();
        let mut pos = 0;
        for w in words {
            tokens.push(Token::new(*w, "", None, (pos, pos + w.len()), 1));
            pos += w.len() + 1;
        }
        AnnotatedDocument::new("doc", tokens, Label::Opinion, "test").unwrap()
    }

    fn expl(values: &[f64]) -> Explanation {
        Explanation {
            doc_id: "doc".into(),
            model_id: "m".into(),
            predicted: Label::Opinion,
            relevances: values.to_vec(),
            per_feature: None,
        }
    }

    fn opacities(html: &str) -> Vec<f64> {
        html.match_indices("rgba(")
            .map(|(i, _)| {
                let tail = &html[i..html[i..].find(')').unwrap() + i];
                tail.rsplit(',').next().unwrap().trim().parse().unwrap()
            })
            .collect()
    }

    #[test]
    fn opacity_is_max_normalized() {
        let doc = doc_of(&["bon", "très"]);
        let html = render_attention_map(&doc, &expl(&[0.2, 0.4]), Palette::Orange).unwrap();
        assert_eq!(opacities(&html), vec![0.5, 1.0]);
    }

    #[test]
    fn zero_relevance_renders_unshaded() {
        let doc = doc_of(&["un", "deux", "trois"]);
        let html = render_attention_map(&doc, &expl(&[0.0, 0.0, 0.0]), Palette::Blue).unwrap();
        assert_eq!(opacities(&html), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn single_full_relevance_token_is_saturated() {
        let doc = doc_of(&["seul"]);
        let html = render_attention_map(&doc, &expl(&[1.0]), Palette::Orange).unwrap();
        assert_eq!(opacities(&html), vec![1.0]);
    }

    #[test]
    fn every_token_appears_once_in_order() {
        let words = ["d'abord", "<tag>", "côté", "&fin"];
        let doc = doc_of(&words);
        let html = render_attention_map(&doc, &expl(&[0.1, 0.2, 0.3, 0.4]), Palette::Blue).unwrap();
        // Parse the span contents back out and compare to the document.
        let text = html.split("<p class=\"text\">").nth(1).unwrap();
        let spans: Vec<String> = text
            .split("</span>")
            .filter_map(|chunk| chunk.rsplit('>').next().map(str::to_string))
            .filter(|s| !s.trim().is_empty())
            .collect();
        let unescaped: Vec<String> = spans
            .iter()
            .map(|s| {
                s.replace("&lt;", "<")
                    .replace("&gt;", ">")
                    .replace("&#39;", "'")
                    .replace("&quot;", "\"")
                    .replace("&amp;", "&")
            })
            .collect();
        assert_eq!(unescaped, words);
    }

    #[test]
    fn length_mismatch_is_contract_error() {
        let doc = doc_of(&["un", "deux"]);
        assert!(matches!(
            render_attention_map(&doc, &expl(&[0.4]), Palette::Orange),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn boxplot_export_row_counts() {
        let dist = characterize_distribution(&[expl(&[0.5, 0.2, 0.3])]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("box.csv");
        export_boxplot_data(&path, &dist, &["a".into(), "b".into(), "c".into()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4, "header plus one row per token");

        let empty = TokenDistribution { set_size: 1, tokens: vec![] };
        export_boxplot_data(&path, &empty, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1, "header only");
    }
}
