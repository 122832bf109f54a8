//! Deterministic text normalization, tokenization, sentence splitting, and
//! n-gram generation.
//!
//! Everything in this module is a pure function of its inputs. Offsets are
//! Unicode scalar-value (char) indices, never bytes, so spans stay portable
//! across serialization boundaries.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// A token with char offsets into the string it was produced from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// A sentence span with char offsets into the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Preprocessing knobs shared by the vectorizer, the corpus loader, and the
/// rule engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepConfig {
    pub lowercase: bool,
    pub strip_accents: bool,
    pub ngram_min: usize,
    pub ngram_max: usize,
    /// Tokens (including their trailing period) that never end a sentence,
    /// e.g. "Dr.".
    pub abbreviations: BTreeSet<String>,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            lowercase: true,
            strip_accents: false,
            ngram_min: 1,
            ngram_max: 1,
            abbreviations: default_abbreviations(),
        }
    }
}

impl PrepConfig {
    /// Replace the abbreviation set with entries from a plain-text file, one
    /// per line. Blank lines and lines starting with '#' are skipped.
    pub fn load_abbreviations(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.abbreviations = raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.ngram_min == 0 || self.ngram_min > self.ngram_max {
            return Err(Error::InvalidInput(format!(
                "invalid n-gram range {}..{}",
                self.ngram_min, self.ngram_max
            )));
        }
        Ok(())
    }
}

fn default_abbreviations() -> BTreeSet<String> {
    [
        "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "St.", "Jr.", "Sr.", "vs.", "e.g.", "i.e.", "etc.",
        "approx.", "Dept.", "Inc.", "Co.", "No.", "Fig.",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Canonical text normalization: NFC, optional accent stripping, optional
/// lowercasing, whitespace runs collapsed to single spaces, ends trimmed.
/// Idempotent: `normalize(normalize(x)) == normalize(x)`.
pub fn normalize(text: &str, config: &PrepConfig) -> String {
    let composed: String = text.nfc().collect();
    let stripped = if config.strip_accents {
        composed
            .nfd()
            .filter(|c| !unicode_normalization::char::is_combining_mark(*c))
            .collect()
    } else {
        composed
    };
    let lowered = if config.lowercase {
        stripped.to_lowercase()
    } else {
        stripped
    };
    // Lowercasing can introduce decomposed sequences; recompose before
    // collapsing whitespace.
    let recomposed: String = lowered.nfc().collect();
    collapse_whitespace(&recomposed)
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_run = false;
    for c in text.chars() {
        if c.is_whitespace() {
            in_run = true;
        } else {
            if in_run && !out.is_empty() {
                out.push(' ');
            }
            in_run = false;
            out.push(c);
        }
    }
    out
}

/// Split text into tokens: maximal runs of alphanumeric chars, where an
/// apostrophe, hyphen, or period flanked by alphanumerics on both sides stays
/// inside the token ("E.coli", "don't", "follow-up").
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        loop {
            if i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            } else if i + 1 < chars.len()
                && matches!(chars[i], '\'' | '-' | '.')
                && chars[i + 1].is_alphanumeric()
            {
                i += 2;
            } else {
                break;
            }
        }
        tokens.push(Token {
            text: chars[start..i].iter().collect(),
            start,
            end: i,
        });
    }
    tokens
}

/// All contiguous n-grams for n in `[n_min, n_max]`, joined by single spaces.
/// Unigrams come first, then bigrams, and so on, each group in text order.
pub fn ngrams(tokens: &[Token], n_min: usize, n_max: usize) -> Vec<String> {
    assert!(n_min >= 1 && n_min <= n_max, "invalid n-gram range");
    let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
    let mut out = Vec::new();
    for n in n_min..=n_max {
        if texts.len() < n {
            break;
        }
        for window in texts.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// Convenience: normalize, tokenize, and emit the configured n-gram terms.
pub fn terms(text: &str, config: &PrepConfig) -> Vec<String> {
    let normalized = normalize(text, config);
    let tokens = tokenize(&normalized);
    ngrams(&tokens, config.ngram_min, config.ngram_max)
}

/// Rule-based sentence splitter. A sentence ends after '.', '!', or '?'
/// followed by whitespace and an uppercase letter, unless the word carrying
/// the period is a known abbreviation. Returned spans exclude the whitespace
/// between sentences.
pub fn split_sentences(text: &str, config: &PrepConfig) -> Vec<SentenceSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut boundaries = Vec::new(); // index just past the terminator
    for i in 0..chars.len() {
        if !matches!(chars[i], '.' | '!' | '?') {
            continue;
        }
        // Require whitespace then an uppercase letter after the terminator.
        let mut j = i + 1;
        if j >= chars.len() || !chars[j].is_whitespace() {
            continue;
        }
        while j < chars.len() && chars[j].is_whitespace() {
            j += 1;
        }
        if j >= chars.len() || !chars[j].is_uppercase() {
            continue;
        }
        if chars[i] == '.' {
            // The word ending at this period, period included.
            let mut w = i;
            while w > 0 && !chars[w - 1].is_whitespace() {
                w -= 1;
            }
            let word: String = chars[w..=i].iter().collect();
            if config.abbreviations.contains(&word) {
                continue;
            }
        }
        boundaries.push(i + 1);
    }

    let mut spans = Vec::new();
    let mut seg_start = 0;
    for seg_end in boundaries.into_iter().chain(std::iter::once(chars.len())) {
        if let Some(span) = trim_span(&chars, seg_start, seg_end) {
            spans.push(span);
        }
        seg_start = seg_end;
    }
    spans
}

fn trim_span(chars: &[char], mut start: usize, mut end: usize) -> Option<SentenceSpan> {
    while start < end && chars[start].is_whitespace() {
        start += 1;
    }
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if start == end {
        return None;
    }
    Some(SentenceSpan {
        start,
        end,
        text: chars[start..end].iter().collect(),
    })
}

/// Slice a string by char offsets. Returns `None` when the range is out of
/// bounds or inverted.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<String> {
    if start >= end {
        return None;
    }
    let mut out = String::new();
    let mut count = 0;
    for (i, c) in text.chars().enumerate() {
        if i >= end {
            break;
        }
        if i >= start {
            out.push(c);
        }
        count = i + 1;
    }
    if count < end {
        return None;
    }
    Some(out)
}

/// Number of chars (Unicode scalar values) in a string.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_lowercases_and_collapses() {
        let cfg = PrepConfig::default();
        assert_eq!(normalize("Food  RECALL", &cfg), "food recall");
    }

    #[test]
    fn normalize_empty() {
        assert_eq!(normalize("", &PrepConfig::default()), "");
    }

    #[test]
    fn normalize_strips_accents_when_asked() {
        let cfg = PrepConfig {
            strip_accents: true,
            ..PrepConfig::default()
        };
        assert_eq!(normalize("Café", &cfg), "cafe");
    }

    #[test]
    fn tokenize_basic() {
        let toks: Vec<String> = tokenize("listeria outbreak")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(toks, vec!["listeria", "outbreak"]);
    }

    #[test]
    fn tokenize_keeps_internal_period() {
        let toks: Vec<String> = tokenize("E.coli found").into_iter().map(|t| t.text).collect();
        assert_eq!(toks, vec!["E.coli", "found"]);
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_trailing_period_is_separator() {
        let toks: Vec<String> = tokenize("found.").into_iter().map(|t| t.text).collect();
        assert_eq!(toks, vec!["found"]);
    }

    #[test]
    fn ngram_enumeration() {
        let toks = tokenize("a b c");
        assert_eq!(ngrams(&toks, 1, 2), vec!["a", "b", "c", "a b", "b c"]);
    }

    #[test]
    fn ngram_short_input() {
        let toks = tokenize("a b");
        assert!(ngrams(&toks, 3, 4).is_empty());
    }

    #[test]
    fn ngram_identity_at_one() {
        let toks = tokenize("a b c");
        assert_eq!(ngrams(&toks, 1, 1), vec!["a", "b", "c"]);
    }

    #[test]
    fn split_two_sentences() {
        let spans = split_sentences("A recall. An outbreak.", &PrepConfig::default());
        let texts: Vec<&str> = spans.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, vec!["A recall.", "An outbreak."]);
        assert_eq!((spans[0].start, spans[0].end), (0, 9));
        assert_eq!((spans[1].start, spans[1].end), (10, 22));
    }

    #[test]
    fn split_respects_abbreviations() {
        let spans = split_sentences("Dr. Smith slept.", &PrepConfig::default());
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].text, "Dr. Smith slept.");
    }

    #[test]
    fn split_empty() {
        assert!(split_sentences("", &PrepConfig::default()).is_empty());
    }

    #[test]
    fn split_requires_capital_after_terminator() {
        let spans = split_sentences("one. two. Three.", &PrepConfig::default());
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].text, "one. two.");
    }

    #[test]
    fn char_slice_handles_multibyte() {
        assert_eq!(char_slice("héllo", 1, 3).as_deref(), Some("él"));
        assert_eq!(char_slice("abc", 1, 9), None);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,120}", lower in any::<bool>(), strip in any::<bool>()) {
            let cfg = PrepConfig { lowercase: lower, strip_accents: strip, ..PrepConfig::default() };
            let once = normalize(&s, &cfg);
            prop_assert_eq!(normalize(&once, &cfg), once);
        }

        #[test]
        fn token_offsets_reconstruct_text(s in "\\PC{0,120}") {
            let norm = normalize(&s, &PrepConfig::default());
            for tok in tokenize(&norm) {
                prop_assert_eq!(char_slice(&norm, tok.start, tok.end).unwrap(), tok.text);
            }
        }

        #[test]
        fn sentence_spans_ordered_and_reconstruct(s in "\\PC{0,200}") {
            let cfg = PrepConfig::default();
            let spans = split_sentences(&s, &cfg);
            let mut last_end = 0;
            for span in &spans {
                prop_assert!(span.start >= last_end);
                prop_assert!(span.start < span.end);
                prop_assert_eq!(char_slice(&s, span.start, span.end).unwrap(), span.text.clone());
                last_end = span.end;
            }
        }
    }
}
