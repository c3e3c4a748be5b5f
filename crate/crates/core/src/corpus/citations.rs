//! Explicit citation patterns.
//!
//! Patterns are matched against a folded copy of the text (lowercase, diacritics
//! removed, one folded char per source char) so that "SÚMULA VINCULANTE Nº 14"
//! and "sumula vinculante no 14" hit the same expression. Each pattern must
//! capture the precedent number in its first group.

use std::ops::Range;

use log::warn;
use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::{Error, Result};

/// "súmula vinculante" + optional number marker + integer.
///
/// The "verbete vinculante nº X da súmula" phrasing is not covered on purpose:
/// decisions using it are treated as unlabeled.
pub const DEFAULT_PATTERNS: &[&str] = &[
    r"\bsumulas?\s+vinculantes?\s*[,:]?\s*(?:(?:numero|num|nr|no|n)\s*\.?\s*o?\s*\.?\s*:?\s*)?(\d+)",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationMatch {
    pub bp_id: u32,
    /// Byte range into the original text.
    pub span: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct CitationPatterns {
    sources: Vec<String>,
    regexes: Vec<Regex>,
}

impl Default for CitationPatterns {
    fn default() -> Self {
        Self::new(DEFAULT_PATTERNS.iter().copied()).expect("default patterns compile")
    }
}

impl CitationPatterns {
    pub fn new<I, S>(patterns: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut sources = Vec::new();
        let mut regexes = Vec::new();
        for p in patterns {
            let p = p.as_ref();
            let re = Regex::new(&format!("(?i){p}")).map_err(|e| Error::Pattern {
                pattern: p.to_string(),
                message: e.to_string(),
            })?;
            if re.captures_len() < 2 {
                return Err(Error::Pattern {
                    pattern: p.to_string(),
                    message: "pattern must capture the precedent number".into(),
                });
            }
            sources.push(p.to_string());
            regexes.push(re);
        }
        if regexes.is_empty() {
            return Err(Error::Config("citation pattern list is empty".into()));
        }
        Ok(Self { sources, regexes })
    }

    /// One pattern per line; blank lines and lines starting with `#` are skipped.
    pub fn from_lines(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// All explicit citations in `body`, sorted by start offset and non-overlapping.
    pub fn detect(&self, body: &str) -> Vec<CitationMatch> {
        let folded = FoldedText::new(body);
        let mut found = Vec::new();
        for re in &self.regexes {
            for caps in re.captures_iter(&folded.text) {
                let whole = caps.get(0).expect("group 0 always present");
                let Some(num) = caps.get(1) else { continue };
                let span = folded.original_range(whole.range());
                match num.as_str().parse::<u32>() {
                    Ok(bp_id) if bp_id > 0 => found.push(CitationMatch { bp_id, span }),
                    _ => warn!(
                        "discarding citation match {:?}: {:?} is not a positive precedent number",
                        &body[span.clone()],
                        num.as_str()
                    ),
                }
            }
        }
        found.sort_by_key(|m| (m.span.start, std::cmp::Reverse(m.span.end)));
        let mut out: Vec<CitationMatch> = Vec::with_capacity(found.len());
        for m in found {
            if out.last().is_some_and(|prev| m.span.start < prev.span.end) {
                continue;
            }
            out.push(m);
        }
        out
    }

    /// Replaces every detected citation with a single space, repeating until no
    /// citation remains (blanking can splice a new match together).
    pub fn strip(&self, body: &str) -> String {
        let mut current = body.to_string();
        loop {
            let matches = self.detect(&current);
            if matches.is_empty() {
                return current;
            }
            let mut out = String::with_capacity(current.len());
            let mut last = 0;
            for m in &matches {
                out.push_str(&current[last..m.span.start]);
                out.push(' ');
                last = m.span.end;
            }
            out.push_str(&current[last..]);
            current = out;
        }
    }
}

/// Lowercase, diacritic-free rendering of a text with a byte-offset map back to
/// the source.
struct FoldedText {
    text: String,
    /// For every byte of `text` (plus one past the end), the source byte offset
    /// of the char it came from.
    origin: Vec<usize>,
}

impl FoldedText {
    fn new(src: &str) -> Self {
        let mut text = String::with_capacity(src.len());
        let mut origin = Vec::with_capacity(src.len() + 1);
        for (offset, c) in src.char_indices() {
            let f = fold_char(c);
            for _ in 0..f.len_utf8() {
                origin.push(offset);
            }
            text.push(f);
        }
        origin.push(src.len());
        Self { text, origin }
    }

    fn original_range(&self, r: Range<usize>) -> Range<usize> {
        self.origin[r.start]..self.origin[r.end]
    }
}

/// Maps a char to its lowercase base letter: "Ú" → 'u', "º" → 'o'.
pub fn fold_char(c: char) -> char {
    if c.is_ascii() {
        return c.to_ascii_lowercase();
    }
    let base = match c {
        '°' => 'o',
        _ => c.nfkd().find(|d| !is_combining_mark(*d)).unwrap_or(c),
    };
    base.to_lowercase().next().unwrap_or(base)
}
