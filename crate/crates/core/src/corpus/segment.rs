//! Paragraph and sentence segmentation.
//!
//! A paragraph is a maximal run of non-blank lines. A sentence ends at terminal
//! punctuation (plus any closing quotes or brackets) followed by whitespace and
//! an uppercase letter or digit, unless the word before the period is a known
//! abbreviation. All spans are byte ranges trimmed of surrounding whitespace.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "adi.", "ag.", "agr.", "al.", "art.", "arts.", "c.", "cf.", "des.", "dr.", "dra.", "ed.",
    "ex.", "exa.", "exma.", "exmo.", "fl.", "fls.", "inc.", "incs.", "min.", "n.", "nº.", "no.",
    "nr.", "num.", "p.", "pág.", "pp.", "rcl.", "re.", "reg.", "rel.", "sr.", "sra.", "v.", "vol.",
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedText {
    pub sentences: Vec<Range<usize>>,
    pub paragraphs: Vec<Range<usize>>,
}

impl SegmentedText {
    /// Index of the paragraph containing sentence `i`.
    pub fn paragraph_of(&self, i: usize) -> Option<usize> {
        let s = self.sentences.get(i)?;
        self.paragraphs
            .iter()
            .position(|p| p.start <= s.start && s.end <= p.end)
    }

    /// Sentence indices grouped by paragraph.
    pub fn sentences_by_paragraph(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.paragraphs.len()];
        let mut p = 0;
        for (i, s) in self.sentences.iter().enumerate() {
            while self.paragraphs[p].end < s.end {
                p += 1;
            }
            groups[p].push(i);
        }
        groups
    }
}

#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl Segmenter {
    /// Abbreviations are matched lowercase and must include the trailing period.
    pub fn with_abbreviations<I, S>(abbrevs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            abbreviations: abbrevs
                .into_iter()
                .map(|a| a.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn segment(&self, body: &str) -> SegmentedText {
        let paragraphs = paragraph_spans(body);
        let sentences = paragraphs
            .iter()
            .flat_map(|p| self.sentence_spans(body, p.clone()))
            .collect();
        SegmentedText {
            sentences,
            paragraphs,
        }
    }

    fn sentence_spans(&self, body: &str, para: Range<usize>) -> Vec<Range<usize>> {
        let text = &body[para.clone()];
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < chars.len() {
            let (_, c) = chars[i];
            if !is_terminal(c) {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < chars.len() && (is_terminal(chars[j].1) || is_closer(chars[j].1)) {
                j += 1;
            }
            let end_byte = chars.get(j).map_or(text.len(), |&(b, _)| b);
            if j < chars.len() && !chars[j].1.is_whitespace() {
                i = j;
                continue;
            }
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let opens_sentence = chars
                .get(k)
                .is_some_and(|&(_, n)| n.is_uppercase() || n.is_ascii_digit());
            if k < chars.len()
                && (!opens_sentence || (c == '.' && self.is_abbreviation(&chars[..=i])))
            {
                i = k;
                continue;
            }
            push_trimmed(&mut out, text, start..end_byte, para.start);
            start = chars.get(k).map_or(text.len(), |&(b, _)| b);
            i = k;
        }
        if start < text.len() {
            push_trimmed(&mut out, text, start..text.len(), para.start);
        }
        out
    }

    /// Whether the word ending at the last char (a period) is an abbreviation.
    fn is_abbreviation(&self, upto_period: &[(usize, char)]) -> bool {
        let mut word: Vec<char> = upto_period
            .iter()
            .rev()
            .skip(1)
            .take_while(|(_, c)| c.is_alphanumeric())
            .map(|&(_, c)| c)
            .collect();
        if word.is_empty() {
            return false;
        }
        word.reverse();
        let mut key: String = word.into_iter().collect::<String>().to_lowercase();
        key.push('.');
        self.abbreviations.contains(&key)
    }
}

pub fn segment(body: &str) -> SegmentedText {
    Segmenter::default().segment(body)
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | ')' | ']' | '»')
}

fn push_trimmed(out: &mut Vec<Range<usize>>, text: &str, r: Range<usize>, base: usize) {
    let slice = &text[r.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        let s = base + r.start + lead;
        out.push(s..s + trimmed.len());
    }
}

fn paragraph_spans(body: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut current: Option<Range<usize>> = None;
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if let Some(p) = current.take() {
                out.push(p);
            }
            continue;
        }
        let lead = line.len() - line.trim_start().len();
        let s = line_start + lead;
        let e = s + trimmed.len();
        match current.as_mut() {
            Some(p) => p.end = e,
            None => current = Some(s..e),
        }
    }
    if let Some(p) = current {
        out.push(p);
    }
    out
}
