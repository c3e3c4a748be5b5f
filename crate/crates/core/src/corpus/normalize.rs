//! Lowercasing, tokenization, stopword removal and stemming.

use std::collections::{BTreeMap, HashSet};
use std::ops::Range;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::{fingerprint, Error, Result};

const PORTUGUESE_STOPWORDS: &str = include_str!("stopwords_pt.txt");

/// Identifies the stopword list and lemmatizer applied by [`Normalizer`].
///
/// `stopwords` is one of `"pt"` (built-in Portuguese list), `"none"`, or
/// `"custom"` (uses `custom_stopwords`). `stemmer` is one of `"pt-snowball"`,
/// `"none"`, or `"lemma-table"` (uses `lemma_table`, identity for unknown words).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizerConfig {
    pub stopwords: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub custom_stopwords: Vec<String>,
    pub stemmer: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lemma_table: BTreeMap<String, String>,
}

impl Default for NormalizerConfig {
    fn default() -> Self {
        Self {
            stopwords: "pt".into(),
            custom_stopwords: Vec::new(),
            stemmer: "pt-snowball".into(),
            lemma_table: BTreeMap::new(),
        }
    }
}

impl NormalizerConfig {
    /// Custom stopword list from a UTF-8 file body, one token per line.
    pub fn with_stopword_lines(mut self, text: &str) -> Self {
        self.stopwords = "custom".into();
        self.custom_stopwords = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        self
    }

    pub fn fingerprint(&self) -> String {
        fingerprint::of_json(self)
    }
}

/// Normalized term sequence: lowercase, no punctuation, no stopwords.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

enum Lemmatizer {
    None,
    Snowball(Stemmer),
    Table(BTreeMap<String, String>),
}

pub struct Normalizer {
    config: NormalizerConfig,
    stopwords: HashSet<String>,
    lemmatizer: Lemmatizer,
}

impl std::fmt::Debug for Normalizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Normalizer")
            .field("config", &self.config)
            .finish()
    }
}

impl Clone for Normalizer {
    fn clone(&self) -> Self {
        Self::new(&self.config).expect("config was validated on construction")
    }
}

impl Normalizer {
    pub fn new(config: &NormalizerConfig) -> Result<Self> {
        let stopwords = match config.stopwords.as_str() {
            "pt" => PORTUGUESE_STOPWORDS.lines().map(str::to_string).collect(),
            "none" => HashSet::new(),
            "custom" => config
                .custom_stopwords
                .iter()
                .map(|s| s.to_lowercase())
                .collect(),
            other => return Err(Error::Config(format!("unknown stopword list {other:?}"))),
        };
        let lemmatizer = match config.stemmer.as_str() {
            "pt-snowball" => Lemmatizer::Snowball(Stemmer::create(Algorithm::Portuguese)),
            "none" => Lemmatizer::None,
            "lemma-table" => Lemmatizer::Table(config.lemma_table.clone()),
            other => return Err(Error::Config(format!("unknown stemmer {other:?}"))),
        };
        Ok(Self {
            config: config.clone(),
            stopwords,
            lemmatizer,
        })
    }

    pub fn config(&self) -> &NormalizerConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> String {
        self.config.fingerprint()
    }

    pub fn is_stopword(&self, lowercase: &str) -> bool {
        self.stopwords.contains(lowercase)
    }

    pub fn lemma(&self, lowercase: &str) -> String {
        match &self.lemmatizer {
            Lemmatizer::None => lowercase.to_string(),
            Lemmatizer::Snowball(s) => s.stem(lowercase).into_owned(),
            Lemmatizer::Table(t) => t
                .get(lowercase)
                .cloned()
                .unwrap_or_else(|| lowercase.to_string()),
        }
    }

    pub fn normalize(&self, body: &str) -> TokenSeq {
        TokenSeq {
            tokens: self
                .terms_with_spans(body)
                .into_iter()
                .map(|(_, t)| t)
                .collect(),
        }
    }

    /// Normalized terms together with the byte span of the word each came from.
    pub fn terms_with_spans(&self, body: &str) -> Vec<(Range<usize>, String)> {
        word_spans(body)
            .filter_map(|span| {
                let lower = body[span.clone()].to_lowercase();
                if self.is_stopword(&lower) {
                    return None;
                }
                let lemma = self.lemma(&lower);
                (!lemma.is_empty()).then_some((span, lemma))
            })
            .collect()
    }
}

/// Byte spans of maximal alphanumeric runs that contain at least one letter.
pub fn word_spans(body: &str) -> impl Iterator<Item = Range<usize>> + '_ {
    let mut iter = body.char_indices().peekable();
    std::iter::from_fn(move || loop {
        let (start, c) = iter.next()?;
        if !c.is_alphanumeric() {
            continue;
        }
        let mut end = start + c.len_utf8();
        let mut has_letter = c.is_alphabetic();
        while let Some(&(i, c)) = iter.peek() {
            if !c.is_alphanumeric() {
                break;
            }
            has_letter |= c.is_alphabetic();
            end = i + c.len_utf8();
            iter.next();
        }
        if has_letter {
            return Some(start..end);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_normalizer() -> Normalizer {
        Normalizer::new(&NormalizerConfig::default()).unwrap()
    }

    #[test]
    fn stems_short_sentence() {
        let cfg = NormalizerConfig::default().with_stopword_lines("a\n");
        let n = Normalizer::new(&cfg).unwrap();
        assert_eq!(
            n.normalize("A Corte decidiu.").tokens,
            vec!["cort", "decid"]
        );
    }

    #[test]
    fn empty_and_punctuation_only() {
        let n = default_normalizer();
        assert!(n.normalize("").is_empty());
        assert!(n.normalize("!!! ???").is_empty());
    }

    #[test]
    fn drops_numbers_and_stopwords() {
        let n = default_normalizer();
        let t = n.normalize("O recurso, de 2019, não foi provido; art. 5º");
        assert!(t.tokens.iter().all(|w| w.chars().any(char::is_alphabetic)));
        assert!(!t.tokens.iter().any(|w| w == "o" || w == "de" || w == "não"));
        assert!(t.tokens.iter().all(|w| *w == w.to_lowercase()));
    }

    #[test]
    fn unknown_ids_are_configuration_errors() {
        let cfg = NormalizerConfig {
            stopwords: "klingon".into(),
            ..NormalizerConfig::default()
        };
        assert!(matches!(Normalizer::new(&cfg), Err(Error::Config(_))));
        let cfg = NormalizerConfig {
            stemmer: "porter-9000".into(),
            ..NormalizerConfig::default()
        };
        assert!(matches!(Normalizer::new(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn lemma_table_and_noop() {
        let mut cfg = NormalizerConfig {
            stopwords: "none".into(),
            stemmer: "lemma-table".into(),
            ..Default::default()
        };
        cfg.lemma_table.insert("decidiu".into(), "decidir".into());
        let n = Normalizer::new(&cfg).unwrap();
        assert_eq!(
            n.normalize("Decidiu a corte").tokens,
            vec!["decidir", "a", "corte"]
        );

        cfg.stemmer = "none".into();
        let n = Normalizer::new(&cfg).unwrap();
        assert_eq!(
            n.normalize("Decidiu a corte").tokens,
            vec!["decidiu", "a", "corte"]
        );
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = NormalizerConfig::default();
        let b = NormalizerConfig::default().with_stopword_lines("x\n");
        assert_eq!(a.fingerprint(), NormalizerConfig::default().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn word_spans_skip_punctuation() {
        let s = "Aplica-se, 10 vezes!";
        let words: Vec<&str> = word_spans(s).map(|r| &s[r]).collect();
        assert_eq!(words, vec!["Aplica", "se", "vezes"]);
    }
}
