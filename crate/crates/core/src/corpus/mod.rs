//! Documents, precedents, and the dataset preparation steps: loading,
//! deduplication, balanced sampling and stratified splitting.

mod citations;
mod normalize;
mod segment;

pub use citations::{fold_char, CitationMatch, CitationPatterns, DEFAULT_PATTERNS};
pub use normalize::{word_spans, Normalizer, NormalizerConfig, TokenSeq};
pub use segment::{segment, SegmentedText, Segmenter, DEFAULT_ABBREVIATIONS};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{fingerprint, Error, Result};

pub const UNKNOWN_JUSTICE: &str = "unknown justice";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingPrecedent {
    #[serde(rename = "id")]
    pub bp_id: u32,
    pub statement: String,
    pub published: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub title: String,
    pub body: String,
    /// `None` for missing dates and for the 1970-01-01 placeholder.
    pub date: Option<NaiveDate>,
    pub rapporteur: String,
    pub doc_type: String,
    pub explicit_bps: BTreeSet<u32>,
}

impl Document {
    /// `YYYY-MM` of the decision date, if it has one.
    pub fn month(&self) -> Option<Month> {
        self.date.map(Month::from)
    }

    /// The single explicit label, if the document cites exactly one precedent.
    pub fn single_label(&self) -> Option<u32> {
        (self.explicit_bps.len() == 1).then(|| *self.explicit_bps.iter().next().unwrap())
    }
}

/// Calendar month, serialized as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    pub year: i32,
    pub month: u32,
}

impl From<NaiveDate> for Month {
    fn from(d: NaiveDate) -> Self {
        Month {
            year: d.year(),
            month: d.month(),
        }
    }
}

impl std::fmt::Display for Month {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl std::str::FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("invalid month {s:?}, expected YYYY-MM"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        if y.len() != 4 || !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(Month { year, month })
    }
}

impl Serialize for Month {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineIssue {
    pub file: String,
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub documents_loaded: usize,
    pub precedents_loaded: usize,
    pub rejected: Vec<LineIssue>,
    pub warnings: Vec<LineIssue>,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub precedents: Vec<BindingPrecedent>,
    pub report: LoadReport,
}

impl Corpus {
    pub fn fingerprint(&self) -> String {
        fingerprint::of_json(&(&self.documents, &self.precedents))
    }
}

/// Loads `documents.jsonl` and `precedents.jsonl` from a directory.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    load_corpus_files(dir.join("documents.jsonl"), dir.join("precedents.jsonl"))
}

pub fn load_corpus_files(
    documents: impl AsRef<Path>,
    precedents: impl AsRef<Path>,
) -> Result<Corpus> {
    let (documents, precedents) = (documents.as_ref(), precedents.as_ref());
    let doc_text = fs::read_to_string(documents).map_err(|e| Error::io(documents, e))?;
    let bp_text = fs::read_to_string(precedents).map_err(|e| Error::io(precedents, e))?;
    parse_corpus(
        &doc_text,
        &documents.display().to_string(),
        &bp_text,
        &precedents.display().to_string(),
    )
}

/// One JSON object per line, newline-terminated.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

/// Writes `documents.jsonl` and `precedents.jsonl` into `dir`, creating it if needed.
pub fn write_corpus(
    dir: impl AsRef<Path>,
    documents: &[Document],
    precedents: &[BindingPrecedent],
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in [
        ("documents.jsonl", to_jsonl(documents)?),
        ("precedents.jsonl", to_jsonl(precedents)?),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawPrecedent {
    id: Option<i64>,
    statement: Option<String>,
    published: Option<String>,
}

#[derive(Deserialize)]
struct RawDocument {
    id: Option<String>,
    title: Option<String>,
    body: Option<String>,
    date: Option<String>,
    rapporteur: Option<String>,
    doc_type: Option<String>,
    explicit_bps: Option<Vec<i64>>,
}

pub fn parse_corpus(
    doc_text: &str,
    doc_file: &str,
    bp_text: &str,
    bp_file: &str,
) -> Result<Corpus> {
    let mut report = LoadReport::default();
    let issue = |file: &str, line: usize, field: Option<&str>, message: String| LineIssue {
        file: file.to_string(),
        line,
        field: field.map(str::to_string),
        message,
    };

    let mut precedents = Vec::new();
    let mut bp_ids = HashSet::new();
    for (idx, line) in bp_text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPrecedent = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                report
                    .rejected
                    .push(issue(bp_file, lineno, None, e.to_string()));
                continue;
            }
        };
        let Some(id) = raw.id else {
            report
                .rejected
                .push(issue(bp_file, lineno, Some("id"), "missing field".into()));
            continue;
        };
        let Some(bp_id) = u32::try_from(id).ok().filter(|&v| v > 0) else {
            report.rejected.push(issue(
                bp_file,
                lineno,
                Some("id"),
                format!("{id} is not a positive integer"),
            ));
            continue;
        };
        let statement = raw.statement.unwrap_or_default();
        if statement.trim().is_empty() {
            report.rejected.push(issue(
                bp_file,
                lineno,
                Some("statement"),
                "missing or empty".into(),
            ));
            continue;
        }
        let published = match parse_date(raw.published.as_deref()) {
            Ok(d) => d,
            Err(msg) => {
                report
                    .warnings
                    .push(issue(bp_file, lineno, Some("published"), msg));
                None
            }
        };
        if !bp_ids.insert(bp_id) {
            return Err(Error::DuplicatePrecedentId(bp_id));
        }
        precedents.push(BindingPrecedent {
            bp_id,
            statement,
            published,
        });
    }

    let mut documents = Vec::new();
    let mut doc_ids = HashSet::new();
    for (idx, line) in doc_text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                report
                    .rejected
                    .push(issue(doc_file, lineno, None, e.to_string()));
                continue;
            }
        };
        let mut reject = |field: &str, msg: &str| {
            report
                .rejected
                .push(issue(doc_file, lineno, Some(field), msg.to_string()));
        };
        let Some(doc_id) = raw.id.filter(|s| !s.is_empty()) else {
            reject("id", "missing or empty");
            continue;
        };
        let Some(title) = raw.title else {
            reject("title", "missing field");
            continue;
        };
        let Some(body) = raw.body.filter(|b| !b.trim().is_empty()) else {
            reject("body", "missing or empty");
            continue;
        };
        let Some(doc_type) = raw.doc_type else {
            reject("doc_type", "missing field");
            continue;
        };
        let Some(bps) = raw.explicit_bps else {
            reject("explicit_bps", "missing field");
            continue;
        };
        let mut explicit_bps = BTreeSet::new();
        let mut bad = None;
        for b in bps {
            match u32::try_from(b) {
                Ok(v) if bp_ids.contains(&v) => {
                    explicit_bps.insert(v);
                }
                _ => bad = Some(b),
            }
        }
        if let Some(b) = bad {
            reject("explicit_bps", &format!("unknown precedent {b}"));
            continue;
        }
        let date = match parse_date(raw.date.as_deref()) {
            Ok(d) => d,
            Err(msg) => {
                report
                    .warnings
                    .push(issue(doc_file, lineno, Some("date"), msg));
                None
            }
        };
        if !doc_ids.insert(doc_id.clone()) {
            return Err(Error::DuplicateDocId(doc_id));
        }
        documents.push(Document {
            doc_id,
            title,
            body,
            date,
            rapporteur: raw
                .rapporteur
                .filter(|r| !r.trim().is_empty())
                .unwrap_or_else(|| UNKNOWN_JUSTICE.to_string()),
            doc_type,
            explicit_bps,
        });
    }
    report.documents_loaded = documents.len();
    report.precedents_loaded = precedents.len();
    for r in &report.rejected {
        warn!(
            "{}:{}: rejected ({:?}): {}",
            r.file, r.line, r.field, r.message
        );
    }
    Ok(Corpus {
        documents,
        precedents,
        report,
    })
}

/// `None` for null and for the 1970-01-01 placeholder; an error message for
/// strings that are not `YYYY-MM-DD`.
fn parse_date(raw: Option<&str>) -> std::result::Result<Option<NaiveDate>, String> {
    let Some(s) = raw else { return Ok(None) };
    let d =
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("invalid date {s:?}: {e}"))?;
    if d == NaiveDate::from_ymd_opt(1970, 1, 1).unwrap() {
        return Ok(None);
    }
    Ok(Some(d))
}

/// Whitespace-collapsed lowercase body.
pub fn content_key(body: &str) -> String {
    let collapsed: Vec<String> = body.split_whitespace().map(str::to_lowercase).collect();
    fingerprint::sha256_hex(collapsed.join(" ").as_bytes())
}

/// Keeps one document per content key: the one with the smallest id. Survivors
/// keep their input order.
pub fn dedupe(docs: Vec<Document>) -> Vec<Document> {
    let mut keep: HashMap<String, usize> = HashMap::new();
    for (i, d) in docs.iter().enumerate() {
        keep.entry(content_key(&d.body))
            .and_modify(|j| {
                if d.doc_id < docs[*j].doc_id {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let survivors: HashSet<usize> = keep.into_values().collect();
    docs.into_iter()
        .enumerate()
        .filter(|(i, _)| survivors.contains(i))
        .map(|(_, d)| d)
        .collect()
}

/// Balanced single-label sample: exactly `per_class` documents for each
/// precedent in `bp_ids`, drawn from documents that cite only that precedent.
pub fn build_sample(
    docs: &[Document],
    bp_ids: &BTreeSet<u32>,
    per_class: usize,
    seed: u64,
) -> Result<Vec<Document>> {
    let mut by_class: BTreeMap<u32, Vec<&Document>> =
        bp_ids.iter().map(|&b| (b, Vec::new())).collect();
    for d in docs {
        if let Some(label) = d.single_label() {
            if let Some(v) = by_class.get_mut(&label) {
                v.push(d);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_class * bp_ids.len());
    for (class, mut members) in by_class {
        if members.len() < per_class {
            return Err(Error::ClassTooSmall {
                class,
                available: members.len(),
                required: per_class,
            });
        }
        members.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        members.shuffle(&mut rng);
        out.extend(members.into_iter().take(per_class).cloned());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Per-class target counts by the largest-remainder method; equal remainders
/// go to the earlier bucket (train, then validation, then test).
pub fn stratum_counts(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Stratified train/validation/test split of a single-label sample.
pub fn split(sample: &[Document], ratios: [f64; 3], seed: u64) -> Result<CorpusSplit> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r))
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidInput(format!(
            "split ratios {ratios:?} must be in [0,1] and sum to 1"
        )));
    }
    let mut by_class: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    for d in sample {
        let label = d.single_label().ok_or_else(|| {
            Error::InvalidInput(format!(
                "document {} does not have exactly one label",
                d.doc_id
            ))
        })?;
        by_class.entry(label).or_default().push(&d.doc_id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CorpusSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for (class, mut ids) in by_class {
        if ids.len() < 3 {
            return Err(Error::ClassTooSmall {
                class,
                available: ids.len(),
                required: 3,
            });
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let [n_train, n_val, _] = stratum_counts(ids.len(), ratios);
        for (i, id) in ids.into_iter().enumerate() {
            let bucket = if i < n_train {
                &mut out.train
            } else if i < n_train + n_val {
                &mut out.validation
            } else {
                &mut out.test
            };
            bucket.push(id.to_string());
        }
    }
    Ok(out)
}
