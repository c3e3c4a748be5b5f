//! Read-only JSON API. [`Api::get`] maps a request target to a status and a
//! body; the HTTP server is a thin wrapper around it, so every payload can be
//! produced and compared without a socket.
//!
//! Text positions in payloads are half-open ranges of Unicode scalar values.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Range;
use std::sync::Mutex;

use precedent_core::analytics::{
    document_score, filter_records, order_documents, paragraph_similarities, similarity_histogram,
    surface_forms, timeline_bins, topic_clusters, Scored, TimelineBin, TimelineFilter,
    NMF_ITERATIONS,
};
use precedent_core::artifact::ModelArtifact;
use precedent_core::citation::{CitationKind, CitationRecord};
use precedent_core::corpus::{segment, BindingPrecedent, Document, Month};
use precedent_core::explainer::{explain, Explanation, LimeConfig};
use precedent_core::fingerprint;
use serde::Serialize;

use crate::error::{EngineError, Result};
use crate::store::{ProjectStore, SCHEMA_VERSION};

pub const HISTOGRAM_BINS: usize = 10;
/// Minimum length, in characters, of a shared term highlighted in the reader.
pub const COMMON_TERM_MIN_CHARS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: String,
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    data: T,
}

fn json<T: Serialize>(status: u16, data: T) -> Response {
    let body = serde_json::to_string(&Envelope {
        schema_version: SCHEMA_VERSION,
        data,
    })
    .expect("payloads serialize");
    Response { status, body }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
}

fn error(status: u16, message: &str) -> Response {
    json(status, ErrorBody { error: message })
}

struct BadRequest(String);

impl From<precedent_core::Error> for BadRequest {
    fn from(e: precedent_core::Error) -> Self {
        BadRequest(e.to_string())
    }
}

type Handled = std::result::Result<Response, BadRequest>;

/// Unicode-scalar offsets for byte offsets into one text.
struct CharIndex {
    /// `starts[i]` = byte offset of the i-th char.
    starts: Vec<usize>,
}

impl CharIndex {
    fn new(text: &str) -> Self {
        Self {
            starts: text.char_indices().map(|(b, _)| b).collect(),
        }
    }

    fn at(&self, byte: usize) -> usize {
        self.starts.partition_point(|&b| b < byte)
    }

    fn range(&self, r: &Range<usize>) -> Range<usize> {
        self.at(r.start)..self.at(r.end)
    }
}

#[derive(Serialize)]
struct Health<'a> {
    status: &'static str,
    store_version: &'a str,
    documents: usize,
    precedents: usize,
    records: usize,
    classes: &'a [u32],
    t_c: f64,
}

#[derive(Serialize)]
struct PrecedentEntry<'a> {
    id: u32,
    statement: &'a str,
    published: Option<String>,
    in_model: bool,
}

#[derive(Serialize)]
struct Precedents<'a> {
    precedents: Vec<PrecedentEntry<'a>>,
}

#[derive(Serialize)]
struct Filters {
    rapporteurs: BTreeSet<String>,
    doc_types: BTreeSet<String>,
}

#[derive(Serialize)]
struct Timeline {
    bins: Vec<TimelineBin>,
}

#[derive(Serialize)]
struct ParagraphBar {
    length: usize,
    similarity: f64,
}

#[derive(Serialize)]
struct BarDocument {
    doc_id: String,
    doc_type: String,
    kind: CitationKind,
    confidence: f64,
    document_score: f64,
    topic: usize,
    paragraphs: Vec<ParagraphBar>,
}

impl Scored for BarDocument {
    fn score(&self) -> f64 {
        self.document_score
    }

    fn doc_id(&self) -> &str {
        &self.doc_id
    }
}

#[derive(Serialize)]
struct Keyword {
    term: String,
    /// Most common spelling of the term in the selection.
    label: String,
    weight: f64,
}

#[derive(Serialize)]
struct Topic {
    index: usize,
    documents: usize,
    keywords: Vec<Keyword>,
}

#[derive(Serialize)]
struct Bar {
    bp: u32,
    month: Month,
    clusters: usize,
    documents: Vec<BarDocument>,
    topics: Vec<Topic>,
    histogram: Vec<usize>,
}

#[derive(Serialize)]
struct ParagraphSpan {
    span: Range<usize>,
    similarity: Option<f64>,
}

#[derive(Serialize)]
struct SentenceSpan {
    span: Range<usize>,
    lime_weight: Option<f64>,
}

#[derive(Serialize)]
struct ExplanationSummary {
    bp_id: u32,
    intercept: f64,
    fidelity_r2: f64,
    degenerate: bool,
    n_samples: usize,
    seed: u64,
}

#[derive(Serialize)]
struct DocumentView<'a> {
    id: &'a str,
    title: &'a str,
    date: Option<String>,
    rapporteur: &'a str,
    doc_type: &'a str,
    explicit_bps: &'a BTreeSet<u32>,
    body: &'a str,
    bp: Option<u32>,
    record: Option<&'a CitationRecord>,
    paragraphs: Vec<ParagraphSpan>,
    sentences: Vec<SentenceSpan>,
    common_terms: Vec<Range<usize>>,
    explanation: Option<ExplanationSummary>,
}

pub struct Api {
    store: ProjectStore,
    documents: Vec<Document>,
    doc_index: HashMap<String, usize>,
    precedents: Vec<BindingPrecedent>,
    model: ModelArtifact,
    records: Vec<CitationRecord>,
    record_index: HashMap<(String, u32), usize>,
    t_c: f64,
    store_version: String,
    lime: LimeConfig,
    explanations: Mutex<HashMap<(String, u32), Explanation>>,
}

impl Api {
    /// Loads every artifact and checks that they were built from each other.
    pub fn open(store: &ProjectStore) -> Result<Self> {
        let _lock = store.lock_shared()?;
        let corpus = store.load_corpus()?;
        let model = store.load_model()?;
        let (records, meta) = store.load_citations()?;
        let model_fp = model.fingerprint()?;
        let corpus_fp = corpus.fingerprint();
        if meta.model_fingerprint != model_fp {
            return Err(EngineError::Inconsistent(
                "the citation index was built with a different model; rerun `engine infer`".into(),
            ));
        }
        if meta.corpus_fingerprint != corpus_fp {
            return Err(EngineError::Inconsistent(
                "the citation index was built from a different corpus; rerun `engine infer`".into(),
            ));
        }
        let records_fp = fingerprint::of_json(&records);
        let store_version =
            fingerprint::sha256_hex(format!("{corpus_fp}:{model_fp}:{records_fp}").as_bytes());
        let doc_index = corpus
            .documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id.clone(), i))
            .collect();
        let record_index = records
            .iter()
            .enumerate()
            .map(|(i, r)| ((r.doc_id.clone(), r.bp_id), i))
            .collect();
        Ok(Self {
            store: store.clone(),
            documents: corpus.documents,
            doc_index,
            precedents: corpus.precedents,
            model,
            records,
            record_index,
            t_c: meta.t_c,
            store_version,
            lime: LimeConfig::default(),
            explanations: Mutex::new(HashMap::new()),
        })
    }

    pub fn store_version(&self) -> &str {
        &self.store_version
    }

    /// Handles `GET <target>`, where `target` is a path with an optional query.
    pub fn get(&self, target: &str) -> Response {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        let pairs: Vec<(String, String)> = form_urlencoded::parse(query.as_bytes())
            .into_owned()
            .collect();
        let result = match path {
            "/api/health" => Ok(self.health()),
            "/api/bps" => Ok(self.bps()),
            "/api/filters" => Ok(self.filters()),
            "/api/timeline" => self.timeline(&pairs),
            "/api/bar" => self.bar(&pairs),
            "/api/document" => self.document(&pairs),
            _ => return error(404, &format!("no route for {path}")),
        };
        result.unwrap_or_else(|BadRequest(msg)| error(400, &msg))
    }

    fn health(&self) -> Response {
        json(
            200,
            Health {
                status: "ok",
                store_version: &self.store_version,
                documents: self.documents.len(),
                precedents: self.precedents.len(),
                records: self.records.len(),
                classes: self.model.classifier.classes(),
                t_c: self.t_c,
            },
        )
    }

    fn bps(&self) -> Response {
        let classes = self.model.classifier.classes();
        json(
            200,
            Precedents {
                precedents: self
                    .precedents
                    .iter()
                    .map(|p| PrecedentEntry {
                        id: p.bp_id,
                        statement: &p.statement,
                        published: p.published.map(|d| d.to_string()),
                        in_model: classes.contains(&p.bp_id),
                    })
                    .collect(),
            },
        )
    }

    fn filters(&self) -> Response {
        json(
            200,
            Filters {
                rapporteurs: self
                    .documents
                    .iter()
                    .map(|d| d.rapporteur.clone())
                    .collect(),
                doc_types: self.documents.iter().map(|d| d.doc_type.clone()).collect(),
            },
        )
    }

    fn timeline(&self, pairs: &[(String, String)]) -> Handled {
        let filter =
            TimelineFilter::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        Ok(json(
            200,
            Timeline {
                bins: timeline_bins(&self.records, &self.documents, &filter),
            },
        ))
    }

    fn precedent(&self, bp: u32) -> std::result::Result<&BindingPrecedent, BadRequest> {
        self.precedents
            .iter()
            .find(|p| p.bp_id == bp)
            .ok_or_else(|| BadRequest(format!("unknown precedent {bp}")))
    }

    fn bar(&self, pairs: &[(String, String)]) -> Handled {
        let mut bp = None;
        let mut month = None;
        let mut clusters = 1usize;
        let mut filter_pairs = Vec::new();
        for (k, v) in pairs {
            match k.as_str() {
                "bp" => bp = Some(parse::<u32>("bp", v)?),
                "month" => month = Some(v.parse::<Month>()?),
                "clusters" => clusters = parse::<usize>("clusters", v)?,
                _ => filter_pairs.push((k.as_str(), v.as_str())),
            }
        }
        let bp = bp.ok_or_else(|| BadRequest("missing parameter bp".into()))?;
        let month = month.ok_or_else(|| BadRequest("missing parameter month".into()))?;
        if clusters == 0 {
            return Err(BadRequest("clusters must be at least 1".into()));
        }
        let filter = TimelineFilter::from_pairs(filter_pairs)?;
        let statement = &self.precedent(bp)?.statement;

        let selected: Vec<&CitationRecord> =
            filter_records(&self.records, &self.documents, &filter)
                .into_iter()
                .filter(|r| r.bp_id == bp && r.month == Some(month))
                .collect();
        let pipeline = &self.model.pipeline;
        let mut docs: Vec<BarDocument> = selected
            .iter()
            .map(|r| {
                let doc = &self.documents[self.doc_index[&r.doc_id]];
                let seg = segment(&doc.body);
                let sims = paragraph_similarities(pipeline, &doc.body, &seg, statement);
                BarDocument {
                    doc_id: doc.doc_id.clone(),
                    doc_type: doc.doc_type.clone(),
                    kind: r.kind,
                    confidence: r.confidence,
                    document_score: document_score(&sims).unwrap_or(0.0),
                    topic: 0,
                    paragraphs: sims
                        .iter()
                        .map(|s| ParagraphBar {
                            length: s.length,
                            similarity: s.similarity,
                        })
                        .collect(),
                }
            })
            .collect();
        order_documents(&mut docs);

        let mut topics = Vec::new();
        if !docs.is_empty() {
            let bodies: Vec<&str> = docs
                .iter()
                .map(|d| self.documents[self.doc_index[&d.doc_id]].body.as_str())
                .collect();
            match topic_clusters(
                pipeline,
                &bodies,
                clusters,
                NMF_ITERATIONS,
                self.model.training.seed,
            ) {
                Ok(c) => {
                    let labels = surface_forms(pipeline, &bodies);
                    for (d, &t) in docs.iter_mut().zip(&c.assignments) {
                        d.topic = t;
                    }
                    topics = c
                        .keywords
                        .into_iter()
                        .enumerate()
                        .map(|(index, kw)| Topic {
                            index,
                            documents: c.assignments.iter().filter(|&&t| t == index).count(),
                            keywords: kw
                                .into_iter()
                                .map(|(term, weight)| Keyword {
                                    label: labels
                                        .get(&term)
                                        .cloned()
                                        .unwrap_or_else(|| term.clone()),
                                    term,
                                    weight,
                                })
                                .collect(),
                        })
                        .collect();
                }
                // Selections without any vocabulary form one keyword-less topic.
                Err(precedent_core::Error::EmptyVocabulary(_)) => {
                    topics.push(Topic {
                        index: 0,
                        documents: docs.len(),
                        keywords: Vec::new(),
                    });
                }
                Err(e) => return Err(e.into()),
            }
        }
        let scores: Vec<f64> = docs.iter().map(|d| d.document_score).collect();
        Ok(json(
            200,
            Bar {
                bp,
                month,
                clusters: topics.len(),
                histogram: similarity_histogram(&scores, HISTOGRAM_BINS),
                documents: docs,
                topics,
            },
        ))
    }

    fn explanation(&self, doc: &Document, bp: u32) -> std::result::Result<Explanation, BadRequest> {
        let key = (doc.doc_id.clone(), bp);
        if let Some(e) = self.explanations.lock().expect("cache lock").get(&key) {
            return Ok(e.clone());
        }
        let cached = self
            .store
            .explanation_path(&doc.doc_id, bp, &self.lime.fingerprint());
        let e = match self.store.read_json::<Explanation>(&cached) {
            Ok(e) if e.config == self.lime => e,
            _ => explain(
                &self.model.pipeline,
                &self.model.classifier,
                doc,
                bp,
                &self.lime,
            )?,
        };
        self.explanations
            .lock()
            .expect("cache lock")
            .insert(key, e.clone());
        Ok(e)
    }

    fn document(&self, pairs: &[(String, String)]) -> Handled {
        let mut id = None;
        let mut bp = None;
        for (k, v) in pairs {
            match k.as_str() {
                "id" => id = Some(v.as_str()),
                "bp" if !v.is_empty() => bp = Some(parse::<u32>("bp", v)?),
                "bp" => {}
                other => return Err(BadRequest(format!("unknown parameter {other:?}"))),
            }
        }
        let id = id.ok_or_else(|| BadRequest("missing parameter id".into()))?;
        let Some(&index) = self.doc_index.get(id) else {
            return Ok(error(404, &format!("unknown document {id:?}")));
        };
        let doc = &self.documents[index];
        let seg = segment(&doc.body);
        let chars = CharIndex::new(&doc.body);

        let mut paragraph_sims = vec![None; seg.paragraphs.len()];
        let mut sentence_weights = vec![None; seg.sentences.len()];
        let mut common_terms = Vec::new();
        let mut record = None;
        let mut explanation = None;
        if let Some(bp) = bp {
            let statement = &self.precedent(bp)?.statement;
            let pipeline = &self.model.pipeline;
            for s in paragraph_similarities(pipeline, &doc.body, &seg, statement) {
                paragraph_sims[s.paragraph_index] = Some(s.similarity);
            }
            let normalizer = pipeline.normalizer();
            let statement_terms: HashSet<String> =
                normalizer.normalize(statement).tokens.into_iter().collect();
            common_terms = normalizer
                .terms_with_spans(&doc.body)
                .into_iter()
                .filter(|(_, t)| {
                    t.chars().count() >= COMMON_TERM_MIN_CHARS && statement_terms.contains(t)
                })
                .map(|(span, _)| chars.range(&span))
                .collect();
            record = self
                .record_index
                .get(&(doc.doc_id.clone(), bp))
                .map(|&i| &self.records[i]);
            if record.is_some_and(|r| r.kind == CitationKind::Potential) {
                let e = self.explanation(doc, bp)?;
                for (w, s) in sentence_weights.iter_mut().zip(&e.sentences) {
                    *w = Some(s.weight);
                }
                explanation = Some(ExplanationSummary {
                    bp_id: e.bp_id,
                    intercept: e.intercept,
                    fidelity_r2: e.fidelity_r2,
                    degenerate: e.degenerate,
                    n_samples: e.n_samples,
                    seed: e.sample_seed,
                });
            }
        }
        Ok(json(
            200,
            DocumentView {
                id: &doc.doc_id,
                title: &doc.title,
                date: doc.date.map(|d| d.to_string()),
                rapporteur: &doc.rapporteur,
                doc_type: &doc.doc_type,
                explicit_bps: &doc.explicit_bps,
                body: &doc.body,
                bp,
                record,
                paragraphs: seg
                    .paragraphs
                    .iter()
                    .zip(paragraph_sims)
                    .map(|(span, similarity)| ParagraphSpan {
                        span: chars.range(span),
                        similarity,
                    })
                    .collect(),
                sentences: seg
                    .sentences
                    .iter()
                    .zip(sentence_weights)
                    .map(|(span, lime_weight)| SentenceSpan {
                        span: chars.range(span),
                        lime_weight,
                    })
                    .collect(),
                common_terms,
                explanation,
            },
        ))
    }
}

fn parse<T: std::str::FromStr>(name: &str, value: &str) -> std::result::Result<T, BadRequest> {
    value
        .parse()
        .map_err(|_| BadRequest(format!("invalid value {value:?} for {name}")))
}
