mod common;

use std::collections::{BTreeSet, HashSet};

use chrono::NaiveDate;
use common::small_model;
use precedent_core::analytics::{
    angular_similarity, document_score, filter_records, paragraph_similarities, timeline_bins,
    topic_clusters, TimelineFilter,
};
use precedent_core::citation::{CitationKind, CitationRecord};
use precedent_core::corpus::{segment, Document, Month};
use precedent_core::embedding::{EmbeddingPipeline, PipelineConfig};
use proptest::prelude::*;

fn toy_pipeline() -> EmbeddingPipeline {
    let bodies = [
        "Imposto sobre serviço municipal cobrado.",
        "Imposto municipal sobre propriedade urbana.",
        "Prisão preventiva e liberdade provisória.",
        "Liberdade provisória negada na prisão.",
    ];
    EmbeddingPipeline::fit(
        &PipelineConfig {
            min_df: 1,
            k: 3,
            ..PipelineConfig::default()
        },
        &bodies,
    )
    .unwrap()
}

#[test]
fn paragraph_similarity_chains_the_stages() {
    let p = toy_pipeline();
    let body = "Imposto municipal cobrado.\n\nLiberdade provisória.\n\n!!!";
    let seg = segment(body);
    let statement = "Imposto sobre serviço municipal.";
    let sims = paragraph_similarities(&p, body, &seg, statement);
    assert_eq!(sims.len(), 3);
    let project = |text: &str| {
        let v = p.tfidf().transform(&p.tokens(text));
        p.svd().project(&v).unwrap()
    };
    let target = project(statement);
    for (s, span) in sims.iter().zip(&seg.paragraphs) {
        let u = project(&body[span.clone()]);
        let dot: f64 = u.iter().zip(&target).map(|(a, b)| a * b).sum();
        let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nt = target.iter().map(|a| a * a).sum::<f64>().sqrt();
        let expected = if nu == 0.0 {
            0.0
        } else {
            1.0 - (dot / (nu * nt)).clamp(-1.0, 1.0).acos() / std::f64::consts::PI
        };
        assert!((s.similarity - expected).abs() < 1e-12);
        assert_eq!(s.length, body[span.clone()].chars().count());
    }
    assert_eq!(sims[2].similarity, 0.0, "punctuation-only paragraph");
    assert!(sims[0].similarity > sims[1].similarity);
}

#[test]
fn paragraph_quoting_the_statement_scores_highest() {
    let t = small_model(4, 40, 6);
    let mut checked = 0;
    for doc in t.documents.iter().take(60) {
        for bp in &t.corpus.precedents {
            let seg = segment(&doc.body);
            let sims = paragraph_similarities(&t.pipeline, &doc.body, &seg, &bp.statement);
            let quoting: Vec<usize> = seg
                .paragraphs
                .iter()
                .enumerate()
                .filter(|(_, s)| doc.body[(*s).clone()].contains(&bp.statement))
                .map(|(i, _)| i)
                .collect();
            if let Some(&q) = quoting.first() {
                assert_eq!(
                    Some(sims[q].similarity),
                    document_score(&sims),
                    "{}",
                    doc.doc_id
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 3, "only {checked} quoting paragraphs");
}

#[test]
fn topic_keywords_separate_disjoint_vocabularies() {
    let p = toy_pipeline();
    let bodies = [
        "alfa beta gama alfa beta",
        "beta gama alfa gama",
        "delta omega sigma delta",
        "sigma omega delta omega",
    ];
    let c = topic_clusters(&p, &bodies, 2, 500, 1).unwrap();
    assert!(c.model.is_monotone(1e-10));
    assert_eq!(c.assignments[0], c.assignments[1]);
    assert_eq!(c.assignments[2], c.assignments[3]);
    assert_ne!(c.assignments[0], c.assignments[2]);
    let tops: Vec<HashSet<&str>> = c
        .keywords
        .iter()
        .map(|kw| {
            kw.iter()
                .filter(|(_, w)| *w > 1e-6)
                .map(|(t, _)| t.as_str())
                .collect()
        })
        .collect();
    assert!(tops[0].is_disjoint(&tops[1]));
    let single = topic_clusters(&p, &bodies, 1, 50, 1).unwrap();
    assert_eq!(single.keywords[0].len(), single.vocabulary.len().min(10));
    assert!(topic_clusters(&p, &bodies, 99, 10, 1).unwrap().model.k <= 4);
}

fn doc(id: usize, rapporteur: &str, doc_type: &str) -> Document {
    Document {
        doc_id: format!("d{id}"),
        title: String::new(),
        body: "x".into(),
        date: NaiveDate::from_ymd_opt(2020, 1, 1),
        rapporteur: rapporteur.into(),
        doc_type: doc_type.into(),
        explicit_bps: BTreeSet::new(),
    }
}

#[test]
fn one_month_mixed_kinds() {
    let m = Some(Month {
        year: 2020,
        month: 3,
    });
    let docs: Vec<Document> = (0..5).map(|i| doc(i, "A", "Rcl")).collect();
    let records: Vec<CitationRecord> = (0..5)
        .map(|i| CitationRecord {
            doc_id: format!("d{i}"),
            bp_id: 4,
            kind: if i < 3 {
                CitationKind::Explicit
            } else {
                CitationKind::Potential
            },
            confidence: if i < 3 { 1.0 } else { 0.97 },
            month: m,
        })
        .collect();
    let bins = timeline_bins(&records, &docs, &TimelineFilter::default());
    assert_eq!(bins.len(), 1);
    assert_eq!(
        (bins[0].total, bins[0].explicit, bins[0].potential),
        (5, 3, 2)
    );
    assert!(TimelineFilter::from_pairs([("colour", "red")]).is_err());
}

fn arb_records() -> impl Strategy<Value = (Vec<Document>, Vec<CitationRecord>)> {
    proptest::collection::vec(
        (
            0usize..3,
            0usize..2,
            1u32..4,
            any::<bool>(),
            0.0f64..=1.0,
            proptest::option::weighted(0.9, 0u32..4),
        ),
        0..80,
    )
    .prop_map(|rows| {
        let mut docs = Vec::new();
        let mut records = Vec::new();
        for (i, (r, t, bp, explicit, conf, month)) in rows.into_iter().enumerate() {
            docs.push(doc(i, ["A", "B", "C"][r], ["Rcl", "HC"][t]));
            records.push(CitationRecord {
                doc_id: format!("d{i}"),
                bp_id: bp,
                kind: if explicit {
                    CitationKind::Explicit
                } else {
                    CitationKind::Potential
                },
                confidence: if explicit { 1.0 } else { conf },
                month: month.map(|m| Month {
                    year: 2019,
                    month: m + 1,
                }),
            });
        }
        (docs, records)
    })
}

proptest! {
    #[test]
    fn bins_equal_a_linear_scan((docs, records) in arb_records(), tc in 0.0f64..=1.0, rap in proptest::option::of(0usize..3)) {
        let rapporteur = rap.map(|r| ["A", "B", "C"][r].to_string());
        let filter = TimelineFilter { rapporteur: rapporteur.clone(), t_c: tc, ..TimelineFilter::default() };
        let bins = timeline_bins(&records, &docs, &filter);
        for b in &bins {
            prop_assert_eq!(b.total, b.explicit + b.potential);
            let scan = |kind: CitationKind| records.iter().zip(&docs).filter(|(r, d)| {
                r.bp_id == b.bp_id && r.month == Some(b.month) && r.kind == kind
                    && (kind == CitationKind::Explicit || r.confidence >= tc)
                    && rapporteur.as_ref().is_none_or(|x| *x == d.rapporteur)
            }).count();
            prop_assert_eq!(b.explicit, scan(CitationKind::Explicit));
            prop_assert_eq!(b.potential, scan(CitationKind::Potential));
        }
        let total: usize = bins.iter().map(|b| b.total).sum();
        prop_assert_eq!(total, filter_records(&records, &docs, &filter).len());

        let stricter = TimelineFilter { t_c: (tc + 0.1).min(1.0), ..filter.clone() };
        for b in timeline_bins(&records, &docs, &stricter) {
            let before = bins.iter().find(|o| o.bp_id == b.bp_id && o.month == b.month).unwrap();
            prop_assert!(b.potential <= before.potential);
        }
    }

    #[test]
    fn similarity_bounds(u in proptest::collection::vec(-1.0f64..1.0, 3), v in proptest::collection::vec(-1.0f64..1.0, 3)) {
        let s = angular_similarity(&u, &v);
        prop_assert!((0.0..=1.0).contains(&s));
    }
}
