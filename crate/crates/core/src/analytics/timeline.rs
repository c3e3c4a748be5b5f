use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::citation::{CitationKind, CitationRecord};
use crate::corpus::{Document, Month};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineBin {
    pub bp_id: u32,
    pub month: Month,
    pub total: usize,
    pub explicit: usize,
    pub potential: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineFilter {
    pub kinds: BTreeSet<CitationKind>,
    pub rapporteur: Option<String>,
    pub doc_type: Option<String>,
    /// Minimum confidence for potential records.
    pub t_c: f64,
}

impl Default for TimelineFilter {
    fn default() -> Self {
        Self {
            kinds: [CitationKind::Explicit, CitationKind::Potential].into(),
            rapporteur: None,
            doc_type: None,
            t_c: 0.0,
        }
    }
}

impl TimelineFilter {
    /// Parses `kinds`, `rapporteur`, `doc_type` and `tc` query pairs. Empty
    /// values mean "no filter"; any other key is an error.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut f = Self::default();
        for (key, value) in pairs {
            match key {
                "kinds" if !value.is_empty() => {
                    f.kinds = value
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?;
                }
                "rapporteur" if !value.is_empty() => f.rapporteur = Some(value.to_string()),
                "doc_type" if !value.is_empty() => f.doc_type = Some(value.to_string()),
                "tc" if !value.is_empty() => {
                    let t: f64 = value.parse().map_err(|_| {
                        Error::InvalidInput(format!("tc {value:?} is not a number"))
                    })?;
                    if !(0.0..=1.0).contains(&t) {
                        return Err(Error::InvalidInput(format!("tc = {t} is outside [0, 1]")));
                    }
                    f.t_c = t;
                }
                "kinds" | "rapporteur" | "doc_type" | "tc" => {}
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown filter field {other:?}"
                    )))
                }
            }
        }
        Ok(f)
    }

    pub fn accepts(&self, record: &CitationRecord, doc: Option<&Document>) -> bool {
        if !self.kinds.contains(&record.kind) {
            return false;
        }
        if record.kind == CitationKind::Potential && record.confidence < self.t_c {
            return false;
        }
        if self.rapporteur.is_some() || self.doc_type.is_some() {
            let Some(doc) = doc else { return false };
            if self
                .rapporteur
                .as_deref()
                .is_some_and(|r| r != doc.rapporteur)
            {
                return false;
            }
            if self.doc_type.as_deref().is_some_and(|t| t != doc.doc_type) {
                return false;
            }
        }
        true
    }
}

/// Dated records passing `filter`.
pub fn filter_records<'a>(
    records: &'a [CitationRecord],
    docs: &[Document],
    filter: &TimelineFilter,
) -> Vec<&'a CitationRecord> {
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    records
        .iter()
        .filter(|r| r.month.is_some())
        .filter(|r| filter.accepts(r, by_id.get(r.doc_id.as_str()).copied()))
        .collect()
}

/// Counts per (precedent, month), sorted by precedent then month. Months with
/// no records are omitted.
pub fn timeline_bins(
    records: &[CitationRecord],
    docs: &[Document],
    filter: &TimelineFilter,
) -> Vec<TimelineBin> {
    let mut bins: BTreeMap<(u32, Month), (usize, usize)> = BTreeMap::new();
    for r in filter_records(records, docs, filter) {
        let entry = bins
            .entry((r.bp_id, r.month.expect("filtered to dated records")))
            .or_default();
        match r.kind {
            CitationKind::Explicit => entry.0 += 1,
            CitationKind::Potential => entry.1 += 1,
        }
    }
    bins.into_iter()
        .map(|((bp_id, month), (explicit, potential))| TimelineBin {
            bp_id,
            month,
            total: explicit + potential,
            explicit,
            potential,
        })
        .collect()
}
