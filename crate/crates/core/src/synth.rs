//! Seeded synthetic corpus with a known class structure.
//!
//! Every class owns a vocabulary of pseudo-Portuguese terms; a fraction of
//! each class vocabulary is drawn from a pool shared with other classes.
//! Documents mix topic sentences (class vocabulary), boilerplate sentences
//! (common legal filler) and the occasional distractor sentence from another
//! class. Labeled documents carry a literal "Súmula Vinculante N" citation;
//! unlabeled ones are written about a latent class but never cite it with the
//! default phrasing.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BindingPrecedent, Document, Normalizer, NormalizerConfig, UNKNOWN_JUSTICE};
use crate::{Error, Result};

const FILLER: &[&str] = &[
    "recurso",
    "decisão",
    "tribunal",
    "processo",
    "agravo",
    "relator",
    "acórdão",
    "julgamento",
    "parte",
    "autos",
    "pedido",
    "direito",
    "jurisprudência",
    "competência",
    "reclamação",
    "ministro",
    "plenário",
    "ordem",
    "fundamento",
    "análise",
    "matéria",
    "questão",
    "caso",
    "prazo",
    "sentença",
    "instância",
    "petição",
    "norma",
    "interpretação",
    "entendimento",
    "aplicação",
    "pretensão",
    "legislação",
    "requerente",
    "interessado",
    "manifestação",
    "procuradoria",
    "provimento",
    "impugnação",
    "efeito",
];

const CONNECTORS: &[&str] = &[
    "de", "da", "do", "que", "a", "o", "em", "para", "com", "não", "por", "na", "no", "e",
];

const RAPPORTEURS: &[&str] = &[
    "Min. Aurora Vidal",
    "Min. Bento Carvalho",
    "Min. Clara Moreira",
    "Min. Dario Fontes",
    "Min. Elisa Ramos",
    "Min. Fábio Teixeira",
    "Min. Gilda Prates",
    "Min. Heitor Lobo",
];

const DOC_TYPES: &[&str] = &["Rcl", "ARE", "RE", "HC", "Inq", "Pet"];

/// Precedent numbers used for the classes, in order.
pub const DEFAULT_BP_IDS: [u32; 10] = [3, 4, 10, 11, 13, 14, 17, 26, 33, 37];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub bp_ids: Vec<u32>,
    /// Single-label documents generated per class.
    pub docs_per_class: usize,
    /// Fraction of each class vocabulary taken from the shared pool.
    pub overlap: f64,
    pub class_vocab: usize,
    /// Documents without an explicit citation, written about a latent class.
    pub unlabeled: usize,
    /// Documents citing two precedents at once.
    pub multi_label: usize,
    /// Extra documents repeating an existing body under a new id and title.
    pub duplicates: usize,
    /// Fraction of documents dated with the 1970-01-01 placeholder.
    pub undated: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            bp_ids: DEFAULT_BP_IDS.to_vec(),
            docs_per_class: 300,
            overlap: 0.3,
            class_vocab: 60,
            unlabeled: 600,
            multi_label: 20,
            duplicates: 20,
            undated: 0.02,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub documents: Vec<Document>,
    pub precedents: Vec<BindingPrecedent>,
    /// Class each document was written about (multi-label documents map to their first class).
    pub latent: BTreeMap<String, u32>,
    /// Class vocabularies, index-aligned with the configured bp_ids.
    pub vocabularies: Vec<Vec<String>>,
}

struct Generator {
    rng: ChaCha8Rng,
    vocab: Vec<Vec<String>>,
    own: Vec<Vec<String>>,
}

/// Pseudo-words with pairwise distinct stems under `normalizer`, none of them stopwords.
fn invent_words(
    n: usize,
    normalizer: &Normalizer,
    rng: &mut ChaCha8Rng,
    taken: &mut HashSet<String>,
) -> Vec<String> {
    const ONSETS: &[&str] = &[
        "b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "br", "tr", "pl", "cr",
    ];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
    const CODAS: &[&str] = &["l", "r", "s", "n", "x", "z"];
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).unwrap());
            w.push_str(VOWELS.choose(rng).unwrap());
        }
        w.push_str(CODAS.choose(rng).unwrap());
        if normalizer.is_stopword(&w) {
            continue;
        }
        let stem = normalizer.lemma(&w);
        if stem.chars().count() < 4 || !taken.insert(stem) {
            continue;
        }
        words.push(w);
    }
    words
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

impl Generator {
    fn sentence(&mut self, class: Option<usize>, topical: f64) -> String {
        let len = self.rng.gen_range(7..=13);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let r: f64 = self.rng.gen();
            let w = match class {
                Some(c) if r < topical => self.vocab[c].choose(&mut self.rng).unwrap().clone(),
                _ if r < topical + (1.0 - topical) * 0.5 => {
                    FILLER.choose(&mut self.rng).unwrap().to_string()
                }
                _ => CONNECTORS.choose(&mut self.rng).unwrap().to_string(),
            };
            words.push(w);
        }
        format!("{}.", capitalize(&words.join(" ")))
    }

    fn statement(&mut self, class: usize) -> String {
        let mut parts = Vec::new();
        for _ in 0..2 {
            let n = self.rng.gen_range(8..=11);
            let words: Vec<String> = (0..n)
                .map(|i| {
                    if i % 3 == 2 {
                        CONNECTORS.choose(&mut self.rng).unwrap().to_string()
                    } else {
                        self.own[class].choose(&mut self.rng).unwrap().clone()
                    }
                })
                .collect();
            parts.push(format!("{}.", capitalize(&words.join(" "))));
        }
        parts.join(" ")
    }

    /// A body about `class`, optionally with sentences spliced in.
    fn body(&mut self, class: usize, n_classes: usize, inserts: Vec<String>) -> String {
        let n_par = self.rng.gen_range(3..=5);
        let mut paragraphs: Vec<Vec<String>> = Vec::with_capacity(n_par + 1);
        for _ in 0..n_par {
            let n_sent = self.rng.gen_range(2..=4);
            let mut sentences = Vec::with_capacity(n_sent);
            for _ in 0..n_sent {
                let roll: f64 = self.rng.gen();
                let s = if roll < 0.5 {
                    self.sentence(Some(class), 0.55)
                } else if roll < 0.85 {
                    self.sentence(None, 0.0)
                } else {
                    let other = (class + self.rng.gen_range(1..n_classes)) % n_classes;
                    self.sentence(Some(other), 0.4)
                };
                sentences.push(s);
            }
            paragraphs.push(sentences);
        }
        for s in inserts {
            let p = self.rng.gen_range(0..paragraphs.len());
            let at = self.rng.gen_range(0..=paragraphs[p].len());
            paragraphs[p].insert(at, s);
        }
        paragraphs
            .iter()
            .map(|p| p.join(" "))
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    fn date(&mut self, undated: f64) -> Option<NaiveDate> {
        if self.rng.gen_bool(undated) {
            return NaiveDate::from_ymd_opt(1970, 1, 1);
        }
        let start = NaiveDate::from_ymd_opt(2009, 1, 1).unwrap();
        start.checked_add_days(Days::new(self.rng.gen_range(0..4700)))
    }

    fn rapporteur(&mut self) -> String {
        if self.rng.gen_bool(0.03) {
            UNKNOWN_JUSTICE.to_string()
        } else {
            RAPPORTEURS.choose(&mut self.rng).unwrap().to_string()
        }
    }

    fn doc_type(&mut self) -> String {
        DOC_TYPES.choose(&mut self.rng).unwrap().to_string()
    }
}

fn citation_sentence(rng: &mut ChaCha8Rng, bp: u32) -> String {
    const FORMS: &[&str] = &[
        "Súmula Vinculante {}",
        "Súmula Vinculante nº {}",
        "súmula vinculante n. {}",
        "SÚMULA VINCULANTE {}",
        "Sumula Vinculante no {}",
    ];
    const FRAMES: &[&str] = &[
        "Nos termos da {}, o pedido procede.",
        "Alega-se ofensa à {} no caso concreto.",
        "A decisão reclamada contraria a {}.",
        "Aplica-se ao caso a {}.",
    ];
    let form = FORMS.choose(rng).unwrap().replace("{}", &bp.to_string());
    FRAMES.choose(rng).unwrap().replace("{}", &form)
}

/// Generates the corpus described by `cfg`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    let n_classes = cfg.bp_ids.len();
    if n_classes < 2 {
        return Err(Error::InvalidInput(
            "the synthetic corpus needs at least 2 classes".into(),
        ));
    }
    if cfg.bp_ids.iter().collect::<BTreeSet<_>>().len() != n_classes || cfg.bp_ids.contains(&0) {
        return Err(Error::InvalidInput(
            "precedent ids must be distinct and positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&cfg.overlap)
        || !(0.0..=1.0).contains(&cfg.undated)
        || cfg.class_vocab < 4
    {
        return Err(Error::InvalidInput(
            "overlap must be in [0, 1), undated in [0, 1], class_vocab ≥ 4".into(),
        ));
    }
    let normalizer = Normalizer::new(&NormalizerConfig::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut taken: HashSet<String> = FILLER.iter().map(|w| normalizer.lemma(w)).collect();
    let shared_per_class = (cfg.class_vocab as f64 * cfg.overlap).round() as usize;
    let own_per_class = cfg.class_vocab - shared_per_class;
    let shared_pool = invent_words(
        shared_per_class.max(1) * 2,
        &normalizer,
        &mut rng,
        &mut taken,
    );
    let mut own = Vec::with_capacity(n_classes);
    let mut vocab = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let words = invent_words(own_per_class, &normalizer, &mut rng, &mut taken);
        let mut v = words.clone();
        v.extend(
            shared_pool
                .choose_multiple(&mut rng, shared_per_class)
                .cloned(),
        );
        own.push(words);
        vocab.push(v);
    }
    let mut g = Generator { rng, vocab, own };

    let precedents: Vec<BindingPrecedent> = cfg
        .bp_ids
        .iter()
        .enumerate()
        .map(|(c, &bp_id)| BindingPrecedent {
            bp_id,
            statement: g.statement(c),
            published: NaiveDate::from_ymd_opt(2007 + c as i32 % 5, 1 + (c as u32 * 5) % 12, 10),
        })
        .collect();

    let mut documents: Vec<Document> = Vec::new();
    let mut classes: Vec<usize> = Vec::new();
    let push =
        |documents: &mut Vec<Document>, g: &mut Generator, body: String, bps: BTreeSet<u32>| {
            let doc_type = g.doc_type();
            documents.push(Document {
                doc_id: format!("doc-{:05}", documents.len() + 1),
                title: format!("{doc_type} {}", 1000 + documents.len()),
                body,
                date: g.date(cfg.undated),
                rapporteur: g.rapporteur(),
                doc_type,
                explicit_bps: bps,
            });
        };

    let mut plan: Vec<(usize, bool)> = (0..n_classes)
        .flat_map(|c| std::iter::repeat_n((c, true), cfg.docs_per_class))
        .chain((0..cfg.unlabeled).map(|i| (i % n_classes, false)))
        .collect();
    plan.shuffle(&mut g.rng);
    for (class, labeled) in plan {
        let bp = cfg.bp_ids[class];
        let mut inserts = Vec::new();
        if labeled {
            inserts.push(citation_sentence(&mut g.rng, bp));
        } else if g.rng.gen_bool(0.1) {
            inserts.push(format!(
                "Invoca-se o verbete vinculante nº {bp} da súmula desta Corte."
            ));
        }
        if g.rng.gen_bool(0.25) {
            inserts.push(precedents[class].statement.clone());
        }
        let body = g.body(class, n_classes, inserts);
        let bps = if labeled {
            [bp].into()
        } else {
            BTreeSet::new()
        };
        classes.push(class);
        push(&mut documents, &mut g, body, bps);
    }
    for i in 0..cfg.multi_label {
        let a = i % n_classes;
        let b = (a + 1 + i / n_classes) % n_classes;
        let b = if b == a { (a + 1) % n_classes } else { b };
        let inserts = vec![
            citation_sentence(&mut g.rng, cfg.bp_ids[a]),
            citation_sentence(&mut g.rng, cfg.bp_ids[b]),
        ];
        let body = g.body(a, n_classes, inserts);
        classes.push(a);
        push(
            &mut documents,
            &mut g,
            body,
            [cfg.bp_ids[a], cfg.bp_ids[b]].into(),
        );
    }
    for _ in 0..cfg.duplicates.min(documents.len()) {
        let i = g.rng.gen_range(0..documents.len());
        let src = documents[i].clone();
        classes.push(classes[i]);
        push(&mut documents, &mut g, src.body, src.explicit_bps);
    }

    let latent = documents
        .iter()
        .zip(&classes)
        .map(|(d, &c)| (d.doc_id.clone(), cfg.bp_ids[c]))
        .collect();
    Ok(SynthCorpus {
        documents,
        precedents,
        latent,
        vocabularies: g.vocab,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{dedupe, CitationPatterns};

    fn small() -> SynthConfig {
        SynthConfig {
            docs_per_class: 20,
            unlabeled: 30,
            multi_label: 4,
            duplicates: 3,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn seeded_and_sized() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.documents, b.documents);
        assert_eq!(a.documents.len(), 10 * 20 + 30 + 4 + 3);
        let c = generate(&SynthConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a.documents, c.documents);
    }

    #[test]
    fn vocabulary_overlap_matches_config() {
        let s = generate(&small()).unwrap();
        let shared = (60.0f64 * 0.3).round() as usize;
        for (i, v) in s.vocabularies.iter().enumerate() {
            assert_eq!(v.len(), 60);
            let own: HashSet<&String> = v[..60 - shared].iter().collect();
            for (j, w) in s.vocabularies.iter().enumerate() {
                if i != j {
                    assert!(w.iter().all(|t| !own.contains(t)));
                }
            }
        }
    }

    #[test]
    fn explicit_labels_agree_with_the_detector() {
        let s = generate(&small()).unwrap();
        let patterns = CitationPatterns::new(crate::corpus::DEFAULT_PATTERNS).unwrap();
        for d in &s.documents {
            let found: BTreeSet<u32> = patterns
                .detect(&d.body)
                .into_iter()
                .map(|m| m.bp_id)
                .collect();
            assert_eq!(found, d.explicit_bps, "{}", d.doc_id);
        }
    }

    #[test]
    fn duplicates_collapse() {
        let s = generate(&small()).unwrap();
        let n = s.documents.len();
        assert!(dedupe(s.documents).len() < n);
    }
}
