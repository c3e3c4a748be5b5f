mod common;

use common::{gauss_solve, small_model};
use precedent_core::corpus::{segment, Document};
use precedent_core::explainer::{
    evaluate_masked, explain, fit_surrogate, kernel_weight, run_surrogate, sample_masks,
    DocumentScorer, LimeConfig, MaskScorer, PerturbationSample,
};
use precedent_core::Result;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed-form weighted ridge solution through an independent linear solve.
fn wls_oracle(samples: &[PerturbationSample], lambda: f64) -> (Vec<f64>, f64) {
    let n = samples[0].mask.len();
    let dim = n + 1;
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for s in samples {
        let mut z: Vec<f64> = s.mask.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect();
        z.push(1.0);
        for i in 0..dim {
            b[i] += s.weight * z[i] * s.prob;
            for j in 0..dim {
                a[i][j] += s.weight * z[i] * z[j];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate().take(n) {
        row[i] += lambda;
    }
    let sol = gauss_solve(a, b);
    (sol[..n].to_vec(), sol[n])
}

struct Linear(Vec<f64>, f64);

impl MaskScorer for Linear {
    fn n_sentences(&self) -> usize {
        self.0.len()
    }

    fn score(&self, mask: &[bool]) -> Result<f64> {
        Ok(self.1
            + self
                .0
                .iter()
                .zip(mask)
                .filter(|(_, &k)| k)
                .map(|(c, _)| c)
                .sum::<f64>())
    }
}

#[test]
fn linear_scorer_matches_weighted_least_squares() {
    let scorer = Linear(vec![0.0, 0.0, 0.5, 0.0, -0.1, 0.05], 0.2);
    for lambda in [1e-9, 1.0] {
        let cfg = LimeConfig {
            ridge_lambda: lambda,
            ..LimeConfig::default()
        };
        let run = run_surrogate(&scorer, &cfg, 17).unwrap();
        let (w, b) = wls_oracle(&run.samples, lambda);
        for (got, want) in run.fit.weights.iter().zip(&w) {
            assert!((got - want).abs() < 1e-4);
        }
        assert!((run.fit.intercept - b).abs() < 1e-4);
        if lambda < 1e-6 {
            assert!(run.fit.fidelity_r2 >= 1.0 - 1e-6);
            assert!((run.fit.weights[2] - 0.5).abs() < 1e-6);
        }
    }
}

#[test]
fn kernel_half_removed() {
    let mask = [true, false, true, false];
    assert!((kernel_weight(&mask, 0.5) - (-1.0f64).exp()).abs() < 1e-12);
    assert_eq!(kernel_weight(&[true; 4], 0.5), 1.0);
}

#[test]
fn sentences_kept_between_forty_and_eighty_percent() {
    let masks = sample_masks(4, 10_000, 5).unwrap();
    for s in 0..4 {
        let kept = masks.iter().filter(|m| m[s]).count() as f64 / masks.len() as f64;
        assert!((0.4..=0.8).contains(&kept), "sentence {s} kept {kept}");
    }
}

#[test]
fn token_fast_path_equals_rebuilt_text() {
    let t = small_model(4, 40, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for doc in t.documents.iter().take(15) {
        let seg = segment(&doc.body);
        let n = seg.sentences.len();
        let bp = *t.classifier.classes().choose(&mut rng).unwrap();
        let scorer = DocumentScorer::new(&t.pipeline, &t.classifier, &doc.body, &seg, bp).unwrap();
        for _ in 0..10 {
            let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
            mask[rng.gen_range(0..n)] = true;
            let fast = scorer.score(&mask).unwrap();
            let slow = evaluate_masked(&t.pipeline, &t.classifier, doc, &seg, &mask, bp).unwrap();
            assert!(
                (fast - slow).abs() < 1e-12,
                "{}: {fast} vs {slow}",
                doc.doc_id
            );
        }
        let full =
            evaluate_masked(&t.pipeline, &t.classifier, doc, &seg, &vec![true; n], bp).unwrap();
        let direct = t
            .classifier
            .predict_proba(&t.pipeline.embed(&doc.body))
            .unwrap();
        assert!((full - direct[t.classifier.class_index(bp).unwrap()]).abs() < 1e-12);
    }
}

#[test]
fn out_of_vocabulary_sentence_barely_matters() {
    let t = small_model(4, 40, 2);
    let base = &t.documents[0];
    let body = format!("{}\n\nQqqzz wwvvx kkjjy xxqqw.", base.body);
    let doc = Document {
        body,
        ..base.clone()
    };
    let seg = segment(&doc.body);
    let n = seg.sentences.len();
    let bp = t.classifier.classes()[0];
    let full = evaluate_masked(&t.pipeline, &t.classifier, &doc, &seg, &vec![true; n], bp).unwrap();
    let mut mask = vec![true; n];
    mask[n - 1] = false;
    let without = evaluate_masked(&t.pipeline, &t.classifier, &doc, &seg, &mask, bp).unwrap();
    assert!((full - without).abs() < 1e-12);
}

#[test]
fn discriminative_sentence_gets_the_top_weight() {
    let t = small_model(4, 40, 2);
    let class = 1;
    let bp = t.classifier.classes()[class];
    let vocab = &t.corpus.vocabularies[class];
    let shared: std::collections::HashSet<&String> = t
        .corpus
        .vocabularies
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != class)
        .flat_map(|(_, v)| v)
        .collect();
    let own: Vec<&String> = vocab
        .iter()
        .filter(|w| !shared.contains(w))
        .take(14)
        .collect();
    let filler = [
        "O tribunal analisou o recurso e a decisão dos autos.",
        "A parte requerente apresentou manifestação no prazo.",
        "O relator examinou a petição e o pedido da parte.",
        "A procuradoria opinou pelo provimento do agravo.",
        "O plenário apreciou a questão no julgamento.",
    ];
    let key = format!(
        "{} {}.",
        own[0][..1].to_uppercase() + &own[0][1..],
        own[1..]
            .iter()
            .map(|w| w.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    );
    let body = format!(
        "{} {}\n\n{} {} {}",
        filler[0], filler[1], key, filler[2], filler[3]
    ) + " "
        + filler[4];
    let doc = Document {
        body,
        doc_id: "crafted".into(),
        ..t.documents[0].clone()
    };
    let seg = segment(&doc.body);
    assert_eq!(seg.sentences.len(), 6);
    let key_index = 2;
    let mut hits = 0;
    for seed in 0..100 {
        let cfg = LimeConfig {
            n_samples: 300,
            seed,
            ..LimeConfig::default()
        };
        let e = explain(&t.pipeline, &t.classifier, &doc, bp, &cfg).unwrap();
        let top = e
            .sentences
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.weight.total_cmp(&b.1.weight))
            .unwrap()
            .0;
        hits += usize::from(top == key_index);
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn explanations_are_reproducible_and_single_sentences_degenerate() {
    let t = small_model(4, 40, 2);
    let doc = &t.documents[3];
    let bp = t.classifier.classes()[0];
    let cfg = LimeConfig::default();
    let a = explain(&t.pipeline, &t.classifier, doc, bp, &cfg).unwrap();
    assert_eq!(
        a,
        explain(&t.pipeline, &t.classifier, doc, bp, &cfg).unwrap()
    );
    assert_eq!(a.sentences.len(), segment(&doc.body).sentences.len());
    assert!(a.fidelity_r2 <= 1.0);

    let one = Document {
        body: "Uma frase apenas sobre o recurso.".into(),
        ..doc.clone()
    };
    let e = explain(&t.pipeline, &t.classifier, &one, bp, &cfg).unwrap();
    assert!(e.degenerate);
    assert_eq!(e.sentences.len(), 1);
}

#[test]
fn surrogate_is_a_coordinate_minimum() {
    let t = small_model(4, 40, 2);
    let doc = &t.documents[5];
    let seg = segment(&doc.body);
    let bp = t.classifier.classes()[2];
    let scorer = DocumentScorer::new(&t.pipeline, &t.classifier, &doc.body, &seg, bp).unwrap();
    let run = run_surrogate(&scorer, &LimeConfig::default(), 3).unwrap();
    let objective = |w: &[f64]| {
        precedent_core::explainer::ridge_objective(&run.samples, w, run.fit.intercept, 1.0)
    };
    let best = objective(&run.fit.weights);
    for i in 0..run.fit.weights.len() {
        for delta in [1e-4, -1e-4] {
            let mut w = run.fit.weights.clone();
            w[i] += delta;
            assert!(objective(&w) >= best);
        }
    }
    let refit = fit_surrogate(&run.samples, 1.0).unwrap();
    assert_eq!(refit, run.fit);
}
