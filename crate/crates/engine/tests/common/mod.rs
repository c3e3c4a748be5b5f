#![allow(dead_code)]

use std::path::Path;

use precedent_core::synth::SynthConfig;
use precedent_engine::commands::{self, TrainOptions};
use precedent_engine::store::ProjectStore;

pub fn small_synth(seed: u64) -> SynthConfig {
    SynthConfig {
        bp_ids: vec![4, 10, 14, 26],
        docs_per_class: 40,
        unlabeled: 60,
        multi_label: 4,
        duplicates: 3,
        seed,
        ..SynthConfig::default()
    }
}

pub fn small_train(seed: u64) -> TrainOptions {
    TrainOptions {
        seed,
        k: 20,
        grid: vec![0.1, 1.0],
        ..TrainOptions::default()
    }
}

/// synth → ingest → train → infer into `root/store`.
pub fn build_store(
    root: &Path,
    synth: &SynthConfig,
    train: &TrainOptions,
    t_c: f64,
) -> ProjectStore {
    let input = root.join("input");
    commands::synth(&input, synth).unwrap();
    let store = ProjectStore::new(root.join("store"));
    commands::ingest(&store, &input, None).unwrap();
    commands::train(&store, train).unwrap();
    commands::infer(&store, t_c).unwrap();
    store
}
