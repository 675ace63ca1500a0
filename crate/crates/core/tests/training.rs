use std::time::{Duration, Instant};

use tdfb_core::trainer::{
    evaluate, gen_toy_split, train, LinearHead, ToyTaskConfig, TrainConfig, DEFAULT_DEV_UTTERANCES, DEFAULT_TRAIN_UTTERANCES,
};
use tdfb_core::{LearningMode, MelSpec, TdFilterbank, N_FILTERS};

fn small_config(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, ..TrainConfig::default() }
}

#[test]
fn zero_head_predicts_class_zero() {
    let split = gen_toy_split(&ToyTaskConfig::default(), 2, 3).unwrap();
    let fb = TdFilterbank::build(&MelSpec::default(), LearningMode::Fixed, false, 0).unwrap();
    let head = LinearHead::zeros(split.n_classes, N_FILTERS);
    let zeros: usize = split.dev.iter().flat_map(|u| &u.labels).filter(|&&l| l == 0).count();
    let total: usize = split.dev.iter().map(|u| u.labels.len()).sum();
    let acc = evaluate(&fb, &head, &split.dev).unwrap();
    assert!((acc - zeros as f64 / total as f64).abs() < 1e-12);
}

#[test]
fn short_training_beats_chance() {
    let split = gen_toy_split(&ToyTaskConfig::default(), DEFAULT_TRAIN_UTTERANCES, DEFAULT_DEV_UTTERANCES).unwrap();
    let fb = TdFilterbank::build(&MelSpec::default(), LearningMode::Fixed, false, 0).unwrap();
    let out = train(fb, &split, &small_config(10)).unwrap();
    let first = out.metrics.first().unwrap();
    let last = out.metrics.last().unwrap();
    assert!(last.train_loss < first.train_loss);
    assert!(out.final_dev_accuracy().unwrap() > 2.0 / split.n_classes as f64, "{:?}", out.final_dev_accuracy());
}

fn timed(n_train: usize) -> Duration {
    let split = gen_toy_split(&ToyTaskConfig::default(), n_train, 1).unwrap();
    let fb = TdFilterbank::build(&MelSpec::default(), LearningMode::LearnFilterbank, false, 0).unwrap();
    (0..2)
        .map(|_| {
            let start = Instant::now();
            train(fb.clone(), &split, &small_config(1)).unwrap();
            start.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn doubling_data_at_most_triples_time() {
    let one = timed(2);
    let two = timed(4);
    assert!(two <= one * 3, "{one:?} -> {two:?}");
}
