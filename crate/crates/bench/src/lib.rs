//! Fixtures for the benchmarks: a model trained on synthetic scenes and a
//! held-out scene to parse.

use stparse_core::learning::train;
use stparse_core::synth::{composition_scripts, generate};
use stparse_core::{Dataset, Model, TrainingConfig};

pub struct Fixture {
    pub model: Model,
    pub scene: Dataset,
}

/// Trains on `n_train` composition scenes and generates one more to infer
/// on. Deterministic.
pub fn fixture(n_train: usize) -> Fixture {
    let scripts = composition_scripts();
    let data: Vec<Dataset> = (0..n_train)
        .map(|i| generate(&scripts[i % scripts.len()], 1000 + i as u64).expect("built-in scripts are valid"))
        .collect();
    let model = train(&data, &TrainingConfig::default()).expect("training on built-in scenes succeeds");
    let scene = generate(&scripts[0], 2000).expect("built-in scripts are valid");
    Fixture { model, scene }
}
