//! Shared fixtures for the criterion benches.

use wdist::dataset::{generate_dataset, GenerationSpec, LabeledDataset, PairKind};
use wdist::quantum::{random_mixed_state, random_pure_state, DensityMatrix};
use wdist::SeededRandomSource;

/// A pure state and a full-rank mixed state on `n` qubits.
pub fn state_pair(n: usize, seed: u64) -> (DensityMatrix, DensityMatrix) {
    let mut rng = SeededRandomSource::new(seed);
    let rho = random_pure_state(n, &mut rng).expect("pure state");
    let sigma = random_mixed_state(n, 1 << n, &mut rng).expect("mixed state");
    (rho, sigma)
}

pub fn small_dataset(n: usize, samples: usize, seed: u64) -> LabeledDataset {
    generate_dataset(&GenerationSpec::new(
        n,
        PairKind::RandomPure,
        samples,
        10,
        seed,
    ))
    .expect("dataset")
}
