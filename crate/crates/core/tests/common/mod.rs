#![allow(dead_code)]

use num_complex::Complex64;
use phasemargins::hilbert::{HermiteState, MixedState, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const SUITE_SEED: u64 = 20_240_917;

/// Random unit vector in span{h_0..h_max}.
pub fn random_pure(rng: &mut ChaCha8Rng, max_degree: usize) -> HermiteState {
    let coeffs = (0..=max_degree)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    HermiteState::new(coeffs).expect("nonzero vector")
}

/// State i of the suite: a mixture of 1 + (i mod 3) random pure states,
/// so ranks stay ≤ 3 ≤ 6.
pub fn suite_state(i: usize, max_degree: usize) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    rng.set_stream(i as u64);
    let rank = 1 + i % 3;
    if rank == 1 {
        return random_pure(&mut rng, max_degree).into();
    }
    let raw: Vec<f64> = (0..rank).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let pures = (0..rank).map(|_| random_pure(&mut rng, max_degree)).collect();
    MixedState::new(raw.iter().map(|w| w / total).collect(), pures).expect("valid mixture").into()
}

pub fn suite(count: usize, max_degree: usize) -> Vec<State> {
    (0..count).map(|i| suite_state(i, max_degree)).collect()
}
