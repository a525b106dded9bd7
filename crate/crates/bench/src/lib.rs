//! Fixtures shared by the benchmarks.

use eqsentinel_core::env::soccer::{afraid_policy, soccer_build_model, SoccerRules};
use eqsentinel_core::stochastic::{mixture_policy, shapley_solve, smooth_policy, Policy, SolverConfig, StochasticGameModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

pub fn increments(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub struct SoccerFixture {
    pub model: StochasticGameModel,
    pub values: Vec<f64>,
    pub null: Policy,
    pub alt: Policy,
}

pub fn soccer_fixture() -> SoccerFixture {
    let model = soccer_build_model(&SoccerRules::default()).expect("soccer model");
    let sol = shapley_solve(&model, &SolverConfig::default()).expect("shapley");
    let null = smooth_policy(&sol.policies[0], 0.05).expect("smoothing");
    let alt = mixture_policy(&null, &afraid_policy(&null).expect("afraid"), 0.2).expect("mixture");
    SoccerFixture {
        model,
        values: sol.values,
        null,
        alt,
    }
}
