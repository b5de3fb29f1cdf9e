//! Shared inputs for the benchmarks in `benches/`.

use fairdiv_core::fairness::GammaMatrix;
use fairdiv_core::{Dataset, DiscreteScenario, LabeledPair, LinearScorer, Scenario};

/// Proxy-scenario data at full dependency.
pub fn proxy_data(n: usize, seed: u64) -> Dataset {
    DiscreteScenario::proxy(1.0).unwrap().generate(n, seed).unwrap()
}

/// Viewpoint/prediction pairs of a scorer that follows the proxy feature.
pub fn proxy_pairs(n: usize, seed: u64) -> Vec<LabeledPair> {
    let data = proxy_data(n, seed);
    let scorer = LinearScorer::from_weights(2, 3, vec![0.0, 0.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.0]).unwrap();
    data.pairs_with(&scorer.predict_all(&data).unwrap()).unwrap()
}

/// Soft predictions leaning towards the viewpoint.
pub fn leaning_gamma(views: &[usize]) -> GammaMatrix {
    let data = views
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| {
            let p = 0.3 + 0.4 * v as f64 + 0.01 * (i % 7) as f64;
            [1.0 - p, p]
        })
        .collect();
    GammaMatrix::new(views.len(), 2, data).unwrap()
}
