//! Spectral gap, influence indicators and convergence-rate fitting.

mod influence;
mod rate;
mod spectral;

pub use influence::{
    block_product, influence_step, influence_window, learner_block, lemma1_bound, IndicatorVector,
    InfluenceWindow, SubStochasticBlock,
};
pub use rate::{fit_polynomial_rate, fit_power_law, FitWindow, RateFit};
pub use spectral::{circulant_eigenvalues, degree_normalized_block, eigenvalues, spectral_gap, SpectralReport};

use crate::dynamics::SystemState;
use crate::graph::AgentId;

/// Largest infinity-norm distance between a learner and the truth. With
/// several truths each learner is measured against its nearest truth; with
/// none the result is 0.
pub fn sup_norm(state: &SystemState, truths: &[AgentId]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..state.n() {
        if truths.iter().any(|t| t.0 == i) {
            continue;
        }
        let xi = state.opinion(i);
        let nearest = truths
            .iter()
            .map(|t| {
                xi.iter()
                    .zip(state.opinion(t.0))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        if nearest.is_finite() {
            worst = worst.max(nearest);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_norm_examples() {
        let t = [AgentId(0)];
        assert_eq!(sup_norm(&SystemState::scalar(vec![0.4, 0.4, 0.4]), &t), 0.0);
        assert_eq!(sup_norm(&SystemState::scalar(vec![0.0, 0.2, -0.7]), &t), 0.7);
        let s = SystemState::with_dim(vec![0.0, 0.0, 0.1, 0.3], 2).unwrap();
        assert_eq!(sup_norm(&s, &t), 0.3);
    }

    #[test]
    fn sup_norm_nearest_truth() {
        let s = SystemState::scalar(vec![0.0, 0.9, 1.0]);
        assert!((sup_norm(&s, &[AgentId(0), AgentId(2)]) - 0.1).abs() < 1e-15);
    }
}
