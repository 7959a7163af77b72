#![allow(dead_code)]

use rand::Rng;
use selfconf_core::graph::truth_reachability;
use selfconf_core::{AgentId, GraphSnapshot};

/// Each ordered pair `(i, j)` with `i` not the truth is an edge with
/// probability `p`. Rows may come out empty.
pub fn random_snapshot<R: Rng>(rng: &mut R, n: usize, truth: Option<usize>, p: f64) -> GraphSnapshot {
    let sets: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if Some(i) == truth {
                return Vec::new();
            }
            (0..n).filter(|_| rng.random::<f64>() < p).collect()
        })
        .collect();
    GraphSnapshot::from_neighbor_sets(&sets).unwrap()
}

/// Random fixed graph with truth 0 in which every learner has at least one
/// neighbour and reaches the truth.
pub fn random_reachable<R: Rng>(rng: &mut R, n: usize) -> GraphSnapshot {
    loop {
        let p = rng.random_range(0.15..0.6);
        let g = random_snapshot(rng, n, Some(0), p);
        let nonempty = (1..n).all(|i| g.out_degree(i) > 0);
        if nonempty && truth_reachability(&g, AgentId::TRUTH).unwrap().iter().all(|&r| r) {
            return g;
        }
    }
}

/// Random fixed graph with truth 0 whose last `group` agents only listen to
/// each other, so none of them can reach the truth.
pub fn with_closed_group<R: Rng>(rng: &mut R, n: usize, group: usize) -> GraphSnapshot {
    let first = n - group;
    let sets: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if i == 0 {
                return Vec::new();
            }
            let pool: Vec<usize> = if i >= first { (first..n).collect() } else { (0..n).collect() };
            let mut row: Vec<usize> = pool.iter().copied().filter(|_| rng.random::<f64>() < 0.4).collect();
            if row.is_empty() {
                row.push(pool[rng.random_range(0..pool.len())]);
            }
            if i == 1 && !row.contains(&0) {
                row.push(0);
            }
            row
        })
        .collect();
    GraphSnapshot::from_neighbor_sets(&sets).unwrap()
}

pub fn uniform_learners<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Vec<f64> {
    (0..n * dim).map(|k| if k / dim == 0 { 0.0 } else { rng.random() }).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest step-to-step increase of a series.
pub fn max_increase(series: &[f64]) -> f64 {
    series.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}
