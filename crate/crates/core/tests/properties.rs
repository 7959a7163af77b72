mod common;

use common::{max_abs_diff, random_snapshot};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfconf_core::analysis::{sup_norm, InfluenceWindow};
use selfconf_core::dynamics::{run, step_agentwise, update_matrix, RecordStride, RunOptions};
use selfconf_core::{AgentId, GraphSequence, GraphSnapshot, SystemState};

struct Instance {
    seq: GraphSequence,
    snaps: Vec<GraphSnapshot>,
    init: SystemState,
}

/// Explicit sequence with truth 0, learners on `[-1, 1]^dim`.
fn instance(seed: u64, dim: usize, zero_w: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=8);
    let len = rng.random_range(1..=20);
    let p = rng.random_range(0.1..0.7);
    let snaps: Vec<_> = (0..len).map(|_| random_snapshot(&mut rng, n, Some(0), p)).collect();
    let x: Vec<f64> = (0..n * dim)
        .map(|k| if k / dim == 0 { 0.0 } else { rng.random_range(-1.0..1.0) })
        .collect();
    let w: Vec<f64> = (0..n)
        .map(|i| if zero_w || i == 0 { 0.0 } else { rng.random_range(0.0..4.0) })
        .collect();
    Instance {
        seq: GraphSequence::explicit(snaps.clone(), None).unwrap(),
        snaps,
        init: SystemState::new(x, dim, w).unwrap(),
    }
}

fn evolve(inst: &Instance) -> Vec<SystemState> {
    let mut states = vec![inst.init.clone()];
    for g in &inst.snaps {
        let next = step_agentwise(states.last().unwrap(), g).unwrap();
        states.push(next);
    }
    states
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distance_to_truth_never_grows(seed in any::<u64>(), dim in 1usize..=3, zero_w in any::<bool>()) {
        let inst = instance(seed, dim, zero_w);
        let truths = [AgentId::TRUTH];
        let norms: Vec<f64> = evolve(&inst).iter().map(|s| sup_norm(s, &truths)).collect();
        for pair in norms.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn weights_accumulate_out_degrees(seed in any::<u64>(), zero_w in any::<bool>()) {
        let inst = instance(seed, 1, zero_w);
        let states = evolve(&inst);
        let mut expected = inst.init.weights().to_vec();
        for (g, state) in inst.snaps.iter().zip(&states[1..]) {
            for (i, w) in expected.iter_mut().enumerate() {
                *w += g.out_degree(i) as f64;
            }
            prop_assert_eq!(state.weights(), &expected[..]);
        }
    }

    #[test]
    fn fixed_graph_weight_is_time_times_degree(seed in any::<u64>(), steps in 1u64..50) {
        let inst = instance(seed, 1, true);
        let g = inst.snaps[0].clone();
        let traj = run(&GraphSequence::Fixed(g.clone()), &inst.init, &RunOptions::new(steps)).unwrap();
        for i in 0..g.n() {
            prop_assert_eq!(traj.final_state.weights()[i], steps as f64 * g.out_degree(i) as f64);
        }
    }

    #[test]
    fn coordinates_evolve_independently(seed in any::<u64>(), zero_w in any::<bool>()) {
        let inst = instance(seed, 3, zero_w);
        let joint = evolve(&inst).pop().unwrap();
        for c in 0..3 {
            let single = Instance {
                seq: inst.seq.clone(),
                snaps: inst.snaps.clone(),
                init: SystemState::new(inst.init.coordinate(c), 1, inst.init.weights().to_vec()).unwrap(),
            };
            let alone = evolve(&single).pop().unwrap();
            prop_assert!(max_abs_diff(&joint.coordinate(c), alone.opinions()) <= 1e-14);
        }
    }

    #[test]
    fn update_rows_sum_to_one(seed in any::<u64>(), zero_w in any::<bool>()) {
        let inst = instance(seed, 1, zero_w);
        let states = evolve(&inst);
        for (g, s) in inst.snaps.iter().zip(&states) {
            let m = update_matrix(g, s.weights()).unwrap();
            prop_assert!(m.row_sum_error() <= 1e-12);
            prop_assert!(m.matrix().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn matrix_products_reproduce_trajectory(seed in any::<u64>()) {
        let inst = instance(seed, 1, false);
        let states = evolve(&inst);
        let n = inst.init.n();
        let ms: Vec<DMatrix<f64>> = inst
            .snaps
            .iter()
            .zip(&states)
            .map(|(g, s)| update_matrix(g, s.weights()).unwrap().into_matrix())
            .collect();
        let left = ms.iter().fold(DMatrix::identity(n, n), |acc, m| m * acc);
        let mut right = DMatrix::identity(n, n);
        for m in ms.iter().rev() {
            right *= m;
        }
        prop_assert!((&left - &right).amax() <= 1e-12);
        let x = &left * DVector::from_column_slice(inst.init.opinions());
        prop_assert!(max_abs_diff(x.as_slice(), states.last().unwrap().opinions()) <= 1e-12);
    }

    #[test]
    fn learner_block_product_factors_opinions(seed in any::<u64>(), zero_w in any::<bool>()) {
        let inst = instance(seed, 1, zero_w);
        let t = inst.snaps.len() as u64;
        let win = InfluenceWindow::new(&inst.seq, inst.init.weights(), 0, t, AgentId::TRUTH).unwrap();
        let x0 = DVector::from_column_slice(&inst.init.opinions()[1..]);
        let predicted = win.product(0, t) * x0;
        let last = evolve(&inst).pop().unwrap();
        prop_assert!(max_abs_diff(predicted.as_slice(), &last.opinions()[1..]) <= 1e-12);
    }

    #[test]
    fn indicator_telescopes(seed in any::<u64>(), zero_w in any::<bool>(), a in 0u64..20, b in 1u64..21) {
        let inst = instance(seed, 1, zero_w);
        let len = inst.snaps.len() as u64;
        let t = b.min(len);
        let s = a % t;
        let win = InfluenceWindow::new(&inst.seq, inst.init.weights(), s, t, AgentId::TRUTH).unwrap();
        let direct = win.indicator();
        prop_assert!(max_abs_diff(direct.values(), win.telescoped_indicator().values()) <= 1e-12);
        prop_assert!(direct.values().iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn shifting_everything_shifts_opinions(seed in any::<u64>(), shift in -10.0f64..10.0) {
        let inst = instance(seed, 1, false);
        let moved: Vec<f64> = inst.init.opinions().iter().map(|v| v + shift).collect();
        let shifted = Instance {
            seq: inst.seq.clone(),
            snaps: inst.snaps.clone(),
            init: SystemState::new(moved, 1, inst.init.weights().to_vec()).unwrap(),
        };
        let a = evolve(&inst).pop().unwrap();
        let b = evolve(&shifted).pop().unwrap();
        let back: Vec<f64> = b.opinions().iter().map(|v| v - shift).collect();
        prop_assert!(max_abs_diff(a.opinions(), &back) <= 1e-9);
    }
}

#[test]
fn recorded_series_matches_stepwise_run() {
    let inst = instance(3, 2, true);
    let traj = run(
        &inst.seq,
        &inst.init,
        &RunOptions::new(inst.snaps.len() as u64).stride(RecordStride::Every(1)).keep_states(1),
    )
    .unwrap();
    let states = evolve(&inst);
    assert_eq!(traj.states.len(), states.len());
    for (a, b) in traj.states.iter().zip(&states) {
        assert_eq!(a.opinions(), b.opinions());
        assert_eq!(sup_norm(a, &[AgentId::TRUTH]), sup_norm(b, &[AgentId::TRUTH]));
    }
}
