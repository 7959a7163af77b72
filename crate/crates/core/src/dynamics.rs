//! The increasing self-confidence update.
//!
//! Each step, agent `i` with self-confidence `w_i` and neighbour set `N_i`
//! moves to `(w_i x_i + sum_{j in N_i} x_j) / (w_i + |N_i|)` and then raises
//! its confidence to `w_i + |N_i|`. Agents with `w_i + |N_i| = 0` stay put.
//! In matrix form `x(t+1) = (W+D)^{-1}(W+A) x(t)`.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::analysis::sup_norm;
use crate::graph::{AgentId, GraphSequence, GraphSnapshot};
use crate::{Error, Result};

/// Opinions, self-confidences and clock of `n` agents. Opinions are `dim`
/// dimensional and stored agent-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    t: u64,
    dim: usize,
    x: Vec<f64>,
    w: Vec<f64>,
}

impl SystemState {
    pub fn new(x: Vec<f64>, dim: usize, w: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("opinion dimension must be at least 1".into()));
        }
        if x.len() != dim * w.len() {
            return Err(Error::Shape(format!(
                "{} opinion values for {} agents of dimension {dim}",
                x.len(),
                w.len()
            )));
        }
        let state = SystemState { t: 0, dim, x, w };
        state.validate()?;
        Ok(state)
    }

    /// Scalar opinions with zero initial self-confidence.
    pub fn scalar(x: Vec<f64>) -> Self {
        let n = x.len();
        SystemState {
            t: 0,
            dim: 1,
            x,
            w: vec![0.0; n],
        }
    }

    /// `dim`-dimensional opinions with zero initial self-confidence.
    pub fn with_dim(x: Vec<f64>, dim: usize) -> Result<Self> {
        let n = x.len().checked_div(dim).unwrap_or(0);
        Self::new(x, dim, vec![0.0; n])
    }

    pub fn at_time(mut self, t: u64) -> Self {
        self.t = t;
        self
    }

    fn validate(&self) -> Result<()> {
        if let Some((i, w)) = self.w.iter().enumerate().find(|(_, w)| w.is_nan() || **w < 0.0) {
            return Err(Error::InvalidState(format!("agent {i} has self-confidence {w}")));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite opinion".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn opinion(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    /// All opinions, agent-major.
    pub fn opinions(&self) -> &[f64] {
        &self.x
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Column `coord` of the opinion array.
    pub fn coordinate(&self, coord: usize) -> Vec<f64> {
        self.x.iter().skip(coord).step_by(self.dim).copied().collect()
    }

    fn check_snapshot(&self, snapshot: &GraphSnapshot) -> Result<()> {
        if snapshot.n() != self.n() {
            return Err(Error::Shape(format!(
                "snapshot on {} agents applied to {} agents",
                snapshot.n(),
                self.n()
            )));
        }
        Ok(())
    }

    /// One agent-wise step in place; `scratch` is resized as needed.
    fn advance(&mut self, snapshot: &GraphSnapshot, scratch: &mut Vec<f64>) {
        let k = self.dim;
        scratch.resize(self.x.len(), 0.0);
        for i in 0..self.n() {
            let nbrs = snapshot.neighbors(i);
            let row = i * k..(i + 1) * k;
            if nbrs.is_empty() {
                scratch[row.clone()].copy_from_slice(&self.x[row]);
                continue;
            }
            let wi = self.w[i];
            let denom = wi + nbrs.len() as f64;
            if k == 1 {
                let sum: f64 = nbrs.iter().map(|&j| self.x[j]).sum();
                scratch[i] = (wi * self.x[i] + sum) / denom;
            } else {
                for c in 0..k {
                    let sum: f64 = nbrs.iter().map(|&j| self.x[j * k + c]).sum();
                    scratch[i * k + c] = (wi * self.x[i * k + c] + sum) / denom;
                }
            }
        }
        std::mem::swap(&mut self.x, scratch);
        for (i, w) in self.w.iter_mut().enumerate() {
            *w += snapshot.out_degree(i) as f64;
        }
        self.t += 1;
    }
}

/// Agent-wise step.
pub fn step_agentwise(state: &SystemState, snapshot: &GraphSnapshot) -> Result<SystemState> {
    state.check_snapshot(snapshot)?;
    state.validate()?;
    let mut next = state.clone();
    next.advance(snapshot, &mut Vec::new());
    Ok(next)
}

/// Row-stochastic update matrix `(W+D)^{-1}(W+A)`, with identity rows for
/// agents whose `w_i + |N_i|` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateMatrix(DMatrix<f64>);

impl UpdateMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Largest deviation of a row sum from one.
    pub fn row_sum_error(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn update_matrix(snapshot: &GraphSnapshot, w: &[f64]) -> Result<UpdateMatrix> {
    let n = snapshot.n();
    if w.len() != n {
        return Err(Error::Shape(format!("{} weights for {n} agents", w.len())));
    }
    if let Some((i, wi)) = w.iter().enumerate().find(|(_, w)| w.is_nan() || **w < 0.0) {
        return Err(Error::InvalidState(format!("agent {i} has self-confidence {wi}")));
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let nbrs = snapshot.neighbors(i);
        let denom = w[i] + nbrs.len() as f64;
        if denom == 0.0 {
            m[(i, i)] = 1.0;
            continue;
        }
        m[(i, i)] = w[i] / denom;
        for &j in nbrs {
            m[(i, j)] += 1.0 / denom;
        }
    }
    Ok(UpdateMatrix(m))
}

/// Matrix-form step `x' = M x` with the same confidence and clock update as
/// [`step_agentwise`].
pub fn step_matrix(state: &SystemState, snapshot: &GraphSnapshot) -> Result<SystemState> {
    state.check_snapshot(snapshot)?;
    let m = update_matrix(snapshot, &state.w)?;
    let x = DMatrix::from_row_slice(state.n(), state.dim, &state.x);
    let next = m.0 * x;
    let mut flat = Vec::with_capacity(state.x.len());
    for row in next.row_iter() {
        flat.extend(row.iter());
    }
    let w = state
        .w
        .iter()
        .enumerate()
        .map(|(i, w)| w + snapshot.out_degree(i) as f64)
        .collect();
    Ok(SystemState {
        t: state.t + 1,
        dim: state.dim,
        x: flat,
        w,
    })
}

/// When to record the distance to the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecordStride {
    /// Every `k` steps.
    Every(u64),
    /// Times `0, 1, ...` growing by roughly `ratio` each record.
    Geometric(f64),
}

impl Default for RecordStride {
    fn default() -> Self {
        RecordStride::Geometric(1.25)
    }
}

/// Recorded times for a run of `horizon` steps. Always starts at 0 and ends
/// at `horizon`.
pub fn record_times(horizon: u64, stride: RecordStride) -> Result<Vec<u64>> {
    let mut times = vec![0];
    match stride {
        RecordStride::Every(k) => {
            if k == 0 {
                return Err(Error::InvalidParameter("record stride must be positive".into()));
            }
            times.extend((1..=horizon / k).map(|i| i * k));
        }
        RecordStride::Geometric(ratio) => {
            if !ratio.is_finite() || ratio <= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "geometric stride ratio must exceed 1, got {ratio}"
                )));
            }
            let mut t = 1u64;
            while t <= horizon {
                times.push(t);
                t = ((t as f64 * ratio).ceil() as u64).max(t + 1);
            }
        }
    }
    if *times.last().unwrap() != horizon {
        times.push(horizon);
    }
    Ok(times)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub horizon: u64,
    pub stride: RecordStride,
    /// Keep a full copy of the state every this many steps.
    pub state_stride: Option<u64>,
    pub truths: Vec<AgentId>,
}

impl RunOptions {
    pub fn new(horizon: u64) -> Self {
        RunOptions {
            horizon,
            stride: RecordStride::default(),
            state_stride: None,
            truths: vec![AgentId::TRUTH],
        }
    }

    pub fn stride(mut self, stride: RecordStride) -> Self {
        self.stride = stride;
        self
    }

    pub fn keep_states(mut self, every: u64) -> Self {
        self.state_stride = Some(every);
        self
    }

    pub fn truths(mut self, truths: Vec<AgentId>) -> Self {
        self.truths = truths;
        self
    }
}

/// Recorded distance to the truth over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<u64>,
    pub sup_norm: Vec<f64>,
    pub states: Vec<SystemState>,
    pub final_state: SystemState,
}

impl Trajectory {
    /// `t,sup_norm` rows.
    pub fn to_csv(&self) -> String {
        series_csv(&self.times, &self.sup_norm)
    }

    /// `t,agent,coord,value` rows for every kept state.
    pub fn states_csv(&self) -> String {
        let mut out = String::from("t,agent,coord,value\n");
        for s in &self.states {
            for i in 0..s.n() {
                for (c, v) in s.opinion(i).iter().enumerate() {
                    let _ = writeln!(out, "{},{i},{c},{v}", s.t);
                }
            }
        }
        out
    }
}

pub(crate) fn series_csv(times: &[u64], values: &[f64]) -> String {
    let mut out = String::from("t,sup_norm\n");
    for (t, v) in times.iter().zip(values) {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

/// Runs the agent-wise dynamics for `options.horizon` steps, applying the
/// sequence's snapshot at each time starting from `init.t()`.
pub fn run(sequence: &GraphSequence, init: &SystemState, options: &RunOptions) -> Result<Trajectory> {
    if sequence.n() != init.n() {
        return Err(Error::Shape(format!(
            "sequence on {} agents, state has {}",
            sequence.n(),
            init.n()
        )));
    }
    init.validate()?;
    let times = record_times(options.horizon, options.stride)?;
    let start = init.t;
    let mut state = init.clone();
    let mut sup = Vec::with_capacity(times.len());
    let mut states = Vec::new();
    let keep = |state: &SystemState, states: &mut Vec<SystemState>| {
        if let Some(every) = options.state_stride {
            if every > 0 && (state.t - start).is_multiple_of(every) {
                states.push(state.clone());
            }
        }
    };
    sup.push(sup_norm(&state, &options.truths));
    keep(&state, &mut states);
    let mut next_record = 1;
    let mut stream = sequence.stream();
    let mut scratch = Vec::with_capacity(state.x.len());
    for step in 0..options.horizon {
        let snapshot = stream.get(start + step)?;
        state.advance(snapshot, &mut scratch);
        if next_record < times.len() && times[next_record] == step + 1 {
            sup.push(sup_norm(&state, &options.truths));
            next_record += 1;
        }
        keep(&state, &mut states);
    }
    Ok(Trajectory {
        times: times.iter().map(|t| t + start).collect(),
        sup_norm: sup,
        states,
        final_state: state,
    })
}

/// Opinions at time `t` on a fixed graph from zero initial confidence,
/// computed from the partial sums `S(t) = x(0) + ... + x(t)`, which obey
/// `S(t+1) = (I + R/(t+1)) S(t)` with `R = D^{-1}A` (truth row `e_truth`).
/// Then `x(t) = R S(t-1) / t`.
pub fn fixed_closed_form(
    snapshot: &GraphSnapshot,
    init: &SystemState,
    t: u64,
    truth: AgentId,
) -> Result<Vec<f64>> {
    init.check_snapshot(snapshot)?;
    if init.w.iter().any(|&w| w != 0.0) {
        return Err(Error::InvalidState(
            "closed form assumes zero initial self-confidence".into(),
        ));
    }
    let n = snapshot.n();
    if truth.0 >= n {
        return Err(Error::InvalidParameter(format!("truth {truth} outside [0, {n})")));
    }
    if snapshot.out_degree(truth.0) != 0 {
        return Err(Error::InvalidTruth(truth.0));
    }
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        if i == truth.0 {
            r[(i, i)] = 1.0;
            continue;
        }
        let nbrs = snapshot.neighbors(i);
        if nbrs.is_empty() {
            return Err(Error::SingularDegree(i));
        }
        let inv = 1.0 / nbrs.len() as f64;
        for &j in nbrs {
            r[(i, j)] = inv;
        }
    }
    if t == 0 {
        return Ok(init.x.clone());
    }
    let mut s = DMatrix::from_row_slice(n, init.dim, &init.x);
    for step in 1..t {
        let rs = &r * &s;
        s += rs / step as f64;
    }
    let x = (&r * &s) / t as f64;
    let mut flat = Vec::with_capacity(n * init.dim);
    for row in x.row_iter() {
        flat.extend(row.iter());
    }
    Ok(flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_circulant;
    use approx::assert_abs_diff_eq;

    fn chain() -> GraphSnapshot {
        GraphSnapshot::from_neighbor_sets(&[vec![], vec![0], vec![1]]).unwrap()
    }

    #[test]
    fn single_edge_to_truth_jumps() {
        let g = GraphSnapshot::from_neighbor_sets(&[vec![], vec![0]]).unwrap();
        let s = step_agentwise(&SystemState::scalar(vec![0.0, 1.0]), &g).unwrap();
        assert_eq!(s.opinions(), &[0.0, 0.0]);
        assert_eq!(s.weights(), &[0.0, 1.0]);
        assert_eq!(s.t(), 1);
    }

    #[test]
    fn self_loop_recursion() {
        // x(t+1) = x(t) (2t+1)/(2t+2)
        let g = GraphSnapshot::from_neighbor_sets(&[vec![], vec![0, 1]]).unwrap();
        let mut s = SystemState::scalar(vec![0.0, 1.0]);
        let expected = [0.5, 0.375, 0.3125];
        for want in expected {
            s = step_agentwise(&s, &g).unwrap();
            assert_abs_diff_eq!(s.opinion(1)[0], want, epsilon = 1e-15);
        }
        assert_eq!(s.weights()[1], 6.0);
    }

    #[test]
    fn empty_snapshot_only_advances_clock() {
        let s = SystemState::new(vec![0.0, 0.3, -2.0], 1, vec![0.0, 4.0, 0.0]).unwrap();
        let next = step_agentwise(&s, &GraphSnapshot::empty(3)).unwrap();
        assert_eq!(next.opinions(), s.opinions());
        assert_eq!(next.weights(), s.weights());
        assert_eq!(next.t(), 1);
        let m = step_matrix(&s, &GraphSnapshot::empty(3)).unwrap();
        assert_eq!(m, next);
    }

    #[test]
    fn step_errors() {
        let s = SystemState::scalar(vec![0.0, 1.0]);
        assert!(matches!(step_agentwise(&s, &chain()), Err(Error::Shape(_))));
        assert!(matches!(
            SystemState::new(vec![0.0, 1.0], 1, vec![0.0, -1.0]),
            Err(Error::InvalidState(_))
        ));
        assert!(update_matrix(&chain(), &[0.0, -0.5, 0.0]).is_err());
    }

    #[test]
    fn update_matrix_examples() {
        let m = update_matrix(&GraphSnapshot::empty(4), &[0.0, 3.0, 0.0, 1.0]).unwrap();
        assert_eq!(*m.matrix(), DMatrix::identity(4, 4));
        let m = update_matrix(&chain(), &[0.0, 1.0, 1.0]).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 0.5]);
        assert_eq!(*m.matrix(), want);
    }

    #[test]
    fn chain_matrix_steps() {
        // x_2(t) = 1/t for t >= 2
        let mut s = SystemState::scalar(vec![0.0, 1.0, 1.0]);
        for _ in 0..3 {
            s = step_matrix(&s, &chain()).unwrap();
        }
        assert_abs_diff_eq!(s.opinions()[1], 0.0);
        assert_abs_diff_eq!(s.opinions()[2], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn record_times_shapes() {
        assert_eq!(record_times(0, RecordStride::Every(1)).unwrap(), vec![0]);
        assert_eq!(record_times(7, RecordStride::Every(3)).unwrap(), vec![0, 3, 6, 7]);
        let g = record_times(100, RecordStride::Geometric(1.5)).unwrap();
        assert_eq!(g[..4], [0, 1, 2, 3]);
        assert_eq!(*g.last().unwrap(), 100);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(record_times(10, RecordStride::Geometric(1.0)).is_err());
        assert!(record_times(10, RecordStride::Every(0)).is_err());
    }

    #[test]
    fn run_circulant_degree_one_hits_truth() {
        let seq = GraphSequence::Fixed(build_circulant(5, 1).unwrap());
        let mut x = vec![1.0; 6];
        x[0] = 0.0;
        let traj = run(&seq, &SystemState::scalar(x), &RunOptions::new(20)).unwrap();
        assert_eq!(traj.sup_norm[0], 1.0);
        assert!(traj.sup_norm[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn run_circulant_matches_product() {
        let seq = GraphSequence::Fixed(build_circulant(4, 2).unwrap());
        let x = vec![0.0, 1.0, 1.0, 1.0, 1.0];
        let traj = run(&seq, &SystemState::scalar(x), &RunOptions::new(3).stride(RecordStride::Every(1))).unwrap();
        let mut prod = 1.0;
        for (t, v) in traj.times.iter().zip(&traj.sup_norm).skip(1) {
            prod *= 1.0 - 1.0 / (2.0 * *t as f64);
            assert_abs_diff_eq!(*v, prod, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(traj.sup_norm[3], 0.3125, epsilon = 1e-15);
    }

    #[test]
    fn run_horizon_zero() {
        let seq = GraphSequence::Fixed(chain());
        let traj = run(&seq, &SystemState::scalar(vec![0.0, 1.0, 1.0]), &RunOptions::new(0)).unwrap();
        assert_eq!(traj.times, vec![0]);
        assert_eq!(traj.sup_norm, vec![1.0]);
    }

    #[test]
    fn run_keeps_states_and_exports() {
        let seq = GraphSequence::Fixed(chain());
        let init = SystemState::with_dim(vec![0.0, 0.0, 1.0, 2.0, 1.0, -1.0], 2).unwrap();
        let traj = run(&seq, &init, &RunOptions::new(4).stride(RecordStride::Every(2)).keep_states(2)).unwrap();
        assert_eq!(traj.states.iter().map(|s| s.t()).collect::<Vec<_>>(), vec![0, 2, 4]);
        assert!(traj.to_csv().starts_with("t,sup_norm\n0,2\n"));
        let csv = traj.states_csv();
        assert!(csv.starts_with("t,agent,coord,value\n0,0,0,0\n0,0,1,0\n0,1,0,1\n0,1,1,2\n"));
        assert_eq!(csv.lines().count(), 1 + 3 * 3 * 2);
    }

    #[test]
    fn closed_form_chain_first_step() {
        let x = fixed_closed_form(&chain(), &SystemState::scalar(vec![0.0, 1.0, 1.0]), 1, AgentId(0)).unwrap();
        assert_eq!(x, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn closed_form_circulant_product() {
        for (l, d) in [(4, 2), (6, 3), (5, 5)] {
            let g = build_circulant(l, d).unwrap();
            let mut x0 = vec![1.0; l + 1];
            x0[0] = 0.0;
            let t = 50;
            let x = fixed_closed_form(&g, &SystemState::scalar(x0), t, AgentId(0)).unwrap();
            let prod: f64 = (1..=t).map(|s| 1.0 - 1.0 / (s as f64 * d as f64)).product();
            for v in &x[1..] {
                assert!((v - prod).abs() <= 1e-12 * prod, "L={l} d={d}: {v} vs {prod}");
            }
        }
    }

    #[test]
    fn closed_form_rejects_zero_degree() {
        let g = GraphSnapshot::from_neighbor_sets(&[vec![], vec![0], vec![]]).unwrap();
        let r = fixed_closed_form(&g, &SystemState::scalar(vec![0.0; 3]), 5, AgentId(0));
        assert!(matches!(r, Err(Error::SingularDegree(2))));
    }
}
