//! Per-step interaction graphs and graph sequences.
//!
//! A [`GraphSnapshot`] holds, for every agent `i`, the set `N_i` of agents it
//! listens to (its out-neighbours). Self-loops are allowed; duplicate
//! neighbours are not. Agent 0 is the truth in the built-in constructions.

use std::borrow::Cow;
use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;

use crate::rng::stream_rng;
use crate::{Error, Result};

mod file;

pub use file::{parse_graph, read_graph_file, write_graph, write_graph_file};

/// Index of an agent in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AgentId(pub usize);

impl AgentId {
    pub const TRUTH: AgentId = AgentId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for AgentId {
    fn from(i: usize) -> Self {
        AgentId(i)
    }
}

/// Directed interaction graph at a single time step, stored as compressed
/// adjacency rows. Each row is sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSnapshot {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl GraphSnapshot {
    /// Graph on `n` agents with no edges.
    pub fn empty(n: usize) -> Self {
        GraphSnapshot {
            offsets: vec![0; n + 1],
            targets: Vec::new(),
        }
    }

    /// Builds a snapshot from one neighbour list per agent.
    pub fn from_neighbor_sets<S: AsRef<[usize]>>(sets: &[S]) -> Result<Self> {
        let n = sets.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (i, set) in sets.iter().enumerate() {
            let start = targets.len();
            targets.extend_from_slice(set.as_ref());
            let row = &mut targets[start..];
            row.sort_unstable();
            if let Some(&j) = row.iter().find(|&&j| j >= n) {
                return Err(Error::InvalidParameter(format!(
                    "agent {i} lists neighbour {j}, outside [0, {n})"
                )));
            }
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "agent {i} lists neighbour {} twice",
                    w[0]
                )));
            }
            offsets.push(targets.len());
        }
        Ok(GraphSnapshot { offsets, targets })
    }

    /// Builds a snapshot on `n` agents from `(src, dst)` edges.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut sets = vec![Vec::new(); n];
        for (src, dst) in edges {
            if src >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge source {src} outside [0, {n})"
                )));
            }
            sets[src].push(dst);
        }
        Self::from_neighbor_sets(&sets)
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Edges in `(src, dst)` order, sources ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| self.neighbors(i).iter().map(move |&j| (i, j)))
    }

    fn clear(&mut self, n: usize) {
        self.offsets.clear();
        self.offsets.push(0);
        self.offsets.reserve(n);
        self.targets.clear();
    }

    fn push_row(&mut self, row: &[usize]) {
        self.targets.extend_from_slice(row);
        self.offsets.push(self.targets.len());
    }
}

/// Out-degree `|N_i|` of every agent.
pub fn out_degrees(snapshot: &GraphSnapshot) -> Vec<usize> {
    (0..snapshot.n()).map(|i| snapshot.out_degree(i)).collect()
}

/// Agents other than `truth`, in ascending order.
pub fn learners(n: usize, truth: AgentId) -> impl Iterator<Item = usize> {
    (0..n).filter(move |&i| i != truth.0)
}

/// For every learner (agents other than `truth`, ascending), whether a
/// directed path to the truth exists.
pub fn truth_reachability(snapshot: &GraphSnapshot, truth: AgentId) -> Result<Vec<bool>> {
    let n = snapshot.n();
    if truth.0 >= n {
        return Err(Error::InvalidParameter(format!("truth {truth} outside [0, {n})")));
    }
    if snapshot.out_degree(truth.0) != 0 {
        return Err(Error::InvalidTruth(truth.0));
    }
    let mut reverse = vec![Vec::new(); n];
    for (src, dst) in snapshot.edges() {
        reverse[dst].push(src);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([truth.0]);
    seen[truth.0] = true;
    while let Some(v) = queue.pop_front() {
        for &u in &reverse[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    Ok(learners(n, truth).map(|i| seen[i]).collect())
}

/// Circulant construction with `learners` learners (agents `1..=learners`) and
/// truth 0. Learner `i` listens to the truth and to the `degree - 1` learners
/// `i, i+1, ..., i+degree-2` (wrapped within the learners), so every learner
/// has out-degree exactly `degree`.
pub fn build_circulant(learners: usize, degree: usize) -> Result<GraphSnapshot> {
    if learners == 0 {
        return Err(Error::InvalidParameter("need at least one learner".into()));
    }
    if degree == 0 || degree > learners {
        return Err(Error::InvalidParameter(format!(
            "degree must lie in [1, {learners}], got {degree}"
        )));
    }
    let mut sets = vec![Vec::new()];
    for i in 0..learners {
        let mut row = Vec::with_capacity(degree);
        row.push(0);
        row.extend((0..degree - 1).map(|r| (i + r) % learners + 1));
        sets.push(row);
    }
    GraphSnapshot::from_neighbor_sets(&sets)
}

/// Periodic sequence whose first snapshot of every period is
/// [`build_circulant`] and whose remaining `period - 1` snapshots are empty.
pub fn build_periodic_tight(learners: usize, degree: usize, period: usize) -> Result<GraphSequence> {
    if period == 0 {
        return Err(Error::InvalidParameter("period must be at least 1".into()));
    }
    let active = build_circulant(learners, degree)?;
    let n = active.n();
    let mut snapshots = vec![active];
    snapshots.extend((1..period).map(|_| GraphSnapshot::empty(n)));
    GraphSequence::periodic(snapshots)
}

/// Random neighbour model: at every step each learner independently draws
/// `d_i` distinct agents uniformly without replacement from all `n` agents
/// (itself and the truths included). Truths get no neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomModel {
    n: usize,
    is_truth: Vec<bool>,
    degrees: Vec<usize>,
}

impl RandomModel {
    /// `degrees` has one entry per agent; entries of truths are ignored.
    pub fn new(n: usize, truths: &[AgentId], degrees: Vec<usize>) -> Result<Self> {
        if degrees.len() != n {
            return Err(Error::Shape(format!(
                "{} degrees given for {n} agents",
                degrees.len()
            )));
        }
        let mut is_truth = vec![false; n];
        for t in truths {
            if t.0 >= n {
                return Err(Error::InvalidParameter(format!("truth {t} outside [0, {n})")));
            }
            is_truth[t.0] = true;
        }
        let mut degrees = degrees;
        for i in 0..n {
            if is_truth[i] {
                degrees[i] = 0;
            } else if degrees[i] == 0 || degrees[i] > n {
                return Err(Error::InvalidParameter(format!(
                    "learner {i} degree {} outside [1, {n}]",
                    degrees[i]
                )));
            }
        }
        Ok(RandomModel { n, is_truth, degrees })
    }

    /// Every learner draws `degree` neighbours; agent 0 is the only truth.
    pub fn uniform(n: usize, degree: usize) -> Result<Self> {
        Self::new(n, &[AgentId::TRUTH], vec![degree; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_truth(&self, i: usize) -> bool {
        self.is_truth[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn truths(&self) -> Vec<AgentId> {
        (0..self.n).filter(|&i| self.is_truth[i]).map(AgentId).collect()
    }

    fn sample_into(&self, t: u64, seed: u64, out: &mut GraphSnapshot, pool: &mut Vec<usize>) {
        let mut rng = stream_rng(seed, t);
        pool.clear();
        pool.extend(0..self.n);
        out.clear(self.n);
        for i in 0..self.n {
            let d = self.degrees[i];
            if d == 0 {
                out.push_row(&[]);
                continue;
            }
            let (chosen, _) = pool.partial_shuffle(&mut rng, d);
            chosen.sort_unstable();
            out.push_row(chosen);
        }
    }
}

/// Snapshot of `model` at time `t` for generator `seed`. The same `(seed, t)`
/// always yields the same snapshot.
pub fn sample_random_snapshot(model: &RandomModel, t: u64, seed: u64) -> GraphSnapshot {
    let mut out = GraphSnapshot::empty(0);
    let mut pool = Vec::with_capacity(model.n);
    model.sample_into(t, seed, &mut out, &mut pool);
    out
}

/// Rule giving the snapshot that governs the step from `t` to `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSequence {
    Fixed(GraphSnapshot),
    Periodic(Vec<GraphSnapshot>),
    Random { model: RandomModel, seed: u64 },
    Explicit {
        snapshots: Vec<GraphSnapshot>,
        overflow: Option<GraphSnapshot>,
    },
}

impl GraphSequence {
    pub fn periodic(snapshots: Vec<GraphSnapshot>) -> Result<Self> {
        check_uniform_size(&snapshots)?;
        if snapshots.is_empty() {
            return Err(Error::InvalidParameter("a period needs at least one snapshot".into()));
        }
        Ok(GraphSequence::Periodic(snapshots))
    }

    pub fn explicit(snapshots: Vec<GraphSnapshot>, overflow: Option<GraphSnapshot>) -> Result<Self> {
        let mut all = snapshots.iter().collect::<Vec<_>>();
        all.extend(overflow.iter());
        if let Some(first) = all.first() {
            if let Some(bad) = all.iter().find(|s| s.n() != first.n()) {
                return Err(Error::Shape(format!(
                    "snapshots on {} and {} agents in one sequence",
                    first.n(),
                    bad.n()
                )));
            }
        } else {
            return Err(Error::InvalidParameter("empty explicit sequence".into()));
        }
        Ok(GraphSequence::Explicit { snapshots, overflow })
    }

    pub fn random(model: RandomModel, seed: u64) -> Self {
        GraphSequence::Random { model, seed }
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        match self {
            GraphSequence::Fixed(g) => g.n(),
            GraphSequence::Periodic(p) => p[0].n(),
            GraphSequence::Random { model, .. } => model.n,
            GraphSequence::Explicit { snapshots, overflow } => snapshots
                .first()
                .or(overflow.as_ref())
                .map_or(0, GraphSnapshot::n),
        }
    }

    /// Snapshot governing the step from `t` to `t + 1`.
    pub fn snapshot_at(&self, t: u64) -> Result<Cow<'_, GraphSnapshot>> {
        match self {
            GraphSequence::Fixed(g) => Ok(Cow::Borrowed(g)),
            GraphSequence::Periodic(p) => Ok(Cow::Borrowed(&p[(t % p.len() as u64) as usize])),
            GraphSequence::Random { model, seed } => {
                Ok(Cow::Owned(sample_random_snapshot(model, t, *seed)))
            }
            GraphSequence::Explicit { snapshots, overflow } => snapshots
                .get(t as usize)
                .or(overflow.as_ref())
                .map(Cow::Borrowed)
                .ok_or(Error::OutOfRange {
                    t,
                    len: snapshots.len(),
                }),
        }
    }

    /// Streaming accessor that reuses buffers for random sequences.
    pub fn stream(&self) -> SnapshotStream<'_> {
        SnapshotStream {
            sequence: self,
            scratch: GraphSnapshot::empty(0),
            pool: Vec::new(),
        }
    }
}

fn check_uniform_size(snapshots: &[GraphSnapshot]) -> Result<()> {
    if let Some(first) = snapshots.first() {
        if let Some(bad) = snapshots.iter().find(|s| s.n() != first.n()) {
            return Err(Error::Shape(format!(
                "snapshots on {} and {} agents in one sequence",
                first.n(),
                bad.n()
            )));
        }
    }
    Ok(())
}

/// Sequential reader over a [`GraphSequence`]; avoids allocating a fresh
/// snapshot per step for random sequences.
pub struct SnapshotStream<'a> {
    sequence: &'a GraphSequence,
    scratch: GraphSnapshot,
    pool: Vec<usize>,
}

impl<'a> SnapshotStream<'a> {
    pub fn get(&mut self, t: u64) -> Result<&GraphSnapshot> {
        match self.sequence {
            GraphSequence::Random { model, seed } => {
                model.sample_into(t, *seed, &mut self.scratch, &mut self.pool);
                Ok(&self.scratch)
            }
            GraphSequence::Fixed(g) => Ok(g),
            GraphSequence::Periodic(p) => Ok(&p[(t % p.len() as u64) as usize]),
            GraphSequence::Explicit { snapshots, overflow } => snapshots
                .get(t as usize)
                .or(overflow.as_ref())
                .ok_or(Error::OutOfRange {
                    t,
                    len: snapshots.len(),
                }),
        }
    }
}

/// Total out-degree of every agent over one period, and its maximum.
/// A fixed sequence counts as period one.
pub fn period_degrees(sequence: &GraphSequence) -> Result<(Vec<usize>, usize)> {
    let period: &[GraphSnapshot] = match sequence {
        GraphSequence::Fixed(g) => std::slice::from_ref(g),
        GraphSequence::Periodic(p) => p,
        _ => return Err(Error::UnsupportedSequence),
    };
    let mut totals = vec![0; sequence.n()];
    for snapshot in period {
        for (i, total) in totals.iter_mut().enumerate() {
            *total += snapshot.out_degree(i);
        }
    }
    let max = totals.iter().copied().max().unwrap_or(0);
    Ok((totals, max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> GraphSnapshot {
        GraphSnapshot::from_neighbor_sets(&[vec![], vec![0], vec![1]]).unwrap()
    }

    #[test]
    fn out_degrees_examples() {
        assert_eq!(out_degrees(&GraphSnapshot::empty(3)), vec![0, 0, 0]);
        assert_eq!(out_degrees(&build_circulant(4, 2).unwrap()), vec![0, 2, 2, 2, 2]);
        let g = GraphSnapshot::from_neighbor_sets(&[vec![], vec![0, 1]]).unwrap();
        assert_eq!(g.out_degree(1), 2);
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(GraphSnapshot::from_neighbor_sets(&[vec![1, 1], vec![]]).is_err());
        assert!(GraphSnapshot::from_neighbor_sets(&[vec![2], vec![]]).is_err());
        assert!(GraphSnapshot::from_edges(2, [(2, 0)]).is_err());
    }

    #[test]
    fn reachability_examples() {
        assert_eq!(truth_reachability(&chain(), AgentId(0)).unwrap(), vec![true, true]);
        assert_eq!(
            truth_reachability(&GraphSnapshot::empty(3), AgentId(0)).unwrap(),
            vec![false, false]
        );
        let g = build_circulant(8, 4).unwrap();
        assert!(truth_reachability(&g, AgentId(0)).unwrap().into_iter().all(|r| r));
        assert!(matches!(
            truth_reachability(&chain(), AgentId(1)),
            Err(Error::InvalidTruth(1))
        ));
    }

    #[test]
    fn circulant_rows() {
        let g = build_circulant(4, 1).unwrap();
        for i in 1..=4 {
            assert_eq!(g.neighbors(i), &[0]);
        }
        let g = build_circulant(4, 2).unwrap();
        for i in 1..=4 {
            assert_eq!(g.neighbors(i), &[0, i]);
        }
        let g = build_circulant(6, 3).unwrap();
        assert_eq!(g.neighbors(1), &[0, 1, 2]);
        assert_eq!(g.neighbors(5), &[0, 5, 6]);
        assert_eq!(g.neighbors(6), &[0, 1, 6]);
        assert!(build_circulant(3, 4).is_err());
        assert!(build_circulant(3, 0).is_err());
    }

    #[test]
    fn circulant_learner_block_is_shifted() {
        for (l, d) in [(5, 3), (8, 4), (7, 7), (6, 1)] {
            let g = build_circulant(l, d).unwrap();
            let row = |i: usize| -> Vec<bool> { (1..=l).map(|j| g.has_edge(i, j)).collect() };
            for i in 1..l {
                let mut shifted = row(i);
                shifted.rotate_right(1);
                assert_eq!(row(i + 1), shifted, "L={l} d={d} i={i}");
            }
        }
    }

    #[test]
    fn periodic_tight_layout() {
        let fixed = GraphSequence::Fixed(build_circulant(4, 2).unwrap());
        let once = build_periodic_tight(4, 2, 1).unwrap();
        for t in 0..10 {
            assert_eq!(once.snapshot_at(t).unwrap(), fixed.snapshot_at(t).unwrap());
        }
        let seq = build_periodic_tight(4, 2, 3).unwrap();
        for t in 0..12u64 {
            let g = seq.snapshot_at(t).unwrap();
            assert_eq!(g.is_empty(), t % 3 != 0, "t={t}");
        }
        for t in 0..10_000u64 {
            assert_eq!(seq.snapshot_at(t).unwrap(), seq.snapshot_at(t % 3).unwrap());
        }
    }

    #[test]
    fn period_degree_examples() {
        let (d, max) = period_degrees(&GraphSequence::Fixed(build_circulant(5, 3).unwrap())).unwrap();
        assert!(d[1..].iter().all(|&x| x == 3));
        assert_eq!(max, 3);
        let (d, max) = period_degrees(&build_periodic_tight(4, 2, 3).unwrap()).unwrap();
        assert_eq!(&d[1..], &[2, 2, 2, 2]);
        assert_eq!(max, 2);
        let (d, max) = period_degrees(&build_periodic_tight(8, 4, 2).unwrap()).unwrap();
        assert!(d[1..].iter().all(|&x| x == 4));
        assert_eq!(max, 4);
        let seq = GraphSequence::periodic(vec![GraphSnapshot::empty(5), build_circulant(4, 3).unwrap()])
            .unwrap();
        let (d, _) = period_degrees(&seq).unwrap();
        assert_eq!(&d[1..], &[3, 3, 3, 3]);
        let random = GraphSequence::random(RandomModel::uniform(4, 2).unwrap(), 1);
        assert!(matches!(period_degrees(&random), Err(Error::UnsupportedSequence)));
    }

    #[test]
    fn snapshot_at_dispatch() {
        let g0 = GraphSnapshot::empty(2);
        let g1 = GraphSnapshot::from_neighbor_sets(&[vec![], vec![0]]).unwrap();
        let seq = GraphSequence::periodic(vec![g0.clone(), g1.clone()]).unwrap();
        assert_eq!(*seq.snapshot_at(5).unwrap(), g1);
        let fixed = GraphSequence::Fixed(g1.clone());
        assert_eq!(*fixed.snapshot_at(123).unwrap(), g1);

        let model = RandomModel::uniform(6, 2).unwrap();
        let seq = GraphSequence::random(model.clone(), 99);
        assert_eq!(*seq.snapshot_at(17).unwrap(), sample_random_snapshot(&model, 17, 99));
        let mut stream = seq.stream();
        assert_eq!(*stream.get(17).unwrap(), sample_random_snapshot(&model, 17, 99));

        let ex = GraphSequence::explicit(vec![g0.clone()], None).unwrap();
        assert!(matches!(ex.snapshot_at(1), Err(Error::OutOfRange { t: 1, len: 1 })));
        let ex = GraphSequence::explicit(vec![g0], Some(g1.clone())).unwrap();
        assert_eq!(*ex.snapshot_at(4).unwrap(), g1);
    }

    #[test]
    fn random_snapshots_have_exact_degrees() {
        let model = RandomModel::new(7, &[AgentId(0), AgentId(3)], vec![1, 2, 7, 5, 3, 1, 4]).unwrap();
        for t in 0..200 {
            let g = sample_random_snapshot(&model, t, 5);
            for i in 0..7 {
                assert_eq!(g.out_degree(i), model.degree(i));
            }
            assert_eq!(g.out_degree(0), 0);
            assert_eq!(g.out_degree(3), 0);
            assert_eq!(g.neighbors(2), &[0, 1, 2, 3, 4, 5, 6]);
        }
        assert_eq!(sample_random_snapshot(&model, 3, 5), sample_random_snapshot(&model, 3, 5));
        assert_ne!(sample_random_snapshot(&model, 3, 5), sample_random_snapshot(&model, 4, 5));
    }

    #[test]
    fn random_truth_frequency_matches_degree_over_n() {
        // n = 3, one truth, d = 1: P[truth chosen] = 1/3
        let model = RandomModel::uniform(3, 1).unwrap();
        let samples = 100_000u64;
        let mut hits = 0u64;
        for t in 0..samples {
            let g = sample_random_snapshot(&model, t, 2024);
            hits += u64::from(g.has_edge(1, 0));
        }
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        let freq = hits as f64 / samples as f64;
        assert!((freq - p).abs() < 3.0 * se, "freq {freq}, se {se}");
    }

    #[test]
    fn random_model_validation() {
        assert!(RandomModel::uniform(3, 4).is_err());
        assert!(RandomModel::uniform(3, 0).is_err());
        assert!(RandomModel::new(3, &[AgentId(0)], vec![1, 1]).is_err());
        assert!(RandomModel::new(3, &[AgentId(0)], vec![0, 1, 1]).is_ok());
    }
}
