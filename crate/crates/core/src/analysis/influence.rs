//! Influence indicators.
//!
//! `P(t)` is the update matrix `(W+D)^{-1}(W+A)` with the truth's row and
//! column removed. Products follow `P(t:s) = P(t-1) ... P(s)`, `P(s:s) = I`,
//! and the indicator `alpha(t:s) = 1 - P(t:s) 1` is the mass each learner has
//! received from the truth over `[s, t)`.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::update_matrix;
use crate::graph::{learners, AgentId, GraphSequence, GraphSnapshot};
use crate::{Error, Result};

/// Learner block of an update matrix. Row and column `k` correspond to agent
/// `learners[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubStochasticBlock {
    pub matrix: DMatrix<f64>,
    pub learners: Vec<usize>,
}

impl SubStochasticBlock {
    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.row_iter().map(|r| r.sum()).collect()
    }
}

/// Per-learner indicator values, in learner order.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorVector(pub Vec<f64>);

impl IndicatorVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_truth(snapshot: &GraphSnapshot, truth: AgentId) -> Result<()> {
    if truth.0 >= snapshot.n() {
        return Err(Error::InvalidParameter(format!(
            "truth {truth} outside [0, {})",
            snapshot.n()
        )));
    }
    if snapshot.out_degree(truth.0) != 0 {
        return Err(Error::InvalidTruth(truth.0));
    }
    Ok(())
}

pub fn learner_block(snapshot: &GraphSnapshot, w: &[f64], truth: AgentId) -> Result<SubStochasticBlock> {
    check_truth(snapshot, truth)?;
    let full = update_matrix(snapshot, w)?.into_matrix();
    let ids: Vec<usize> = learners(snapshot.n(), truth).collect();
    let matrix = full.remove_row(truth.0).remove_column(truth.0);
    Ok(SubStochasticBlock { matrix, learners: ids })
}

fn indicator_of(m: &DMatrix<f64>) -> Vec<f64> {
    m.row_iter().map(|r| 1.0 - r.sum()).collect()
}

/// Single-step indicator `alpha(s) = 1 - P(s) 1`.
pub fn influence_step(snapshot: &GraphSnapshot, w: &[f64], truth: AgentId) -> Result<IndicatorVector> {
    Ok(IndicatorVector(indicator_of(&learner_block(snapshot, w, truth)?.matrix)))
}

/// Learner blocks `P(s), ..., P(t-1)` and weights `w(s), ..., w(t)` for one
/// window of a sequence, with weights evolved from `init_w` at time 0.
#[derive(Debug, Clone)]
pub struct InfluenceWindow {
    s: u64,
    t: u64,
    blocks: Vec<DMatrix<f64>>,
    weights: Vec<Vec<f64>>,
}

impl InfluenceWindow {
    pub fn new(sequence: &GraphSequence, init_w: &[f64], s: u64, t: u64, truth: AgentId) -> Result<Self> {
        if s >= t {
            return Err(Error::InvalidParameter(format!("window needs s < t, got [{s}, {t})")));
        }
        if let GraphSequence::Random { model, .. } = sequence {
            if model.truths().len() != 1 {
                return Err(Error::UnsupportedAnalysis(
                    "influence analysis needs exactly one truth".into(),
                ));
            }
        }
        let n = sequence.n();
        if init_w.len() != n {
            return Err(Error::Shape(format!("{} weights for {n} agents", init_w.len())));
        }
        let mut w = init_w.to_vec();
        let mut stream = sequence.stream();
        let mut blocks = Vec::with_capacity((t - s) as usize);
        let mut weights = Vec::with_capacity((t - s + 1) as usize);
        for r in 0..t {
            let g = stream.get(r)?;
            if r >= s {
                weights.push(learners(n, truth).map(|i| w[i]).collect());
                blocks.push(learner_block(g, &w, truth)?.matrix);
            }
            for (i, wi) in w.iter_mut().enumerate() {
                *wi += g.out_degree(i) as f64;
            }
        }
        weights.push(learners(n, truth).map(|i| w[i]).collect());
        Ok(InfluenceWindow { s, t, blocks, weights })
    }

    pub fn start(&self) -> u64 {
        self.s
    }

    pub fn end(&self) -> u64 {
        self.t
    }

    /// `P(r)` for `s <= r < t`.
    pub fn block(&self, r: u64) -> &DMatrix<f64> {
        &self.blocks[(r - self.s) as usize]
    }

    /// Learner weights `w(r)` for `s <= r <= t`.
    pub fn weights_at(&self, r: u64) -> &[f64] {
        &self.weights[(r - self.s) as usize]
    }

    /// `P(to:from) = P(to-1) ... P(from)` for `s <= from <= to <= t`.
    pub fn product(&self, from: u64, to: u64) -> DMatrix<f64> {
        let m = self.blocks.first().map_or(0, |b| b.nrows());
        let mut acc = DMatrix::identity(m, m);
        for r in from..to {
            acc = self.block(r) * acc;
        }
        acc
    }

    /// `alpha(r)` for a single step.
    pub fn step_indicator(&self, r: u64) -> Vec<f64> {
        indicator_of(self.block(r))
    }

    /// `alpha(t:s)`.
    pub fn indicator(&self) -> IndicatorVector {
        IndicatorVector(indicator_of(&self.product(self.s, self.t)))
    }

    /// `sum_{k=s}^{t-1} P(t:k+1) alpha(k)`, which telescopes to `alpha(t:s)`.
    pub fn telescoped_indicator(&self) -> IndicatorVector {
        let m = self.weights[0].len();
        let mut total = DVector::zeros(m);
        // suffix products P(t:k+1), built right to left
        let mut suffix = DMatrix::identity(m, m);
        for k in (self.s..self.t).rev() {
            let alpha = DVector::from_vec(self.step_indicator(k));
            total += &suffix * alpha;
            suffix *= self.block(k);
        }
        IndicatorVector(total.iter().copied().collect())
    }

    /// `W(t)^{-1} W(s) sum_{k=s}^{t-1} alpha(k)`, elementwise, 0 where
    /// `w_i(t) = 0`.
    pub fn lemma1_bound(&self) -> IndicatorVector {
        let ws = self.weights_at(self.s);
        let wt = self.weights_at(self.t);
        let mut sums = vec![0.0; ws.len()];
        for k in self.s..self.t {
            for (acc, a) in sums.iter_mut().zip(self.step_indicator(k)) {
                *acc += a;
            }
        }
        IndicatorVector(
            sums.iter()
                .zip(ws.iter().zip(wt))
                .map(|(sum, (&w0, &w1))| if w1 == 0.0 { 0.0 } else { w0 / w1 * sum })
                .collect(),
        )
    }
}

/// `alpha(t:s)` for `sequence` with weights evolved from `init_w` at time 0.
pub fn influence_window(
    sequence: &GraphSequence,
    init_w: &[f64],
    s: u64,
    t: u64,
    truth: AgentId,
) -> Result<IndicatorVector> {
    Ok(InfluenceWindow::new(sequence, init_w, s, t, truth)?.indicator())
}

/// Elementwise lower bound on `alpha(t:s)`.
pub fn lemma1_bound(
    sequence: &GraphSequence,
    init_w: &[f64],
    s: u64,
    t: u64,
    truth: AgentId,
) -> Result<IndicatorVector> {
    Ok(InfluenceWindow::new(sequence, init_w, s, t, truth)?.lemma1_bound())
}

/// `P(t:s)`.
pub fn block_product(
    sequence: &GraphSequence,
    init_w: &[f64],
    s: u64,
    t: u64,
    truth: AgentId,
) -> Result<DMatrix<f64>> {
    let window = InfluenceWindow::new(sequence, init_w, s, t, truth)?;
    Ok(window.product(s, t))
}
