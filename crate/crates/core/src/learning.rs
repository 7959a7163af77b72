//! Gaussian social learning and sequential estimation.
//!
//! In Bayesian-without-recall learning each learner keeps a Gaussian belief
//! `N(mu_i, 1/tau_i)` and, per step, receives one noisy signal from every
//! neighbour. The precision grows by `tau * |N_i|`, so the expected means
//! follow the self-confidence dynamics with `w_i = tau_i / tau`. A bandit
//! estimator is the one-learner, one-truth special case.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dynamics::{step_agentwise, SystemState};
use crate::graph::{AgentId, GraphSequence, GraphSnapshot};
use crate::parallel::map_replicates;
use crate::rng::{derive_seed, purpose, stream_rng};
use crate::{Error, Result};

/// Gaussian belief with mean `mu` and precision `tau` (0: uninformative,
/// infinite: exact).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianBelief {
    pub mu: Vec<f64>,
    pub tau: f64,
}

impl GaussianBelief {
    pub fn new(mu: Vec<f64>, tau: f64) -> Result<Self> {
        if tau.is_nan() || tau < 0.0 {
            return Err(Error::InvalidParameter(format!("precision {tau} is negative")));
        }
        if mu.is_empty() || mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter("belief mean must be finite and non-empty".into()));
        }
        Ok(GaussianBelief { mu, tau })
    }

    pub fn scalar(mu: f64, tau: f64) -> Result<Self> {
        Self::new(vec![mu], tau)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

fn check_signal_tau(signal_tau: f64) -> Result<()> {
    if signal_tau.is_nan() || signal_tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "signal precision {signal_tau} is negative"
        )));
    }
    Ok(())
}

/// Combines a prior of precision `tau_i` with `count` signals summing to `sum`
/// at per-signal precision `signal_tau`.
fn posterior(mu: &mut [f64], tau_i: &mut f64, sum: &[f64], count: usize, signal_tau: f64) {
    if count == 0 || signal_tau == 0.0 {
        return;
    }
    let k = count as f64;
    if signal_tau.is_infinite() {
        if tau_i.is_infinite() {
            // equal-precision average of the prior and the signals
            for (m, s) in mu.iter_mut().zip(sum) {
                *m = (*m + s) / (k + 1.0);
            }
        } else {
            for (m, s) in mu.iter_mut().zip(sum) {
                *m = s / k;
            }
        }
        *tau_i = f64::INFINITY;
        return;
    }
    if tau_i.is_infinite() {
        return;
    }
    let denom = *tau_i + signal_tau * k;
    for (m, s) in mu.iter_mut().zip(sum) {
        *m = (*tau_i * *m + signal_tau * s) / denom;
    }
    *tau_i = denom;
}

/// Sequential Bayes update of an estimator with one datum observed at
/// precision `signal_tau`.
pub fn bayes_update(estimator: &GaussianBelief, datum: &[f64], signal_tau: f64) -> Result<GaussianBelief> {
    if signal_tau.is_nan() || signal_tau <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "signal precision must be positive, got {signal_tau}"
        )));
    }
    if datum.len() != estimator.dim() {
        return Err(Error::Shape(format!(
            "datum of dimension {} for estimator of dimension {}",
            datum.len(),
            estimator.dim()
        )));
    }
    let mut next = estimator.clone();
    posterior(&mut next.mu, &mut next.tau, datum, 1, signal_tau);
    Ok(next)
}

/// Beliefs of every agent plus the signal noise precision.
#[derive(Debug, Clone, PartialEq)]
pub struct BwrSystem {
    beliefs: Vec<GaussianBelief>,
    signal_tau: f64,
    is_truth: Vec<bool>,
}

impl BwrSystem {
    pub fn new(beliefs: Vec<GaussianBelief>, signal_tau: f64, truths: &[AgentId]) -> Result<Self> {
        check_signal_tau(signal_tau)?;
        let n = beliefs.len();
        if let Some(first) = beliefs.first() {
            if beliefs.iter().any(|b| b.dim() != first.dim()) {
                return Err(Error::Shape("beliefs of mixed dimension".into()));
            }
        }
        let mut is_truth = vec![false; n];
        for t in truths {
            if t.0 >= n {
                return Err(Error::InvalidParameter(format!("truth {t} outside [0, {n})")));
            }
            is_truth[t.0] = true;
        }
        Ok(BwrSystem {
            beliefs,
            signal_tau,
            is_truth,
        })
    }

    pub fn beliefs(&self) -> &[GaussianBelief] {
        &self.beliefs
    }

    pub fn signal_tau(&self) -> f64 {
        self.signal_tau
    }

    pub fn n(&self) -> usize {
        self.beliefs.len()
    }

    pub fn dim(&self) -> usize {
        self.beliefs.first().map_or(1, GaussianBelief::dim)
    }

    pub fn is_truth(&self, i: usize) -> bool {
        self.is_truth[i]
    }

    pub fn truths(&self) -> Vec<AgentId> {
        (0..self.n()).filter(|&i| self.is_truth[i]).map(AgentId).collect()
    }

    /// Variance of a signal emitted by agent `j`: its own belief variance (0
    /// for truths) plus the channel noise.
    fn signal_variance(&self, j: usize) -> Result<f64> {
        let noise = 1.0 / self.signal_tau;
        if self.is_truth[j] {
            return Ok(noise);
        }
        let tau_j = self.beliefs[j].tau;
        if tau_j == 0.0 {
            return Err(Error::InvalidState(format!(
                "agent {j} has an uninformative belief and cannot emit a signal"
            )));
        }
        Ok(1.0 / tau_j + noise)
    }
}

/// One synchronous BWR step. All signals are drawn from the pre-update
/// beliefs; truths never change.
pub fn bwr_step<R: Rng + ?Sized>(system: &BwrSystem, snapshot: &GraphSnapshot, rng: &mut R) -> Result<BwrSystem> {
    if snapshot.n() != system.n() {
        return Err(Error::Shape(format!(
            "snapshot on {} agents applied to {} agents",
            snapshot.n(),
            system.n()
        )));
    }
    check_signal_tau(system.signal_tau)?;
    let mut next = system.clone();
    if system.signal_tau == 0.0 {
        return Ok(next);
    }
    let k = system.dim();
    let mut sum = vec![0.0; k];
    for i in 0..system.n() {
        let nbrs = snapshot.neighbors(i);
        if system.is_truth[i] || nbrs.is_empty() {
            continue;
        }
        sum.iter_mut().for_each(|s| *s = 0.0);
        for &j in nbrs {
            let sd = system.signal_variance(j)?.sqrt();
            for (c, s) in sum.iter_mut().enumerate() {
                let z: f64 = if sd == 0.0 { 0.0 } else { rng.sample(StandardNormal) };
                *s += system.beliefs[j].mu[c] + sd * z;
            }
        }
        let b = &mut next.beliefs[i];
        posterior(&mut b.mu, &mut b.tau, &sum, nbrs.len(), system.signal_tau);
    }
    Ok(next)
}

/// Engine state whose deterministic trajectory is the expectation of the BWR
/// means: `x_i = mu_i`, `w_i = tau_i / tau`.
pub fn bwr_expected_system(system: &BwrSystem) -> Result<SystemState> {
    let tau = system.signal_tau;
    if tau == 0.0 {
        return Err(Error::MappingUndefined("signal precision is zero".into()));
    }
    let mut x = Vec::with_capacity(system.n() * system.dim());
    let mut w = Vec::with_capacity(system.n());
    for (i, b) in system.beliefs.iter().enumerate() {
        x.extend_from_slice(&b.mu);
        if system.is_truth[i] {
            w.push(0.0);
        } else if b.tau.is_infinite() {
            if tau.is_infinite() {
                return Err(Error::MappingUndefined(format!(
                    "agent {i} and the channel both have infinite precision"
                )));
            }
            return Err(Error::MappingUndefined(format!("agent {i} has infinite precision")));
        } else {
            w.push(b.tau / tau);
        }
    }
    SystemState::new(x, system.dim(), w)
}

/// Replicate statistics of a BWR experiment against the engine prediction.
/// Entries are indexed `[step][agent * dim + coord]`; step 0 is the initial
/// state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BwrMonteCarlo {
    pub replicates: usize,
    pub mean: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
    pub engine: Vec<Vec<f64>>,
    /// Replicate mean of each agent's distance to its nearest truth, `[step][agent]`.
    pub mean_abs_error: Vec<Vec<f64>>,
    pub truths: Vec<usize>,
}

impl BwrMonteCarlo {
    /// Largest `|mean - engine| / std_err` over learner entries and steps.
    /// Zero-error entries with zero deviation count as 0.
    pub fn max_deviation_in_se(&self, dim: usize) -> f64 {
        let mut worst = 0.0f64;
        for step in 1..self.mean.len() {
            for idx in 0..self.mean[step].len() {
                if self.truths.contains(&(idx / dim)) {
                    continue;
                }
                let dev = (self.mean[step][idx] - self.engine[step][idx]).abs();
                let se = self.std_err[step][idx];
                let z = if dev <= 1e-12 { 0.0 } else if se == 0.0 { f64::INFINITY } else { dev / se };
                worst = worst.max(z);
            }
        }
        worst
    }
}

/// Column-wise mean and standard error over replicate rows, reduced in
/// replicate order.
pub(crate) fn mean_and_se(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let r = rows.len() as f64;
    let width = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; width];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= r);
    let mut var = vec![0.0; width];
    for row in rows {
        for ((acc, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *acc += (v - m).powi(2);
        }
    }
    let se = var
        .iter()
        .map(|s| if rows.len() > 1 { (s / (r - 1.0) / r).sqrt() } else { 0.0 })
        .collect();
    (mean, se)
}

fn nearest_truth_distance(mu: &[f64], dim: usize, i: usize, truths: &[usize]) -> f64 {
    truths
        .iter()
        .map(|&t| {
            (0..dim)
                .map(|c| (mu[i * dim + c] - mu[t * dim + c]).abs())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Runs `replicates` independent BWR trajectories of `steps` steps. Signals of
/// replicate `r` at step `s` come from a stream keyed by `(seed, r, s)`.
pub fn bwr_monte_carlo(
    system: &BwrSystem,
    sequence: &GraphSequence,
    steps: u64,
    replicates: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<BwrMonteCarlo> {
    if replicates == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    let dim = system.dim();
    let flatten = |s: &BwrSystem| -> Vec<f64> { s.beliefs.iter().flat_map(|b| b.mu.iter().copied()).collect() };
    let runs: Vec<Result<Vec<Vec<f64>>>> = map_replicates(replicates, threads, |r| {
        let rep_seed = derive_seed(derive_seed(seed, r as u64), purpose::SIGNALS);
        let mut current = system.clone();
        let mut out = vec![flatten(&current)];
        for s in 0..steps {
            let g = sequence.snapshot_at(s)?;
            current = bwr_step(&current, &g, &mut stream_rng(rep_seed, s))?;
            out.push(flatten(&current));
        }
        Ok(out)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let truths: Vec<usize> = system.truths().iter().map(|t| t.0).collect();
    let mut mean = Vec::new();
    let mut std_err = Vec::new();
    let mut mean_abs_error = Vec::new();
    for step in 0..=steps as usize {
        let rows: Vec<Vec<f64>> = runs.iter().map(|run| run[step].clone()).collect();
        let (m, se) = mean_and_se(&rows);
        mean.push(m);
        std_err.push(se);
        let errs: Vec<Vec<f64>> = rows
            .iter()
            .map(|mu| {
                (0..system.n())
                    .map(|i| {
                        let d = nearest_truth_distance(mu, dim, i, &truths);
                        if d.is_finite() { d } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        mean_abs_error.push(mean_and_se(&errs).0);
    }

    let mut state = bwr_expected_system(system)?;
    let mut engine = vec![state.opinions().to_vec()];
    for s in 0..steps {
        state = step_agentwise(&state, &*sequence.snapshot_at(s)?)?;
        engine.push(state.opinions().to_vec());
    }
    Ok(BwrMonteCarlo {
        replicates,
        mean,
        std_err,
        engine,
        mean_abs_error,
        truths,
    })
}

/// `K` arms with unknown values observed under Gaussian noise, one Gaussian
/// estimator per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    theta: Vec<f64>,
    noise_sigma: f64,
    priors: Vec<GaussianBelief>,
}

impl BanditInstance {
    /// Uninformative priors (`mu = 0`, `tau = 0`).
    pub fn new(theta: Vec<f64>, noise_sigma: f64) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidParameter("need at least one arm".into()));
        }
        if !noise_sigma.is_finite() || noise_sigma < 0.0 {
            return Err(Error::InvalidParameter(format!("noise sigma {noise_sigma}")));
        }
        let priors = theta.iter().map(|_| GaussianBelief { mu: vec![0.0], tau: 0.0 }).collect();
        Ok(BanditInstance {
            theta,
            noise_sigma,
            priors,
        })
    }

    pub fn with_prior(mut self, mu: f64, tau: f64) -> Result<Self> {
        let prior = GaussianBelief::scalar(mu, tau)?;
        self.priors = vec![prior; self.theta.len()];
        Ok(self)
    }

    pub fn arms(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn priors(&self) -> &[GaussianBelief] {
        &self.priors
    }

    /// Observation precision `sigma^{-2}` (infinite when noiseless).
    pub fn signal_tau(&self) -> f64 {
        if self.noise_sigma == 0.0 {
            f64::INFINITY
        } else {
            self.noise_sigma.powi(-2)
        }
    }
}

/// Estimates after every pull. Rows are indexed by time `1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditTrace {
    pub times: Vec<u64>,
    pub estimates: Vec<Vec<f64>>,
    pub abs_error: Vec<Vec<f64>>,
    pub precisions: Vec<Vec<f64>>,
    /// Time of each arm's first pull.
    pub first_pull: Vec<u64>,
}

/// Pulls arms round-robin for `horizon` rounds, updating the pulled arm's
/// estimator with `theta_k + noise`.
pub fn bandit_run<R: Rng + ?Sized>(instance: &BanditInstance, horizon: u64, rng: &mut R) -> Result<BanditTrace> {
    let k = instance.arms();
    if horizon < k as u64 {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} shorter than the {k} arms"
        )));
    }
    let tau = instance.signal_tau();
    let mut beliefs = instance.priors.clone();
    let mut trace = BanditTrace {
        times: Vec::with_capacity(horizon as usize),
        estimates: Vec::with_capacity(horizon as usize),
        abs_error: Vec::with_capacity(horizon as usize),
        precisions: Vec::with_capacity(horizon as usize),
        first_pull: (1..=k as u64).collect(),
    };
    for t in 0..horizon {
        let arm = (t % k as u64) as usize;
        let z: f64 = if instance.noise_sigma == 0.0 { 0.0 } else { rng.sample(StandardNormal) };
        let datum = instance.theta[arm] + instance.noise_sigma * z;
        beliefs[arm] = bayes_update(&beliefs[arm], &[datum], tau)?;
        trace.times.push(t + 1);
        trace.estimates.push(beliefs.iter().map(|b| b.mu[0]).collect());
        trace.abs_error.push(
            beliefs
                .iter()
                .zip(&instance.theta)
                .map(|(b, th)| (b.mu[0] - th).abs())
                .collect(),
        );
        trace.precisions.push(beliefs.iter().map(|b| b.tau).collect());
    }
    Ok(trace)
}

/// Replicate statistics of [`bandit_run`]. Per-time entries are `[t-1][arm]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanditMonteCarlo {
    pub replicates: usize,
    pub times: Vec<u64>,
    pub mean_estimate: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
    pub mean_abs_error: Vec<Vec<f64>>,
    pub first_pull: Vec<u64>,
    pub theta: Vec<f64>,
    /// Replicate variance of each final estimate.
    pub final_variance: Vec<f64>,
    /// `sigma^2 / pulls` for each arm at the horizon.
    pub predicted_variance: Vec<f64>,
}

impl BanditMonteCarlo {
    /// Largest `|mean - theta| / std_err` over arms and times after each
    /// arm's first pull.
    pub fn max_deviation_in_se(&self) -> f64 {
        let mut worst = 0.0f64;
        for (row, &t) in self.times.iter().enumerate() {
            for arm in 0..self.theta.len() {
                if t < self.first_pull[arm] {
                    continue;
                }
                let dev = (self.mean_estimate[row][arm] - self.theta[arm]).abs();
                let se = self.std_err[row][arm];
                let z = if dev <= 1e-12 { 0.0 } else if se == 0.0 { f64::INFINITY } else { dev / se };
                worst = worst.max(z);
            }
        }
        worst
    }
}

pub fn bandit_monte_carlo(
    instance: &BanditInstance,
    horizon: u64,
    replicates: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<BanditMonteCarlo> {
    if replicates == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    let traces = map_replicates(replicates, threads, |r| {
        let mut rng = stream_rng(derive_seed(seed, r as u64), purpose::SIGNALS);
        bandit_run(instance, horizon, &mut rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let first = &traces[0];
    let mut mean_estimate = Vec::with_capacity(first.times.len());
    let mut std_err = Vec::with_capacity(first.times.len());
    let mut mean_abs_error = Vec::with_capacity(first.times.len());
    let mut final_variance = Vec::new();
    for row in 0..first.times.len() {
        let est: Vec<Vec<f64>> = traces.iter().map(|tr| tr.estimates[row].clone()).collect();
        let (m, se) = mean_and_se(&est);
        if row + 1 == first.times.len() {
            let r = replicates as f64;
            final_variance = se.iter().map(|s| s * s * r).collect();
        }
        mean_estimate.push(m);
        std_err.push(se);
        let err: Vec<Vec<f64>> = traces.iter().map(|tr| tr.abs_error[row].clone()).collect();
        mean_abs_error.push(mean_and_se(&err).0);
    }
    let k = instance.arms() as u64;
    let predicted_variance = (0..k)
        .map(|arm| {
            let pulls = horizon / k + u64::from(arm < horizon % k);
            instance.noise_sigma.powi(2) / pulls as f64
        })
        .collect();
    Ok(BanditMonteCarlo {
        replicates,
        times: first.times.clone(),
        mean_estimate,
        std_err,
        mean_abs_error,
        first_pull: first.first_pull.clone(),
        theta: instance.theta.clone(),
        final_variance,
        predicted_variance,
    })
}
