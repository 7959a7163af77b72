use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ensure_dir, read_toml, write_json, write_text};
use crate::graph::{AgentId, GraphSequence, GraphSnapshot};
use crate::learning::{
    bandit_monte_carlo, bwr_monte_carlo, BanditInstance, BanditMonteCarlo, BwrMonteCarlo, BwrSystem,
    GaussianBelief,
};
use crate::{Error, Result};

fn default_replicates() -> usize {
    10_000
}

/// Scalar BWR experiment on a fixed graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BwrConfig {
    pub agents: usize,
    #[serde(default)]
    pub truths: Vec<usize>,
    /// Directed `[src, dst]` edges: `src` hears `dst`.
    pub edges: Vec<[usize; 2]>,
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    pub signal_tau: f64,
    pub steps: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

impl BwrConfig {
    /// Truth 0 at the origin and a star centred on learner 1, which hears the
    /// truth and learner 2; learner 2 hears learner 1. Unit precisions.
    pub fn star() -> Self {
        BwrConfig {
            agents: 3,
            truths: vec![0],
            edges: vec![[1, 0], [1, 2], [2, 1]],
            mu: vec![0.0, 1.0, -0.5],
            tau: vec![0.0, 1.0, 1.0],
            signal_tau: 1.0,
            steps: 10,
            replicates: 10_000,
            seed: 0,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        read_toml(path)
    }

    fn build(&self) -> Result<(BwrSystem, GraphSequence)> {
        if self.mu.len() != self.agents || self.tau.len() != self.agents {
            return Err(Error::Config(format!(
                "mu and tau need {} entries each",
                self.agents
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        let beliefs = self
            .mu
            .iter()
            .zip(&self.tau)
            .map(|(&m, &t)| GaussianBelief::scalar(m, t))
            .collect::<Result<Vec<_>>>()?;
        let truths: Vec<AgentId> = self.truths.iter().map(|&t| AgentId(t)).collect();
        let system = BwrSystem::new(beliefs, self.signal_tau, &truths)?;
        let graph = GraphSnapshot::from_edges(self.agents, self.edges.iter().map(|e| (e[0], e[1])))?;
        if let Some(t) = truths.iter().find(|t| graph.out_degree(t.0) != 0) {
            return Err(Error::InvalidTruth(t.0));
        }
        Ok((system, GraphSequence::Fixed(graph)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BwrReport {
    pub config: BwrConfig,
    #[serde(flatten)]
    pub monte_carlo: BwrMonteCarlo,
    /// Largest replicate-mean deviation from the engine, in standard errors.
    pub max_deviation_se: f64,
    pub within_3se: bool,
}

pub fn run_bwr(config: &BwrConfig, threads: Option<usize>) -> Result<BwrReport> {
    let (system, sequence) = config.build()?;
    let mc = bwr_monte_carlo(&system, &sequence, config.steps, config.replicates, config.seed, threads)?;
    let max_deviation_se = mc.max_deviation_in_se(1);
    Ok(BwrReport {
        config: config.clone(),
        monte_carlo: mc,
        max_deviation_se,
        within_3se: max_deviation_se <= 3.0,
    })
}

/// Writes `bwr_trace.csv` (`t,agent_or_arm,abs_error`, learners only) and
/// `bwr_summary.json`.
pub fn write_bwr(report: &BwrReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut csv = String::from("t,agent_or_arm,abs_error\n");
    for (t, row) in report.monte_carlo.mean_abs_error.iter().enumerate() {
        for (agent, err) in row.iter().enumerate() {
            if !report.monte_carlo.truths.contains(&agent) {
                let _ = writeln!(csv, "{t},{agent},{err}");
            }
        }
    }
    write_text(&dir.join("bwr_trace.csv"), &csv)?;
    write_json(&dir.join("bwr_summary.json"), report)
}

/// Round-robin Gaussian bandit experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditConfig {
    pub theta: Vec<f64>,
    pub noise_sigma: f64,
    pub horizon: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub prior_mu: f64,
    #[serde(default)]
    pub prior_tau: f64,
}

impl BanditConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        read_toml(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanditReport {
    pub config: BanditConfig,
    pub final_mean_estimate: Vec<f64>,
    pub final_std_err: Vec<f64>,
    pub final_variance: Vec<f64>,
    pub predicted_variance: Vec<f64>,
    pub max_deviation_se: f64,
    pub within_3se: bool,
    #[serde(skip)]
    pub monte_carlo: BanditMonteCarlo,
}

pub fn run_bandit(config: &BanditConfig, threads: Option<usize>) -> Result<BanditReport> {
    if config.replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    let instance =
        BanditInstance::new(config.theta.clone(), config.noise_sigma)?.with_prior(config.prior_mu, config.prior_tau)?;
    let mc = bandit_monte_carlo(&instance, config.horizon, config.replicates, config.seed, threads)?;
    let max_deviation_se = mc.max_deviation_in_se();
    Ok(BanditReport {
        config: config.clone(),
        final_mean_estimate: mc.mean_estimate.last().cloned().unwrap_or_default(),
        final_std_err: mc.std_err.last().cloned().unwrap_or_default(),
        final_variance: mc.final_variance.clone(),
        predicted_variance: mc.predicted_variance.clone(),
        max_deviation_se,
        within_3se: max_deviation_se <= 3.0,
        monte_carlo: mc,
    })
}

/// Writes `bandit_trace.csv` (`t,agent_or_arm,abs_error`, replicate mean) and
/// `bandit_summary.json`.
pub fn write_bandit(report: &BanditReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mc = &report.monte_carlo;
    let mut csv = String::from("t,agent_or_arm,abs_error\n");
    for (t, row) in mc.times.iter().zip(&mc.mean_abs_error) {
        for (arm, err) in row.iter().enumerate() {
            let _ = writeln!(csv, "{t},{arm},{err}");
        }
    }
    write_text(&dir.join("bandit_trace.csv"), &csv)?;
    write_json(&dir.join("bandit_summary.json"), report)
}
