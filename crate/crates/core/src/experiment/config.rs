use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{construct::read_periodic_manifest, read_toml};
use crate::dynamics::RecordStride;
use crate::graph::{build_circulant, build_periodic_tight, read_graph_file, AgentId, GraphSequence, RandomModel};
use crate::{Error, Result};

/// Graph sequence of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Topology {
    /// Fixed graph read from a graph file.
    FixedFile {
        path: PathBuf,
        #[serde(default)]
        truth: usize,
    },
    /// Periodic sequence listed in a manifest written by `construct`.
    PeriodicManifest { path: PathBuf },
    Circulant { learners: usize, degree: usize },
    PeriodicTight {
        learners: usize,
        degree: usize,
        period: usize,
    },
    /// Every learner draws `degree` neighbours from all `agents` each step;
    /// agent 0 is the truth.
    Random { agents: usize, degree: usize },
}

/// Initial learner opinions. The truth always starts at `truth_position`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    /// Independent uniform draws on `[0, 1)`, per replicate.
    #[default]
    Uniform,
    Constant { value: f64 },
    /// One value per learner, in agent order with the truth skipped.
    Explicit { values: Vec<f64> },
}

fn one() -> usize {
    1
}

fn default_ratio() -> f64 {
    1.25
}

fn two() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub horizon: u64,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub truth_position: f64,
    /// Geometric ratio between recorded times.
    #[serde(default = "default_ratio")]
    pub stride_ratio: f64,
    /// Slopes are fitted over the last this many decades of the horizon.
    #[serde(default = "two")]
    pub fit_decades: u32,
}

impl ExperimentConfig {
    pub fn new(topology: Topology, horizon: u64) -> Self {
        ExperimentConfig {
            topology,
            horizon,
            replicates: 1,
            seed: 0,
            init: InitSpec::Uniform,
            truth_position: 0.0,
            stride_ratio: default_ratio(),
            fit_decades: 2,
        }
    }

    /// Reads a TOML config. Relative graph paths are taken relative to the
    /// config file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config: ExperimentConfig = read_toml(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        match &mut config.topology {
            Topology::FixedFile { path: p, .. } | Topology::PeriodicManifest { path: p } if p.is_relative() => {
                *p = base.join(&*p);
            }
            _ => {}
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !self.stride_ratio.is_finite() || self.stride_ratio <= 1.0 {
            return Err(Error::Config(format!(
                "stride_ratio must exceed 1, got {}",
                self.stride_ratio
            )));
        }
        if !self.truth_position.is_finite() {
            return Err(Error::Config("truth_position must be finite".into()));
        }
        match self.topology {
            Topology::Random { agents, degree } => {
                if agents < 2 {
                    return Err(Error::Config("random topology needs at least 2 agents".into()));
                }
                if degree == 0 || degree > agents {
                    return Err(Error::Config(format!(
                        "random degree must lie in [1, {agents}], got {degree}"
                    )));
                }
            }
            Topology::Circulant { learners, degree } | Topology::PeriodicTight { learners, degree, .. }
                if learners == 0 || degree == 0 || degree > learners =>
            {
                return Err(Error::Config(format!(
                    "need 1 <= degree <= learners, got degree {degree} with {learners} learners"
                )));
            }
            _ => {}
        }
        if let InitSpec::Constant { value } = self.init {
            if !value.is_finite() {
                return Err(Error::Config("initial value must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn stride(&self) -> RecordStride {
        RecordStride::Geometric(self.stride_ratio)
    }

    pub(crate) fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let (sequence, truth) = match &self.topology {
            Topology::FixedFile { path, truth } => {
                (Some(GraphSequence::Fixed(read_graph_file(path)?)), AgentId(*truth))
            }
            Topology::PeriodicManifest { path } => (Some(read_periodic_manifest(path)?), AgentId::TRUTH),
            Topology::Circulant { learners, degree } => (
                Some(GraphSequence::Fixed(build_circulant(*learners, *degree)?)),
                AgentId::TRUTH,
            ),
            Topology::PeriodicTight {
                learners,
                degree,
                period,
            } => (
                Some(build_periodic_tight(*learners, *degree, *period)?),
                AgentId::TRUTH,
            ),
            Topology::Random { .. } => (None, AgentId::TRUTH),
        };
        let n = match (&sequence, &self.topology) {
            (Some(s), _) => s.n(),
            (None, Topology::Random { agents, .. }) => *agents,
            _ => unreachable!("only random topologies are built per replicate"),
        };
        if truth.0 >= n {
            return Err(Error::Config(format!("truth {truth} outside [0, {n})")));
        }
        if let InitSpec::Explicit { values } = &self.init {
            if values.len() != n - 1 {
                return Err(Error::Config(format!(
                    "explicit init lists {} values for {} learners",
                    values.len(),
                    n - 1
                )));
            }
        }
        Ok(Prepared { sequence, truth, n })
    }
}

pub(crate) struct Prepared {
    sequence: Option<GraphSequence>,
    pub truth: AgentId,
    pub n: usize,
}

impl Prepared {
    /// Fixed sequence shared by all replicates, if any.
    pub fn shared(&self) -> Option<&GraphSequence> {
        self.sequence.as_ref()
    }

    pub fn random_sequence(&self, config: &ExperimentConfig, seed: u64) -> Result<GraphSequence> {
        match config.topology {
            Topology::Random { agents, degree } => {
                Ok(GraphSequence::random(RandomModel::uniform(agents, degree)?, seed))
            }
            _ => Err(Error::Config("topology is not random".into())),
        }
    }
}
