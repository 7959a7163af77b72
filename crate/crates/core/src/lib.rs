//! Simulation and numerical analysis for opinion dynamics with increasing
//! self-confidence.
//!
//! Agents move to a convex combination of their own opinion (weighted by a
//! self-confidence that grows by the number of neighbours heard each step)
//! and their neighbours' opinions. A static agent, the truth, never moves.
//!
//! The crate is split into:
//!
//! * [`graph`]: interaction graphs, graph sequences and the explicit constructions.
//! * [`dynamics`]: agent-wise and matrix-form steppers, the trajectory runner and
//!   the fixed-graph closed form.
//! * [`analysis`]: spectral gap, influence indicators and log-log rate fitting.
//! * [`learning`]: Gaussian social learning, sequential Bayes estimation and the
//!   bandit mapping.
//! * [`experiment`]: configuration, batch Monte Carlo execution and file output
//!   used by the command-line front end.

pub mod analysis;
pub mod dynamics;
mod error;
pub mod experiment;
pub mod graph;
pub mod learning;
pub mod parallel;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{AgentId, GraphSequence, GraphSnapshot, RandomModel};
pub use dynamics::{SystemState, Trajectory, UpdateMatrix};
