use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, InitSpec, Topology};
use super::simulate::simulate;
use super::{ensure_dir, write_json, write_text};
use crate::analysis::{FitWindow, RateFit};
use crate::dynamics::series_csv;
use crate::rng::derive_seed;
use crate::Result;

/// Grid of random-topology experiments: `n` agents (one truth), every learner
/// drawing `m` neighbours per step, learners uniform on `[0, 1)`, truth at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Params {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub replicates: usize,
    pub horizon: u64,
    pub seed: u64,
    pub stride_ratio: f64,
    pub fit_decades: u32,
}

impl Default for Fig1Params {
    fn default() -> Self {
        Fig1Params {
            n: vec![20, 50, 100],
            m: vec![1, 5, 10],
            replicates: 100,
            horizon: 100_000,
            seed: 0,
            stride_ratio: 1.25,
            fit_decades: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Cell {
    pub n: usize,
    pub m: usize,
    #[serde(skip)]
    pub times: Vec<u64>,
    #[serde(skip)]
    pub mean_sup_norm: Vec<f64>,
    pub fit: Option<RateFit>,
    pub fit_window: FitWindow,
    pub low_r2: bool,
    /// `-1/n`, for comparison with the fitted slope.
    pub reference_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Result {
    pub params: Fig1Params,
    pub cells: Vec<Fig1Cell>,
}

impl Fig1Result {
    pub fn cell(&self, n: usize, m: usize) -> Option<&Fig1Cell> {
        self.cells.iter().find(|c| c.n == n && c.m == m)
    }
}

pub fn reproduce_fig1(params: &Fig1Params, threads: Option<usize>) -> Result<Fig1Result> {
    let mut cells = Vec::new();
    for &n in &params.n {
        for &m in &params.m {
            let mut config = ExperimentConfig::new(Topology::Random { agents: n, degree: m }, params.horizon);
            config.replicates = params.replicates;
            config.seed = derive_seed(params.seed, ((n as u64) << 32) | m as u64);
            config.init = InitSpec::Uniform;
            config.stride_ratio = params.stride_ratio;
            config.fit_decades = params.fit_decades;
            let summary = simulate(&config, threads)?;
            cells.push(Fig1Cell {
                n,
                m,
                times: summary.times,
                mean_sup_norm: summary.mean_sup_norm,
                fit: summary.fit,
                fit_window: summary.fit_window,
                low_r2: summary.fit_low_r2,
                reference_slope: -1.0 / n as f64,
            });
        }
    }
    Ok(Fig1Result {
        params: params.clone(),
        cells,
    })
}

/// Writes one `fig1_n{n}_m{m}.csv` per cell plus `fig1_slopes.json`.
pub fn write_fig1(result: &Fig1Result, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    for cell in &result.cells {
        let name = format!("fig1_n{}_m{}.csv", cell.n, cell.m);
        write_text(&dir.join(name), &series_csv(&cell.times, &cell.mean_sup_norm))?;
    }
    write_json(&dir.join("fig1_slopes.json"), result)
}
