use std::path::Path;

use rand::Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, InitSpec, Prepared, Topology};
use super::{ensure_dir, write_json, write_text, LOW_R2};
use crate::analysis::{fit_power_law, spectral_gap, FitWindow, RateFit, SpectralReport};
use crate::dynamics::{record_times, run, series_csv, RunOptions, SystemState};
use crate::graph::{learners, GraphSequence};
use crate::parallel::map_replicates;
use crate::rng::{derive_seed, purpose, stream_rng};
use crate::{Error, Result};

/// Outcome of a batch of replicate runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub replicates: usize,
    pub horizon: u64,
    pub topology: Topology,
    pub times: Vec<u64>,
    pub mean_sup_norm: Vec<f64>,
    pub replicate_sup_norm: Vec<Vec<f64>>,
    pub fit_window: FitWindow,
    pub fit: Option<RateFit>,
    /// Why no fit was produced, when `fit` is absent.
    pub fit_error: Option<String>,
    pub fit_low_r2: bool,
    pub spectral: Option<SpectralReport>,
}

fn initial_state(config: &ExperimentConfig, prepared: &Prepared, rep_seed: u64) -> Result<SystemState> {
    let n = prepared.n;
    let mut x = vec![config.truth_position; n];
    let ids: Vec<usize> = learners(n, prepared.truth).collect();
    match &config.init {
        InitSpec::Uniform => {
            let mut rng = stream_rng(derive_seed(rep_seed, purpose::INIT), 0);
            for &i in &ids {
                x[i] = rng.random::<f64>();
            }
        }
        InitSpec::Constant { value } => ids.iter().for_each(|&i| x[i] = *value),
        InitSpec::Explicit { values } => {
            for (&i, &v) in ids.iter().zip(values) {
                x[i] = v;
            }
        }
    }
    SystemState::new(x, 1, vec![0.0; n])
}

/// Runs `config.replicates` independent trajectories on up to `threads`
/// workers and averages their distance to the truth.
pub fn simulate(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunSummary> {
    let prepared = config.prepare()?;
    let options = RunOptions::new(config.horizon)
        .stride(config.stride())
        .truths(vec![prepared.truth]);
    let times = record_times(config.horizon, config.stride())?;

    let runs = map_replicates(config.replicates, threads, |r| -> Result<Vec<f64>> {
        let rep_seed = derive_seed(config.seed, r as u64);
        let owned;
        let sequence: &GraphSequence = match prepared.shared() {
            Some(s) => s,
            None => {
                owned = prepared.random_sequence(config, derive_seed(rep_seed, purpose::GRAPH))?;
                &owned
            }
        };
        let init = initial_state(config, &prepared, rep_seed)?;
        Ok(run(sequence, &init, &options)?.sup_norm)
    });
    let replicate_sup_norm = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut mean_sup_norm = vec![0.0; times.len()];
    for series in &replicate_sup_norm {
        for (m, v) in mean_sup_norm.iter_mut().zip(series) {
            *m += v;
        }
    }
    let count = replicate_sup_norm.len() as f64;
    mean_sup_norm.iter_mut().for_each(|m| *m /= count);

    let fit_window = FitWindow::last_decades(config.horizon, config.fit_decades);
    let (fit, fit_error) = match fit_power_law(&times, &mean_sup_norm, fit_window) {
        Ok(f) => (Some(f), None),
        Err(Error::Unfittable(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let spectral = match prepared.shared() {
        Some(GraphSequence::Fixed(g)) => spectral_gap(g, prepared.truth).ok(),
        _ => None,
    };
    Ok(RunSummary {
        seed: config.seed,
        replicates: config.replicates,
        horizon: config.horizon,
        topology: config.topology.clone(),
        times,
        mean_sup_norm,
        replicate_sup_norm,
        fit_window,
        fit_low_r2: fit.is_some_and(|f| f.r_squared < LOW_R2),
        fit,
        fit_error,
        spectral,
    })
}

/// Writes `trajectory.csv` (averaged `t,sup_norm`) and `summary.json` into
/// `dir`.
pub fn write_simulation(summary: &RunSummary, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_text(&dir.join("trajectory.csv"), &series_csv(&summary.times, &summary.mean_sup_norm))?;
    write_json(&dir.join("summary.json"), summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_lies_between_replicates() {
        let mut c = ExperimentConfig::new(Topology::Random { agents: 6, degree: 2 }, 500);
        c.replicates = 8;
        c.seed = 3;
        let s = simulate(&c, Some(2)).unwrap();
        for (k, m) in s.mean_sup_norm.iter().enumerate() {
            let lo = s.replicate_sup_norm.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
            let hi = s.replicate_sup_norm.iter().map(|r| r[k]).fold(0.0, f64::max);
            assert!(lo - 1e-15 <= *m && *m <= hi + 1e-15);
        }
        assert!(s.spectral.is_none());
    }

    #[test]
    fn degree_one_circulant_is_unfittable() {
        let mut c = ExperimentConfig::new(Topology::Circulant { learners: 3, degree: 1 }, 100);
        c.init = InitSpec::Constant { value: 1.0 };
        let s = simulate(&c, None).unwrap();
        assert!(s.fit.is_none());
        assert!(s.fit_error.is_some());
        assert_eq!(s.spectral.as_ref().unwrap().nu, 1.0);
    }

    #[test]
    fn explicit_init_places_learners() {
        let mut c = ExperimentConfig::new(Topology::Circulant { learners: 2, degree: 1 }, 1);
        c.init = InitSpec::Explicit { values: vec![0.25, -0.5] };
        c.truth_position = 0.1;
        let s = simulate(&c, None).unwrap();
        assert!((s.mean_sup_norm[0] - 0.6).abs() < 1e-15);
        assert_eq!(s.mean_sup_norm[1], 0.0);
    }
}
