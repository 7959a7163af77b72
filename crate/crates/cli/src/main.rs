//! `selfconf`: command-line front end for the increasing self-confidence
//! experiments.
//!
//! Exit codes: 0 on success, 2 on invalid input (bad files, configs or
//! parameters, unreachable learners in `spectral`), 1 on runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use selfconf_core::analysis::spectral_gap;
use selfconf_core::experiment::{
    reproduce_fig1, run_bandit, run_bwr, simulate, write_bandit, write_bwr, write_circulant, write_fig1,
    write_periodic_tight, write_simulation, BanditConfig, BwrConfig, ExperimentConfig, Fig1Params,
};
use selfconf_core::graph::read_graph_file;
use selfconf_core::parallel::threads_from_env;
use selfconf_core::{AgentId, Error};

#[derive(Parser, Debug)]
#[command(name = "selfconf", version, about = "Opinion dynamics with increasing self-confidence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral gap of a fixed graph, printed as JSON.
    Spectral {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        truth: usize,
    },
    /// Replicated runs from a config file; writes trajectory.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Random-topology slope grid over agent counts and degrees.
    #[command(name = "reproduce-fig1")]
    ReproduceFig1 {
        #[arg(long, value_delimiter = ',', default_values_t = [20, 50, 100])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 5, 10])]
        m: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write one of the explicit graph constructions.
    Construct {
        #[command(subcommand)]
        kind: Construct,
    },
    /// Monte Carlo Gaussian social learning against the deterministic engine.
    Bwr {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Monte Carlo round-robin Gaussian bandit.
    Bandit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum Construct {
    /// Circulant graph file.
    Circulant {
        #[arg(long)]
        learners: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// One graph file per step of the period plus manifest.txt, in a directory.
    PeriodicTight {
        #[arg(long)]
        learners: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        period: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn execute(command: Command) -> Result<(), Failure> {
    let threads = threads_from_env();
    let started = Instant::now();
    match command {
        Command::Spectral { graph, truth } => {
            let g = read_graph_file(&graph)?;
            let report = spectral_gap(&g, AgentId(truth))?;
            print_json(&report)?;
            if !report.reachable {
                return Err(Failure::Validation(
                    "some learners have no path to the truth; the gap carries no rate guarantee".into(),
                ));
            }
        }
        Command::Simulate {
            config,
            seed,
            replicates,
            horizon,
            out,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = replicates {
                cfg.replicates = r;
            }
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            let summary = simulate(&cfg, threads)?;
            write_simulation(&summary, &out)?;
            match &summary.fit {
                Some(fit) => eprintln!(
                    "slope {:.5} (r2 {:.5}) over [{}, {}]{}",
                    fit.slope,
                    fit.r_squared,
                    fit.window.lo,
                    fit.window.hi,
                    if summary.fit_low_r2 { "  [low r2]" } else { "" }
                ),
                None => eprintln!("no fit: {}", summary.fit_error.as_deref().unwrap_or("")),
            }
        }
        Command::ReproduceFig1 {
            n,
            m,
            replicates,
            horizon,
            seed,
            out,
        } => {
            let params = Fig1Params {
                n,
                m,
                replicates,
                horizon,
                seed,
                ..Fig1Params::default()
            };
            let result = reproduce_fig1(&params, threads)?;
            write_fig1(&result, &out)?;
            for cell in &result.cells {
                match cell.fit {
                    Some(f) => eprintln!(
                        "n={:<4} m={:<3} slope {:+.5}  (-1/n = {:+.5}, r2 {:.4})",
                        cell.n, cell.m, f.slope, cell.reference_slope, f.r_squared
                    ),
                    None => eprintln!("n={:<4} m={:<3} no fit", cell.n, cell.m),
                }
            }
        }
        Command::Construct { kind } => match kind {
            Construct::Circulant { learners, degree, out } => write_circulant(learners, degree, &out)?,
            Construct::PeriodicTight {
                learners,
                degree,
                period,
                out,
            } => {
                let manifest = write_periodic_tight(learners, degree, period, &out)?;
                eprintln!("wrote {}", manifest.display());
            }
        },
        Command::Bwr { config, seed, out } => {
            let mut cfg = BwrConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_bwr(&cfg, threads)?;
            write_bwr(&report, &out)?;
            eprintln!(
                "max deviation from engine: {:.3} standard errors",
                report.max_deviation_se
            );
        }
        Command::Bandit { config, seed, out } => {
            let mut cfg = BanditConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_bandit(&cfg, threads)?;
            write_bandit(&report, &out)?;
            eprintln!(
                "max deviation from theta: {:.3} standard errors",
                report.max_deviation_se
            );
        }
    }
    eprintln!("done in {:.2?}", started.elapsed());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
