//! Command-line front end for the isobaric SMA pipeline.
//!
//! Every subcommand reads the same TOML configuration, writes its files
//! under the configured output directory, and prints the paths it produced.
//! Exit codes: 0 on success, 2 for configuration or input problems, 1 for
//! runtime failures.

use clap::{Parser, Subcommand, ValueEnum};
use smaq_core::config::{load_config, ResolvedConfig};
use smaq_core::runner::{
    self, run_calibrate, run_doe, run_infogain, run_propagate, run_simulate, RunnerError,
};
use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "smaq", version, about = "Thermal hysteresis loops for shape-memory alloys: \
sensitivity screening, Bayesian calibration, uncertainty bands, and experiment ranking")]
struct Cli {
    /// Path to the TOML configuration.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,

    /// Override the sampler seed from the configuration (calibrate and
    /// infogain; simulate and doe are deterministic and ignore it).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for design evaluation and band solves (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the hysteresis loop at each configured stress and write the curves.
    Simulate {
        /// Solve a single loop at this stress (MPa) instead of the configured list.
        #[arg(long)]
        stress: Option<f64>,
    },
    /// Screen all configured factors with a two-level full factorial and rank them.
    Doe,
    /// Sample the posterior of the calibrated parameters against measured loops.
    Calibrate {
        /// Loop CSV files (repeatable). Accepts both measured data and
        /// `simulate` output.
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
    },
    /// Turn a posterior chain into confidence bands at each configured stress.
    Propagate {
        /// Chain CSV written by `calibrate`.
        #[arg(long)]
        chain: PathBuf,
        /// Band construction.
        #[arg(long, value_enum, default_value_t = Method::Direct)]
        method: Method,
    },
    /// Rank candidate experimental designs by expected information gain.
    Infogain {
        /// Chain CSV written by `calibrate`; its posterior becomes the prior.
        #[arg(long)]
        chain: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Linearized propagation of the posterior mean and covariance.
    Fosm,
    /// Re-solve the model for every posterior sample.
    Direct,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // A second global-pool build (tests invoke main twice in-process
        // never happens here, but respect failure anyway) is not fatal.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprint!(": {s}");
                source = s.source();
            }
            eprintln!();
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn load(cli: &Cli) -> Result<ResolvedConfig, RunnerError> {
    let mut cfg = load_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.mcmc.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), RunnerError> {
    match &cli.command {
        Command::Simulate { stress } => {
            let cfg = load(cli)?;
            let out = run_simulate(&cfg, stress.map(|mpa| mpa * 1e6))?;
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Doe => {
            let cfg = load(cli)?;
            let out = run_doe(&cfg)?;
            println!("wrote {}", out.design_path.display());
            println!("wrote {}", out.anova_path.display());
            println!("wrote {}", out.selected_path.display());
            println!("rows: {}", out.table.total.dof + 1);
            match out.selected.len() {
                0 => println!("selected: (none)"),
                _ => println!("selected: {}", out.selected.join(", ")),
            }
        }
        Command::Calibrate { data } => {
            let cfg = load(cli)?;
            let out = run_calibrate(&cfg, data)?;
            println!("wrote {}", out.chain_path.display());
            println!("wrote {}", out.sidecar_path.display());
            println!("wrote {}", out.summary_path.display());
            for f in &out.histogram_paths {
                println!("wrote {}", f.display());
            }
            let burn = out.summary.burn_in;
            println!(
                "chain: {} steps, burn-in {}, acceptance {:.3}",
                out.chain.len(),
                burn,
                out.chain.acceptance_rate(burn)
            );
            for (id, (m, s)) in out
                .summary
                .param_ids
                .iter()
                .zip(out.summary.mean.iter().zip(posterior_sds(&out.summary)))
            {
                println!("  {} = {m:.6e} +/- {s:.3e}", id.name());
            }
        }
        Command::Propagate { chain, method } => {
            let cfg = load(cli)?;
            let m = match method {
                Method::Fosm => runner::RunMethod::Fosm,
                Method::Direct => runner::RunMethod::Direct,
            };
            let out = run_propagate(&cfg, chain, m)?;
            for f in &out.band_paths {
                println!("wrote {}", f.display());
            }
        }
        Command::Infogain { chain } => {
            let cfg = load(cli)?;
            let out = run_infogain(&cfg, chain)?;
            println!("wrote {}", out.report_path.display());
            for label in &out.report.ranking {
                let c = out
                    .report
                    .candidates
                    .iter()
                    .find(|c| &c.label == label)
                    .expect("ranking labels come from the candidate list");
                println!("  {label}: {:.6} nats", c.kl);
            }
        }
    }
    Ok(())
}

fn posterior_sds(summary: &smaq_core::calibrate::PosteriorSummary) -> Vec<f64> {
    (0..summary.param_ids.len())
        .map(|i| summary.covariance.get(i, i).max(0.0).sqrt())
        .collect()
}
