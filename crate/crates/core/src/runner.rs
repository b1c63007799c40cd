//! File-producing pipeline stages behind the command-line front end.
//!
//! Each `run_*` function takes a resolved configuration, writes its outputs
//! under the configured directory, and returns both the paths and the
//! in-memory results so callers can chain stages without re-reading files.

use crate::calibrate::{
    detect_burn_in, run_chain, summarize, CalibrateError, CalibrationSetup, Chain,
    CheckpointSpec, ExperimentalDataset, PosteriorSummary,
};
use crate::config::{ConfigError, ResolvedConfig};
use crate::doe::{anova_main_effects, evaluate_design, generate_full_factorial, rank_and_select,
    AnovaTable, DoeError};
use crate::infogain::{compare_designs, CompareSpec, InfoGainError, InfoGainReport};
use crate::io::{self, ChainSidecar, IoError};
use crate::numerics::NumericsError;
use crate::propagate::{direct_band, fosm_band, ConfidenceBand, PropagateError};
use crate::sma::SmaError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Doe(#[from] DoeError),
    #[error(transparent)]
    Calibrate(#[from] CalibrateError),
    #[error(transparent)]
    Propagate(#[from] PropagateError),
    #[error(transparent)]
    InfoGain(#[from] InfoGainError),
    #[error(transparent)]
    Solver(#[from] SmaError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("could not create output directory {path}: {source}")]
    OutputDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("calibrate needs at least one dataset file")]
    NoDatasets,
    #[error("no [[infogain.candidates]] configured")]
    NoCandidates,
    #[error("chain parameter `{name}` has no prior box in the configuration")]
    MissingPrior { name: String },
}

impl RunnerError {
    /// Whether the failure is a problem with the inputs (configuration,
    /// flags, malformed files) rather than with the run itself. The CLI
    /// maps this to its exit code.
    pub fn is_usage(&self) -> bool {
        match self {
            RunnerError::Config(_)
            | RunnerError::NoDatasets
            | RunnerError::NoCandidates
            | RunnerError::MissingPrior { .. } => true,
            RunnerError::Io(e) => matches!(
                e,
                IoError::Parse { .. } | IoError::MissingColumn { .. } | IoError::Invalid(_)
            ),
            RunnerError::Doe(e) => matches!(
                e,
                DoeError::EmptyDesign
                    | DoeError::TooManyFactors { .. }
                    | DoeError::InvalidLevels { .. }
                    | DoeError::ResponseCount { .. }
            ),
            RunnerError::Calibrate(e) => matches!(
                e,
                CalibrateError::InvalidPrior { .. }
                    | CalibrateError::InvalidDataset { .. }
                    | CalibrateError::InvalidSettings { .. }
                    | CalibrateError::InvalidHyperparameter { .. }
                    | CalibrateError::ChainTooShort { .. }
            ),
            RunnerError::Propagate(e) => matches!(
                e,
                PropagateError::TooFewSamples { .. }
                    | PropagateError::InvalidCoverage(_)
                    | PropagateError::DimensionMismatch { .. }
            ),
            RunnerError::InfoGain(e) => matches!(
                e,
                InfoGainError::EmptyConditions { .. } | InfoGainError::InvalidStress { .. }
            ),
            _ => false,
        }
    }
}

fn ensure_output_dir(cfg: &ResolvedConfig) -> Result<(), RunnerError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| RunnerError::OutputDir {
        path: cfg.output_dir.clone(),
        source,
    })
}

/// Compact stress tag for file names: whole megapascals without a decimal
/// point, fractional values in their shortest decimal form.
fn stress_label(pa: f64) -> String {
    let mpa = pa * 1e-6;
    if mpa == mpa.round() && mpa.abs() < 1e9 {
        format!("{}", mpa as i64)
    } else {
        format!("{mpa}")
    }
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub files: Vec<PathBuf>,
}

/// Solves one loop per stress level (or just `stress_override`) and writes
/// each as `loop_<MPa>MPa.csv`.
pub fn run_simulate(
    cfg: &ResolvedConfig,
    stress_override: Option<f64>,
) -> Result<SimulateOutcome, RunnerError> {
    ensure_output_dir(cfg)?;
    let stresses: Vec<f64> = match stress_override {
        Some(s) => vec![s],
        None => cfg.stresses.clone(),
    };
    let mut files = Vec::with_capacity(stresses.len());
    for &stress in &stresses {
        let l = cfg.window.simulate(stress, &cfg.material)?;
        let path = cfg.output_dir.join(format!("loop_{}MPa.csv", stress_label(stress)));
        io::write_loop_csv(&path, &l)?;
        files.push(path);
    }
    Ok(SimulateOutcome { files })
}

// ---------------------------------------------------------------------------
// doe

#[derive(Debug, Clone)]
pub struct DoeOutcome {
    pub design_path: PathBuf,
    pub anova_path: PathBuf,
    pub selected_path: PathBuf,
    pub table: AnovaTable,
    pub selected: Vec<String>,
}

/// Enumerates the factorial design, solves every row at the screening
/// stress, and writes the design matrix, the variance table, and the
/// selected factors.
pub fn run_doe(cfg: &ResolvedConfig) -> Result<DoeOutcome, RunnerError> {
    ensure_output_dir(cfg)?;
    let design = generate_full_factorial(cfg.doe.factors.clone())?;
    let responses =
        evaluate_design(&design, cfg.doe.response_stress, &cfg.material, cfg.window)?;
    let table = anova_main_effects(&design, &responses)?;
    let selected = rank_and_select(&table, cfg.doe.alpha);

    let design_path = cfg.output_dir.join("design.csv");
    io::write_design_csv(&design_path, &design, &responses)?;
    let anova_path = cfg.output_dir.join("anova.csv");
    io::write_anova_csv(&anova_path, &table)?;
    let selected_path = cfg.output_dir.join("selected.csv");
    io::write_selected_csv(&selected_path, &table, &selected)?;
    Ok(DoeOutcome { design_path, anova_path, selected_path, table, selected })
}

// ---------------------------------------------------------------------------
// calibrate

#[derive(Debug, Clone)]
pub struct CalibrateOutcome {
    pub chain_path: PathBuf,
    pub sidecar_path: PathBuf,
    pub summary_path: PathBuf,
    pub histogram_paths: Vec<PathBuf>,
    pub chain: Chain,
    pub summary: PosteriorSummary,
}

/// Burn-in cut with the documented fallback: when no cumulative-mean
/// plateau is found the first fifth of the chain is discarded.
fn burn_in_or_fallback(chain: &Chain) -> Result<usize, CalibrateError> {
    match detect_burn_in(chain) {
        Ok(b) => Ok(b),
        Err(CalibrateError::NoPlateau) => Ok(chain.len() / 5),
        Err(e) => Err(e),
    }
}

/// Runs the sampler against the given dataset files and writes the chain,
/// its sidecar, the posterior summary, and the histogram tables.
pub fn run_calibrate(
    cfg: &ResolvedConfig,
    data_paths: &[PathBuf],
) -> Result<CalibrateOutcome, RunnerError> {
    if data_paths.is_empty() {
        return Err(RunnerError::NoDatasets);
    }
    ensure_output_dir(cfg)?;
    let datasets = data_paths
        .iter()
        .map(|p| io::ingest_dataset(p))
        .collect::<Result<Vec<ExperimentalDataset>, _>>()?;

    let setup = CalibrationSetup::uniform(cfg.material.clone(), cfg.priors.clone());
    let mut settings = cfg.mcmc.clone();
    if let Some(every) = cfg.checkpoint_every {
        settings.checkpoint = Some(CheckpointSpec {
            path: cfg.output_dir.join("chain_checkpoint.csv"),
            every,
        });
    }
    let chain = run_chain(&setup, &datasets, &settings)?;
    let burn_in = burn_in_or_fallback(&chain)?;
    let summary = summarize(&chain, burn_in, cfg.bins, &cfg.joint_pairs)?;

    let chain_path = cfg.output_dir.join("chain.csv");
    io::write_chain_csv(&chain_path, &chain)?;
    let sidecar_path = cfg.output_dir.join("chain.json");
    io::write_json(
        &sidecar_path,
        &ChainSidecar { seed: settings.seed, burn_in: Some(burn_in), settings },
    )?;
    let summary_path = cfg.output_dir.join("summary.json");
    io::write_json(&summary_path, &summary)?;

    let mut histogram_paths = Vec::new();
    for h in &summary.marginals {
        let path = cfg.output_dir.join(format!("hist_{}.csv", h.param.name()));
        io::write_histogram_csv(&path, h)?;
        histogram_paths.push(path);
    }
    for j in &summary.joints {
        let path = cfg
            .output_dir
            .join(format!("joint_{}_{}.csv", j.x.name(), j.y.name()));
        io::write_histogram2d_csv(&path, j)?;
        histogram_paths.push(path);
    }
    Ok(CalibrateOutcome { chain_path, sidecar_path, summary_path, histogram_paths, chain, summary })
}

// ---------------------------------------------------------------------------
// propagate

/// Band construction selected on the command line; the direct flavour comes
/// from `[propagate] band_mode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMethod {
    Fosm,
    Direct,
}

#[derive(Debug, Clone)]
pub struct PropagateOutcome {
    pub band_paths: Vec<PathBuf>,
    pub bands: Vec<ConfidenceBand>,
}

/// Loads a chain and the burn-in cut recorded in its JSON sidecar (falling
/// back to detection when the sidecar is missing or silent).
fn load_chain(chain_path: &Path) -> Result<(Chain, usize), RunnerError> {
    let mut chain = io::read_chain_csv(chain_path)?;
    let sidecar_path = chain_path.with_extension("json");
    let burn_in = if sidecar_path.exists() {
        let sidecar: ChainSidecar = io::read_json(&sidecar_path)?;
        chain.seed = sidecar.seed;
        match sidecar.burn_in {
            Some(b) => b,
            None => burn_in_or_fallback(&chain)?,
        }
    } else {
        burn_in_or_fallback(&chain)?
    };
    Ok((chain, burn_in))
}

/// Prior boxes in chain-parameter order, when the configuration has one for
/// every chain parameter. Used to bound finite-difference steps; `None`
/// leaves the steps purely relative.
fn chain_bounds(cfg: &ResolvedConfig, chain: &Chain) -> Option<Vec<(f64, f64)>> {
    chain
        .param_ids
        .iter()
        .map(|id| cfg.priors.iter().find(|p| p.id == *id).map(|p| (p.lower, p.upper)))
        .collect()
}

/// Propagates the posterior in a chain file to one band CSV per configured
/// stress level, named `band_<MPa>MPa_<method>.csv`.
pub fn run_propagate(
    cfg: &ResolvedConfig,
    chain_path: &Path,
    method: RunMethod,
) -> Result<PropagateOutcome, RunnerError> {
    ensure_output_dir(cfg)?;
    let (chain, burn_in) = load_chain(chain_path)?;

    let mut bands = Vec::with_capacity(cfg.stresses.len());
    match method {
        RunMethod::Fosm => {
            let summary = summarize(&chain, burn_in, 1, &[])?;
            let posterior = summary.gaussian()?;
            let bounds = chain_bounds(cfg, &chain);
            for &stress in &cfg.stresses {
                bands.push(fosm_band(
                    &chain.param_ids,
                    &posterior,
                    &cfg.material,
                    bounds.as_deref(),
                    stress,
                    &cfg.window,
                )?);
            }
        }
        RunMethod::Direct => {
            let samples = chain.samples_from(burn_in);
            for &stress in &cfg.stresses {
                bands.push(direct_band(
                    samples,
                    &chain.param_ids,
                    &cfg.material,
                    stress,
                    &cfg.window,
                    cfg.propagate.coverage,
                    cfg.propagate.mode,
                )?);
            }
        }
    }

    let mut band_paths = Vec::with_capacity(bands.len());
    for band in &bands {
        band.validate()?;
        let path = cfg.output_dir.join(format!(
            "band_{}MPa_{}.csv",
            stress_label(band.stress),
            band.method.tag()
        ));
        io::write_band_csv(&path, band)?;
        band_paths.push(path);
    }
    Ok(PropagateOutcome { band_paths, bands })
}

// ---------------------------------------------------------------------------
// infogain

#[derive(Debug, Clone)]
pub struct InfoGainOutcome {
    pub report_path: PathBuf,
    pub report: InfoGainReport,
}

/// Compares the configured candidate designs using the posterior in the
/// chain file as the common prior and writes `infogain.json`.
pub fn run_infogain(
    cfg: &ResolvedConfig,
    chain_path: &Path,
) -> Result<InfoGainOutcome, RunnerError> {
    if cfg.infogain.candidates.is_empty() {
        return Err(RunnerError::NoCandidates);
    }
    ensure_output_dir(cfg)?;
    let (chain, burn_in) = load_chain(chain_path)?;
    let summary = summarize(&chain, burn_in, 1, &[])?;
    let prior = summary.gaussian()?;
    // Sequential stages re-calibrate inside the prior boxes, so every chain
    // parameter must have one.
    let bounds = chain
        .param_ids
        .iter()
        .map(|id| {
            cfg.priors
                .iter()
                .find(|p| p.id == *id)
                .map(|p| (p.lower, p.upper))
                .ok_or_else(|| RunnerError::MissingPrior { name: id.name().to_string() })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let spec = CompareSpec {
        prior: &prior,
        ids: &chain.param_ids,
        base: &cfg.material,
        bounds: &bounds,
        window: &cfg.window,
        settings: &cfg.mcmc,
        direction: cfg.infogain.direction,
        noise_sd: cfg.infogain.noise_sd,
    };
    let report = compare_designs(&spec, &cfg.infogain.candidates, cfg.mcmc.seed)?;
    let report_path = cfg.output_dir.join("infogain.json");
    io::write_json(&report_path, &report)?;
    Ok(InfoGainOutcome { report_path, report })
}
