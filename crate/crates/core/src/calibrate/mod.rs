//! Bayesian calibration of selected material parameters against measured
//! hysteresis loops.
//!
//! The sampler is a random-walk Metropolis chain over the calibrated
//! parameter subset, with the proposal covariance re-estimated from the
//! chain history at a fixed cadence and the Gaussian noise variance drawn
//! exactly from its conjugate inverse-gamma conditional after every step.
//! Parameter vectors that leave the prior box or break the transformation
//! temperature ordering carry zero posterior mass, so the chain never
//! contains an infeasible state.

mod data;
mod diagnostics;
mod likelihood;
mod mcmc;
mod priors;

pub use data::{BranchSamples, ExperimentalDataset};
pub use diagnostics::{
    detect_burn_in, summarize, Histogram, Histogram2d, PosteriorSummary,
};
pub use likelihood::{log_likelihood, log_likelihood_from_residuals, residuals, ResidualMode};
pub use mcmc::{
    adapt_proposal, gibbs_update_sigma2, metropolis_step, mh_step, run_chain, Chain,
    CheckpointSpec, McmcSettings, MhState,
};
pub use priors::{CalibrationSetup, ParamPrior};

use crate::numerics::NumericsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibrateError {
    #[error("prior for {name}: {detail}")]
    InvalidPrior { name: String, detail: String },
    #[error("dataset {label}: {detail}")]
    InvalidDataset { label: String, detail: String },
    #[error("inverse-gamma hyper-parameters must be positive, got a0 = {a0}, b0 = {b0}")]
    InvalidHyperparameter { a0: f64, b0: f64 },
    #[error("sampler settings: {detail}")]
    InvalidSettings { detail: String },
    #[error("initial point cannot be evaluated: {detail}")]
    InitialPoint { detail: String },
    #[error("chain of length {len} is too short; need at least {required}")]
    ChainTooShort { len: usize, required: usize },
    #[error("no cumulative-mean plateau found; inspect the chain and pass an explicit cut")]
    NoPlateau,
    #[error("burn-in {burn_in} must leave at least two samples of a length-{len} chain")]
    BurnInExceedsChain { burn_in: usize, len: usize },
    #[error("checkpoint write failed: {detail}")]
    ChainAborted { detail: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
