//! Uniaxial martensite transformation model and isobaric loop solver.
//!
//! A specimen held at constant tensile stress is cooled until it fully
//! transforms to oriented martensite and then heated back. The model tracks
//! the martensite fraction `xi` and transformation strain `eps_t` through a
//! transformation surface `Phi = 0`; smooth hardening exponents shape the
//! transition between the onset and finish temperatures.

mod coefficients;
mod kinetics;
mod params;
mod simulate;

pub use coefficients::{derive_coefficients, DerivedCoefficients};
pub use kinetics::{
    critical_force, driving_force, h_cur, h_cur_derivative, hardening, transformation_surface,
    Direction,
};
pub use params::{MaterialParameters, ParamId};
pub use simulate::{
    linear_resample, loop_distance, resample_loop, simulate_isobaric_loop, solve_loop_at, Branch,
    HysteresisLoop, SimulationWindow,
};

use thiserror::Error;

/// Failure modes of the transformation model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmaError {
    #[error("infeasible material parameters: {detail}")]
    InfeasibleParameters { detail: String },
    #[error("{name} = {value} outside its admissible range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("reverse transformation direction undefined at zero martensite fraction")]
    UndefinedDirection,
    #[error("{direction:?} transformation incomplete: xi = {xi_end} at the end of the sweep")]
    IncompleteTransformation { direction: Direction, xi_end: f64 },
    #[error("root bracket lost at T = {t} K (bracket [{lo}, {hi}])")]
    RootBracketFailure { t: f64, lo: f64, hi: f64 },
    #[error("loops are sampled on different temperature grids")]
    GridMismatch,
    #[error("temperature grid needs at least 50 points per branch, got {n_grid}")]
    GridTooCoarse { n_grid: usize },
    #[error("temperature window is empty: T_max = {t_max} K, T_min = {t_min} K")]
    InvalidWindow { t_max: f64, t_min: f64 },
    #[error("applied stress must be nonnegative, got {sigma} Pa")]
    NegativeStress { sigma: f64 },
}
