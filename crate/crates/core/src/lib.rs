//! Simulation and uncertainty-quantification toolkit for thermally cycled
//! shape memory alloy actuators.
//!
//! The crate is organised as a pipeline over a phenomenological martensite
//! transformation model:
//!
//! * [`sma`] — material parameters and the isobaric hysteresis-loop solver
//! * [`doe`] — two-level full factorial designs and main-effects ANOVA for
//!   factor screening
//! * [`calibrate`] — adaptive Metropolis-Hastings calibration with a
//!   conjugate noise update
//! * [`propagate`] — first-order (gradient) and direct (sampling) confidence
//!   bands on the predicted strain response
//! * [`infogain`] — expected-information comparison of candidate
//!   experimental designs via sequential calibration
//! * [`numerics`] — the shared linear-algebra and statistics kernels
//!
//! Everything stochastic takes an explicit seeded RNG so that a run is
//! reproducible bit for bit; see [`runner`] for the file-producing entry
//! points used by the command-line front end.

pub mod calibrate;
pub mod config;
pub mod doe;
pub mod infogain;
pub mod io;
pub mod numerics;
pub mod propagate;
pub mod runner;
pub mod sma;

pub use numerics::{GaussianSummary, SquareMatrix};
pub use sma::{DerivedCoefficients, HysteresisLoop, MaterialParameters, ParamId};
