//! Pointwise model functions: transformation strain magnitude, smooth
//! hardening, and the thermodynamic driving and critical forces whose
//! balance defines the transformation surfaces.

use serde::{Deserialize, Serialize};

use super::coefficients::DerivedCoefficients;
use super::params::MaterialParameters;
use super::SmaError;

/// Which transformation is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Austenite to oriented martensite (cooling).
    Forward,
    /// Martensite back to austenite (heating).
    Reverse,
}

/// Stress-dependent maximum transformation strain
/// `H_sat (1 - exp(-k sigma_bar))`.
///
/// Monotone saturating: 0 at zero stress, approaching `H_sat` from below.
#[inline]
pub fn h_cur(sigma_bar: f64, p: &MaterialParameters) -> f64 {
    debug_assert!(sigma_bar >= 0.0, "effective stress is a magnitude");
    // ln_1p form keeps full precision for small k * sigma.
    -p.h_sat * (-p.k * sigma_bar).exp_m1()
}

/// Derivative of [`h_cur`] with respect to the effective stress.
#[inline]
pub fn h_cur_derivative(sigma_bar: f64, p: &MaterialParameters) -> f64 {
    p.h_sat * p.k * (-p.k * sigma_bar).exp()
}

/// Smooth hardening function `f^t(xi)` for the active direction, in Pa.
///
/// The fractional exponents make the slope unbounded at both endpoints;
/// the values themselves follow the `0^n = 0` limit convention, so
/// `f_fwd(0) = a3`, `f_fwd(1) = a1 + a3`, `f_rev(0) = -a3`,
/// `f_rev(1) = a2 - a3`.
pub fn hardening(
    xi: f64,
    direction: Direction,
    c: &DerivedCoefficients,
    p: &MaterialParameters,
) -> Result<f64, SmaError> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(SmaError::OutOfRange { name: "xi", value: xi });
    }
    Ok(match direction {
        Direction::Forward => {
            0.5 * c.a1 * (1.0 + xi.powf(p.n1) - (1.0 - xi).powf(p.n2)) + c.a3
        }
        Direction::Reverse => {
            0.5 * c.a2 * (1.0 + xi.powf(p.n3) - (1.0 - xi).powf(p.n4)) - c.a3
        }
    })
}

/// Thermodynamic driving force
/// `p(sigma, T) = sigma^2 dS / 2 + rho_ds0 T - rho_du0`, in Pa.
///
/// Decreasing in temperature because `rho_ds0 < 0`: cooling pushes the
/// material toward martensite.
#[inline]
pub fn driving_force(sigma: f64, t: f64, c: &DerivedCoefficients) -> f64 {
    debug_assert!(t > 0.0, "absolute temperature required");
    0.5 * sigma * sigma * c.delta_s + c.rho_ds0 * t - c.rho_du0
}

/// Critical resistance `Y` that the driving force must overcome, in Pa.
///
/// Forward uses the current strain magnitude `h_cur`; reverse recovers
/// along the frozen direction `eps_t / xi` fixed at the most recent
/// reversal, which the caller supplies. A reversal from `xi = 0` has no
/// defined direction.
pub fn critical_force(
    sigma: f64,
    direction: Direction,
    reversal_ratio: Option<f64>,
    c: &DerivedCoefficients,
    p: &MaterialParameters,
) -> Result<f64, SmaError> {
    let sigma_bar = sigma.abs();
    let lambda = match direction {
        Direction::Forward => h_cur(sigma_bar, p),
        Direction::Reverse => reversal_ratio.ok_or(SmaError::UndefinedDirection)?,
    };
    Ok(c.y0 + c.d * sigma_bar * lambda)
}

/// Transformation surface `Phi` for the active direction, in Pa.
///
/// Transformation can proceed only on `Phi = 0`; `Phi < 0` is the elastic
/// interior. Strictly decreasing in `xi` for forward and increasing for
/// reverse, which is what makes the loop solver's bisection well posed.
pub fn transformation_surface(
    sigma: f64,
    t: f64,
    xi: f64,
    direction: Direction,
    reversal_ratio: Option<f64>,
    c: &DerivedCoefficients,
    p: &MaterialParameters,
) -> Result<f64, SmaError> {
    let sigma_bar = sigma.abs();
    let pf = driving_force(sigma, t, c);
    let f = hardening(xi, direction, c, p)?;
    let y = critical_force(sigma, direction, reversal_ratio, c, p)?;
    Ok(match direction {
        Direction::Forward => {
            let lambda = h_cur(sigma_bar, p);
            sigma_bar * lambda + pf - f - y
        }
        Direction::Reverse => {
            let lambda = reversal_ratio.expect("checked by critical_force");
            -(sigma_bar * lambda + pf - f) - y
        }
    })
}
