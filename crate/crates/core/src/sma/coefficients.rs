//! Closed-form calibration of the transformation-surface coefficients.
//!
//! The model carries seven internal coefficients (entropy and energy
//! differences, three hardening coefficients, the critical force, and the
//! stress-asymmetry factor). They are pinned by requiring that the
//! zero-stress transformation surface vanishes exactly at the four
//! transformation temperatures and that the transformation lines in
//! stress-temperature space have the measured slopes at the anchor stress.
//!
//! With `H = h_cur(s)`, `W = d(s H)/ds = H + s dH/ds`, `Z = s dS` evaluated
//! at the anchor stress `s`, and `dS` the compliance difference, the six
//! surface conditions
//!
//! ```text
//! Phi_fwd(0, M_s, 0) = 0        Phi_rev(0, A_f, 0) = 0
//! Phi_fwd(0, M_f, 1) = 0        Phi_rev(0, A_s, 1) = 0
//! ds/dT = C_M  on the forward onset line at the anchor stress
//! ds/dT = C_A  on the reverse finish line at the anchor stress
//! ```
//!
//! plus equal hardening energy over a closed cycle
//! (`integral of f_fwd = integral of f_rev` over xi in [0, 1]) solve to
//!
//! ```text
//! D       = (C_M - C_A) (W + Z) / ((C_M + C_A) W)
//! rho_ds0 = -C_M [ (1 - D) W + Z ]                       (< 0 always)
//! a1      = rho_ds0 (M_f - M_s)
//! a2      = rho_ds0 (A_s - A_f)
//! a3      = ( a2 K2 - a1 K1 ) / 4,
//!           K1 = 1 + 1/(n1+1) - 1/(n2+1),  K2 = 1 + 1/(n3+1) - 1/(n4+1)
//! rho_du0 = rho_ds0 (M_s + A_f) / 2
//! y0      = rho_ds0 (M_s - A_f) / 2 - a3
//! ```
//!
//! The sign of `rho_ds0` follows from `(1 - D) W + Z > 0`, which holds for
//! every feasible parameter set because `D < 1 + Z/W` algebraically.

use serde::{Deserialize, Serialize};

use super::kinetics::{h_cur, h_cur_derivative};
use super::params::MaterialParameters;
use super::SmaError;

/// Coefficients of the transformation surfaces, recomputed deterministically
/// from [`MaterialParameters`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoefficients {
    /// Compliance difference `1/E_M - 1/E_A`, 1/Pa.
    pub delta_s: f64,
    /// Entropy difference scaled by density, Pa/K. Negative.
    pub rho_ds0: f64,
    /// Internal-energy difference scaled by density, Pa.
    pub rho_du0: f64,
    /// Forward hardening magnitude, Pa.
    pub a1: f64,
    /// Reverse hardening magnitude, Pa.
    pub a2: f64,
    /// Hardening offset balancing the cycle energy, Pa.
    pub a3: f64,
    /// Critical thermodynamic force at zero stress, Pa.
    pub y0: f64,
    /// Stress dependence of the critical force, dimensionless.
    pub d: f64,
}

impl DerivedCoefficients {
    /// Temperature at which forward transformation starts under stress
    /// `sigma`, from `Phi_fwd(sigma, T, 0) = 0`.
    pub fn forward_onset_temperature(&self, sigma: f64, p: &MaterialParameters) -> f64 {
        p.m_s + self.shift(sigma, 1.0 - self.d, p)
    }

    /// Temperature at which forward transformation completes (`xi = 1`).
    pub fn forward_finish_temperature(&self, sigma: f64, p: &MaterialParameters) -> f64 {
        p.m_f + self.shift(sigma, 1.0 - self.d, p)
    }

    /// Temperature at which reverse transformation starts on heating.
    pub fn reverse_onset_temperature(&self, sigma: f64, p: &MaterialParameters) -> f64 {
        p.a_s + self.shift(sigma, 1.0 + self.d, p)
    }

    /// Temperature at which reverse transformation completes (`xi = 0`).
    pub fn reverse_finish_temperature(&self, sigma: f64, p: &MaterialParameters) -> f64 {
        p.a_f + self.shift(sigma, 1.0 + self.d, p)
    }

    fn shift(&self, sigma: f64, weight: f64, p: &MaterialParameters) -> f64 {
        let h = h_cur(sigma, p);
        (weight * sigma * h + 0.5 * sigma * sigma * self.delta_s) / (-self.rho_ds0)
    }
}

/// Computes the surface coefficients for a feasible parameter set.
pub fn derive_coefficients(p: &MaterialParameters) -> Result<DerivedCoefficients, SmaError> {
    p.validate()?;
    let s = p.anchor_stress;
    let delta_s = p.delta_s();
    let w = h_cur(s, p) + s * h_cur_derivative(s, p);
    let z = s * delta_s;
    let d = (p.c_m - p.c_a) * (w + z) / ((p.c_m + p.c_a) * w);
    let rho_ds0 = -p.c_m * ((1.0 - d) * w + z);
    let a1 = rho_ds0 * (p.m_f - p.m_s);
    let a2 = rho_ds0 * (p.a_s - p.a_f);
    let k1 = 1.0 + 1.0 / (p.n1 + 1.0) - 1.0 / (p.n2 + 1.0);
    let k2 = 1.0 + 1.0 / (p.n3 + 1.0) - 1.0 / (p.n4 + 1.0);
    let a3 = 0.25 * (a2 * k2 - a1 * k1);
    let rho_du0 = 0.5 * rho_ds0 * (p.m_s + p.a_f);
    let y0 = 0.5 * rho_ds0 * (p.m_s - p.a_f) - a3;
    Ok(DerivedCoefficients { delta_s, rho_ds0, rho_du0, a1, a2, a3, y0, d })
}
