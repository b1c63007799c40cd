//! Prior specification for the calibrated parameter subset.

use super::likelihood::ResidualMode;
use super::CalibrateError;
use crate::numerics::{cholesky, CholeskyFactor, GaussianSummary};
use crate::sma::{MaterialParameters, ParamId};
use serde::{Deserialize, Serialize};

/// Box prior and starting point for one calibrated parameter (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPrior {
    pub id: ParamId,
    pub lower: f64,
    pub upper: f64,
    pub initial: f64,
}

/// Which parameters are calibrated, their priors, and the template holding
/// everything else fixed.
///
/// The default prior is uniform on the box. A sequential-update stage can
/// attach a Gaussian carried over from an earlier posterior; it multiplies
/// the box indicator (truncation constant cancels in acceptance ratios).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSetup {
    pub base: MaterialParameters,
    pub priors: Vec<ParamPrior>,
    pub gaussian: Option<GaussianSummary>,
    #[serde(default)]
    pub residual_mode: ResidualMode,
}

impl CalibrationSetup {
    pub fn uniform(base: MaterialParameters, priors: Vec<ParamPrior>) -> Self {
        Self { base, priors, gaussian: None, residual_mode: ResidualMode::default() }
    }

    pub fn dim(&self) -> usize {
        self.priors.len()
    }

    pub fn ids(&self) -> Vec<ParamId> {
        self.priors.iter().map(|p| p.id).collect()
    }

    pub fn initial_theta(&self) -> Vec<f64> {
        self.priors.iter().map(|p| p.initial).collect()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.priors.iter().map(|p| (p.lower, p.upper)).collect()
    }

    /// Template with the calibrated components substituted in.
    pub fn parameters(&self, theta: &[f64]) -> MaterialParameters {
        debug_assert_eq!(theta.len(), self.priors.len());
        let mut p = self.base.clone();
        for (prior, &v) in self.priors.iter().zip(theta) {
            prior.id.set(&mut p, v);
        }
        p
    }

    pub fn in_bounds(&self, theta: &[f64]) -> bool {
        theta.len() == self.priors.len()
            && self
                .priors
                .iter()
                .zip(theta)
                .all(|(p, &v)| v >= p.lower && v <= p.upper)
    }

    pub fn validate(&self) -> Result<(), CalibrateError> {
        if self.priors.is_empty() {
            return Err(CalibrateError::InvalidSettings {
                detail: "no parameters selected for calibration".to_string(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.priors {
            let fail = |detail: String| CalibrateError::InvalidPrior {
                name: p.id.name().to_string(),
                detail,
            };
            if !seen.insert(p.id) {
                return Err(fail("listed twice".to_string()));
            }
            if !(p.lower < p.initial && p.initial < p.upper) {
                return Err(fail(format!(
                    "need lower < initial < upper, got {} / {} / {}",
                    p.lower, p.initial, p.upper
                )));
            }
        }
        if let Some(g) = &self.gaussian {
            if g.dim() != self.priors.len() {
                return Err(CalibrateError::InvalidSettings {
                    detail: format!(
                        "Gaussian prior dimension {} does not match {} calibrated parameters",
                        g.dim(),
                        self.priors.len()
                    ),
                });
            }
        }
        self.parameters(&self.initial_theta()).validate().map_err(|e| {
            CalibrateError::InitialPoint { detail: e.to_string() }
        })?;
        Ok(())
    }

    /// Precomputes whatever the prior density needs per chain.
    pub(crate) fn prior_density(&self) -> Result<PriorDensity<'_>, CalibrateError> {
        let chol = match &self.gaussian {
            Some(g) => Some((g.mean().to_vec(), cholesky(g.covariance())?)),
            None => None,
        };
        Ok(PriorDensity { setup: self, gaussian: chol })
    }
}

/// Log prior density up to an additive constant: 0 inside the box for the
/// uniform case, the Gaussian quadratic form otherwise, negative infinity
/// outside the box either way.
pub(crate) struct PriorDensity<'a> {
    setup: &'a CalibrationSetup,
    gaussian: Option<(Vec<f64>, CholeskyFactor)>,
}

impl PriorDensity<'_> {
    pub(crate) fn log_density(&self, theta: &[f64]) -> f64 {
        if !self.setup.in_bounds(theta) {
            return f64::NEG_INFINITY;
        }
        match &self.gaussian {
            None => 0.0,
            Some((mean, chol)) => {
                let diff: Vec<f64> = theta.iter().zip(mean).map(|(t, m)| t - m).collect();
                let solved = chol.solve(&diff).expect("dimension fixed at construction");
                let mahalanobis: f64 = diff.iter().zip(&solved).map(|(a, b)| a * b).sum();
                -0.5 * mahalanobis
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SquareMatrix;

    fn nominal() -> MaterialParameters {
        MaterialParameters {
            e_a: 60e9,
            e_m: 40e9,
            m_s: 300.0,
            m_f: 270.0,
            a_s: 307.0,
            a_f: 318.0,
            c_a: 9.0e6,
            c_m: 10.3e6,
            h_sat: 0.034,
            k: 0.02e-6,
            n1: 0.5,
            n2: 0.5,
            n3: 0.5,
            n4: 0.5,
            t0: 300.0,
            anchor_stress: 150e6,
        }
    }

    fn setup() -> CalibrationSetup {
        CalibrationSetup::uniform(
            nominal(),
            vec![
                ParamPrior { id: ParamId::Ms, lower: 285.0, upper: 305.0, initial: 300.0 },
                ParamPrior { id: ParamId::HSat, lower: 0.02, upper: 0.06, initial: 0.034 },
            ],
        )
    }

    #[test]
    fn substitution_only_touches_calibrated_components() {
        let s = setup();
        let p = s.parameters(&[290.0, 0.05]);
        assert_eq!(p.m_s, 290.0);
        assert_eq!(p.h_sat, 0.05);
        assert_eq!(p.a_f, nominal().a_f);
    }

    #[test]
    fn box_membership_and_uniform_density_agree() {
        let s = setup();
        let d = s.prior_density().unwrap();
        assert_eq!(d.log_density(&[300.0, 0.034]), 0.0);
        assert_eq!(d.log_density(&[284.0, 0.034]), f64::NEG_INFINITY);
        assert_eq!(d.log_density(&[300.0, 0.061]), f64::NEG_INFINITY);
    }

    #[test]
    fn gaussian_stage_prior_penalizes_distance_from_its_mean() {
        let mut s = setup();
        s.gaussian = Some(
            GaussianSummary::new(
                vec![300.0, 0.034],
                SquareMatrix::from_diagonal(&[4.0, 1e-4]),
            )
            .unwrap(),
        );
        let d = s.prior_density().unwrap();
        let at_mean = d.log_density(&[300.0, 0.034]);
        let off = d.log_density(&[302.0, 0.034]);
        assert_eq!(at_mean, 0.0);
        // One standard deviation away along M_s: -0.5 * (2/2)^2.
        assert!((off - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn misordered_priors_are_rejected() {
        let mut s = setup();
        s.priors[0].initial = 306.0;
        assert!(matches!(s.validate(), Err(CalibrateError::InvalidPrior { .. })));
        let mut dup = setup();
        dup.priors.push(dup.priors[0]);
        assert!(dup.validate().is_err());
        // Initial point must satisfy the temperature ordering.
        let mut collide = setup();
        collide.priors[0].upper = 320.0;
        collide.priors[0].initial = 310.0; // above A_s = 307
        assert!(matches!(collide.validate(), Err(CalibrateError::InitialPoint { .. })));
    }
}
