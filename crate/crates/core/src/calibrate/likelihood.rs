//! Gaussian likelihood of a parameter vector against the datasets.
//!
//! Two residual granularities are supported. In the default `Scalar` mode
//! each dataset contributes one residual: the squared-strain distance
//! between the model loop and the measured loop, compared with zero. In
//! `PerPoint` mode every measured point contributes its own strain
//! difference, which is ordinary nonlinear least squares and makes the
//! noise hyper-parameter track the measurement noise floor. Either way the
//! model is solved directly at the dataset's own temperature points, the
//! zero-interpolation-error form of resampling the model curve onto the
//! measurement grid.

use serde::{Deserialize, Serialize};

use super::data::ExperimentalDataset;
use super::priors::CalibrationSetup;
use crate::sma::solve_loop_at;

/// Granularity of the residual vector the likelihood is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// One squared-distance scalar per dataset.
    #[default]
    Scalar,
    /// One strain difference per measured point.
    PerPoint,
}

/// Residuals of the model against each dataset, or `None` when the
/// parameter vector is out of bounds, breaks the temperature ordering, or
/// a forward solve fails. `None` means zero posterior mass.
pub fn residuals(
    theta: &[f64],
    setup: &CalibrationSetup,
    datasets: &[ExperimentalDataset],
) -> Option<Vec<f64>> {
    if !setup.in_bounds(theta) {
        return None;
    }
    let p = setup.parameters(theta);
    if p.validate().is_err() {
        return None;
    }
    let mut out = Vec::with_capacity(datasets.len());
    for d in datasets {
        let l = solve_loop_at(
            d.stress,
            &d.cooling.temperatures,
            &d.heating.temperatures,
            &p,
        )
        .ok()?;
        let mut acc = 0.0;
        for (model, data) in [
            (&l.cooling.eps_t, &d.cooling.eps_t),
            (&l.heating.eps_t, &d.heating.eps_t),
        ] {
            for (m, e) in model.iter().zip(data.iter()) {
                let diff = m - e;
                match setup.residual_mode {
                    ResidualMode::Scalar => acc += diff * diff,
                    ResidualMode::PerPoint => out.push(diff),
                }
            }
        }
        if setup.residual_mode == ResidualMode::Scalar {
            out.push(acc);
        }
    }
    Some(out)
}

/// Total log-likelihood given precomputed residuals.
pub fn log_likelihood_from_residuals(residuals: &[f64], sigma2: f64) -> f64 {
    debug_assert!(sigma2 > 0.0);
    let ln_norm = 0.5 * (2.0 * std::f64::consts::PI * sigma2).ln();
    residuals
        .iter()
        .map(|r| -0.5 * r * r / sigma2 - ln_norm)
        .sum()
}

/// Log-likelihood of `theta`; negative infinity outside the feasible set.
pub fn log_likelihood(
    theta: &[f64],
    sigma2: f64,
    setup: &CalibrationSetup,
    datasets: &[ExperimentalDataset],
) -> f64 {
    match residuals(theta, setup, datasets) {
        Some(r) => log_likelihood_from_residuals(&r, sigma2),
        None => f64::NEG_INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::ParamPrior;
    use crate::sma::{simulate_isobaric_loop, MaterialParameters, ParamId};

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

    fn self_datasets() -> Vec<ExperimentalDataset> {
        [100e6, 150e6, 200e6]
            .iter()
            .map(|&s| {
                let l = simulate_isobaric_loop(s, 430.0, 210.0, 80, &nominal()).unwrap();
                ExperimentalDataset::from_loop(&l, format!("{:.0}MPa", s / 1e6))
            })
            .collect()
    }

    #[test]
    fn model_matching_data_has_zero_residuals() {
        let s = setup();
        let data = self_datasets();
        let r = residuals(&[300.0, 0.034], &s, &data).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|&v| v.abs() < 1e-20), "residuals {r:?}");
        // Three perfect fits reduce to three normalization terms.
        let sigma2 = 0.3;
        let ll = log_likelihood(&[300.0, 0.034], sigma2, &s, &data);
        let expected = -1.5 * (2.0 * std::f64::consts::PI * sigma2).ln();
        assert!((ll - expected).abs() < 1e-10);
    }

    #[test]
    fn ordering_violations_and_bound_exits_have_zero_mass() {
        let mut s = setup();
        s.priors[0].upper = 320.0; // let the box reach past A_s
        let data = self_datasets();
        // M_s = 310 > A_s = 307 breaks the ordering.
        assert_eq!(log_likelihood(&[310.0, 0.034], 1.0, &s, &data), f64::NEG_INFINITY);
        // Outside the box.
        assert_eq!(log_likelihood(&[284.0, 0.034], 1.0, &s, &data), f64::NEG_INFINITY);
    }

    #[test]
    fn halving_noise_variance_rescales_the_quadratic_term() {
        let s = setup();
        let data = self_datasets();
        let theta = [295.0, 0.030]; // off-truth: nonzero residuals
        let r = residuals(&theta, &s, &data).unwrap();
        let quad: f64 = r.iter().map(|v| v * v).sum();
        assert!(quad > 0.0);
        let s2 = 1e-9;
        let diff = log_likelihood(&theta, s2, &s, &data)
            - log_likelihood(&theta, 2.0 * s2, &s, &data);
        // Hand-evaluated Gaussian log-density difference.
        let expected = -0.5 * quad / s2 + 0.25 * quad / s2
            - 1.5 * ((s2 / (2.0 * s2)) as f64).ln();
        assert!((diff - expected).abs() < 1e-9 * expected.abs().max(1.0));
    }

    #[test]
    fn residuals_grow_as_parameters_leave_the_truth() {
        let s = setup();
        let data = self_datasets();
        let near: f64 = residuals(&[299.0, 0.034], &s, &data).unwrap().iter().sum();
        let far: f64 = residuals(&[290.0, 0.028], &s, &data).unwrap().iter().sum();
        assert!(far > near && near > 0.0);
    }
}
