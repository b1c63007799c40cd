//! Measured hysteresis-loop datasets.

use super::CalibrateError;
use crate::sma::HysteresisLoop;
use serde::{Deserialize, Serialize};

/// One branch of measured points, temperatures strictly monotone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSamples {
    pub temperatures: Vec<f64>,
    pub eps_t: Vec<f64>,
}

/// A transformation-strain loop measured at one constant stress.
///
/// Construction sorts each branch into sweep order (cooling descending,
/// heating ascending) and averages points that repeat a temperature, so
/// downstream code can rely on strict monotonicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalDataset {
    pub stress: f64,
    pub label: String,
    pub cooling: BranchSamples,
    pub heating: BranchSamples,
}

const MIN_POINTS: usize = 10;

fn prepare_branch(
    mut points: Vec<(f64, f64)>,
    descending: bool,
    label: &str,
    branch: &str,
) -> Result<BranchSamples, CalibrateError> {
    let invalid = |detail: String| CalibrateError::InvalidDataset {
        label: label.to_string(),
        detail: format!("{branch} branch: {detail}"),
    };
    if points.iter().any(|(t, e)| !t.is_finite() || !e.is_finite()) {
        return Err(invalid("non-finite sample".to_string()));
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite temperatures"));
    if descending {
        points.reverse();
    }
    let mut temperatures = Vec::with_capacity(points.len());
    let mut eps_t = Vec::with_capacity(points.len());
    let mut i = 0;
    while i < points.len() {
        let t = points[i].0;
        let mut sum = 0.0;
        let mut n = 0usize;
        while i < points.len() && points[i].0 == t {
            sum += points[i].1;
            n += 1;
            i += 1;
        }
        temperatures.push(t);
        eps_t.push(sum / n as f64);
    }
    if temperatures.len() < MIN_POINTS {
        return Err(invalid(format!(
            "{} distinct temperatures, need at least {MIN_POINTS}",
            temperatures.len()
        )));
    }
    Ok(BranchSamples { temperatures, eps_t })
}

impl ExperimentalDataset {
    /// Builds a validated dataset from raw `(T, eps_t)` pairs per branch.
    pub fn new(
        stress: f64,
        label: impl Into<String>,
        cooling: Vec<(f64, f64)>,
        heating: Vec<(f64, f64)>,
    ) -> Result<Self, CalibrateError> {
        let label = label.into();
        if !(stress >= 0.0) || !stress.is_finite() {
            return Err(CalibrateError::InvalidDataset {
                label,
                detail: format!("stress {stress} must be finite and nonnegative"),
            });
        }
        let cooling = prepare_branch(cooling, true, &label, "cooling")?;
        let heating = prepare_branch(heating, false, &label, "heating")?;
        Ok(Self { stress, label, cooling, heating })
    }

    /// Treats a simulated loop as a measured dataset.
    pub fn from_loop(l: &HysteresisLoop, label: impl Into<String>) -> Self {
        Self {
            stress: l.stress,
            label: label.into(),
            cooling: BranchSamples {
                temperatures: l.cooling.temperatures.clone(),
                eps_t: l.cooling.eps_t.clone(),
            },
            heating: BranchSamples {
                temperatures: l.heating.temperatures.clone(),
                eps_t: l.heating.eps_t.clone(),
            },
        }
    }

    pub fn points_per_branch(&self) -> (usize, usize) {
        (self.cooling.temperatures.len(), self.heating.temperatures.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (t, t / 1000.0)
            })
            .collect()
    }

    #[test]
    fn branches_are_sorted_into_sweep_order() {
        let mut cooling = ramp(12, 250.0, 360.0);
        cooling.swap(0, 11); // scramble
        let d = ExperimentalDataset::new(150e6, "demo", cooling, ramp(12, 250.0, 360.0)).unwrap();
        assert!(d.cooling.temperatures.windows(2).all(|w| w[0] > w[1]));
        assert!(d.heating.temperatures.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn duplicate_temperatures_average_their_strains() {
        let mut cooling = ramp(12, 250.0, 360.0);
        cooling.push((250.0, 0.35)); // duplicate of the 0.25 sample
        let d = ExperimentalDataset::new(150e6, "dup", cooling, ramp(12, 250.0, 360.0)).unwrap();
        let last = d.cooling.temperatures.len() - 1;
        assert_eq!(d.cooling.temperatures[last], 250.0);
        assert!((d.cooling.eps_t[last] - 0.30).abs() < 1e-12);
    }

    #[test]
    fn sparse_or_corrupt_branches_are_rejected() {
        let short = ramp(5, 250.0, 360.0);
        assert!(matches!(
            ExperimentalDataset::new(150e6, "short", short, ramp(12, 250.0, 360.0)),
            Err(CalibrateError::InvalidDataset { .. })
        ));
        let mut bad = ramp(12, 250.0, 360.0);
        bad[3].1 = f64::NAN;
        assert!(ExperimentalDataset::new(150e6, "nan", bad, ramp(12, 250.0, 360.0)).is_err());
        assert!(ExperimentalDataset::new(
            -5.0,
            "neg",
            ramp(12, 250.0, 360.0),
            ramp(12, 250.0, 360.0)
        )
        .is_err());
    }

    #[test]
    fn ten_distinct_points_after_collapsing_are_required() {
        // 12 raw points but only 6 distinct temperatures.
        let doubled: Vec<(f64, f64)> =
            ramp(6, 250.0, 360.0).into_iter().flat_map(|p| [p, p]).collect();
        assert!(ExperimentalDataset::new(
            150e6,
            "six",
            doubled,
            ramp(12, 250.0, 360.0)
        )
        .is_err());
    }
}
