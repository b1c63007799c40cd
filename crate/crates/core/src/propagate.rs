//! Posterior-to-prediction uncertainty: confidence bands on the strain
//! response, either first-order (gradient times covariance) or by forwarding
//! posterior samples through the solver.

use crate::numerics::{percentile_linear, GaussianSummary, NumericsError, SquareMatrix};
use crate::sma::{MaterialParameters, ParamId, SimulationWindow, SmaError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PropagateError {
    #[error("mean parameters are infeasible: {0}")]
    InfeasibleMean(#[source] SmaError),
    #[error("parameter {name}: both one-sided perturbations failed to solve")]
    GradientFailure { name: String },
    #[error("need at least {required} posterior samples, found {found}")]
    TooFewSamples { found: usize, required: usize },
    #[error("coverage must lie in (0, 1], found {0}")]
    InvalidCoverage(f64),
    #[error("posterior sample {index} failed to solve: {source}")]
    SampleSolve {
        index: usize,
        #[source]
        source: SmaError,
    },
    #[error("{got} band dimensions do not match {want}")]
    DimensionMismatch { want: usize, got: usize },
    #[error("malformed band: {detail}")]
    MalformedBand { detail: String },
    #[error(transparent)]
    Solver(#[from] SmaError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Fewest posterior samples the direct method accepts.
pub const MIN_DIRECT_SAMPLES: usize = 200;

/// How a band was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMethod {
    /// First-order Taylor expansion: variance is the gradient-weighted
    /// covariance quadratic form, band is mean +/- 2 sigma.
    Fosm,
    /// Empirical percentiles of the sample ensemble at each grid point.
    DirectPointwise,
    /// Whole curves ranked by plateau strain; the tail curves are dropped
    /// and the band is the envelope of the survivors.
    DirectCurvewise,
}

impl BandMethod {
    /// Stable lowercase name used in file metadata and file names.
    pub fn tag(self) -> &'static str {
        match self {
            BandMethod::Fosm => "fosm",
            BandMethod::DirectPointwise => "direct_pointwise",
            BandMethod::DirectCurvewise => "direct_curvewise",
        }
    }
}

/// Ensemble ranking rule for the direct method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BandMode {
    #[default]
    Curvewise,
    Pointwise,
}

/// Band over one temperature sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandBranch {
    pub temperatures: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Pointwise confidence band along both branches of the hysteresis loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub stress: f64,
    pub method: BandMethod,
    pub coverage: f64,
    pub cooling: BandBranch,
    pub heating: BandBranch,
}

impl ConfidenceBand {
    /// Checks the structural contract: equal lengths per branch and
    /// `lower <= mean <= upper` at every grid point.
    pub fn validate(&self) -> Result<(), PropagateError> {
        for (name, b) in [("cooling", &self.cooling), ("heating", &self.heating)] {
            let n = b.temperatures.len();
            for v in [&b.mean, &b.lower, &b.upper] {
                if v.len() != n {
                    return Err(PropagateError::MalformedBand {
                        detail: format!("{name}: {} values against {n} temperatures", v.len()),
                    });
                }
            }
            for i in 0..n {
                if !(b.lower[i] <= b.mean[i] && b.mean[i] <= b.upper[i]) {
                    return Err(PropagateError::MalformedBand {
                        detail: format!(
                            "{name} point {i}: bounds [{}, {}] do not bracket mean {}",
                            b.lower[i], b.upper[i], b.mean[i]
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Half-width profile `sigma(T)` of a +/- 2 sigma band on one branch.
    pub fn cooling_sigma(&self) -> Vec<f64> {
        self.cooling
            .upper
            .iter()
            .zip(&self.cooling.lower)
            .map(|(u, l)| (u - l) / 4.0)
            .collect()
    }
}

fn params_at(ids: &[ParamId], theta: &[f64], base: &MaterialParameters) -> MaterialParameters {
    let mut p = base.clone();
    for (id, &v) in ids.iter().zip(theta) {
        id.set(&mut p, v);
    }
    p
}

/// Cooling and heating strain curves stacked into one vector.
fn solve_curve(
    stress: f64,
    window: &SimulationWindow,
    p: &MaterialParameters,
) -> Result<Vec<f64>, SmaError> {
    let l = window.simulate(stress, p)?;
    let mut out = Vec::with_capacity(l.cooling.eps_t.len() + l.heating.eps_t.len());
    out.extend_from_slice(&l.cooling.eps_t);
    out.extend_from_slice(&l.heating.eps_t);
    Ok(out)
}

/// The double sum of all pairwise gradient-covariance products; equal to the
/// quadratic form, kept separate so the equivalence is testable.
pub fn fosm_variance_double_sum(g: &[f64], v: &SquareMatrix) -> f64 {
    let d = g.len();
    let mut acc = 0.0;
    for i in 0..d {
        acc += g[i] * g[i] * v.get(i, i);
        for j in (i + 1)..d {
            acc += 2.0 * g[i] * g[j] * v.get(i, j);
        }
    }
    acc
}

/// First-order band: a central finite-difference gradient of the strain
/// curve with respect to each calibrated parameter, combined with the
/// posterior covariance as `g' V g`, and a literal +/- 2 sigma envelope.
///
/// The step for parameter `i` is `1e-4 * max(|mean_i|, 1e-3 * width_i)`
/// with `width_i` the prior box width when `bounds` are given. A
/// perturbation that leaves the box or fails to solve falls back to a
/// one-sided difference on the other side.
pub fn fosm_band(
    ids: &[ParamId],
    posterior: &GaussianSummary,
    base: &MaterialParameters,
    bounds: Option<&[(f64, f64)]>,
    stress: f64,
    window: &SimulationWindow,
) -> Result<ConfidenceBand, PropagateError> {
    let d = ids.len();
    if posterior.dim() != d {
        return Err(PropagateError::DimensionMismatch { want: d, got: posterior.dim() });
    }
    if let Some(b) = bounds {
        if b.len() != d {
            return Err(PropagateError::DimensionMismatch { want: d, got: b.len() });
        }
    }
    let theta = posterior.mean().to_vec();
    let p_mean = params_at(ids, &theta, base);
    p_mean.validate().map_err(PropagateError::InfeasibleMean)?;
    let center = window.simulate(stress, &p_mean)?;
    let n_cool = center.cooling.temperatures.len();
    let mut center_curve = Vec::with_capacity(2 * n_cool);
    center_curve.extend_from_slice(&center.cooling.eps_t);
    center_curve.extend_from_slice(&center.heating.eps_t);

    // Gradient of the whole curve, one row per parameter.
    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>, PropagateError> {
            let scale = bounds.map(|b| 1e-3 * (b[i].1 - b[i].0)).unwrap_or(0.0);
            let h = 1e-4 * theta[i].abs().max(scale);
            let solve_side = |delta: f64| -> Option<Vec<f64>> {
                let shifted = theta[i] + delta;
                if let Some(b) = bounds {
                    if shifted < b[i].0 || shifted > b[i].1 {
                        return None;
                    }
                }
                let mut t = theta.clone();
                t[i] = shifted;
                solve_curve(stress, window, &params_at(ids, &t, base)).ok()
            };
            let plus = solve_side(h);
            let minus = solve_side(-h);
            let diff = |hi: &[f64], lo: &[f64], span: f64| {
                hi.iter().zip(lo).map(|(a, b)| (a - b) / span).collect::<Vec<f64>>()
            };
            match (plus, minus) {
                (Some(p), Some(m)) => Ok(diff(&p, &m, 2.0 * h)),
                (Some(p), None) => Ok(diff(&p, &center_curve, h)),
                (None, Some(m)) => Ok(diff(&center_curve, &m, h)),
                (None, None) => {
                    Err(PropagateError::GradientFailure { name: ids[i].name().to_string() })
                }
            }
        })
        .collect::<Result<_, _>>()?;

    let m = center_curve.len();
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    let mut g = vec![0.0; d];
    for k in 0..m {
        for i in 0..d {
            g[i] = rows[i][k];
        }
        let var = posterior.covariance().quadratic_form(&g)?;
        let sigma = var.max(0.0).sqrt();
        lower.push(center_curve[k] - 2.0 * sigma);
        upper.push(center_curve[k] + 2.0 * sigma);
    }

    let branch = |lo: usize, hi: usize, temps: &[f64]| BandBranch {
        temperatures: temps.to_vec(),
        mean: center_curve[lo..hi].to_vec(),
        lower: lower[lo..hi].to_vec(),
        upper: upper[lo..hi].to_vec(),
    };
    Ok(ConfidenceBand {
        stress,
        method: BandMethod::Fosm,
        coverage: 0.95,
        cooling: branch(0, n_cool, &center.cooling.temperatures),
        heating: branch(n_cool, m, &center.heating.temperatures),
    })
}

/// Direct band: one forward solve per posterior sample, then either
/// pointwise percentiles or the envelope of plateau-ranked survivor curves.
///
/// `samples` is row-major `n x ids.len()`. In curvewise mode the curves are
/// ranked by their plateau strain (the fully transformed cooling endpoint),
/// `floor(n (1 - coverage) / 2)` are dropped from each tail, the band is the
/// surviving envelope, and the mean is taken over the survivors so the band
/// always brackets it. In pointwise mode the mean runs over all samples and
/// the bounds are linear-interpolated percentiles.
pub fn direct_band(
    samples: &[f64],
    ids: &[ParamId],
    base: &MaterialParameters,
    stress: f64,
    window: &SimulationWindow,
    coverage: f64,
    mode: BandMode,
) -> Result<ConfidenceBand, PropagateError> {
    let d = ids.len();
    let n = if d == 0 { 0 } else { samples.len() / d };
    if n < MIN_DIRECT_SAMPLES {
        return Err(PropagateError::TooFewSamples { found: n, required: MIN_DIRECT_SAMPLES });
    }
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(PropagateError::InvalidCoverage(coverage));
    }

    let curves: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let theta = &samples[i * d..(i + 1) * d];
            solve_curve(stress, window, &params_at(ids, theta, base))
                .map_err(|source| PropagateError::SampleSolve { index: i, source })
        })
        .collect::<Result<_, _>>()?;
    let m = curves[0].len();
    let n_cool = window.n_grid;

    let mut mean = vec![0.0; m];
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    match mode {
        BandMode::Pointwise => {
            let alpha = 1.0 - coverage;
            let mut column = vec![0.0; n];
            for k in 0..m {
                for (i, c) in curves.iter().enumerate() {
                    column[i] = c[k];
                }
                column.sort_by(f64::total_cmp);
                if column[0] == column[n - 1] {
                    // The exact mean of equal values, and a truly
                    // zero-width interval.
                    mean[k] = column[0];
                    lower[k] = column[0];
                    upper[k] = column[0];
                    continue;
                }
                mean[k] = column.iter().sum::<f64>() / n as f64;
                // Ahead of the transformation onset almost every sample is
                // exactly zero strain, so the percentile interval can sit
                // entirely below the ensemble mean; widen it just enough to
                // keep the mean bracketed.
                lower[k] = percentile_linear(&column, alpha / 2.0).min(mean[k]);
                upper[k] = percentile_linear(&column, 1.0 - alpha / 2.0).max(mean[k]);
            }
        }
        BandMode::Curvewise => {
            // Rank whole curves by how far they transform: the cooling
            // endpoint is the plateau strain.
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| curves[a][n_cool - 1].total_cmp(&curves[b][n_cool - 1]));
            let drop = ((n as f64) * (1.0 - coverage) / 2.0).floor() as usize;
            let kept = &order[drop..n - drop];
            for k in 0..m {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut acc = 0.0;
                for &i in kept {
                    let v = curves[i][k];
                    lo = lo.min(v);
                    hi = hi.max(v);
                    acc += v;
                }
                // The survivor mean lies inside the envelope by definition;
                // the clamp only repairs summation round-off.
                mean[k] = (acc / kept.len() as f64).clamp(lo, hi);
                lower[k] = lo;
                upper[k] = hi;
            }
        }
    }

    // Temperature grids from one representative solve; the window fixes them.
    let rep = window.simulate(stress, &params_at(ids, &samples[..d], base))?;
    let method = match mode {
        BandMode::Pointwise => BandMethod::DirectPointwise,
        BandMode::Curvewise => BandMethod::DirectCurvewise,
    };
    let branch = |lo: usize, hi: usize, temps: &[f64]| BandBranch {
        temperatures: temps.to_vec(),
        mean: mean[lo..hi].to_vec(),
        lower: lower[lo..hi].to_vec(),
        upper: upper[lo..hi].to_vec(),
    };
    Ok(ConfidenceBand {
        stress,
        method,
        coverage,
        cooling: branch(0, n_cool, &rep.cooling.temperatures),
        heating: branch(n_cool, m, &rep.heating.temperatures),
    })
}
