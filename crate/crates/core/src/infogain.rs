//! Ranking candidate experimental designs by how much a round of synthetic
//! measurements would move the posterior, measured as the divergence between
//! the prior and the final sequentially updated posterior.

use crate::calibrate::{
    detect_burn_in, run_chain, summarize, CalibrateError, CalibrationSetup, ExperimentalDataset,
    McmcSettings, ParamPrior, ResidualMode,
};
use crate::numerics::{cholesky, kl_mvn, mvn_sample, GaussianSummary, NumericsError, SquareMatrix};
use crate::sma::{MaterialParameters, ParamId, SimulationWindow, SmaError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InfoGainError {
    #[error("candidate `{label}`: at least one isobaric condition is required")]
    EmptyConditions { label: String },
    #[error("candidate `{label}`: stress {value} must be positive and finite")]
    InvalidStress { label: String, value: f64 },
    #[error("no feasible parameter draw within {attempts} attempts")]
    FeasibilityExhausted { attempts: usize },
    #[error(transparent)]
    Calibrate(#[from] CalibrateError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Solver(#[from] SmaError),
}

/// Upper bound on rejection resampling when drawing feasible parameters.
const MAX_DRAW_ATTEMPTS: usize = 1000;

/// One proposed measurement campaign: a set of isobaric conditions, each
/// visited the same number of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCandidate {
    pub label: String,
    /// Stress levels in Pa.
    pub conditions: Vec<f64>,
    pub samples_per_condition: usize,
}

impl DesignCandidate {
    pub fn validate(&self) -> Result<(), InfoGainError> {
        if self.conditions.is_empty() {
            return Err(InfoGainError::EmptyConditions { label: self.label.clone() });
        }
        for &s in &self.conditions {
            if !(s > 0.0) || !s.is_finite() {
                return Err(InfoGainError::InvalidStress { label: self.label.clone(), value: s });
            }
        }
        Ok(())
    }

    /// Conditions expanded into the ordered list of dataset stresses,
    /// condition-major.
    pub fn stresses(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.conditions.len() * self.samples_per_condition);
        for &c in &self.conditions {
            for _ in 0..self.samples_per_condition {
                out.push(c);
            }
        }
        out
    }
}

/// Which distribution plays the reference role in the divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    /// D(posterior || prior): expected surprisal of the update.
    #[default]
    PosteriorFromPrior,
    /// D(prior || posterior), for sensitivity checks.
    PriorFromPosterior,
}

fn divergence(
    direction: KlDirection,
    posterior: &GaussianSummary,
    prior: &GaussianSummary,
) -> Result<f64, NumericsError> {
    match direction {
        KlDirection::PosteriorFromPrior => kl_mvn(posterior, prior),
        KlDirection::PriorFromPosterior => kl_mvn(prior, posterior),
    }
}

/// Diagnostics for one calibration stage within a sequential update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stress: f64,
    pub chain_len: usize,
    pub burn_in: usize,
    /// Whether the burn-in plateau was detected rather than defaulted.
    pub plateau_found: bool,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub posterior: GaussianSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub label: String,
    pub stresses: Vec<f64>,
    /// Divergence from the original prior after each stage.
    pub stage_kls: Vec<f64>,
    pub chain_lengths: Vec<usize>,
    pub burn_ins: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Divergence between the final posterior and the prior.
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoGainReport {
    pub direction: KlDirection,
    pub seed: u64,
    pub candidates: Vec<CandidateReport>,
    /// Candidate labels, most informative first.
    pub ranking: Vec<String>,
}

fn params_at(ids: &[ParamId], theta: &[f64], base: &MaterialParameters) -> MaterialParameters {
    let mut p = base.clone();
    for (id, &v) in ids.iter().zip(theta) {
        id.set(&mut p, v);
    }
    p
}

fn theta_feasible(
    theta: &[f64],
    ids: &[ParamId],
    base: &MaterialParameters,
    bounds: Option<&[(f64, f64)]>,
) -> bool {
    if let Some(b) = bounds {
        if theta.iter().zip(b).any(|(t, (lo, hi))| t < lo || t > hi) {
            return false;
        }
    }
    params_at(ids, theta, base).validate().is_ok()
}

/// Draws one plausible parameter vector from the posterior (rejecting
/// infeasible draws), solves the loop at `stress`, and wraps it as a
/// dataset. With `noise_sd` set, i.i.d. Gaussian noise is added to every
/// strain sample; by default the curves are exact model output, so the
/// dataset carries parameter uncertainty only.
#[allow(clippy::too_many_arguments)]
pub fn generate_synthetic_dataset<R: Rng>(
    posterior: &GaussianSummary,
    ids: &[ParamId],
    base: &MaterialParameters,
    bounds: Option<&[(f64, f64)]>,
    stress: f64,
    window: &SimulationWindow,
    noise_sd: Option<f64>,
    label: &str,
    rng: &mut R,
) -> Result<ExperimentalDataset, InfoGainError> {
    let dim = posterior.dim();
    let degenerate = {
        let c = posterior.covariance();
        (0..dim).all(|i| (0..dim).all(|j| c.get(i, j) == 0.0))
    };
    let factor = if degenerate { None } else { Some(cholesky(posterior.covariance())?) };
    for _ in 0..MAX_DRAW_ATTEMPTS {
        let theta = match &factor {
            Some(f) => mvn_sample(posterior.mean(), f, rng)?,
            None => posterior.mean().to_vec(),
        };
        if !theta_feasible(&theta, ids, base, bounds) {
            continue;
        }
        let Ok(l) = window.simulate(stress, &params_at(ids, &theta, base)) else {
            continue;
        };
        let dataset = match noise_sd {
            None => ExperimentalDataset::from_loop(&l, label),
            Some(sd) => {
                let jitter = |temps: &[f64], eps: &[f64], rng: &mut R| {
                    temps
                        .iter()
                        .zip(eps)
                        .map(|(&t, &e)| (t, e + sd * rng.sample::<f64, _>(StandardNormal)))
                        .collect::<Vec<_>>()
                };
                let cooling = jitter(&l.cooling.temperatures, &l.cooling.eps_t, rng);
                let heating = jitter(&l.heating.temperatures, &l.heating.eps_t, rng);
                ExperimentalDataset::new(stress, label, cooling, heating)?
            }
        };
        return Ok(dataset);
    }
    Err(InfoGainError::FeasibilityExhausted { attempts: MAX_DRAW_ATTEMPTS })
}

/// A calibration setup whose prior is the given Gaussian truncated to the
/// box, starting at the (clamped) Gaussian mean.
fn stage_setup(
    current: &GaussianSummary,
    ids: &[ParamId],
    base: &MaterialParameters,
    bounds: &[(f64, f64)],
    residual_mode: ResidualMode,
) -> CalibrationSetup {
    let priors = ids
        .iter()
        .zip(bounds)
        .zip(current.mean())
        .map(|((id, &(lower, upper)), &mean)| {
            let margin = 1e-9 * (upper - lower);
            ParamPrior {
                id: *id,
                lower,
                upper,
                initial: mean.clamp(lower + margin, upper - margin),
            }
        })
        .collect();
    CalibrationSetup {
        base: base.clone(),
        priors,
        gaussian: Some(current.clone()),
        residual_mode,
    }
}

/// Gaussian fit of a stage posterior whose covariance is guaranteed to
/// admit a Cholesky factorization, as both the next-stage prior density and
/// the divergence need one. A short chain can leave a barely-explored
/// direction at a pivot of minus a few ulps; the smallest diagonal nugget
/// from a geometric ladder repairs exactly that case and leaves healthy
/// covariances untouched.
fn factorable_fit(
    mean: Vec<f64>,
    covariance: SquareMatrix,
    scale_hint: &[f64],
) -> Result<GaussianSummary, InfoGainError> {
    if cholesky(&covariance).is_ok() {
        return Ok(GaussianSummary::new(mean, covariance)?);
    }
    // Per-axis nugget: the parameters carry wildly different units, so a
    // single absolute shift would swamp the small-scale axes. The hint
    // supplies each axis's prior variance as a floor for fully collapsed
    // directions.
    let mut eps = 1e-12;
    while eps <= 1.0 {
        let mut padded = covariance.clone();
        for i in 0..padded.dim() {
            let v = covariance.get(i, i);
            padded.set(i, i, v + eps * v.max(scale_hint[i]));
        }
        if cholesky(&padded).is_ok() {
            return Ok(GaussianSummary::new(mean, padded)?);
        }
        eps *= 100.0;
    }
    cholesky(&covariance)?;
    unreachable!("the factorization above must have failed");
}

/// Runs one chain per dataset, each time using the previous stage's
/// Gaussian posterior fit as the prior, and returns the final fit plus
/// per-stage diagnostics. Burn-in falls back to a fifth of the chain when
/// no plateau is detected.
pub fn sequential_calibrate(
    prior: &GaussianSummary,
    ids: &[ParamId],
    base: &MaterialParameters,
    bounds: &[(f64, f64)],
    residual_mode: ResidualMode,
    datasets: &[ExperimentalDataset],
    settings: &McmcSettings,
) -> Result<(GaussianSummary, Vec<StageOutcome>), InfoGainError> {
    let mut current = prior.clone();
    let mut stages = Vec::with_capacity(datasets.len());
    for (s, dataset) in datasets.iter().enumerate() {
        let setup = stage_setup(&current, ids, base, bounds, residual_mode);
        let stage_settings =
            McmcSettings { seed: settings.seed.wrapping_add(s as u64), ..settings.clone() };
        let chain = run_chain(&setup, std::slice::from_ref(dataset), &stage_settings)?;
        let (burn_in, plateau_found) = match detect_burn_in(&chain) {
            Ok(b) => (b, true),
            Err(CalibrateError::NoPlateau) => (chain.len() / 5, false),
            Err(e) => return Err(e.into()),
        };
        let summary = summarize(&chain, burn_in, 1, &[])?;
        let hint: Vec<f64> =
            (0..current.dim()).map(|i| current.covariance().get(i, i)).collect();
        current = factorable_fit(summary.mean.clone(), summary.covariance.clone(), &hint)?;
        stages.push(StageOutcome {
            stress: dataset.stress,
            chain_len: chain.len(),
            burn_in,
            plateau_found,
            acceptance_rate: chain.acceptance_rate(burn_in),
            seed: stage_settings.seed,
            posterior: current.clone(),
        });
    }
    Ok((current, stages))
}

/// Everything a design comparison shares across candidates.
#[derive(Debug, Clone)]
pub struct CompareSpec<'a> {
    pub prior: &'a GaussianSummary,
    pub ids: &'a [ParamId],
    pub base: &'a MaterialParameters,
    pub bounds: &'a [(f64, f64)],
    pub window: &'a SimulationWindow,
    pub settings: &'a McmcSettings,
    pub direction: KlDirection,
    /// Additive measurement noise on the synthetic strains; off by default.
    pub noise_sd: Option<f64>,
    /// Residual granularity for the stage likelihoods.
    pub residual_mode: ResidualMode,
}

/// Evaluates every candidate under the same prior: synthetic datasets are
/// drawn treating the prior as ground truth, calibrated sequentially, and
/// scored by the divergence between the final posterior and that prior.
/// Candidates are ranked most-informative first; everything is a pure
/// function of the inputs and `seed`.
pub fn compare_designs(
    spec: &CompareSpec<'_>,
    candidates: &[DesignCandidate],
    seed: u64,
) -> Result<InfoGainReport, InfoGainError> {
    let mut reports = Vec::with_capacity(candidates.len());
    for cand in candidates {
        cand.validate()?;
        // Every candidate consumes an identical generation stream and chain
        // seed: scores do not depend on list position, and the comparison is
        // paired (common random numbers), so ranking noise reflects design
        // geometry rather than luck in the truth draws.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stresses = cand.stresses();
        let datasets: Vec<ExperimentalDataset> = stresses
            .iter()
            .enumerate()
            .map(|(i, &stress)| {
                generate_synthetic_dataset(
                    spec.prior,
                    spec.ids,
                    spec.base,
                    Some(spec.bounds),
                    stress,
                    spec.window,
                    spec.noise_sd,
                    &format!("{}-{}", cand.label, i),
                    &mut rng,
                )
            })
            .collect::<Result<_, _>>()?;
        let (final_posterior, stages) = sequential_calibrate(
            spec.prior,
            spec.ids,
            spec.base,
            spec.bounds,
            spec.residual_mode,
            &datasets,
            spec.settings,
        )?;
        let stage_kls = stages
            .iter()
            .map(|s| divergence(spec.direction, &s.posterior, spec.prior))
            .collect::<Result<Vec<f64>, _>>()?;
        let kl = divergence(spec.direction, &final_posterior, spec.prior)?;
        reports.push(CandidateReport {
            label: cand.label.clone(),
            stresses,
            stage_kls,
            chain_lengths: stages.iter().map(|s| s.chain_len).collect(),
            burn_ins: stages.iter().map(|s| s.burn_in).collect(),
            seeds: stages.iter().map(|s| s.seed).collect(),
            kl,
        });
    }
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| reports[b].kl.total_cmp(&reports[a].kl));
    let ranking = order.iter().map(|&i| reports[i].label.clone()).collect();
    Ok(InfoGainReport { direction: spec.direction, seed, candidates: reports, ranking })
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
            anchor_stress: 300.0e6,
        }
    }

    const IDS: [ParamId; 2] = [ParamId::Ms, ParamId::HSat];
    const BOUNDS: [(f64, f64); 2] = [(285.0, 305.0), (0.02, 0.06)];

    fn window() -> SimulationWindow {
        SimulationWindow { t_max: 430.0, t_min: 210.0, n_grid: 60 }
    }

    fn tight_prior() -> GaussianSummary {
        GaussianSummary::new(
            vec![300.0, 0.034],
            SquareMatrix::from_diagonal(&[1.0, 1e-6]),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_posterior_reproduces_the_mean_curve() {
        let posterior =
            GaussianSummary::new(vec![300.0, 0.034], SquareMatrix::zeros(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = generate_synthetic_dataset(
            &posterior,
            &IDS,
            &nominal(),
            Some(&BOUNDS),
            150e6,
            &window(),
            None,
            "mean",
            &mut rng,
        )
        .unwrap();
        let exact = window().simulate(150e6, &nominal()).unwrap();
        assert_eq!(ds, ExperimentalDataset::from_loop(&exact, "mean"));
    }

    #[test]
    fn synthetic_draws_are_seed_deterministic() {
        let make = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            generate_synthetic_dataset(
                &tight_prior(),
                &IDS,
                &nominal(),
                Some(&BOUNDS),
                150e6,
                &window(),
                None,
                "d",
                &mut rng,
            )
            .unwrap()
        };
        assert_eq!(make(7), make(7));
        assert_ne!(make(7), make(8));
    }

    #[test]
    fn noise_flag_perturbs_the_strains() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noisy = generate_synthetic_dataset(
            &tight_prior(),
            &IDS,
            &nominal(),
            Some(&BOUNDS),
            150e6,
            &window(),
            Some(1e-4),
            "d",
            &mut rng,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let clean = generate_synthetic_dataset(
            &tight_prior(),
            &IDS,
            &nominal(),
            Some(&BOUNDS),
            150e6,
            &window(),
            None,
            "d",
            &mut rng,
        )
        .unwrap();
        assert_eq!(noisy.cooling.temperatures, clean.cooling.temperatures);
        assert_ne!(noisy.cooling.eps_t, clean.cooling.eps_t);
        let max_dev = noisy
            .cooling
            .eps_t
            .iter()
            .zip(&clean.cooling.eps_t)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_dev < 1e-3, "noise out of scale: {max_dev}");
    }

    #[test]
    fn infeasible_posteriors_exhaust_the_draw_budget() {
        // The prior mass sits entirely outside the allowed box.
        let posterior = GaussianSummary::new(
            vec![280.0, 0.034],
            SquareMatrix::from_diagonal(&[1e-6, 1e-12]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let err = generate_synthetic_dataset(
            &posterior,
            &IDS,
            &nominal(),
            Some(&BOUNDS),
            150e6,
            &window(),
            None,
            "d",
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, InfoGainError::FeasibilityExhausted { attempts: 1000 }));
    }

    #[test]
    fn malformed_candidates_are_rejected() {
        let empty = DesignCandidate {
            label: "none".into(),
            conditions: vec![],
            samples_per_condition: 1,
        };
        assert!(matches!(empty.validate(), Err(InfoGainError::EmptyConditions { .. })));
        let bad = DesignCandidate {
            label: "neg".into(),
            conditions: vec![150e6, -1.0],
            samples_per_condition: 1,
        };
        assert!(matches!(bad.validate(), Err(InfoGainError::InvalidStress { .. })));
        let replicas = DesignCandidate {
            label: "rep".into(),
            conditions: vec![150e6],
            samples_per_condition: 3,
        };
        assert_eq!(replicas.stresses(), vec![150e6; 3]);
    }

    #[test]
    fn empty_campaign_gains_nothing() {
        let prior = tight_prior();
        let settings = McmcSettings { n_steps: 0, ..Default::default() };
        let spec = CompareSpec {
            prior: &prior,
            ids: &IDS,
            base: &nominal(),
            bounds: &BOUNDS,
            window: &window(),
            settings: &settings,
            direction: KlDirection::default(),
            noise_sd: None,
            residual_mode: ResidualMode::default(),
        };
        let idle = DesignCandidate {
            label: "idle".into(),
            conditions: vec![150e6],
            samples_per_condition: 0,
        };
        let report = compare_designs(&spec, &[idle], 11).unwrap();
        assert_eq!(report.candidates.len(), 1);
        assert!(report.candidates[0].kl.abs() <= 1e-12);
        assert!(report.candidates[0].stage_kls.is_empty());
        assert_eq!(report.ranking, vec!["idle".to_string()]);
    }

    #[test]
    fn single_stage_update_shrinks_and_reproduces() {
        let prior = GaussianSummary::new(
            vec![299.0, 0.035],
            SquareMatrix::from_diagonal(&[9.0, 1e-5]),
        )
        .unwrap();
        let truth = window().simulate(150e6, &nominal()).unwrap();
        let data = vec![ExperimentalDataset::from_loop(&truth, "truth")];
        let settings = McmcSettings {
            n_steps: 1500,
            seed: 21,
            b0: 1e-9,
            sigma2_init: 1e-6,
            ..Default::default()
        };
        let (posterior, stages) = sequential_calibrate(
            &prior,
            &IDS,
            &nominal(),
            &BOUNDS,
            ResidualMode::default(),
            &data,
            &settings,
        )
        .unwrap();
        assert_eq!(stages.len(), 1);
        assert_eq!(stages[0].chain_len, 1501);
        // Data at the true parameters sharpen both marginals.
        for i in 0..2 {
            assert!(
                posterior.covariance().get(i, i) < prior.covariance().get(i, i),
                "component {i} did not shrink"
            );
        }
        let kl = kl_mvn(&posterior, &prior).unwrap();
        assert!(kl.is_finite() && kl >= 0.0);

        let (again, _) = sequential_calibrate(
            &prior,
            &IDS,
            &nominal(),
            &BOUNDS,
            ResidualMode::default(),
            &data,
            &settings,
        )
        .unwrap();
        assert_eq!(again, posterior);
    }
}
