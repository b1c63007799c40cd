//! The adaptive random-walk sampler and its conjugate noise update.

use super::data::ExperimentalDataset;
use super::likelihood::{log_likelihood_from_residuals, residuals};
use super::priors::{CalibrationSetup, PriorDensity};
use super::CalibrateError;
use crate::numerics::{
    cholesky, inverse_gamma_sample, sample_covariance, CholeskyFactor, GaussianSummary,
    SquareMatrix,
};
use crate::sma::ParamId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Periodic on-disk snapshot of the chain while it runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSpec {
    pub path: PathBuf,
    pub every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcSettings {
    pub n_steps: usize,
    pub seed: u64,
    /// Proposal covariance is re-estimated from the history at this cadence.
    pub adapt_interval: usize,
    /// Inverse-gamma hyper-prior on the noise variance.
    pub a0: f64,
    pub b0: f64,
    /// Initial proposal SD per parameter, as a fraction of the box width.
    pub v0_scale: f64,
    pub sigma2_init: f64,
    #[serde(default)]
    pub checkpoint: Option<CheckpointSpec>,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self {
            n_steps: 50_000,
            seed: 0,
            adapt_interval: 100,
            a0: 1e-3,
            b0: 1e-3,
            v0_scale: 0.01,
            sigma2_init: 1.0,
            checkpoint: None,
        }
    }
}

/// Ordered history of the sampler, starting at the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub param_ids: Vec<ParamId>,
    /// Row-major `len() x dim()` parameter samples.
    pub samples: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub accepted: Vec<bool>,
    pub seed: u64,
    /// Step indices at which the proposal covariance was re-estimated.
    pub adapt_checkpoints: Vec<usize>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.param_ids.len()
    }

    pub fn theta(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.samples[i * d..(i + 1) * d]
    }

    /// Flat sample block from `start` to the end.
    pub fn samples_from(&self, start: usize) -> &[f64] {
        &self.samples[start * self.dim()..]
    }

    /// One parameter's trace as a column.
    pub fn component(&self, j: usize) -> Vec<f64> {
        let d = self.dim();
        self.samples.iter().skip(j).step_by(d).copied().collect()
    }

    /// Fraction of accepted proposals from step `from` on (the initial
    /// point does not count).
    pub fn acceptance_rate(&self, from: usize) -> f64 {
        let tail = &self.accepted[from.max(1)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|&&a| a).count() as f64 / tail.len() as f64
    }
}

/// Current sampler position with everything cached that a step needs.
#[derive(Debug, Clone)]
pub struct MhState {
    pub theta: Vec<f64>,
    pub sigma2: f64,
    pub residuals: Vec<f64>,
    pub log_prior: f64,
    pub log_lik: f64,
}

impl MhState {
    pub fn log_posterior(&self) -> f64 {
        self.log_prior + self.log_lik
    }

    pub fn init(
        setup: &CalibrationSetup,
        datasets: &[ExperimentalDataset],
        sigma2: f64,
    ) -> Result<Self, CalibrateError> {
        setup.validate()?;
        let theta = setup.initial_theta();
        let prior = setup.prior_density()?;
        let log_prior = prior.log_density(&theta);
        let res = residuals(&theta, setup, datasets).ok_or_else(|| {
            CalibrateError::InitialPoint {
                detail: "forward solve failed at the initial parameters".to_string(),
            }
        })?;
        let log_lik = log_likelihood_from_residuals(&res, sigma2);
        Ok(Self { theta, sigma2, residuals: res, log_prior, log_lik })
    }
}

/// One random-walk Metropolis step against an arbitrary log-density.
///
/// The proposal is the symmetric Gaussian `theta + L z`, so the Hastings
/// correction is exactly one and the acceptance ratio is the density ratio
/// alone. Exactly `dim + 1` random draws are consumed regardless of the
/// outcome, which keeps the stream aligned across accept and reject paths.
pub fn metropolis_step<R: Rng, F: Fn(&[f64]) -> f64>(
    theta: &[f64],
    log_density_at_theta: f64,
    log_density: F,
    proposal: &CholeskyFactor,
    rng: &mut R,
) -> (Vec<f64>, f64, bool) {
    let z: Vec<f64> = (0..theta.len()).map(|_| rng.sample(StandardNormal)).collect();
    let step = proposal.mul_vec(&z).expect("proposal dimension matches the state");
    let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
    let cand_density = log_density(&cand);
    let u: f64 = rng.random();
    if u.ln() < cand_density - log_density_at_theta {
        (cand, cand_density, true)
    } else {
        (theta.to_vec(), log_density_at_theta, false)
    }
}

fn step_state<R: Rng>(
    state: &MhState,
    proposal: &CholeskyFactor,
    prior: &PriorDensity,
    setup: &CalibrationSetup,
    datasets: &[ExperimentalDataset],
    rng: &mut R,
) -> (MhState, bool) {
    let z: Vec<f64> = (0..state.theta.len()).map(|_| rng.sample(StandardNormal)).collect();
    let step = proposal.mul_vec(&z).expect("proposal dimension matches the state");
    let cand: Vec<f64> = state.theta.iter().zip(&step).map(|(t, s)| t + s).collect();

    let log_prior_cand = prior.log_density(&cand);
    let (res_cand, log_lik_cand) = if log_prior_cand.is_finite() {
        match residuals(&cand, setup, datasets) {
            Some(r) => {
                let ll = log_likelihood_from_residuals(&r, state.sigma2);
                (Some(r), ll)
            }
            None => (None, f64::NEG_INFINITY),
        }
    } else {
        (None, f64::NEG_INFINITY)
    };

    let u: f64 = rng.random();
    if u.ln() < (log_prior_cand + log_lik_cand) - state.log_posterior() {
        let state = MhState {
            theta: cand,
            sigma2: state.sigma2,
            residuals: res_cand.expect("accepted state has finite density"),
            log_prior: log_prior_cand,
            log_lik: log_lik_cand,
        };
        (state, true)
    } else {
        (state.clone(), false)
    }
}

/// One sampler step over the calibration posterior at fixed noise variance.
pub fn mh_step<R: Rng>(
    state: &MhState,
    proposal: &GaussianSummary,
    setup: &CalibrationSetup,
    datasets: &[ExperimentalDataset],
    rng: &mut R,
) -> Result<(MhState, bool), CalibrateError> {
    let chol = cholesky(proposal.covariance())?;
    let prior = setup.prior_density()?;
    Ok(step_state(state, &chol, &prior, setup, datasets, rng))
}

/// Exact conjugate draw of the noise variance given the current residuals.
pub fn gibbs_update_sigma2<R: Rng>(
    residuals: &[f64],
    a0: f64,
    b0: f64,
    rng: &mut R,
) -> Result<f64, CalibrateError> {
    if !(a0 > 0.0) || !(b0 > 0.0) {
        return Err(CalibrateError::InvalidHyperparameter { a0, b0 });
    }
    let a = a0 + residuals.len() as f64 / 2.0;
    let b = b0 + 0.5 * residuals.iter().map(|r| r * r).sum::<f64>();
    Ok(inverse_gamma_sample(a, b, rng))
}

/// Proposal covariance re-estimated from the chain history: the sample
/// covariance scaled by `2.4^2 / d` plus a tiny diagonal to keep it
/// invertible. Falls back to `v0` until the history carries any spread.
pub fn adapt_proposal(samples: &[f64], dim: usize, v0: &SquareMatrix) -> GaussianSummary {
    let fallback =
        || GaussianSummary::new(vec![0.0; dim], v0.clone()).expect("initial covariance valid");
    if dim == 0 || samples.len() < 2 * dim {
        return fallback();
    }
    let cov = match sample_covariance(samples, dim) {
        Ok(c) => c,
        Err(_) => return fallback(),
    };
    if (0..dim).all(|i| cov.get(i, i) == 0.0) {
        return fallback();
    }
    let s_d = 2.4 * 2.4 / dim as f64;
    let scaled = cov.scale(s_d).add_diagonal(s_d * 1e-10);
    if cholesky(&scaled).is_err() {
        return fallback();
    }
    GaussianSummary::new(vec![0.0; dim], scaled).unwrap_or_else(|_| fallback())
}

fn v0_matrix(setup: &CalibrationSetup, settings: &McmcSettings) -> SquareMatrix {
    // With an informative Gaussian prior the posterior lives well inside
    // the box, so box-width steps would be rejected wholesale; its +/-2
    // sigma span is the better opening scale (floored so a collapsed prior
    // axis cannot freeze the walk entirely).
    let sds = setup.gaussian.as_ref().map(|g| g.std_devs());
    let diag: Vec<f64> = setup
        .priors
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let box_width = p.upper - p.lower;
            let width = match &sds {
                Some(sds) => (4.0 * sds[i]).min(box_width).max(1e-9 * box_width),
                None => box_width,
            };
            (settings.v0_scale * width).powi(2)
        })
        .collect();
    SquareMatrix::from_diagonal(&diag)
}

fn validate_settings(settings: &McmcSettings) -> Result<(), CalibrateError> {
    let fail = |detail: &str| CalibrateError::InvalidSettings { detail: detail.to_string() };
    if settings.adapt_interval == 0 {
        return Err(fail("adapt_interval must be at least 1"));
    }
    if !(settings.v0_scale > 0.0) {
        return Err(fail("v0_scale must be positive"));
    }
    if !(settings.sigma2_init > 0.0) {
        return Err(fail("sigma2_init must be positive"));
    }
    if !(settings.a0 > 0.0) || !(settings.b0 > 0.0) {
        return Err(CalibrateError::InvalidHyperparameter { a0: settings.a0, b0: settings.b0 });
    }
    Ok(())
}

/// Runs the full sampler: a Metropolis move on the parameters followed by
/// a conjugate noise draw, every step, deterministically from the seed.
pub fn run_chain(
    setup: &CalibrationSetup,
    datasets: &[ExperimentalDataset],
    settings: &McmcSettings,
) -> Result<Chain, CalibrateError> {
    validate_settings(settings)?;
    if datasets.is_empty() {
        return Err(CalibrateError::InvalidSettings {
            detail: "at least one dataset is required".to_string(),
        });
    }
    let d = setup.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut state = MhState::init(setup, datasets, settings.sigma2_init)?;
    let prior = setup.prior_density()?;
    // Adaptation runs in box-scaled coordinates. Parameter magnitudes span
    // many orders (moduli in Pa against rate constants in 1/Pa), and the
    // diagonal regulariser in the adapted covariance is only negligible
    // when every axis is O(1).
    let scales: Vec<f64> = setup.priors.iter().map(|p| p.upper - p.lower).collect();
    let v0 = v0_matrix(setup, settings);
    let mut prop_cov_u =
        SquareMatrix::from_fn(d, |i, j| v0.get(i, j) / (scales[i] * scales[j]));
    let mut proposal = cholesky(&prop_cov_u)?.row_scale(&scales)?;

    let mut chain = Chain {
        param_ids: setup.ids(),
        samples: Vec::with_capacity((settings.n_steps + 1) * d),
        sigma2: Vec::with_capacity(settings.n_steps + 1),
        accepted: Vec::with_capacity(settings.n_steps + 1),
        seed: settings.seed,
        adapt_checkpoints: Vec::new(),
    };
    chain.samples.extend_from_slice(&state.theta);
    chain.sigma2.push(state.sigma2);
    chain.accepted.push(true);

    for t in 1..=settings.n_steps {
        if t % settings.adapt_interval == 0 {
            // Adapt on the trailing half of the history: the opening
            // descent toward the posterior would otherwise dominate the
            // empirical covariance and leave the proposal far too wide.
            // When that window is degenerate (nothing accepted in it) the
            // fallback is the current proposal shrunk five-fold, so an
            // over-scaled walk recovers instead of freezing.
            let mut window_u = chain.samples[(chain.len() / 2) * d..].to_vec();
            for (idx, v) in window_u.iter_mut().enumerate() {
                *v /= scales[idx % d];
            }
            let adapted = adapt_proposal(&window_u, d, &prop_cov_u.scale(0.04));
            if let Ok(l) = cholesky(adapted.covariance()) {
                prop_cov_u = adapted.covariance().clone();
                proposal = l.row_scale(&scales)?;
            }
            chain.adapt_checkpoints.push(t);
        }
        let (next, accepted) = step_state(&state, &proposal, &prior, setup, datasets, &mut rng);
        state = next;

        let s2 = gibbs_update_sigma2(&state.residuals, settings.a0, settings.b0, &mut rng)?;
        state.sigma2 = s2;
        state.log_lik = log_likelihood_from_residuals(&state.residuals, s2);

        chain.samples.extend_from_slice(&state.theta);
        chain.sigma2.push(s2);
        chain.accepted.push(accepted);

        if let Some(cp) = &settings.checkpoint {
            if cp.every > 0 && t % cp.every == 0 {
                crate::io::write_chain_csv(&cp.path, &chain)
                    .map_err(|e| CalibrateError::ChainAborted { detail: e.to_string() })?;
            }
        }
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::ParamPrior;
    use crate::numerics::mvn_sample;
    use crate::sma::{simulate_isobaric_loop, MaterialParameters};

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

    fn setup() -> CalibrationSetup {
        CalibrationSetup::uniform(
            nominal(),
            vec![
                ParamPrior { id: ParamId::Ms, lower: 285.0, upper: 305.0, initial: 300.0 },
                ParamPrior { id: ParamId::HSat, lower: 0.02, upper: 0.06, initial: 0.034 },
            ],
        )
    }

    fn one_dataset() -> Vec<ExperimentalDataset> {
        let l = simulate_isobaric_loop(150e6, 430.0, 210.0, 60, &nominal()).unwrap();
        vec![ExperimentalDataset::from_loop(&l, "self")]
    }

    #[test]
    fn adapted_covariance_tracks_the_sample_covariance_scaled() {
        let target = GaussianSummary::new(
            vec![0.0, 0.0],
            SquareMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap(),
        )
        .unwrap();
        let factor = cholesky(target.covariance()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut samples = Vec::with_capacity(2 * 100_000);
        for _ in 0..100_000 {
            samples.extend(mvn_sample(target.mean(), &factor, &mut rng).unwrap());
        }
        let v0 = SquareMatrix::identity(2);
        let adapted = adapt_proposal(&samples, 2, &v0);
        let s_d = 2.4 * 2.4 / 2.0;
        for i in 0..2 {
            for j in 0..2 {
                let want = s_d * target.covariance().get(i, j);
                let got = adapted.covariance().get(i, j);
                assert!((got - want).abs() <= 0.05 * want.abs().max(s_d * 0.1));
            }
        }
    }

    #[test]
    fn eight_dimensional_scale_factor_is_constant() {
        // Spread in every direction, diagonal truth: ratio recovers 2.4^2/8.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut samples = Vec::with_capacity(8 * 20_000);
        for _ in 0..20_000 {
            for _ in 0..8 {
                samples.push(rng.sample::<f64, _>(StandardNormal) * 3.0);
            }
        }
        let adapted = adapt_proposal(&samples, 8, &SquareMatrix::identity(8));
        let want = (2.4 * 2.4 / 8.0) * 9.0;
        for i in 0..8 {
            let got = adapted.covariance().get(i, i);
            assert!((got - want).abs() <= 0.1 * want, "diag {i}: {got} vs {want}");
        }
    }

    #[test]
    fn history_without_spread_falls_back_to_the_initial_covariance() {
        let v0 = SquareMatrix::from_diagonal(&[0.04, 0.09]);
        let flat = [1.0, 2.0].repeat(50);
        let adapted = adapt_proposal(&flat, 2, &v0);
        assert_eq!(adapted.covariance(), &v0);
        let single = [1.0, 2.0].to_vec();
        assert_eq!(adapt_proposal(&single, 2, &v0).covariance(), &v0);
    }

    #[test]
    fn noise_draws_follow_the_conjugate_posterior_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        // Two unit residuals on top of a0 = 2, b0 = 1 give an
        // inverse-gamma(3, 2) with mean exactly 1.
        let n = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += gibbs_update_sigma2(&[1.0, 1.0], 2.0, 1.0, &mut rng).unwrap();
        }
        let mean = acc / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn zero_residuals_reduce_to_the_prior_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        // IG(a0 + 3/2, b0) with a0 = 2.5, b0 = 2 has mean 2/(4 - 1) = 2/3.
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += gibbs_update_sigma2(&[0.0, 0.0, 0.0], 2.5, 2.0, &mut rng).unwrap();
        }
        let mean = acc / n as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn bad_hyperparameters_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            gibbs_update_sigma2(&[1.0], 0.0, 1.0, &mut rng),
            Err(CalibrateError::InvalidHyperparameter { .. })
        ));
        assert!(gibbs_update_sigma2(&[1.0], 1.0, -2.0, &mut rng).is_err());
    }

    #[test]
    fn vanishing_proposal_width_always_accepts_on_a_plateau() {
        let proposal = cholesky(&SquareMatrix::from_diagonal(&[1e-30, 1e-30])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta = vec![0.3, -0.7];
        for _ in 0..200 {
            let (_, _, accepted) =
                metropolis_step(&theta, 1.25, |_| 1.25, &proposal, &mut rng);
            assert!(accepted);
        }
    }

    #[test]
    fn acceptance_frequency_matches_the_density_ratio() {
        // Candidate density is a fixed factor 0.3 below the current one, so
        // the long-run acceptance frequency must converge to 0.3.
        let proposal = cholesky(&SquareMatrix::from_diagonal(&[1.0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta = vec![0.0];
        let current = 0.0f64;
        let cand_density = 0.3f64.ln();
        let trials = 100_000;
        let mut accepts = 0;
        for _ in 0..trials {
            let (_, _, a) =
                metropolis_step(&theta, current, |_| cand_density, &proposal, &mut rng);
            if a {
                accepts += 1;
            }
        }
        let rate = accepts as f64 / trials as f64;
        assert!((rate - 0.3).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn candidates_outside_the_box_never_enter_the_chain() {
        let s = setup();
        let data = one_dataset();
        let state = MhState::init(&s, &data, 1.0).unwrap();
        // Steps light-years outside the box: every candidate is rejected.
        let proposal = GaussianSummary::new(
            vec![0.0, 0.0],
            SquareMatrix::from_diagonal(&[1e24, 1e24]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let (next, accepted) = mh_step(&state, &proposal, &s, &data, &mut rng).unwrap();
            assert!(!accepted);
            assert_eq!(next.theta, state.theta);
        }
    }

    #[test]
    fn zero_step_run_returns_only_the_initial_point() {
        let s = setup();
        let settings = McmcSettings { n_steps: 0, seed: 9, ..Default::default() };
        let chain = run_chain(&s, &one_dataset(), &settings).unwrap();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain.theta(0), s.initial_theta().as_slice());
    }

    #[test]
    fn chains_are_reproducible_and_never_leave_the_feasible_set() {
        let s = setup();
        let data = one_dataset();
        let settings = McmcSettings {
            n_steps: 400,
            seed: 11,
            b0: 1e-9,
            sigma2_init: 1e-6,
            ..Default::default()
        };
        let a = run_chain(&s, &data, &settings).unwrap();
        let b = run_chain(&s, &data, &settings).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.sigma2, b.sigma2);
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.len(), 401);
        for i in 0..a.len() {
            let theta = a.theta(i);
            assert!(s.in_bounds(theta));
            assert!(s.parameters(theta).validate().is_ok());
        }
        // The sampler moved at least once under a vague noise prior.
        assert!(a.acceptance_rate(0) > 0.0);
        assert!(!a.adapt_checkpoints.is_empty());
    }
}
