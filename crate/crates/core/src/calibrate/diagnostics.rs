//! Burn-in detection and posterior summaries.

use super::mcmc::Chain;
use super::CalibrateError;
use crate::numerics::{sample_covariance, sample_mean, GaussianSummary, SquareMatrix};
use crate::sma::ParamId;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Shortest chain the plateau detector accepts.
pub const MIN_CHAIN_LEN: usize = 1000;

/// Fraction of the chain length used as the plateau window.
const WINDOW_FRACTION: f64 = 0.1;

/// Plateau tolerance as a fraction of the late-chain standard deviation.
const TOLERANCE_FRACTION: f64 = 0.1;

/// Marginal histogram of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub param: ParamId,
    /// `counts.len() + 1` ascending bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Joint histogram of a parameter pair, counts in row-major `x` by `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2d {
    pub x: ParamId,
    pub y: ParamId,
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Moments, correlations and histograms of the retained chain segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub param_ids: Vec<ParamId>,
    pub burn_in: usize,
    pub mean: Vec<f64>,
    pub covariance: SquareMatrix,
    /// Correlation matrix; entries touching a zero-variance parameter are NaN.
    pub pearson: SquareMatrix,
    /// Pairs whose correlation is undefined because a member never moved.
    pub degenerate_pairs: Vec<(ParamId, ParamId)>,
    pub sigma2_mean: f64,
    pub marginals: Vec<Histogram>,
    pub joints: Vec<Histogram2d>,
}

impl PosteriorSummary {
    /// The summary as a Gaussian, for downstream propagation and chaining.
    pub fn gaussian(&self) -> Result<GaussianSummary, CalibrateError> {
        Ok(GaussianSummary::new(self.mean.clone(), self.covariance.clone())?)
    }
}

/// Range (max minus min) of every length-`w` window of `values`, via a pair
/// of monotonic deques, O(n) overall.
fn sliding_ranges(values: &[f64], w: usize) -> Vec<f64> {
    let n = values.len();
    if w == 0 || w > n {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n - w + 1);
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    for i in 0..n {
        while maxq.back().is_some_and(|&j| values[j] <= values[i]) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| values[j] >= values[i]) {
            minq.pop_back();
        }
        minq.push_back(i);
        if i + 1 >= w {
            let start = i + 1 - w;
            while *maxq.front().unwrap() < start {
                maxq.pop_front();
            }
            while *minq.front().unwrap() < start {
                minq.pop_front();
            }
            out.push(values[*maxq.front().unwrap()] - values[*minq.front().unwrap()]);
        }
    }
    out
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    var.sqrt()
}

/// Earliest index at which the cumulative mean of every parameter has
/// settled: over a window spanning a tenth of the chain, the cumulative
/// mean moves by no more than a tenth of that parameter's late-chain
/// standard deviation. The comparison is inclusive, so an exactly constant
/// chain settles immediately.
pub fn detect_burn_in(chain: &Chain) -> Result<usize, CalibrateError> {
    let n = chain.len();
    if n < MIN_CHAIN_LEN {
        return Err(CalibrateError::ChainTooShort { len: n, required: MIN_CHAIN_LEN });
    }
    let w = ((n as f64 * WINDOW_FRACTION) as usize).max(1);
    let n_windows = n - w + 1;
    let mut settled = vec![true; n_windows];
    for j in 0..chain.dim() {
        let xs = chain.component(j);
        let tol = TOLERANCE_FRACTION * std_dev(&xs[n / 2..]);
        let mut acc = 0.0;
        let cumulative: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(t, &x)| {
                acc += x;
                acc / (t + 1) as f64
            })
            .collect();
        for (i, range) in sliding_ranges(&cumulative, w).iter().enumerate() {
            if *range > tol {
                settled[i] = false;
            }
        }
    }
    settled
        .iter()
        .position(|&ok| ok)
        .ok_or(CalibrateError::NoPlateau)
}

fn histogram_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi <= lo {
        // Degenerate span: widen symmetrically so every sample lands in a bin.
        let pad = (lo.abs() * 1e-6).max(1e-12);
        lo -= pad;
        hi += pad;
    }
    (0..=bins).map(|b| lo + (hi - lo) * b as f64 / bins as f64).collect()
}

fn bin_index(v: f64, edges: &[f64]) -> usize {
    let bins = edges.len() - 1;
    let lo = edges[0];
    let hi = edges[bins];
    let idx = ((v - lo) / (hi - lo) * bins as f64).floor();
    (idx.max(0.0) as usize).min(bins - 1)
}

/// Summarizes the chain after discarding `burn_in` leading samples:
/// posterior mean and covariance, pairwise correlations, per-parameter
/// marginal histograms with `bins` bins, and joint histograms for the
/// requested pairs.
pub fn summarize(
    chain: &Chain,
    burn_in: usize,
    bins: usize,
    pairs: &[(ParamId, ParamId)],
) -> Result<PosteriorSummary, CalibrateError> {
    let n = chain.len();
    if burn_in >= n {
        return Err(CalibrateError::BurnInExceedsChain { burn_in, len: n });
    }
    if bins == 0 {
        return Err(CalibrateError::InvalidSettings {
            detail: "histogram bin count must be at least 1".to_string(),
        });
    }
    let d = chain.dim();
    let post = chain.samples_from(burn_in);
    let n_post = n - burn_in;
    if n_post < 2 {
        return Err(CalibrateError::ChainTooShort { len: n_post, required: 2 });
    }
    let mean = sample_mean(post, d);
    let covariance = sample_covariance(post, d)?;

    let mut pearson = SquareMatrix::identity(d);
    let mut degenerate_pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let denom = (covariance.get(i, i) * covariance.get(j, j)).sqrt();
            let r = if denom > 0.0 { covariance.get(i, j) / denom } else { f64::NAN };
            pearson.set(i, j, r);
            pearson.set(j, i, r);
            if !r.is_finite() {
                degenerate_pairs.push((chain.param_ids[i], chain.param_ids[j]));
            }
        }
    }

    let column = |id: ParamId| -> Result<(usize, Vec<f64>), CalibrateError> {
        let j = chain
            .param_ids
            .iter()
            .position(|&p| p == id)
            .ok_or_else(|| CalibrateError::InvalidSettings {
                detail: format!("parameter {id:?} is not part of the chain"),
            })?;
        Ok((j, post.iter().skip(j).step_by(d).copied().collect()))
    };

    let mut marginals = Vec::with_capacity(d);
    for &id in &chain.param_ids {
        let (_, xs) = column(id)?;
        let edges = histogram_edges(&xs, bins);
        let mut counts = vec![0u64; bins];
        for &x in &xs {
            counts[bin_index(x, &edges)] += 1;
        }
        marginals.push(Histogram { param: id, edges, counts });
    }

    let mut joints = Vec::with_capacity(pairs.len());
    for &(xi, yi) in pairs {
        let (_, xs) = column(xi)?;
        let (_, ys) = column(yi)?;
        let x_edges = histogram_edges(&xs, bins);
        let y_edges = histogram_edges(&ys, bins);
        let mut counts = vec![0u64; bins * bins];
        for (x, y) in xs.iter().zip(&ys) {
            counts[bin_index(*x, &x_edges) * bins + bin_index(*y, &y_edges)] += 1;
        }
        joints.push(Histogram2d { x: xi, y: yi, x_edges, y_edges, counts });
    }

    let sigma2_mean =
        chain.sigma2[burn_in..].iter().sum::<f64>() / n_post as f64;

    Ok(PosteriorSummary {
        param_ids: chain.param_ids.clone(),
        burn_in,
        mean,
        covariance,
        pearson,
        degenerate_pairs,
        sigma2_mean,
        marginals,
        joints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn chain_from(samples: Vec<f64>, ids: Vec<ParamId>) -> Chain {
        let d = ids.len();
        let n = samples.len() / d;
        Chain {
            param_ids: ids,
            samples,
            sigma2: vec![1.0; n],
            accepted: vec![true; n],
            seed: 0,
            adapt_checkpoints: Vec::new(),
        }
    }

    #[test]
    fn constant_chain_settles_immediately() {
        let chain = chain_from([3.5, -1.0].repeat(2000), vec![ParamId::Ms, ParamId::HSat]);
        assert_eq!(detect_burn_in(&chain).unwrap(), 0);
    }

    #[test]
    fn ramp_then_noise_is_cut_after_the_ramp() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 10_000;
        let ramp = 1000;
        let mut samples = Vec::with_capacity(n);
        for t in 0..n {
            let drift = if t < ramp { 0.4 * (1.0 - t as f64 / ramp as f64) } else { 0.0 };
            let noise: f64 = rng.sample::<f64, _>(StandardNormal);
            samples.push(drift + noise);
        }
        let chain = chain_from(samples, vec![ParamId::Ms]);
        let cut = detect_burn_in(&chain).unwrap();
        // The ramp's bias on the cumulative mean decays like 1/t, so the
        // detected index sits past the ramp but within a couple of windows.
        assert!((900..=2000).contains(&cut), "cut at {cut}");
    }

    #[test]
    fn stationary_chain_is_cut_within_one_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let samples: Vec<f64> =
            (0..4000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let chain = chain_from(samples, vec![ParamId::Ms]);
        let cut = detect_burn_in(&chain).unwrap();
        assert!(cut < 400, "cut at {cut}");
    }

    #[test]
    fn short_chains_and_endless_drifts_are_reported() {
        let chain = chain_from(vec![1.0; 999], vec![ParamId::Ms]);
        assert!(matches!(
            detect_burn_in(&chain),
            Err(CalibrateError::ChainTooShort { required: 1000, .. })
        ));
        // A pure ramp never plateaus.
        let drift: Vec<f64> = (0..5000).map(|t| t as f64).collect();
        let chain = chain_from(drift, vec![ParamId::Ms]);
        assert!(matches!(detect_burn_in(&chain), Err(CalibrateError::NoPlateau)));
    }

    #[test]
    fn sliding_ranges_match_a_direct_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let xs: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let w = 17;
        let fast = sliding_ranges(&xs, w);
        for (i, r) in fast.iter().enumerate() {
            let win = &xs[i..i + w];
            let max = win.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = win.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(*r, max - min);
        }
        assert_eq!(fast.len(), 200 - w + 1);
    }

    #[test]
    fn summary_moments_match_hand_values() {
        // Two perfectly anti-correlated components.
        let mut samples = Vec::new();
        for t in 0..100 {
            let x = t as f64;
            samples.push(x);
            samples.push(-2.0 * x + 7.0);
        }
        let chain = chain_from(samples, vec![ParamId::Ms, ParamId::Mf]);
        let s = summarize(&chain, 0, 10, &[(ParamId::Ms, ParamId::Mf)]).unwrap();
        assert!((s.mean[0] - 49.5).abs() < 1e-12);
        assert!((s.mean[1] - (-2.0 * 49.5 + 7.0)).abs() < 1e-9);
        assert!((s.pearson.get(0, 1) + 1.0).abs() < 1e-12);
        assert_eq!(s.pearson.get(0, 0), 1.0);
        assert!(s.degenerate_pairs.is_empty());
        assert!(
            (s.covariance.get(0, 1) - -2.0 * s.covariance.get(0, 0)).abs()
                < 1e-9 * s.covariance.get(0, 0)
        );
        assert_eq!(s.marginals.len(), 2);
        let total: u64 = s.marginals[0].counts.iter().sum();
        assert_eq!(total, 100);
        assert_eq!(s.joints.len(), 1);
        assert_eq!(s.joints[0].counts.iter().sum::<u64>(), 100);
        assert!(s.gaussian().is_ok());
    }

    #[test]
    fn frozen_component_yields_degenerate_pairs_not_panics() {
        let mut samples = Vec::new();
        for t in 0..50 {
            samples.push(t as f64);
            samples.push(4.0);
        }
        let chain = chain_from(samples, vec![ParamId::Ms, ParamId::HSat]);
        let s = summarize(&chain, 0, 8, &[]).unwrap();
        assert_eq!(s.degenerate_pairs, vec![(ParamId::Ms, ParamId::HSat)]);
        assert!(s.pearson.get(0, 1).is_nan());
        assert_eq!(s.pearson.get(1, 1), 1.0);
        // The frozen marginal still bins every sample.
        assert_eq!(s.marginals[1].counts.iter().sum::<u64>(), 50);
        let edges = &s.marginals[1].edges;
        assert!(edges.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn burn_in_discards_leading_samples() {
        let mut samples = Vec::new();
        for t in 0..10 {
            samples.push(if t < 5 { 100.0 } else { 1.0 });
        }
        let chain = chain_from(samples, vec![ParamId::Ms]);
        let s = summarize(&chain, 5, 4, &[]).unwrap();
        assert_eq!(s.mean[0], 1.0);
        assert_eq!(s.burn_in, 5);
        assert!(matches!(
            summarize(&chain, 10, 4, &[]),
            Err(CalibrateError::BurnInExceedsChain { burn_in: 10, len: 10 })
        ));
        assert!(summarize(&chain, 9, 4, &[]).is_err());
    }

    #[test]
    fn unknown_pair_members_are_rejected() {
        let chain = chain_from(vec![1.0, 2.0, 3.0, 4.0], vec![ParamId::Ms, ParamId::Mf]);
        assert!(summarize(&chain, 0, 4, &[(ParamId::Ms, ParamId::K)]).is_err());
    }

    #[test]
    fn sigma2_mean_covers_only_the_retained_tail() {
        let mut chain = chain_from(vec![0.0; 10], vec![ParamId::Ms]);
        chain.sigma2 = (0..10).map(|t| t as f64).collect();
        let s = summarize(&chain, 6, 4, &[]).unwrap();
        assert_eq!(s.sigma2_mean, (6.0 + 7.0 + 8.0 + 9.0) / 4.0);
    }
}
