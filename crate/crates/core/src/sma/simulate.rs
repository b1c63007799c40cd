//! Isobaric cooling/heating sweep solver and loop comparison.
//!
//! At fixed stress the transformation surface reduces per branch to a scalar
//! equation `f(xi) = q(T)` with `f` strictly increasing, so the martensite
//! fraction at each grid temperature is found by bracketed bisection. The
//! solution at a temperature does not depend on the grid spacing (each
//! branch is quasi-static and monotone), which is also why a loop can be
//! evaluated directly on a dataset's temperature points.

use super::coefficients::{derive_coefficients, DerivedCoefficients};
use super::kinetics::{h_cur, Direction};
use super::params::MaterialParameters;
use super::SmaError;

/// One monotone temperature sweep with its solved state.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Grid temperatures in sweep order, K.
    pub temperatures: Vec<f64>,
    /// Martensite volume fraction at each grid point, in [0, 1].
    pub xi: Vec<f64>,
    /// Transformation strain at each grid point.
    pub eps_t: Vec<f64>,
}

impl Branch {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            temperatures: Vec::with_capacity(n),
            xi: Vec::with_capacity(n),
            eps_t: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperatures.is_empty()
    }
}

/// Full cooling-then-heating hysteresis loop at constant stress.
#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisLoop {
    /// Applied tensile stress, Pa.
    pub stress: f64,
    /// Cooling branch, temperatures descending.
    pub cooling: Branch,
    /// Heating branch, temperatures ascending.
    pub heating: Branch,
}

const PHI_TOL: f64 = 1.0; // Pa
const XI_TOL: f64 = 1e-12;
const MAX_BISECT: usize = 80;
const COMPLETION_TOL: f64 = 1e-6;

/// Temperature sweep settings shared by every caller that simulates loops
/// on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimulationWindow {
    /// Sweep start (and heating end), K.
    pub t_max: f64,
    /// Sweep reversal temperature, K.
    pub t_min: f64,
    /// Grid points per branch.
    pub n_grid: usize,
}

impl SimulationWindow {
    pub fn simulate(
        &self,
        sigma: f64,
        p: &MaterialParameters,
    ) -> Result<HysteresisLoop, SmaError> {
        simulate_isobaric_loop(sigma, self.t_max, self.t_min, self.n_grid, p)
    }
}

/// Simulates one full transformation cycle on a uniform temperature grid of
/// `n_grid` points per branch: cooling from `t_max` to `t_min`, then heating
/// back.
///
/// The sweep must reach full martensite before reversal and full austenite
/// by the end of heating; otherwise the offending direction is reported so
/// the caller can widen the window.
pub fn simulate_isobaric_loop(
    sigma: f64,
    t_max: f64,
    t_min: f64,
    n_grid: usize,
    p: &MaterialParameters,
) -> Result<HysteresisLoop, SmaError> {
    if sigma < 0.0 {
        return Err(SmaError::NegativeStress { sigma });
    }
    if !(t_max > t_min) || t_min <= 0.0 {
        return Err(SmaError::InvalidWindow { t_max, t_min });
    }
    if n_grid < 50 {
        return Err(SmaError::GridTooCoarse { n_grid });
    }
    let c = derive_coefficients(p)?;

    let step = (t_max - t_min) / (n_grid - 1) as f64;
    let cooling_ts: Vec<f64> = (0..n_grid).map(|i| t_max - i as f64 * step).collect();
    let heating_ts: Vec<f64> = (0..n_grid).map(|i| t_min + i as f64 * step).collect();

    let cooling = solve_cooling(sigma, &cooling_ts, &c, p)?;
    let xi_end = *cooling.xi.last().expect("nonempty grid");
    if xi_end < 1.0 - COMPLETION_TOL {
        return Err(SmaError::IncompleteTransformation {
            direction: Direction::Forward,
            xi_end,
        });
    }
    // Recovery direction frozen at the reversal point.
    let lambda_rev = cooling.eps_t.last().unwrap() / xi_end;

    let heating = solve_heating(sigma, &heating_ts, xi_end, lambda_rev, &c, p)?;
    let xi_final = *heating.xi.last().expect("nonempty grid");
    if xi_final > COMPLETION_TOL {
        return Err(SmaError::IncompleteTransformation {
            direction: Direction::Reverse,
            xi_end: xi_final,
        });
    }
    Ok(HysteresisLoop { stress: sigma, cooling, heating })
}

/// Solves both branches directly on caller-chosen temperature points,
/// assuming a full major loop (reversal from `xi = 1`, recovery direction
/// `h_cur`). Used to evaluate the model exactly at dataset temperatures.
pub fn solve_loop_at(
    sigma: f64,
    cooling_ts: &[f64],
    heating_ts: &[f64],
    p: &MaterialParameters,
) -> Result<HysteresisLoop, SmaError> {
    if sigma < 0.0 {
        return Err(SmaError::NegativeStress { sigma });
    }
    let c = derive_coefficients(p)?;
    let cooling = solve_cooling(sigma, cooling_ts, &c, p)?;
    let heating = solve_heating(sigma, heating_ts, 1.0, h_cur(sigma, p), &c, p)?;
    Ok(HysteresisLoop { stress: sigma, cooling, heating })
}

fn solve_cooling(
    sigma: f64,
    temperatures: &[f64],
    c: &DerivedCoefficients,
    p: &MaterialParameters,
) -> Result<Branch, SmaError> {
    let h = h_cur(sigma, p);
    let half_elastic = 0.5 * sigma * sigma * c.delta_s;
    // Phi_fwd(T, xi) = q0 + rho_ds0 T - f_fwd(xi)
    let q0 = (1.0 - c.d) * sigma * h + half_elastic - c.rho_du0 - c.y0;
    let f_fwd = |xi: f64| 0.5 * c.a1 * (1.0 + xi.powf(p.n1) - (1.0 - xi).powf(p.n2)) + c.a3;
    let f_at_one = c.a1 + c.a3;

    let mut branch = Branch::with_capacity(temperatures.len());
    let mut xi = 0.0f64;
    let mut prev_t = f64::INFINITY;
    for &t in temperatures {
        if t >= prev_t {
            return Err(SmaError::InvalidWindow { t_max: prev_t, t_min: t });
        }
        prev_t = t;
        let q = q0 + c.rho_ds0 * t;
        if xi < 1.0 && q > f_fwd(xi) {
            xi = if q >= f_at_one {
                1.0
            } else {
                bisect_increasing(&f_fwd, q, xi, 1.0, t)?.max(xi)
            };
        }
        branch.temperatures.push(t);
        branch.xi.push(xi);
        branch.eps_t.push(h * xi);
    }
    Ok(branch)
}

fn solve_heating(
    sigma: f64,
    temperatures: &[f64],
    xi_start: f64,
    lambda_rev: f64,
    c: &DerivedCoefficients,
    p: &MaterialParameters,
) -> Result<Branch, SmaError> {
    let half_elastic = 0.5 * sigma * sigma * c.delta_s;
    // Phi_rev(T, xi) = u0 - rho_ds0 T + f_rev(xi)
    let u0 = -(1.0 + c.d) * sigma * lambda_rev - half_elastic + c.rho_du0 - c.y0;
    let f_rev = |xi: f64| 0.5 * c.a2 * (1.0 + xi.powf(p.n3) - (1.0 - xi).powf(p.n4)) - c.a3;
    let f_at_zero = -c.a3;

    let mut branch = Branch::with_capacity(temperatures.len());
    let mut xi = xi_start;
    let mut prev_t = f64::NEG_INFINITY;
    for &t in temperatures {
        if t <= prev_t {
            return Err(SmaError::InvalidWindow { t_max: t, t_min: prev_t });
        }
        prev_t = t;
        let u = u0 - c.rho_ds0 * t;
        if xi > 0.0 && u + f_rev(xi) > 0.0 {
            let target = -u;
            xi = if f_at_zero >= target {
                0.0
            } else {
                bisect_increasing(&f_rev, target, 0.0, xi, t)?.min(xi)
            };
        }
        branch.temperatures.push(t);
        branch.xi.push(xi);
        branch.eps_t.push(lambda_rev * xi);
    }
    Ok(branch)
}

/// Bisection for `f(xi) = target` with `f` strictly increasing on
/// `[lo, hi]`. Stops on a 1 Pa residual or a 1e-12 bracket, whichever
/// comes first, within 80 iterations.
fn bisect_increasing(
    f: &impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    t: f64,
) -> Result<f64, SmaError> {
    if f(lo) > target + PHI_TOL || f(hi) < target - PHI_TOL {
        return Err(SmaError::RootBracketFailure { t, lo, hi });
    }
    for _ in 0..MAX_BISECT {
        if hi - lo < XI_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v - target).abs() < PHI_TOL {
            return Ok(mid);
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sum of squared differences between the transformation strains of two
/// loops sampled on the same per-branch grids (concatenating both branches).
pub fn loop_distance(a: &HysteresisLoop, b: &HysteresisLoop) -> Result<f64, SmaError> {
    for (ba, bb) in [(&a.cooling, &b.cooling), (&a.heating, &b.heating)] {
        if ba.len() != bb.len() {
            return Err(SmaError::GridMismatch);
        }
        for (ta, tb) in ba.temperatures.iter().zip(&bb.temperatures) {
            if (ta - tb).abs() > 1e-9 {
                return Err(SmaError::GridMismatch);
            }
        }
    }
    let mut acc = 0.0;
    for (ba, bb) in [(&a.cooling, &b.cooling), (&a.heating, &b.heating)] {
        for (ea, eb) in ba.eps_t.iter().zip(&bb.eps_t) {
            let d = ea - eb;
            acc += d * d;
        }
    }
    Ok(acc)
}

/// Linear interpolation of `(xs, ys)` onto `queries`; `xs` must be strictly
/// monotone (either direction) and queries outside the range clamp to the
/// nearest endpoint value.
pub fn linear_resample(xs: &[f64], ys: &[f64], queries: &[f64]) -> Vec<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(xs.len() >= 2);
    let ascending = xs[0] < xs[xs.len() - 1];
    queries
        .iter()
        .map(|&x| {
            // Index of the first grid point at or past x in sweep order.
            let idx = if ascending {
                xs.partition_point(|&v| v < x)
            } else {
                xs.partition_point(|&v| v > x)
            };
            if idx == 0 {
                ys[0]
            } else if idx == xs.len() {
                ys[xs.len() - 1]
            } else {
                let (x0, x1) = (xs[idx - 1], xs[idx]);
                let (y0, y1) = (ys[idx - 1], ys[idx]);
                let w = (x - x0) / (x1 - x0);
                y0 * (1.0 - w) + y1 * w
            }
        })
        .collect()
}

/// Resamples a loop onto new per-branch temperature grids.
pub fn resample_loop(
    l: &HysteresisLoop,
    cooling_ts: &[f64],
    heating_ts: &[f64],
) -> HysteresisLoop {
    let resample_branch = |b: &Branch, ts: &[f64]| Branch {
        temperatures: ts.to_vec(),
        xi: linear_resample(&b.temperatures, &b.xi, ts),
        eps_t: linear_resample(&b.temperatures, &b.eps_t, ts),
    };
    HysteresisLoop {
        stress: l.stress,
        cooling: resample_branch(&l.cooling, cooling_ts),
        heating: resample_branch(&l.heating, heating_ts),
    }
}

#[cfg(test)]
mod tests {
    use super::super::critical_force;
    use super::*;
    use approx::assert_relative_eq;

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

    fn full_loop(sigma: f64) -> HysteresisLoop {
        simulate_isobaric_loop(sigma, 420.0, 220.0, 400, &nominal()).unwrap()
    }

    #[test]
    fn loop_reaches_the_saturated_plateau_exactly() {
        let p = nominal();
        let l = full_loop(150e6);
        let plateau = l.cooling.eps_t.last().unwrap();
        assert_relative_eq!(*plateau, h_cur(150e6, &p), epsilon = 1e-12);
        assert_eq!(*l.cooling.xi.last().unwrap(), 1.0);
    }

    #[test]
    fn loop_closes_at_both_ends() {
        let l = full_loop(150e6);
        assert!(l.cooling.eps_t[0].abs() <= 1e-8);
        assert!(l.heating.eps_t.last().unwrap().abs() <= 1e-8);
    }

    #[test]
    fn fraction_is_monotone_along_each_branch() {
        let l = full_loop(100e6);
        for w in l.cooling.xi.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in l.heating.xi.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn strain_stays_within_physical_bounds() {
        let p = nominal();
        let l = full_loop(200e6);
        let h = h_cur(200e6, &p);
        for b in [&l.cooling, &l.heating] {
            for (&xi, &e) in b.xi.iter().zip(&b.eps_t) {
                assert!((0.0..=1.0).contains(&xi));
                assert!(e >= -1e-15 && e <= h + 1e-15);
            }
        }
    }

    #[test]
    fn heating_lags_cooling_between_the_transformation_bands() {
        // At a temperature between forward onset and reverse onset the
        // cooling branch is still austenitic while heating has not yet
        // recovered: that gap is the hysteresis.
        let p = nominal();
        let l = full_loop(150e6);
        let t_probe = 0.5 * (p.m_s + p.a_s) + 6.0; // inside the open window
        let cool = linear_resample(&l.cooling.temperatures, &l.cooling.eps_t, &[t_probe])[0];
        let heat = linear_resample(&l.heating.temperatures, &l.heating.eps_t, &[t_probe])[0];
        assert!(heat > cool + 0.01, "no hysteresis: heat {heat} vs cool {cool}");
    }

    #[test]
    fn onsets_on_the_grid_match_the_analytic_transformation_lines() {
        let p = nominal();
        let c = derive_coefficients(&p).unwrap();
        let sigma = 150e6;
        let l = full_loop(sigma);
        let t_onset = c.forward_onset_temperature(sigma, &p);
        // First grid point with xi > 0 must straddle the analytic onset.
        let first = l.cooling.xi.iter().position(|&x| x > 0.0).unwrap();
        let dt = l.cooling.temperatures[0] - l.cooling.temperatures[1];
        assert!(
            (l.cooling.temperatures[first] - t_onset).abs() <= dt + 1e-9,
            "grid onset {} vs analytic {t_onset}",
            l.cooling.temperatures[first]
        );
    }

    #[test]
    fn zero_stress_loop_cycles_fraction_with_zero_strain() {
        let l = simulate_isobaric_loop(0.0, 400.0, 220.0, 200, &nominal()).unwrap();
        assert_eq!(*l.cooling.xi.last().unwrap(), 1.0);
        assert!(l.heating.xi.last().unwrap().abs() <= 1e-6);
        for b in [&l.cooling, &l.heating] {
            assert!(b.eps_t.iter().all(|&e| e == 0.0));
        }
    }

    #[test]
    fn critical_force_stays_nonnegative_along_the_loop() {
        let p = nominal();
        let c = derive_coefficients(&p).unwrap();
        let sigma = 150e6;
        let l = full_loop(sigma);
        let y_fwd = critical_force(sigma, Direction::Forward, None, &c, &p).unwrap();
        let lambda = l.cooling.eps_t.last().unwrap() / l.cooling.xi.last().unwrap();
        let y_rev = critical_force(sigma, Direction::Reverse, Some(lambda), &c, &p).unwrap();
        assert!(y_fwd >= 0.0 && y_rev >= 0.0);
    }

    #[test]
    fn window_too_warm_reports_incomplete_forward_transformation() {
        let p = nominal();
        let err = simulate_isobaric_loop(150e6, 420.0, p.m_f + 25.0, 200, &p).unwrap_err();
        assert!(matches!(
            err,
            SmaError::IncompleteTransformation { direction: Direction::Forward, .. }
        ));
    }

    #[test]
    fn window_too_cold_reports_incomplete_reverse_transformation() {
        let p = nominal();
        // Under 150 MPa the reverse finish line sits well above A_f.
        let err = simulate_isobaric_loop(150e6, p.a_f + 2.0, 220.0, 200, &p).unwrap_err();
        assert!(matches!(
            err,
            SmaError::IncompleteTransformation { direction: Direction::Reverse, .. }
        ));
    }

    #[test]
    fn coarse_grids_and_bad_windows_are_rejected() {
        let p = nominal();
        assert!(matches!(
            simulate_isobaric_loop(150e6, 420.0, 220.0, 10, &p),
            Err(SmaError::GridTooCoarse { n_grid: 10 })
        ));
        assert!(matches!(
            simulate_isobaric_loop(150e6, 220.0, 420.0, 200, &p),
            Err(SmaError::InvalidWindow { .. })
        ));
        assert!(matches!(
            simulate_isobaric_loop(-1.0, 420.0, 220.0, 200, &p),
            Err(SmaError::NegativeStress { .. })
        ));
    }

    #[test]
    fn solving_directly_at_probe_temperatures_matches_the_fine_sweep() {
        let p = nominal();
        let sigma = 150e6;
        let fine = simulate_isobaric_loop(sigma, 420.0, 220.0, 4000, &p).unwrap();
        let cooling_probes: Vec<f64> = (0..40).map(|i| 415.0 - i as f64 * 4.5).collect();
        let heating_probes: Vec<f64> = (0..40).map(|i| 225.0 + i as f64 * 4.5).collect();
        let direct = solve_loop_at(sigma, &cooling_probes, &heating_probes, &p).unwrap();
        let interp =
            linear_resample(&fine.cooling.temperatures, &fine.cooling.eps_t, &cooling_probes);
        for (d, i) in direct.cooling.eps_t.iter().zip(&interp) {
            assert!((d - i).abs() < 5e-5, "direct {d} vs interpolated {i}");
        }
    }

    #[test]
    fn refining_the_grid_leaves_the_loop_essentially_unchanged() {
        let p = nominal();
        let coarse = simulate_isobaric_loop(150e6, 420.0, 220.0, 500, &p).unwrap();
        let fine = simulate_isobaric_loop(150e6, 420.0, 220.0, 1000, &p).unwrap();
        let fine_on_coarse = resample_loop(
            &fine,
            &coarse.cooling.temperatures,
            &coarse.heating.temperatures,
        );
        let d = loop_distance(&coarse, &fine_on_coarse).unwrap();
        let plateau = h_cur(150e6, &p);
        assert!(d < 1e-6 * plateau * plateau, "refinement drift {d}");
    }

    #[test]
    fn distance_matches_hand_computed_concatenation() {
        let grid = vec![300.0, 290.0];
        let mk = |cool: [f64; 2], heat: [f64; 2]| HysteresisLoop {
            stress: 1.0,
            cooling: Branch {
                temperatures: grid.clone(),
                xi: vec![0.0; 2],
                eps_t: cool.to_vec(),
            },
            heating: Branch {
                temperatures: vec![290.0, 300.0],
                xi: vec![0.0; 2],
                eps_t: heat.to_vec(),
            },
        };
        let a = mk([0.0, 0.0], [1.0, 1.0]);
        let b = mk([1.0, 1.0], [1.0, 1.0]);
        assert_eq!(loop_distance(&a, &b).unwrap(), 2.0);
        assert_eq!(loop_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn distance_requires_matching_grids() {
        let a = full_loop(150e6);
        let mut b = a.clone();
        b.cooling.temperatures[3] += 0.5;
        assert!(matches!(loop_distance(&a, &b), Err(SmaError::GridMismatch)));
        let shorter = resample_loop(&a, &a.cooling.temperatures[..100], &a.heating.temperatures);
        assert!(matches!(loop_distance(&a, &shorter), Err(SmaError::GridMismatch)));
    }

    #[test]
    fn resampling_clamps_beyond_the_grid_ends() {
        let ys = linear_resample(&[10.0, 20.0, 30.0], &[1.0, 2.0, 3.0], &[5.0, 15.0, 35.0]);
        assert_eq!(ys, vec![1.0, 1.5, 3.0]);
        // Descending grids interpolate the same way.
        let ys = linear_resample(&[30.0, 20.0, 10.0], &[3.0, 2.0, 1.0], &[25.0, 5.0]);
        assert_eq!(ys, vec![2.5, 1.0]);
    }
}
