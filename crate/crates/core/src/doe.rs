//! Two-level complete factorial screening with main-effects ANOVA.
//!
//! Each screened parameter is assigned a low and a high level; the design
//! enumerates every combination, a hysteresis loop is solved per row, and
//! the squared-strain distance to the loop at the midpoint parameter set is
//! the scalar response. A main-effects variance decomposition with F tests
//! then ranks the parameters by how much of the response spread each one
//! explains on its own (interactions are pooled into the error term).

use crate::numerics::f_survival;
use crate::sma::{
    loop_distance, MaterialParameters, ParamId, SimulationWindow, SmaError,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One screened parameter with its two levels in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub id: ParamId,
    pub low: f64,
    pub high: f64,
}

impl FactorSpec {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.low + self.high)
    }
}

/// Complete two-level design: every row is one level combination, encoded
/// as a bit pattern with the first factor in the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    factors: Vec<FactorSpec>,
    rows: Vec<u32>,
}

#[derive(Debug, Error)]
pub enum DoeError {
    #[error("a design needs at least one factor")]
    EmptyDesign,
    #[error("{n} factors would enumerate 2^{n} rows; the limit is 20")]
    TooManyFactors { n: usize },
    #[error("factor {name}: low level {low} must be strictly below high level {high}")]
    InvalidLevels { name: String, low: f64, high: f64 },
    #[error("row set is not a complete two-level design ({detail})")]
    MalformedRows { detail: String },
    #[error("{} design rows are infeasible (first offenders: {:?})", .rows.len(), preview(.rows))]
    InfeasibleRows { rows: Vec<usize> },
    #[error("reference parameters are infeasible: {detail}")]
    InfeasibleReference { detail: String },
    #[error("{} rows failed to solve (row {}: {})", .failures.len(), .failures[0].0, .failures[0].1)]
    RowFailures { failures: Vec<(usize, String)> },
    #[error("expected {expected} responses, found {found}")]
    ResponseCount { expected: usize, found: usize },
    #[error("all responses are identical; variance decomposition is undefined")]
    DegenerateResponse,
    #[error(transparent)]
    Solver(#[from] SmaError),
}

fn preview(rows: &[usize]) -> &[usize] {
    &rows[..rows.len().min(8)]
}

/// Enumerates all `2^N` level combinations in lexicographic order
/// (first factor varies slowest, low level first).
pub fn generate_full_factorial(factors: Vec<FactorSpec>) -> Result<DesignMatrix, DoeError> {
    if factors.is_empty() {
        return Err(DoeError::EmptyDesign);
    }
    if factors.len() > 20 {
        return Err(DoeError::TooManyFactors { n: factors.len() });
    }
    for f in &factors {
        if !(f.low < f.high) || !f.low.is_finite() || !f.high.is_finite() {
            return Err(DoeError::InvalidLevels {
                name: f.id.name().to_string(),
                low: f.low,
                high: f.high,
            });
        }
    }
    let rows = (0..1u32 << factors.len()).collect();
    Ok(DesignMatrix { factors, rows })
}

impl DesignMatrix {
    /// Rebuilds a design from explicit rows; the rows must be a permutation
    /// of the complete enumeration.
    pub fn with_rows(factors: Vec<FactorSpec>, rows: Vec<u32>) -> Result<Self, DoeError> {
        let complete = generate_full_factorial(factors)?;
        let n = complete.rows.len();
        if rows.len() != n {
            return Err(DoeError::MalformedRows {
                detail: format!("expected {n} rows, found {}", rows.len()),
            });
        }
        let mut seen = vec![false; n];
        for &r in &rows {
            if r as usize >= n || seen[r as usize] {
                return Err(DoeError::MalformedRows {
                    detail: format!("row pattern {r} out of range or repeated"),
                });
            }
            seen[r as usize] = true;
        }
        Ok(Self { factors: complete.factors, rows })
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Level index (0 = low, 1 = high) of factor `j` in row `i`.
    pub fn level(&self, i: usize, j: usize) -> usize {
        let shift = self.factors.len() - 1 - j;
        ((self.rows[i] >> shift) & 1) as usize
    }

    /// Physical value of factor `j` in row `i`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        if self.level(i, j) == 0 {
            self.factors[j].low
        } else {
            self.factors[j].high
        }
    }

    /// Template parameters with the row's factor levels substituted in.
    pub fn parameters_for_row(
        &self,
        i: usize,
        template: &MaterialParameters,
    ) -> MaterialParameters {
        let mut p = template.clone();
        for (j, f) in self.factors.iter().enumerate() {
            f.id.set(&mut p, self.value(i, j));
        }
        p
    }

    /// Template parameters with every factor at its level midpoint: the
    /// reference point the row responses are measured against.
    pub fn midpoint_parameters(&self, template: &MaterialParameters) -> MaterialParameters {
        let mut p = template.clone();
        for f in &self.factors {
            f.id.set(&mut p, f.midpoint());
        }
        p
    }
}

/// Solves one loop per design row and returns the squared-strain distance
/// to the reference loop as the row response.
///
/// Every row is feasibility-checked up front so a bad level choice rejects
/// the whole design with the offending row indices instead of biasing the
/// variance decomposition; rows that fail to solve are likewise collected
/// and reported together.
pub fn evaluate_design(
    design: &DesignMatrix,
    stress: f64,
    reference: &MaterialParameters,
    window: SimulationWindow,
) -> Result<Vec<f64>, DoeError> {
    if let Err(e) = reference.validate() {
        return Err(DoeError::InfeasibleReference { detail: e.to_string() });
    }
    let infeasible: Vec<usize> = (0..design.n_rows())
        .filter(|&i| design.parameters_for_row(i, reference).validate().is_err())
        .collect();
    if !infeasible.is_empty() {
        return Err(DoeError::InfeasibleRows { rows: infeasible });
    }

    let reference_loop = window.simulate(stress, reference)?;
    let outcomes: Vec<Result<f64, SmaError>> = (0..design.n_rows())
        .into_par_iter()
        .map(|i| {
            let p = design.parameters_for_row(i, reference);
            let l = window.simulate(stress, &p)?;
            loop_distance(&l, &reference_loop)
        })
        .collect();

    let failures: Vec<(usize, String)> = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e.to_string())))
        .collect();
    if !failures.is_empty() {
        return Err(DoeError::RowFailures { failures });
    }
    Ok(outcomes.into_iter().map(|r| r.expect("failures handled")).collect())
}

/// One source line of the variance decomposition. The error row carries no
/// F ratio and the total row only its sum of squares, mirroring the usual
/// table layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: String,
    pub sum_sq: f64,
    pub dof: u64,
    pub mean_sq: Option<f64>,
    pub f_ratio: Option<f64>,
    pub p: Option<f64>,
    pub log10_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub factors: Vec<AnovaRow>,
    pub error: AnovaRow,
    pub total: AnovaRow,
}

impl AnovaTable {
    pub fn rows(&self) -> impl Iterator<Item = &AnovaRow> {
        self.factors.iter().chain([&self.error, &self.total])
    }
}

/// Main-effects decomposition of the design responses.
///
/// With one observation per cell each factor contributes a single degree of
/// freedom; everything not explained by the marginal means, interactions
/// included, lands in the error term by subtraction.
pub fn anova_main_effects(
    design: &DesignMatrix,
    responses: &[f64],
) -> Result<AnovaTable, DoeError> {
    let n = design.n_rows();
    if responses.len() != n {
        return Err(DoeError::ResponseCount { expected: n, found: responses.len() });
    }
    let grand = responses.iter().sum::<f64>() / n as f64;
    let ss_total: f64 = responses.iter().map(|r| (r - grand).powi(2)).sum();
    if ss_total == 0.0 {
        return Err(DoeError::DegenerateResponse);
    }

    let nf = design.factors.len();
    let half = (n / 2) as f64;
    let mut ss_factors = Vec::with_capacity(nf);
    for j in 0..nf {
        let sum_high: f64 =
            (0..n).filter(|&i| design.level(i, j) == 1).map(|i| responses[i]).sum();
        let mean_high = sum_high / half;
        let mean_low = (grand * n as f64 - sum_high) / half;
        ss_factors.push(half * ((mean_low - grand).powi(2) + (mean_high - grand).powi(2)));
    }

    let ss_error = (ss_total - ss_factors.iter().sum::<f64>()).max(0.0);
    let dof_error = (n - 1 - nf) as u64;
    let ms_error = if dof_error > 0 { ss_error / dof_error as f64 } else { 0.0 };

    let factors = design
        .factors
        .iter()
        .zip(&ss_factors)
        .map(|(f, &ss)| {
            let ms = ss; // single degree of freedom
            let f_ratio = if ms_error > 0.0 {
                ms / ms_error
            } else if ss == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            let tail = f_survival(f_ratio, 1.0, dof_error.max(1) as f64);
            AnovaRow {
                source: f.id.name().to_string(),
                sum_sq: ss,
                dof: 1,
                mean_sq: Some(ms),
                f_ratio: Some(f_ratio),
                p: Some(tail.p),
                log10_p: Some(tail.log10_p),
            }
        })
        .collect();

    Ok(AnovaTable {
        factors,
        error: AnovaRow {
            source: "Error".to_string(),
            sum_sq: ss_error,
            dof: dof_error,
            mean_sq: (dof_error > 0).then_some(ms_error),
            f_ratio: None,
            p: None,
            log10_p: None,
        },
        total: AnovaRow {
            source: "Total".to_string(),
            sum_sq: ss_total,
            dof: (n - 1) as u64,
            mean_sq: None,
            f_ratio: None,
            p: None,
            log10_p: None,
        },
    })
}

/// Factors ordered by ascending p-value, keeping those below `alpha`.
/// A level of 1 or more keeps everything (ties included).
pub fn rank_and_select(table: &AnovaTable, alpha: f64) -> Vec<String> {
    let mut ranked: Vec<&AnovaRow> = table.factors.iter().collect();
    ranked.sort_by(|a, b| {
        a.p.unwrap_or(f64::NAN).partial_cmp(&b.p.unwrap_or(f64::NAN)).expect("finite p")
    });
    ranked
        .into_iter()
        .filter(|r| alpha >= 1.0 || r.p.unwrap_or(1.0) < alpha)
        .map(|r| r.source.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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

    fn window() -> SimulationWindow {
        SimulationWindow { t_max: 430.0, t_min: 210.0, n_grid: 120 }
    }

    fn two_factors() -> Vec<FactorSpec> {
        vec![
            FactorSpec { id: ParamId::Ms, low: 296.0, high: 304.0 },
            FactorSpec { id: ParamId::HSat, low: 0.030, high: 0.038 },
        ]
    }

    #[test]
    fn two_factor_enumeration_is_lexicographic() {
        let d = generate_full_factorial(two_factors()).unwrap();
        assert_eq!(d.n_rows(), 4);
        let values: Vec<(f64, f64)> = (0..4).map(|i| (d.value(i, 0), d.value(i, 1))).collect();
        assert_eq!(
            values,
            vec![(296.0, 0.030), (296.0, 0.038), (304.0, 0.030), (304.0, 0.038)]
        );
    }

    #[test]
    fn fourteen_factors_enumerate_the_full_design() {
        let p = nominal();
        let factors: Vec<FactorSpec> = ParamId::ALL
            .iter()
            .map(|&id| {
                let v = id.get(&p);
                FactorSpec { id, low: 0.95 * v, high: 1.05 * v }
            })
            .collect();
        let d = generate_full_factorial(factors).unwrap();
        assert_eq!(d.n_rows(), 16384);
        assert_eq!(d.level(0, 0), 0);
        assert_eq!(d.level(16383, 13), 1);
    }

    #[test]
    fn size_and_level_guards_fire() {
        let f = FactorSpec { id: ParamId::Ms, low: 1.0, high: 2.0 };
        assert!(matches!(
            generate_full_factorial(vec![f; 21]),
            Err(DoeError::TooManyFactors { n: 21 })
        ));
        assert!(matches!(generate_full_factorial(vec![]), Err(DoeError::EmptyDesign)));
        let bad = FactorSpec { id: ParamId::Ms, low: 2.0, high: 2.0 };
        assert!(matches!(
            generate_full_factorial(vec![bad]),
            Err(DoeError::InvalidLevels { .. })
        ));
    }

    #[test]
    fn single_active_factor_takes_all_the_variance() {
        let d = generate_full_factorial(two_factors()).unwrap();
        // First factor high on rows 2,3: responses flip with it alone.
        let t = anova_main_effects(&d, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.factors[0].sum_sq, 1.0);
        assert_eq!(t.factors[1].sum_sq, 0.0);
        assert_eq!(t.error.sum_sq, 0.0);
        assert_eq!(t.total.sum_sq, 1.0);
        assert_eq!(t.factors[0].f_ratio, Some(f64::INFINITY));
        assert_eq!(t.factors[0].p, Some(0.0));
        assert_eq!(t.factors[1].f_ratio, Some(0.0));
        assert_eq!(t.factors[1].p, Some(1.0));
    }

    // Independent tabulation for a 2-factor, 2-level, single-replicate
    // layout: marginal-mean sums of squares per factor, interaction folded
    // into the residual by subtraction.
    fn brute_force_two_factor(r: &[f64; 4]) -> (f64, f64, f64, f64) {
        let grand = r.iter().sum::<f64>() / 4.0;
        let a = [(r[0] + r[1]) / 2.0, (r[2] + r[3]) / 2.0];
        let b = [(r[0] + r[2]) / 2.0, (r[1] + r[3]) / 2.0];
        let ss_a = 2.0 * ((a[0] - grand).powi(2) + (a[1] - grand).powi(2));
        let ss_b = 2.0 * ((b[0] - grand).powi(2) + (b[1] - grand).powi(2));
        let ss_t: f64 = r.iter().map(|v| (v - grand).powi(2)).sum();
        (ss_a, ss_b, ss_t - ss_a - ss_b, ss_t)
    }

    #[test]
    fn matches_the_brute_force_two_factor_tabulation() {
        let d = generate_full_factorial(two_factors()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let r: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..10.0));
            let t = anova_main_effects(&d, &r).unwrap();
            let (ss_a, ss_b, ss_e, ss_t) = brute_force_two_factor(&r);
            assert!((t.factors[0].sum_sq - ss_a).abs() <= 1e-10 * ss_t.max(1.0));
            assert!((t.factors[1].sum_sq - ss_b).abs() <= 1e-10 * ss_t.max(1.0));
            assert!((t.error.sum_sq - ss_e).abs() <= 1e-10 * ss_t.max(1.0));
            assert!((t.total.sum_sq - ss_t).abs() <= 1e-10 * ss_t.max(1.0));
        }
    }

    #[test]
    fn sums_of_squares_decompose_the_total() {
        let p = nominal();
        let factors: Vec<FactorSpec> = [ParamId::Ms, ParamId::Mf, ParamId::HSat, ParamId::K]
            .iter()
            .map(|&id| {
                let v = id.get(&p);
                FactorSpec { id, low: 0.9 * v, high: 1.1 * v }
            })
            .collect();
        let d = generate_full_factorial(factors).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let responses: Vec<f64> = (0..d.n_rows()).map(|_| rng.random_range(0.0..1.0)).collect();
        let t = anova_main_effects(&d, &responses).unwrap();
        let sum: f64 = t.factors.iter().map(|r| r.sum_sq).sum::<f64>() + t.error.sum_sq;
        assert!((sum - t.total.sum_sq).abs() <= 1e-8 * t.total.sum_sq);
        assert_eq!(t.error.dof, 15 - 4);
        assert_eq!(t.total.dof, 15);
    }

    fn assert_tables_close(t0: &AnovaTable, t1: &AnovaTable) {
        let scale = t0.total.sum_sq.max(1.0);
        for (a, b) in t0.rows().zip(t1.rows()) {
            assert_eq!(a.source, b.source);
            assert_eq!(a.dof, b.dof);
            assert!((a.sum_sq - b.sum_sq).abs() <= 1e-9 * scale);
            if let (Some(fa), Some(fb)) = (a.f_ratio, b.f_ratio) {
                assert!((fa - fb).abs() <= 1e-6 * fa.abs().max(1.0));
                assert!((a.p.unwrap() - b.p.unwrap()).abs() <= 1e-9);
            }
        }
    }

    // This response set has a nonzero interaction term, so the error line
    // stays strictly positive and the F ratios are finite.
    const CROSSED: [f64; 4] = [0.3, 1.9, 0.8, 2.9];

    #[test]
    fn shifting_all_responses_changes_nothing() {
        let d = generate_full_factorial(two_factors()).unwrap();
        let shifted: Vec<f64> = CROSSED.iter().map(|v| v + 5.0).collect();
        let t0 = anova_main_effects(&d, &CROSSED).unwrap();
        let t1 = anova_main_effects(&d, &shifted).unwrap();
        assert!(t0.error.sum_sq > 0.0);
        assert_tables_close(&t0, &t1);
    }

    #[test]
    fn permuting_rows_with_responses_changes_nothing() {
        let base = generate_full_factorial(two_factors()).unwrap();
        let perm = [2u32, 0, 3, 1];
        let shuffled =
            DesignMatrix::with_rows(two_factors(), perm.to_vec()).unwrap();
        let r_perm: Vec<f64> = perm.iter().map(|&i| CROSSED[i as usize]).collect();
        let t0 = anova_main_effects(&base, &CROSSED).unwrap();
        let t1 = anova_main_effects(&shuffled, &r_perm).unwrap();
        assert_tables_close(&t0, &t1);
    }

    #[test]
    fn degenerate_and_mismatched_responses_are_rejected() {
        let d = generate_full_factorial(two_factors()).unwrap();
        assert!(matches!(
            anova_main_effects(&d, &[2.0; 4]),
            Err(DoeError::DegenerateResponse)
        ));
        assert!(matches!(
            anova_main_effects(&d, &[1.0, 2.0]),
            Err(DoeError::ResponseCount { expected: 4, found: 2 })
        ));
    }

    #[test]
    fn responses_are_positive_when_levels_move_the_loop() {
        let d = generate_full_factorial(two_factors()).unwrap();
        let reference = d.midpoint_parameters(&nominal());
        let r = evaluate_design(&d, 150e6, &reference, window()).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn infeasible_level_combinations_reject_the_whole_design() {
        let factors = vec![
            // High level collides with A_s = 307 K.
            FactorSpec { id: ParamId::Ms, low: 296.0, high: 310.0 },
            FactorSpec { id: ParamId::HSat, low: 0.030, high: 0.038 },
        ];
        let d = generate_full_factorial(factors).unwrap();
        let reference = nominal();
        match evaluate_design(&d, 150e6, &reference, window()) {
            Err(DoeError::InfeasibleRows { rows }) => assert_eq!(rows, vec![2, 3]),
            other => panic!("expected infeasible rows, got {other:?}"),
        }
    }

    #[test]
    fn nearly_coincident_exponent_levels_leave_responses_nearly_equal() {
        let factors = vec![
            FactorSpec { id: ParamId::N1, low: 0.499999, high: 0.500001 },
            FactorSpec { id: ParamId::HSat, low: 0.030, high: 0.038 },
        ];
        let d = generate_full_factorial(factors).unwrap();
        let reference = d.midpoint_parameters(&nominal());
        let r = evaluate_design(&d, 150e6, &reference, window()).unwrap();
        // Rows 0/2 and 1/3 differ only in the transition-shape exponent.
        let scale = r.iter().cloned().fold(0.0f64, f64::max);
        assert!((r[0] - r[2]).abs() <= 1e-6 * scale);
        assert!((r[1] - r[3]).abs() <= 1e-6 * scale);
    }

    fn fixture_row(name: &str, f: f64) -> AnovaRow {
        let tail = f_survival(f, 1.0, 16369.0);
        AnovaRow {
            source: name.to_string(),
            sum_sq: f,
            dof: 1,
            mean_sq: Some(f),
            f_ratio: Some(f),
            p: Some(tail.p),
            log10_p: Some(tail.log10_p),
        }
    }

    /// Published screening study of the same fourteen parameters: F ratios
    /// stored as a fixture; the dashed significance cut keeps eight.
    fn screening_fixture() -> AnovaTable {
        let rows = [
            ("E_A", 0.21),
            ("E_M", 12.50),
            ("M_s", 108.14),
            ("M_f", 53.45),
            ("A_s", 3.93),
            ("A_f", 404.05),
            ("C_A", 42.35),
            ("C_M", 0.09),
            ("H_sat", 800.62),
            ("k", 29.90),
            ("n1", 0.0),
            ("n2", 0.0),
            ("n3", 0.0),
            ("n4", 0.0),
        ];
        AnovaTable {
            factors: rows.iter().map(|&(n, f)| fixture_row(n, f)).collect(),
            error: AnovaRow {
                source: "Error".into(),
                sum_sq: 1.0,
                dof: 16369,
                mean_sq: Some(1.0 / 16369.0),
                f_ratio: None,
                p: None,
                log10_p: None,
            },
            total: AnovaRow {
                source: "Total".into(),
                sum_sq: 2.0,
                dof: 16383,
                mean_sq: None,
                f_ratio: None,
                p: None,
                log10_p: None,
            },
        }
    }

    #[test]
    fn significance_cut_keeps_the_eight_strongest_factors_in_order() {
        let t = screening_fixture();
        let selected = rank_and_select(&t, 0.05);
        assert_eq!(
            selected,
            vec!["H_sat", "A_f", "M_s", "M_f", "C_A", "k", "E_M", "A_s"]
        );
    }

    #[test]
    fn unit_alpha_keeps_everything_and_zero_alpha_nothing() {
        let t = screening_fixture();
        assert_eq!(rank_and_select(&t, 1.0).len(), 14);
        assert!(rank_and_select(&t, 0.0).is_empty());
    }
}
