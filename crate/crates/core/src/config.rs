//! Pipeline configuration: one TOML file in engineering units (GPa, MPa/K,
//! 1/MPa, K), resolved into the SI quantities the library computes with.
//!
//! [`EXAMPLE_CONFIG`] is a complete annotated file; parsing is strict, so a
//! misspelled key fails with the offending line instead of being ignored.

use crate::calibrate::{McmcSettings, ParamPrior, ResidualMode};
use crate::doe::FactorSpec;
use crate::infogain::{DesignCandidate, KlDirection};
use crate::propagate::BandMode;
use crate::sma::{MaterialParameters, ParamId, SimulationWindow};
use serde::Deserialize;
use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable that overrides `[output] dir`.
pub const OUTPUT_DIR_ENV: &str = "SMAQ_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("{field}: {detail}")]
    Invalid { field: String, detail: String },
}

fn invalid(field: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), detail: detail.into() }
}

/// Multiplier taking a parameter from its config unit to SI.
fn si_scale(id: ParamId) -> f64 {
    match id {
        ParamId::EA | ParamId::EM => 1e9,          // GPa -> Pa
        ParamId::CA | ParamId::CM => 1e6,          // MPa/K -> Pa/K
        ParamId::K => 1e-6,                        // 1/MPa -> 1/Pa
        _ => 1.0,                                  // K or dimensionless
    }
}

/// Unit label for diagnostics and documentation.
pub fn config_unit(id: ParamId) -> &'static str {
    match id {
        ParamId::EA | ParamId::EM => "GPa",
        ParamId::CA | ParamId::CM => "MPa/K",
        ParamId::K => "1/MPa",
        ParamId::Ms | ParamId::Mf | ParamId::As | ParamId::Af => "K",
        _ => "-",
    }
}

fn parse_param(field: &str, name: &str) -> Result<ParamId, ConfigError> {
    ParamId::parse(name).ok_or_else(|| {
        invalid(
            field,
            format!(
                "unknown parameter `{name}` (expected one of {})",
                ParamId::ALL.map(|id| id.name()).join(", ")
            ),
        )
    })
}

// ---------------------------------------------------------------------------
// Raw file shape

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    material: MaterialSection,
    #[serde(default)]
    simulate: SimulateSection,
    #[serde(default)]
    doe: DoeSection,
    #[serde(default)]
    mcmc: McmcSection,
    #[serde(default)]
    propagate: PropagateSection,
    #[serde(default)]
    infogain: InfogainSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialSection {
    #[serde(rename = "E_A_GPa")]
    e_a: f64,
    #[serde(rename = "E_M_GPa")]
    e_m: f64,
    #[serde(rename = "M_s_K")]
    m_s: f64,
    #[serde(rename = "M_f_K")]
    m_f: f64,
    #[serde(rename = "A_s_K")]
    a_s: f64,
    #[serde(rename = "A_f_K")]
    a_f: f64,
    #[serde(rename = "C_A_MPa_per_K")]
    c_a: f64,
    #[serde(rename = "C_M_MPa_per_K")]
    c_m: f64,
    #[serde(rename = "H_sat")]
    h_sat: f64,
    #[serde(rename = "k_per_MPa")]
    k: f64,
    n1: f64,
    n2: f64,
    n3: f64,
    n4: f64,
    #[serde(rename = "T0_K")]
    t0: f64,
    #[serde(rename = "anchor_stress_MPa")]
    anchor_stress: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateSection {
    #[serde(rename = "t_max_K", default = "default_t_max")]
    t_max: f64,
    #[serde(rename = "t_min_K", default = "default_t_min")]
    t_min: f64,
    #[serde(default = "default_n_grid")]
    n_grid: usize,
    #[serde(rename = "stresses_MPa", default = "default_stresses")]
    stresses: Vec<f64>,
}

fn default_t_max() -> f64 {
    430.0
}
fn default_t_min() -> f64 {
    210.0
}
fn default_n_grid() -> usize {
    500
}
fn default_stresses() -> Vec<f64> {
    vec![100.0, 150.0, 200.0]
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            t_max: default_t_max(),
            t_min: default_t_min(),
            n_grid: default_n_grid(),
            stresses: default_stresses(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DoeSection {
    /// Parameters screened as factors; defaults to all fourteen.
    #[serde(default = "default_factors")]
    factors: Vec<String>,
    /// Half-spread of the automatic levels: low/high = (1 -/+ f) * value.
    #[serde(default = "default_level_fraction")]
    level_fraction: f64,
    /// Explicit level overrides in config units, `name = [low, high]`.
    #[serde(default)]
    levels: BTreeMap<String, [f64; 2]>,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(rename = "response_stress_MPa", default = "default_response_stress")]
    response_stress: f64,
}

fn default_factors() -> Vec<String> {
    ParamId::ALL.iter().map(|id| id.name().to_string()).collect()
}
fn default_level_fraction() -> f64 {
    0.10
}
fn default_alpha() -> f64 {
    0.05
}
fn default_response_stress() -> f64 {
    150.0
}

impl Default for DoeSection {
    fn default() -> Self {
        Self {
            factors: default_factors(),
            level_fraction: default_level_fraction(),
            levels: BTreeMap::new(),
            alpha: default_alpha(),
            response_stress: default_response_stress(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct McmcSection {
    #[serde(default = "default_n_steps")]
    n_steps: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_adapt_interval")]
    adapt_interval: usize,
    #[serde(default = "default_hyper")]
    a0: f64,
    #[serde(default = "default_hyper")]
    b0: f64,
    #[serde(default = "default_v0_scale")]
    v0_scale: f64,
    #[serde(default = "default_sigma2_init")]
    sigma2_init: f64,
    /// Which parameters the chain moves; everything else stays at its
    /// `[material]` value.
    #[serde(default = "default_calibrate")]
    calibrate: Vec<String>,
    /// Prior box per calibrated parameter in config units, `name = [lo, hi]`.
    #[serde(default)]
    bounds: BTreeMap<String, [f64; 2]>,
    #[serde(default = "default_bins")]
    bins: usize,
    /// Parameter pairs to tabulate as joint histograms.
    #[serde(default)]
    joint_pairs: Vec<[String; 2]>,
    /// Write the chain to disk every this many steps; off when absent.
    #[serde(default)]
    checkpoint_every: Option<usize>,
    /// Likelihood granularity: "scalar" treats each dataset's squared-strain
    /// distance as one observation, "per_point" treats every measured point
    /// as one (ordinary least squares).
    #[serde(default)]
    residual_mode: ResidualMode,
}

fn default_n_steps() -> usize {
    50_000
}
fn default_adapt_interval() -> usize {
    100
}
fn default_hyper() -> f64 {
    1e-3
}
fn default_v0_scale() -> f64 {
    0.01
}
fn default_sigma2_init() -> f64 {
    1.0
}
fn default_bins() -> usize {
    40
}
fn default_calibrate() -> Vec<String> {
    ["M_s", "M_f", "A_s", "A_f", "C_A", "E_M", "H_sat", "k"]
        .map(str::to_string)
        .to_vec()
}

impl Default for McmcSection {
    fn default() -> Self {
        Self {
            n_steps: default_n_steps(),
            seed: 0,
            adapt_interval: default_adapt_interval(),
            a0: default_hyper(),
            b0: default_hyper(),
            v0_scale: default_v0_scale(),
            sigma2_init: default_sigma2_init(),
            calibrate: default_calibrate(),
            bounds: BTreeMap::new(),
            bins: default_bins(),
            joint_pairs: Vec::new(),
            checkpoint_every: None,
            residual_mode: ResidualMode::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropagateSection {
    #[serde(default = "default_coverage")]
    coverage: f64,
    #[serde(default)]
    band_mode: BandMode,
}

fn default_coverage() -> f64 {
    0.95
}

impl Default for PropagateSection {
    fn default() -> Self {
        Self { coverage: default_coverage(), band_mode: BandMode::default() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InfogainSection {
    #[serde(default)]
    direction: KlDirection,
    /// Additive strain noise on synthetic datasets; omitted = noiseless.
    #[serde(default)]
    noise_sd: Option<f64>,
    #[serde(default)]
    candidates: Vec<CandidateSection>,
}

impl Default for InfogainSection {
    fn default() -> Self {
        Self { direction: KlDirection::default(), noise_sd: None, candidates: Vec::new() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateSection {
    label: String,
    #[serde(rename = "stresses_MPa")]
    stresses: Vec<f64>,
    #[serde(default = "default_samples_per_condition")]
    samples_per_condition: usize,
}

fn default_samples_per_condition() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    #[serde(default = "default_output_dir")]
    dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_output_dir() }
    }
}

// ---------------------------------------------------------------------------
// Resolved (SI) form

#[derive(Debug, Clone)]
pub struct DoeSettings {
    pub factors: Vec<FactorSpec>,
    pub alpha: f64,
    /// Stress at which the screening response is evaluated, Pa.
    pub response_stress: f64,
}

#[derive(Debug, Clone)]
pub struct PropagateSettings {
    pub coverage: f64,
    pub mode: BandMode,
}

#[derive(Debug, Clone)]
pub struct InfogainSettings {
    pub direction: KlDirection,
    pub noise_sd: Option<f64>,
    pub candidates: Vec<DesignCandidate>,
}

/// Fully validated configuration in SI units.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub material: MaterialParameters,
    pub window: SimulationWindow,
    /// Simulation and band stress levels, Pa.
    pub stresses: Vec<f64>,
    pub doe: DoeSettings,
    pub mcmc: McmcSettings,
    /// Prior boxes for the calibrated subset, initial values from
    /// `[material]`.
    pub priors: Vec<ParamPrior>,
    /// Likelihood residual granularity for calibration runs.
    pub residual_mode: ResidualMode,
    pub bins: usize,
    pub joint_pairs: Vec<(ParamId, ParamId)>,
    pub checkpoint_every: Option<usize>,
    pub propagate: PropagateSettings,
    pub infogain: InfogainSettings,
    pub output_dir: PathBuf,
}

/// Reads and resolves a configuration file. The `SMAQ_OUTPUT_DIR`
/// environment variable, when set, overrides `[output] dir`.
pub fn load_config(path: &Path) -> Result<ResolvedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut resolved = resolve_str(&text, path)?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        resolved.output_dir = PathBuf::from(dir);
    }
    Ok(resolved)
}

/// Parses and validates configuration text; `origin` names it in errors.
pub fn resolve_str(text: &str, origin: &Path) -> Result<ResolvedConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| ConfigError::Parse { path: origin.to_path_buf(), detail: e.to_string() })?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ResolvedConfig, ConfigError> {
    let material = material_si(&raw.material);
    material
        .validate()
        .map_err(|e| invalid("[material]", e.to_string()))?;

    let sim = &raw.simulate;
    if !(sim.t_max > sim.t_min) {
        return Err(invalid(
            "[simulate] t_max_K",
            format!("sweep start {} must exceed reversal {}", sim.t_max, sim.t_min),
        ));
    }
    for &s in &sim.stresses {
        if !(s > 0.0) || !s.is_finite() {
            return Err(invalid(
                "[simulate] stresses_MPa",
                format!("stress {s} must be positive and finite"),
            ));
        }
    }
    if sim.stresses.is_empty() {
        return Err(invalid("[simulate] stresses_MPa", "at least one stress level is required"));
    }
    let window = SimulationWindow { t_max: sim.t_max, t_min: sim.t_min, n_grid: sim.n_grid };

    let doe = resolve_doe(&raw.doe, &material)?;
    let (mcmc, priors, bins, joint_pairs, checkpoint_every) =
        resolve_mcmc(&raw.mcmc, &material)?;

    let up = &raw.propagate;
    if !(up.coverage > 0.0 && up.coverage <= 1.0) {
        return Err(invalid(
            "[propagate] coverage",
            format!("{} is outside (0, 1]", up.coverage),
        ));
    }

    let ig = &raw.infogain;
    if let Some(sd) = ig.noise_sd {
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(invalid(
                "[infogain] noise_sd",
                format!("{sd} must be positive and finite"),
            ));
        }
    }
    let mut labels = HashSet::new();
    let candidates = ig
        .candidates
        .iter()
        .map(|c| {
            if !labels.insert(c.label.clone()) {
                return Err(invalid(
                    "[[infogain.candidates]]",
                    format!("duplicate label `{}`", c.label),
                ));
            }
            let cand = DesignCandidate {
                label: c.label.clone(),
                conditions: c.stresses.iter().map(|s| s * 1e6).collect(),
                samples_per_condition: c.samples_per_condition,
            };
            cand.validate().map_err(|e| {
                invalid("[[infogain.candidates]]", e.to_string())
            })?;
            Ok(cand)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ResolvedConfig {
        material,
        window,
        stresses: sim.stresses.iter().map(|s| s * 1e6).collect(),
        doe,
        mcmc,
        priors,
        residual_mode: raw.mcmc.residual_mode,
        bins,
        joint_pairs,
        checkpoint_every,
        propagate: PropagateSettings { coverage: up.coverage, mode: up.band_mode },
        infogain: InfogainSettings {
            direction: ig.direction,
            noise_sd: ig.noise_sd,
            candidates,
        },
        output_dir: raw.output.dir,
    })
}

fn material_si(m: &MaterialSection) -> MaterialParameters {
    MaterialParameters {
        e_a: m.e_a * 1e9,
        e_m: m.e_m * 1e9,
        m_s: m.m_s,
        m_f: m.m_f,
        a_s: m.a_s,
        a_f: m.a_f,
        c_a: m.c_a * 1e6,
        c_m: m.c_m * 1e6,
        h_sat: m.h_sat,
        k: m.k * 1e-6,
        n1: m.n1,
        n2: m.n2,
        n3: m.n3,
        n4: m.n4,
        t0: m.t0,
        anchor_stress: m.anchor_stress * 1e6,
    }
}

fn resolve_doe(
    doe: &DoeSection,
    material: &MaterialParameters,
) -> Result<DoeSettings, ConfigError> {
    if !(doe.level_fraction > 0.0 && doe.level_fraction < 1.0) {
        return Err(invalid(
            "[doe] level_fraction",
            format!("{} is outside (0, 1)", doe.level_fraction),
        ));
    }
    if !(doe.alpha > 0.0 && doe.alpha <= 1.0) {
        return Err(invalid("[doe] alpha", format!("{} is outside (0, 1]", doe.alpha)));
    }
    if !(doe.response_stress > 0.0) || !doe.response_stress.is_finite() {
        return Err(invalid(
            "[doe] response_stress_MPa",
            format!("{} must be positive and finite", doe.response_stress),
        ));
    }
    let mut seen = HashSet::new();
    for name in doe.levels.keys() {
        if !doe.factors.contains(name) {
            return Err(invalid(
                "[doe.levels]",
                format!("`{name}` has explicit levels but is not listed as a factor"),
            ));
        }
    }
    let factors = doe
        .factors
        .iter()
        .map(|name| {
            let id = parse_param("[doe] factors", name)?;
            if !seen.insert(id) {
                return Err(invalid("[doe] factors", format!("`{name}` listed twice")));
            }
            let scale = si_scale(id);
            // Every parameter is strictly positive once [material] has
            // validated, so the fractional levels are always ordered.
            let (low, high) = match doe.levels.get(name) {
                Some([lo, hi]) => (lo * scale, hi * scale),
                None => {
                    let v = id.get(material);
                    ((1.0 - doe.level_fraction) * v, (1.0 + doe.level_fraction) * v)
                }
            };
            if !(low < high) {
                return Err(invalid(
                    "[doe.levels]",
                    format!("`{name}`: low {low} must be strictly below high {high} (SI)"),
                ));
            }
            Ok(FactorSpec { id, low, high })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DoeSettings {
        factors,
        alpha: doe.alpha,
        response_stress: doe.response_stress * 1e6,
    })
}

type McmcParts = (McmcSettings, Vec<ParamPrior>, usize, Vec<(ParamId, ParamId)>, Option<usize>);

fn resolve_mcmc(
    mcmc: &McmcSection,
    material: &MaterialParameters,
) -> Result<McmcParts, ConfigError> {
    if mcmc.bins == 0 {
        return Err(invalid("[mcmc] bins", "at least one histogram bin is required"));
    }
    let mut calibrated = HashSet::new();
    let priors = mcmc
        .calibrate
        .iter()
        .map(|name| {
            let id = parse_param("[mcmc] calibrate", name)?;
            if !calibrated.insert(id) {
                return Err(invalid("[mcmc] calibrate", format!("`{name}` listed twice")));
            }
            let [lo, hi] = mcmc.bounds.get(name).ok_or_else(|| {
                invalid(
                    "[mcmc.bounds]",
                    format!(
                        "calibrated parameter `{name}` has no prior box; \
                         add `{name} = [low, high]` in {}",
                        config_unit(id)
                    ),
                )
            })?;
            let scale = si_scale(id);
            let (lower, upper) = (lo * scale, hi * scale);
            let initial = id.get(material);
            if !(lower < initial && initial < upper) {
                return Err(invalid(
                    "[mcmc.bounds]",
                    format!(
                        "`{name}`: [material] value {initial} (SI) must lie strictly \
                         inside the box [{lower}, {upper}] (SI)"
                    ),
                ));
            }
            Ok(ParamPrior { id, lower, upper, initial })
        })
        .collect::<Result<Vec<_>, _>>()?;
    for name in mcmc.bounds.keys() {
        if !mcmc.calibrate.contains(name) {
            return Err(invalid(
                "[mcmc.bounds]",
                format!("`{name}` has a prior box but is not calibrated"),
            ));
        }
    }
    let joint_pairs = mcmc
        .joint_pairs
        .iter()
        .map(|[a, b]| {
            let pa = parse_param("[mcmc] joint_pairs", a)?;
            let pb = parse_param("[mcmc] joint_pairs", b)?;
            for (id, name) in [(pa, a), (pb, b)] {
                if !calibrated.contains(&id) {
                    return Err(invalid(
                        "[mcmc] joint_pairs",
                        format!("`{name}` is not calibrated, so it has no chain samples"),
                    ));
                }
            }
            Ok((pa, pb))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(every) = mcmc.checkpoint_every {
        if every == 0 {
            return Err(invalid("[mcmc] checkpoint_every", "must be at least 1"));
        }
    }
    let settings = McmcSettings {
        n_steps: mcmc.n_steps,
        seed: mcmc.seed,
        adapt_interval: mcmc.adapt_interval,
        a0: mcmc.a0,
        b0: mcmc.b0,
        v0_scale: mcmc.v0_scale,
        sigma2_init: mcmc.sigma2_init,
        checkpoint: None,
    };
    Ok((settings, priors, mcmc.bins, joint_pairs, mcmc.checkpoint_every))
}

/// A complete, annotated configuration. Ships as `config.example.toml` at
/// the repository root and doubles as the parser's reference fixture.
pub const EXAMPLE_CONFIG: &str = r#"# Pipeline configuration. All entries are engineering units: moduli in GPa,
# stress-influence slopes in MPa/K, the strain-saturation rate in 1/MPa,
# temperatures in K, stresses in MPa. Internally everything becomes SI.

[material]
# Elastic moduli of the two phases. E_A > E_M for NiTi.
E_A_GPa = 60.0
E_M_GPa = 40.0
# Zero-stress transformation temperatures; must satisfy M_f < M_s < A_s < A_f.
M_s_K = 300.0
M_f_K = 270.0
A_s_K = 307.0
A_f_K = 318.0
# Stress-influence coefficients (Clausius-Clapeyron slopes) per phase.
C_A_MPa_per_K = 9.0
C_M_MPa_per_K = 10.3
# Saturated maximum transformation strain and its exponential stress rate:
# H(sigma) = H_sat * (1 - exp(-k * sigma)).
H_sat = 0.034
k_per_MPa = 0.02
# Smooth-hardening exponents in (0, 1].
n1 = 0.5
n2 = 0.5
n3 = 0.5
n4 = 0.5
# Reference temperature and the stress at which the slopes are anchored.
T0_K = 300.0
anchor_stress_MPa = 300.0

[simulate]
# Thermal sweep: cool from t_max to t_min, heat back. The window must
# complete both transformations at every stress used below.
t_max_K = 430.0
t_min_K = 210.0
# Grid points per branch (minimum 50).
n_grid = 500
# Isobaric levels simulated, calibrated against, and banded.
stresses_MPa = [100.0, 150.0, 200.0]

[doe]
# Parameters screened by the two-level complete factorial; omit this key to
# screen all fourteen.
factors = ["E_A", "E_M", "M_s", "M_f", "A_s", "A_f", "C_A", "C_M", "H_sat", "k", "n1", "n2", "n3", "n4"]
# Automatic levels are value * (1 -/+ level_fraction) ...
level_fraction = 0.10
# ... unless overridden here (config units). A zero-valued factor needs an
# explicit entry.
#   [doe.levels]
#   M_s = [290.0, 310.0]
# Factors with Prob>F below alpha are selected.
alpha = 0.05
# Stress at which the screening response (loop distance to the midpoint
# reference) is evaluated.
response_stress_MPa = 150.0

[mcmc]
n_steps = 50000
seed = 0
# Proposal covariance is re-estimated from the chain history at this cadence.
adapt_interval = 100
# Inverse-gamma hyper-prior on the noise variance.
a0 = 0.001
b0 = 0.001
# Initial proposal SD as a fraction of each prior box width.
v0_scale = 0.01
sigma2_init = 1.0
# "scalar": each dataset's squared-strain distance is one Gaussian
# observation. "per_point": every measured point is one observation
# (ordinary least squares; the noise variance then tracks the strain
# noise floor).
residual_mode = "scalar"
# The calibrated subset; everything else stays at its [material] value.
calibrate = ["M_s", "M_f", "A_s", "A_f", "C_A", "E_M", "H_sat", "k"]
# Posterior marginal histograms use this many bins.
bins = 40
# Joint (2-D) histograms to tabulate.
joint_pairs = [["M_s", "M_f"], ["A_s", "A_f"]]
# Uncomment to write the chain to disk periodically during long runs.
# checkpoint_every = 10000

# Prior boxes, one per calibrated parameter, in the same units as [material].
[mcmc.bounds]
M_s = [280.0, 320.0]
M_f = [250.0, 295.0]
A_s = [285.0, 330.0]
A_f = [300.0, 345.0]
C_A = [4.0, 20.0]
E_M = [20.0, 60.0]
H_sat = [0.02, 0.08]
k = [0.005, 0.12]

[propagate]
# Nominal band coverage; the first-order method always reports +/- 2 sigma.
coverage = 0.95
# "curvewise" ranks whole curves by plateau strain and keeps the central
# ones; "pointwise" takes percentiles independently at each temperature.
band_mode = "curvewise"

[infogain]
# Divergence direction: "posterior_from_prior" scores D(posterior || prior).
direction = "posterior_from_prior"
# Additive measurement noise on synthetic strains; omit for noiseless curves.
# noise_sd = 0.001

[[infogain.candidates]]
label = "replica-150"
stresses_MPa = [150.0, 150.0, 150.0]
samples_per_condition = 1

[[infogain.candidates]]
label = "varied-175-250-300"
stresses_MPa = [175.0, 250.0, 300.0]
samples_per_condition = 1

[output]
# Created if missing. The SMAQ_OUTPUT_DIR environment variable overrides it.
dir = "out"
"#;
