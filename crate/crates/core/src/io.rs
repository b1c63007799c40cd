//! Plain-text persistence: CSV tables and JSON documents.
//!
//! Every floating-point value is written with 17 significant digits, which
//! is enough for the decimal text to round-trip back to the identical bit
//! pattern. Writers assemble the whole file in memory and write it in one
//! call, so outputs are reproducible byte for byte.

use crate::calibrate::{
    CalibrateError, Chain, ExperimentalDataset, Histogram, Histogram2d, McmcSettings,
};
use crate::doe::{AnovaTable, DesignMatrix, DoeError, FactorSpec};
use crate::propagate::ConfidenceBand;
use crate::sma::{Branch, HysteresisLoop, ParamId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Parse { path: PathBuf, line: usize, detail: String },
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: {detail}")]
    Json { path: PathBuf, detail: String },
    #[error(transparent)]
    Invalid(#[from] CalibrateError),
    #[error(transparent)]
    Design(#[from] DoeError),
}

/// Decimal form that parses back to the exact same `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// A parsed CSV body: `# key = value` metadata lines, one header row, and
/// data rows tagged with their 1-based line numbers.
struct Table {
    meta: HashMap<String, String>,
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn parse(path: &Path, text: &str) -> Result<Self, IoError> {
        let mut meta = HashMap::new();
        let mut header: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            match &header {
                None => header = Some(fields),
                Some(h) => {
                    if fields.len() != h.len() {
                        return Err(IoError::Parse {
                            path: path.to_path_buf(),
                            line: line_no,
                            detail: format!(
                                "expected {} fields, found {}",
                                h.len(),
                                fields.len()
                            ),
                        });
                    }
                    rows.push((line_no, fields));
                }
            }
        }
        let header = header.ok_or_else(|| IoError::Parse {
            path: path.to_path_buf(),
            line: 1,
            detail: "file has no header row".to_string(),
        })?;
        Ok(Self { meta, header, rows })
    }

    fn column(&self, path: &Path, name: &str) -> Result<usize, IoError> {
        self.header.iter().position(|h| h == name).ok_or_else(|| IoError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    }

    fn meta_f64(&self, path: &Path, key: &str) -> Result<f64, IoError> {
        let raw = self.meta.get(key).ok_or_else(|| IoError::Parse {
            path: path.to_path_buf(),
            line: 1,
            detail: format!("missing metadata key `{key}`"),
        })?;
        raw.parse().map_err(|_| IoError::Parse {
            path: path.to_path_buf(),
            line: 1,
            detail: format!("metadata `{key}` is not a number: `{raw}`"),
        })
    }
}

fn parse_f64(path: &Path, line: usize, name: &str, raw: &str) -> Result<f64, IoError> {
    raw.parse().map_err(|_| IoError::Parse {
        path: path.to_path_buf(),
        line,
        detail: format!("column `{name}` is not a number: `{raw}`"),
    })
}

// ---------------------------------------------------------------------------
// Hysteresis loops and experimental datasets

/// Writes a solved loop with a `stress_MPa` metadata line and one row per
/// solved point on each branch.
pub fn write_loop_csv(path: &Path, l: &HysteresisLoop) -> Result<(), IoError> {
    let mut out = String::new();
    let _ = writeln!(out, "# stress_MPa = {}", fmt_float(l.stress * 1e-6));
    out.push_str("branch,T_K,eps_t,xi\n");
    for (name, b) in [("cooling", &l.cooling), ("heating", &l.heating)] {
        for i in 0..b.temperatures.len() {
            let _ = writeln!(
                out,
                "{name},{},{},{}",
                fmt_float(b.temperatures[i]),
                fmt_float(b.eps_t[i]),
                fmt_float(b.xi[i])
            );
        }
    }
    write_text(path, &out)
}

fn split_branches(
    path: &Path,
    t: &Table,
    want_xi: bool,
) -> Result<(Vec<(f64, f64, f64)>, Vec<(f64, f64, f64)>), IoError> {
    let cb = t.column(path, "branch")?;
    let ct = t.column(path, "T_K")?;
    let ce = t.column(path, "eps_t")?;
    let cx = if want_xi { Some(t.column(path, "xi")?) } else { None };
    let mut cooling = Vec::new();
    let mut heating = Vec::new();
    for (line, fields) in &t.rows {
        let temp = parse_f64(path, *line, "T_K", &fields[ct])?;
        let eps = parse_f64(path, *line, "eps_t", &fields[ce])?;
        let xi = match cx {
            Some(c) => parse_f64(path, *line, "xi", &fields[c])?,
            None => 0.0,
        };
        match fields[cb].as_str() {
            "cooling" => cooling.push((temp, eps, xi)),
            "heating" => heating.push((temp, eps, xi)),
            other => {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    line: *line,
                    detail: format!("unknown branch label `{other}`"),
                })
            }
        }
    }
    Ok((cooling, heating))
}

/// Reads a loop back exactly as written, preserving point order.
pub fn read_loop_csv(path: &Path) -> Result<HysteresisLoop, IoError> {
    let text = read_text(path)?;
    let t = Table::parse(path, &text)?;
    let stress = t.meta_f64(path, "stress_MPa")? * 1e6;
    let (cooling, heating) = split_branches(path, &t, true)?;
    let build = |pts: Vec<(f64, f64, f64)>| {
        let mut b = Branch::with_capacity(pts.len());
        for (temp, eps, xi) in pts {
            b.temperatures.push(temp);
            b.eps_t.push(eps);
            b.xi.push(xi);
        }
        b
    };
    Ok(HysteresisLoop { stress, cooling: build(cooling), heating: build(heating) })
}

/// Reads a measured (or simulated) loop file into a validated dataset.
/// Requires `branch`, `T_K` and `eps_t` columns plus the `stress_MPa`
/// metadata key; extra columns are ignored. The dataset label is the file
/// stem.
pub fn ingest_dataset(path: &Path) -> Result<ExperimentalDataset, IoError> {
    let text = read_text(path)?;
    let t = Table::parse(path, &text)?;
    let stress = t.meta_f64(path, "stress_MPa")? * 1e6;
    let (cooling, heating) = split_branches(path, &t, false)?;
    let strip = |pts: Vec<(f64, f64, f64)>| pts.into_iter().map(|(t, e, _)| (t, e)).collect();
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
    Ok(ExperimentalDataset::new(stress, label, strip(cooling), strip(heating))?)
}

// ---------------------------------------------------------------------------
// Sampler chains

/// One row per step: index, parameter components, noise variance, accept
/// flag. The seed lives in the JSON sidecar, not here.
pub fn write_chain_csv(path: &Path, chain: &Chain) -> Result<(), IoError> {
    let mut out = String::from("step");
    for id in &chain.param_ids {
        let _ = write!(out, ",{}", id.name());
    }
    out.push_str(",sigma2,accepted\n");
    for i in 0..chain.len() {
        let _ = write!(out, "{i}");
        for &v in chain.theta(i) {
            let _ = write!(out, ",{}", fmt_float(v));
        }
        let _ = writeln!(
            out,
            ",{},{}",
            fmt_float(chain.sigma2[i]),
            u8::from(chain.accepted[i])
        );
    }
    write_text(path, &out)
}

/// Reads a chain written by [`write_chain_csv`]. Parameter identities come
/// from the header names; the seed and adaptation history are not part of
/// the CSV and come back empty.
pub fn read_chain_csv(path: &Path) -> Result<Chain, IoError> {
    let text = read_text(path)?;
    let t = Table::parse(path, &text)?;
    let bad_header = |detail: String| IoError::Parse {
        path: path.to_path_buf(),
        line: 1,
        detail,
    };
    let h = &t.header;
    if h.len() < 3 || h[0] != "step" || h[h.len() - 2] != "sigma2" || h[h.len() - 1] != "accepted"
    {
        return Err(bad_header(
            "expected header `step,<parameters...>,sigma2,accepted`".to_string(),
        ));
    }
    let param_ids: Vec<ParamId> = h[1..h.len() - 2]
        .iter()
        .map(|name| {
            ParamId::parse(name)
                .ok_or_else(|| bad_header(format!("unknown parameter column `{name}`")))
        })
        .collect::<Result<_, _>>()?;
    let d = param_ids.len();
    let mut samples = Vec::with_capacity(t.rows.len() * d);
    let mut sigma2 = Vec::with_capacity(t.rows.len());
    let mut accepted = Vec::with_capacity(t.rows.len());
    for (i, (line, fields)) in t.rows.iter().enumerate() {
        let step = parse_f64(path, *line, "step", &fields[0])?;
        if step != i as f64 {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                line: *line,
                detail: format!("expected step {i}, found {}", fields[0]),
            });
        }
        for (j, id) in param_ids.iter().enumerate() {
            samples.push(parse_f64(path, *line, id.name(), &fields[1 + j])?);
        }
        sigma2.push(parse_f64(path, *line, "sigma2", &fields[1 + d])?);
        accepted.push(match fields[2 + d].as_str() {
            "0" => false,
            "1" => true,
            other => {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    line: *line,
                    detail: format!("accept flag must be 0 or 1, found `{other}`"),
                })
            }
        });
    }
    Ok(Chain { param_ids, samples, sigma2, accepted, seed: 0, adapt_checkpoints: Vec::new() })
}

/// Companion document for a chain CSV: everything needed to reproduce or
/// resume the run that is not part of the sample table itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSidecar {
    pub seed: u64,
    pub burn_in: Option<usize>,
    pub settings: McmcSettings,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| IoError::Json { path: path.to_path_buf(), detail: e.to_string() })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| IoError::Json { path: path.to_path_buf(), detail: e.to_string() })
}

// ---------------------------------------------------------------------------
// Screening designs and variance tables

fn opt_float(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Classic variance-decomposition layout, one row per source. Cells that do
/// not apply to a source (an F ratio for the error row, say) stay empty.
pub fn write_anova_csv(path: &Path, table: &AnovaTable) -> Result<(), IoError> {
    let mut out = String::from("Source,Sum sq.,d.f.,Mean sq.,F,Prob>F,log10(Prob>F)\n");
    for row in table.rows() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.source,
            fmt_float(row.sum_sq),
            row.dof,
            opt_float(row.mean_sq),
            opt_float(row.f_ratio),
            opt_float(row.p),
            opt_float(row.log10_p)
        );
    }
    write_text(path, &out)
}

/// Factors surviving the screening cut, best first, one per row.
pub fn write_selected_csv(path: &Path, table: &AnovaTable, selected: &[String]) -> Result<(), IoError> {
    let mut out = String::from("factor,F,Prob>F\n");
    for name in selected {
        let row = table
            .factors
            .iter()
            .find(|r| &r.source == name)
            .expect("selected factor present in table");
        let _ = writeln!(out, "{},{},{}", name, opt_float(row.f_ratio), opt_float(row.p));
    }
    write_text(path, &out)
}

/// Factor values per row plus the response, header named by the factors.
pub fn write_design_csv(
    path: &Path,
    design: &DesignMatrix,
    responses: &[f64],
) -> Result<(), IoError> {
    if responses.len() != design.n_rows() {
        return Err(IoError::Design(DoeError::ResponseCount {
            expected: design.n_rows(),
            found: responses.len(),
        }));
    }
    let mut out = String::new();
    for f in design.factors() {
        let _ = write!(out, "{},", f.id.name());
    }
    out.push_str("response\n");
    for i in 0..design.n_rows() {
        for j in 0..design.factors().len() {
            let _ = write!(out, "{},", fmt_float(design.value(i, j)));
        }
        let _ = writeln!(out, "{}", fmt_float(responses[i]));
    }
    write_text(path, &out)
}

/// Rebuilds the design and responses from a file written by
/// [`write_design_csv`]. Factor levels are recovered from the two distinct
/// values each column takes.
pub fn read_design_csv(path: &Path) -> Result<(DesignMatrix, Vec<f64>), IoError> {
    let text = read_text(path)?;
    let t = Table::parse(path, &text)?;
    let bad = |line: usize, detail: String| IoError::Parse {
        path: path.to_path_buf(),
        line,
        detail,
    };
    let h = &t.header;
    if h.last().map(String::as_str) != Some("response") {
        return Err(IoError::MissingColumn {
            path: path.to_path_buf(),
            column: "response".to_string(),
        });
    }
    let ids: Vec<ParamId> = h[..h.len() - 1]
        .iter()
        .map(|name| {
            ParamId::parse(name).ok_or_else(|| bad(1, format!("unknown factor column `{name}`")))
        })
        .collect::<Result<_, _>>()?;
    let nf = ids.len();
    let mut values = vec![Vec::with_capacity(t.rows.len()); nf];
    let mut responses = Vec::with_capacity(t.rows.len());
    for (line, fields) in &t.rows {
        for j in 0..nf {
            values[j].push(parse_f64(path, *line, ids[j].name(), &fields[j])?);
        }
        responses.push(parse_f64(path, *line, "response", &fields[nf])?);
    }
    let mut factors = Vec::with_capacity(nf);
    for (j, id) in ids.iter().enumerate() {
        let mut distinct = values[j].clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() != 2 {
            return Err(bad(
                1,
                format!(
                    "factor column `{}` must take exactly two distinct values, found {}",
                    id.name(),
                    distinct.len()
                ),
            ));
        }
        factors.push(FactorSpec { id: *id, low: distinct[0], high: distinct[1] });
    }
    let rows: Vec<u32> = (0..t.rows.len())
        .map(|i| {
            let mut bits = 0u32;
            for (j, f) in factors.iter().enumerate() {
                if values[j][i] == f.high {
                    bits |= 1 << (nf - 1 - j);
                }
            }
            bits
        })
        .collect();
    let design = DesignMatrix::with_rows(factors, rows)?;
    Ok((design, responses))
}

// ---------------------------------------------------------------------------
// Confidence bands

/// One row per grid point and branch, with the construction recorded in the
/// metadata. One file holds one stress level and one method.
pub fn write_band_csv(path: &Path, band: &ConfidenceBand) -> Result<(), IoError> {
    let mut out = String::new();
    let _ = writeln!(out, "# stress_MPa = {}", fmt_float(band.stress * 1e-6));
    let _ = writeln!(out, "# method = {}", band.method.tag());
    let _ = writeln!(out, "# coverage = {}", fmt_float(band.coverage));
    out.push_str("branch,T_K,mean,lower,upper\n");
    for (name, b) in [("cooling", &band.cooling), ("heating", &band.heating)] {
        for i in 0..b.temperatures.len() {
            let _ = writeln!(
                out,
                "{name},{},{},{},{}",
                fmt_float(b.temperatures[i]),
                fmt_float(b.mean[i]),
                fmt_float(b.lower[i]),
                fmt_float(b.upper[i])
            );
        }
    }
    write_text(path, &out)
}

// ---------------------------------------------------------------------------
// Histograms

pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<(), IoError> {
    let mut out = String::new();
    let _ = writeln!(out, "# param = {}", h.param.name());
    out.push_str("bin_lower,bin_upper,count\n");
    for (i, c) in h.counts.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt_float(h.edges[i]), fmt_float(h.edges[i + 1]), c);
    }
    write_text(path, &out)
}

pub fn write_histogram2d_csv(path: &Path, h: &Histogram2d) -> Result<(), IoError> {
    let mut out = String::new();
    let _ = writeln!(out, "# x = {}", h.x.name());
    let _ = writeln!(out, "# y = {}", h.y.name());
    out.push_str("x_lower,x_upper,y_lower,y_upper,count\n");
    let bins = h.y_edges.len() - 1;
    for i in 0..h.x_edges.len() - 1 {
        for j in 0..bins {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_float(h.x_edges[i]),
                fmt_float(h.x_edges[i + 1]),
                fmt_float(h.y_edges[j]),
                fmt_float(h.y_edges[j + 1]),
                h.counts[i * bins + j]
            );
        }
    }
    write_text(path, &out)
}
