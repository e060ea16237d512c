//! Flat `key = value` parameter files.
//!
//! Keys are the parameter field names. Thresholds may be given linearly
//! (`beta_t`) or in decibels (`beta_t_db`), never both. `#` starts a comment.
//! Keys not present keep their reference values; giving `L` alone drops the
//! default `A_L` and vice versa.

use std::collections::BTreeMap;
use std::path::Path;

use arnoma_core::config::{RawParams, SystemParams, Threshold};

/// A problem with a parameter file or override.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", location(.source_name, *.line))]
pub struct ConfigError {
    /// File name, or `--set` for command-line overrides.
    pub source_name: String,
    /// 1-based line number, when the error is tied to a line.
    pub line: Option<usize>,
    /// What went wrong.
    pub message: String,
}

fn location(source: &str, line: Option<usize>) -> String {
    match line {
        Some(l) => format!("{source}:{l}: "),
        None => format!("{source}: "),
    }
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "lambda_b",
    "alpha",
    "eps_m",
    "eps_t",
    "rho_m",
    "rho_t",
    "beta_m",
    "beta_m_db",
    "beta_t",
    "beta_t_db",
    "L",
    "A_L",
    "eta",
    "tau",
    "rho_area",
    "lambda_m",
    "lambda_t",
];

/// An assignment with the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub key: String,
    pub value: f64,
    pub line: Option<usize>,
}

/// Splits a parameter file into assignments, rejecting unknown or repeated keys.
pub fn parse_assignments(text: &str, source_name: &str) -> Result<Vec<Assignment>, ConfigError> {
    let err = |line: usize, message: String| ConfigError {
        source_name: source_name.to_string(),
        line: Some(line),
        message,
    };
    let mut out = Vec::new();
    let mut seen: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(n, format!("expected `key = value`, found `{body}`")))?;
        let key = key.trim();
        let canonical = *KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| err(n, format!("unknown key `{key}`")))?;
        let value_text = value.trim();
        let value: f64 = value_text.parse().map_err(|_| {
            err(
                n,
                format!("`{key}`: cannot parse `{value_text}` as a number"),
            )
        })?;
        let slot = slot_of(canonical);
        if let Some(prev) = seen.insert(slot, n) {
            return Err(err(
                n,
                format!("`{key}` conflicts with an earlier setting on line {prev}"),
            ));
        }
        out.push(Assignment {
            key: canonical.to_string(),
            value,
            line: Some(n),
        });
    }
    Ok(out)
}

// The linear and dB spellings of a threshold occupy one slot.
fn slot_of(key: &'static str) -> &'static str {
    key.strip_suffix("_db").unwrap_or(key)
}

/// Parses a `key=value` command-line override.
pub fn parse_override(text: &str) -> Result<Assignment, ConfigError> {
    let mut v = parse_assignments(text, "--set").map_err(|e| ConfigError { line: None, ..e })?;
    match v.pop() {
        Some(mut a) if v.is_empty() => {
            a.line = None;
            Ok(a)
        }
        _ => Err(ConfigError {
            source_name: "--set".into(),
            line: None,
            message: format!("expected one `key=value`, found `{text}`"),
        }),
    }
}

/// Applies assignments in order on top of `base`.
pub fn apply(
    base: RawParams,
    assignments: &[Assignment],
    source_name: &str,
) -> Result<RawParams, ConfigError> {
    let mut p = base;
    for a in assignments {
        let v = a.value;
        match a.key.as_str() {
            "lambda_b" => p.lambda_b = v,
            "alpha" => p.alpha = v,
            "eps_m" => p.eps_m = v,
            "eps_t" => p.eps_t = v,
            "rho_m" => p.rho_m = v,
            "rho_t" => p.rho_t = v,
            "beta_m" => p.beta_m = Threshold::Linear(v),
            "beta_m_db" => p.beta_m = Threshold::Db(v),
            "beta_t" => p.beta_t = Threshold::Linear(v),
            "beta_t_db" => p.beta_t = Threshold::Db(v),
            "L" => p.pairing_radius = Some(v),
            "A_L" => p.pairing_fraction = Some(v),
            "eta" => p.eta = v,
            "tau" => p.tau = v,
            "rho_area" => p.rho_area = v,
            "lambda_m" => p.lambda_m = Some(v),
            "lambda_t" => p.lambda_t = Some(v),
            other => {
                return Err(ConfigError {
                    source_name: source_name.into(),
                    line: a.line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }
    let has = |k: &str| assignments.iter().any(|a| a.key == k);
    if has("L") && !has("A_L") {
        p.pairing_fraction = None;
    }
    if has("A_L") && !has("L") {
        p.pairing_radius = None;
    }
    if has("lambda_m") || has("lambda_t") {
        log::info!("lambda_m / lambda_t are recorded but do not enter the model");
    }
    Ok(p)
}

/// Reads a file, applies `overrides`, and validates the result.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<SystemParams, ConfigError> {
    let mut raw = RawParams::default();
    let mut name = String::from("defaults");
    if let Some(path) = path {
        name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source_name: name.clone(),
            line: None,
            message: format!("cannot read: {e}"),
        })?;
        raw = apply(raw, &parse_assignments(&text, &name)?, &name)?;
    }
    let extra = overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    raw = apply(raw, &extra, "--set")?;
    raw.validate().map_err(|e| ConfigError {
        source_name: name,
        line: None,
        message: e.to_string(),
    })
}

/// Renders validated parameters as a parameter file that loads back to the
/// same values. Thresholds are written linearly so nothing is lost.
pub fn render(p: &SystemParams) -> String {
    let rows: [(&str, f64); 13] = [
        ("lambda_b", p.lambda_b()),
        ("alpha", p.alpha()),
        ("eps_m", p.eps_m()),
        ("eps_t", p.eps_t()),
        ("rho_m", p.rho_m()),
        ("rho_t", p.rho_t()),
        ("beta_m", p.beta_m()),
        ("beta_t", p.beta_t()),
        ("L", p.pairing_radius()),
        ("A_L", p.pairing_fraction()),
        ("eta", p.eta()),
        ("tau", p.tau()),
        ("rho_area", p.rho_area()),
    ];
    rows.iter().map(|(k, v)| format!("{k} = {v:e}\n")).collect()
}
