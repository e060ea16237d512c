//! Run manifests: everything needed to reproduce a set of output files.
//!
//! The manifest is written before any output (with `complete = false`) and
//! rewritten when the run ends. It carries no timestamps, so two runs with
//! the same inputs produce the same manifest.

use std::path::{Path, PathBuf};

use arnoma_core::analytic::AnalyticSettings;
use arnoma_core::config::{linear_to_db, SystemParams};
use serde::{Deserialize, Serialize};

/// Resolved parameters, linear and in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTable {
    pub lambda_b: f64,
    pub alpha: f64,
    pub eps_m: f64,
    pub eps_t: f64,
    pub rho_m: f64,
    pub rho_t: f64,
    pub beta_m: f64,
    pub beta_m_db: f64,
    pub beta_t: f64,
    pub beta_t_db: f64,
    #[serde(rename = "L")]
    pub pairing_radius: f64,
    #[serde(rename = "A_L")]
    pub pairing_fraction: f64,
    pub eta: f64,
    pub tau: f64,
    pub rho_area: f64,
}

impl From<&SystemParams> for ParamTable {
    fn from(p: &SystemParams) -> Self {
        ParamTable {
            lambda_b: p.lambda_b(),
            alpha: p.alpha(),
            eps_m: p.eps_m(),
            eps_t: p.eps_t(),
            rho_m: p.rho_m(),
            rho_t: p.rho_t(),
            beta_m: p.beta_m(),
            beta_m_db: linear_to_db(p.beta_m()),
            beta_t: p.beta_t(),
            beta_t_db: linear_to_db(p.beta_t()),
            pairing_radius: p.pairing_radius(),
            pairing_fraction: p.pairing_fraction(),
            eta: p.eta(),
            tau: p.tau(),
            rho_area: p.rho_area(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub jm_area: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub analytic_rel_tol: f64,
    pub inner_order: usize,
    pub quad_limit: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_geo: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_res: Option<f64>,
}

impl Tolerances {
    pub fn analytic(s: &AnalyticSettings) -> Self {
        Tolerances {
            analytic_rel_tol: s.tol,
            inner_order: s.inner_order,
            quad_limit: s.limit,
            n_geo: None,
            grid_res: None,
        }
    }
}

/// Inverse JM-cell area used by the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JmAreaRecord {
    /// `E[1/|JM cell|]`, per m².
    pub value: f64,
    /// The same divided by `lambda_b`.
    pub normalized: f64,
    pub std_error: f64,
    pub n_cells: usize,
    pub points_per_cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Engine {
    pub name: String,
    pub version: String,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub arguments: Vec<String>,
    pub complete: bool,
    pub divergent_outputs: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_secs: Option<f64>,
    pub outputs: Vec<String>,
    pub seeds: Seeds,
    pub params: ParamTable,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inverse_jm_area: Option<JmAreaRecord>,
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    /// Writes the manifest as TOML.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = toml::to_string(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(std::io::Error::other)
    }

    /// Paths of the declared outputs, relative to `dir`.
    pub fn output_paths(&self, dir: &Path) -> Vec<PathBuf> {
        self.outputs.iter().map(|o| dir.join(o)).collect()
    }
}
