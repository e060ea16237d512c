//! Argument parsing and the run context shared by all subcommands.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use arnoma_core::analytic::{AnalyticModel, AnalyticSettings};
use arnoma_core::config::SystemParams;
use arnoma_core::distributions::{estimate_inverse_jm_area, InverseAreaEstimate, JmAreaSettings};
use arnoma_core::{Device, Scheme};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cache::JmAreaCache;
use crate::configfile::{self, ConfigError};
use crate::exec::RayonExecutor;
use crate::manifest::{Engine, JmAreaRecord, ParamTable, RunManifest, Seeds, Tolerances};

/// Exit code for parameter, flag or config-file errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code when the run completed but some requested quantity diverged.
pub const EXIT_DIVERGENCE: i32 = 3;
/// Exit code when the wall-clock budget ran out; outputs are partial.
pub const EXIT_BUDGET: i32 = 4;
/// Exit code for IO and other runtime failures.
pub const EXIT_RUNTIME: i32 = 1;

/// Default seed of the inverse JM-area estimate. Independent of `--seed` so
/// one cached value serves every run.
pub const JM_AREA_SEED: u64 = 0x5EED_0001;

#[derive(Debug, Parser)]
#[command(
    name = "arnoma",
    version,
    about = "Meta-distribution analysis of adaptive-rate NOMA uplinks"
)]
pub struct Cli {
    /// Parameter file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Parameter override `key=value`; repeatable, applied after --config.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed of all simulations.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory receiving CSV files and the manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Wall-clock budget in seconds; exceeded runs write partial output.
    #[arg(long, global = true)]
    pub budget_secs: Option<f64>,
    /// Relative tolerance of the analytic quadrature.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Use this normalised inverse JM area instead of estimating it.
    #[arg(long, global = true)]
    pub inv_jm_area: Option<f64>,
    /// Cells sampled by the inverse JM-area estimator.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub jm_cells: usize,
    /// Test points per cell of the inverse JM-area estimator.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub jm_points: usize,
    /// Seed of the inverse JM-area estimator.
    #[arg(long, global = true, default_value_t = JM_AREA_SEED)]
    pub jm_seed: u64,
    /// Cache file of inverse JM-area estimates (default: in --out-dir).
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moments of the conditional success probability over a threshold grid.
    Moment(MomentArgs),
    /// Ergodic rate of the mobile user.
    Rate(RateArgs),
    /// Mean local delay of the IoT device.
    Delay(DelayArgs),
    /// Rate maximisation under the delay cap.
    Optimize(OptimizeArgs),
    /// Regenerates the data behind one of the three result panels.
    Reproduce(ReproduceArgs),
    /// Estimates the mean inverse JM-cell area and caches it.
    JmArea,
    /// Dumps sampled geometries.
    Snapshot(SnapshotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeviceArg {
    Mobile,
    Iot,
}

impl From<DeviceArg> for Device {
    fn from(d: DeviceArg) -> Self {
        match d {
            DeviceArg::Mobile => Device::Mobile,
            DeviceArg::Iot => Device::Iot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Noma,
    Oma,
    Both,
}

impl SchemeArg {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeArg::Noma => vec![Scheme::Noma],
            SchemeArg::Oma => vec![Scheme::Oma],
            SchemeArg::Both => vec![Scheme::Noma, Scheme::Oma],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Analytic,
    Mc,
    Both,
}

impl EngineArg {
    pub fn analytic(self) -> bool {
        self != EngineArg::Mc
    }

    pub fn mc(self) -> bool {
        self != EngineArg::Analytic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Left,
    Middle,
    Right,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Independent geometries for the simulation engine.
    #[arg(long, default_value_t = 2000)]
    pub n_geo: usize,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[arg(long, value_enum)]
    pub device: DeviceArg,
    #[arg(long, value_enum, default_value = "noma")]
    pub scheme: SchemeArg,
    /// Moment order (b >= 0 or b = -1).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub b: f64,
    /// Thresholds in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-10.0, -5.0, 0.0, 5.0, 10.0])]
    pub beta_grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "analytic")]
    pub engine: EngineArg,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub scheme: SchemeArg,
    /// OMA time shares, comma separated (default: from the parameters).
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[arg(long, value_enum, default_value = "analytic")]
    pub engine: EngineArg,
    #[command(flatten)]
    pub mc: McArgs,
    /// Fading draws per geometry for the simulated rate.
    #[arg(long, default_value_t = 20)]
    pub draws_per_geo: usize,
}

#[derive(Debug, Args)]
pub struct DelayArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub scheme: SchemeArg,
    /// IoT thresholds in dB (default: from the parameters).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta_t_grid: Vec<f64>,
    /// OMA time shares to sweep (default: from the parameters).
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[arg(long, value_enum, default_value = "analytic")]
    pub engine: EngineArg,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub scheme: SchemeArg,
    /// Delay cap (default: from the parameters).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Grid resolution of the power-control fractions.
    #[arg(long, default_value_t = 0.05)]
    pub grid_res: f64,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    #[command(flatten)]
    pub mc: McArgs,
    /// Thresholds in dB for the moment verification panel.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-10.0, -5.0, 0.0, 5.0, 10.0])]
    pub beta_grid: Vec<f64>,
    /// Grid resolution of the optimizer.
    #[arg(long, default_value_t = 0.05)]
    pub grid_res: f64,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    /// Index of the first geometry.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
    /// Number of geometries.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
}

/// Why a run stopped early.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] arnoma_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Cache(#[from] crate::cache::CacheError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use arnoma_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Core(
                E::InvalidParams(_)
                | E::InvalidArgument { .. }
                | E::UnsupportedOrder(_)
                | E::TooFewSamples { .. },
            ) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

/// How a run that produced output ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    Divergent,
    BudgetExceeded,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::Divergent => EXIT_DIVERGENCE,
            RunStatus::BudgetExceeded => EXIT_BUDGET,
        }
    }
}

/// Wall-clock budget of a run.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    start: Instant,
    limit: Option<Duration>,
}

impl Budget {
    pub fn new(secs: Option<f64>) -> Self {
        Budget {
            start: Instant::now(),
            limit: secs.map(|s| Duration::from_secs_f64(s.max(0.0))),
        }
    }

    pub fn exceeded(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() > l)
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

/// State shared by the subcommands of one invocation.
pub struct Context {
    pub params: SystemParams,
    pub exec: RayonExecutor,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub settings: AnalyticSettings,
    pub budget: Budget,
    pub jm_settings: JmAreaSettings,
    inv_override: Option<f64>,
    cache_path: PathBuf,
    budget_secs: Option<f64>,
    manifest: Option<(PathBuf, RunManifest)>,
    divergent: bool,
    partial: bool,
}

impl Context {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let params = configfile::load(cli.config.as_deref(), &cli.overrides)?;
        if !(cli.tol > 0.0 && cli.tol < 1.0) {
            return Err(CliError::Usage("--tol must lie in (0, 1)".into()));
        }
        if let Some(v) = cli.inv_jm_area {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage("--inv-jm-area must be positive".into()));
            }
        }
        if cli.budget_secs.is_some_and(|b| !(b >= 0.0)) {
            return Err(CliError::Usage("--budget-secs must be non-negative".into()));
        }
        if cli.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        let exec =
            RayonExecutor::new(cli.threads).map_err(|e| std::io::Error::other(e.to_string()))?;
        std::fs::create_dir_all(&cli.out_dir)?;
        let cache_path = cli
            .cache
            .clone()
            .unwrap_or_else(|| cli.out_dir.join("jm_area_cache.toml"));
        Ok(Context {
            params,
            exec,
            out_dir: cli.out_dir.clone(),
            seed: cli.seed,
            settings: AnalyticSettings {
                tol: cli.tol,
                ..AnalyticSettings::default()
            },
            budget: Budget::new(cli.budget_secs),
            jm_settings: JmAreaSettings {
                n_cells: cli.jm_cells,
                points_per_cell: cli.jm_points,
                seed: cli.jm_seed,
            },
            inv_override: cli.inv_jm_area,
            cache_path,
            budget_secs: cli.budget_secs,
            manifest: None,
            divergent: false,
            partial: false,
        })
    }

    /// Estimates (or loads from the cache) the mean inverse JM-cell area.
    pub fn inverse_jm_area(&self) -> Result<InverseAreaEstimate, CliError> {
        let p = &self.params;
        let lambda_l2 = p.lambda_b() * p.pairing_radius() * p.pairing_radius();
        if let Some(v) = self.inv_override {
            return Ok(InverseAreaEstimate {
                lambda_l2,
                normalized: v,
                normalized_std_error: 0.0,
                lambda_b: p.lambda_b(),
                n_samples: 0,
                degenerate_resamples: 0,
                seed: 0,
                widened_ci: false,
            });
        }
        let mut cache = JmAreaCache::open(&self.cache_path)?;
        if let Some(e) = cache.get(p.lambda_b(), lambda_l2, &self.jm_settings) {
            log::info!("inverse JM area from cache {}", self.cache_path.display());
            return Ok(e);
        }
        log::info!(
            "estimating inverse JM area ({} cells x {} points)",
            self.jm_settings.n_cells,
            self.jm_settings.points_per_cell
        );
        let est = estimate_inverse_jm_area(
            p.lambda_b(),
            p.pairing_radius(),
            &self.jm_settings,
            &self.exec,
        )?;
        cache.insert(&est, &self.jm_settings)?;
        Ok(est)
    }

    /// The analytic engine at the configured parameters.
    pub fn model(&self, inv: &InverseAreaEstimate) -> AnalyticModel {
        AnalyticModel::with_settings(self.params, inv.value(), self.settings)
    }

    /// Declares the outputs of a run and writes the initial manifest.
    pub fn begin(
        &mut self,
        subcommand: &str,
        arguments: Vec<String>,
        outputs: &[String],
        inv: Option<&InverseAreaEstimate>,
        tolerances: Tolerances,
    ) -> Result<(), CliError> {
        let name = format!("{subcommand}.manifest.toml");
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            arguments,
            complete: false,
            divergent_outputs: false,
            budget_secs: self.budget_secs,
            outputs: outputs.to_vec(),
            seeds: Seeds {
                master: self.seed,
                jm_area: self.jm_settings.seed,
            },
            params: ParamTable::from(&self.params),
            tolerances,
            inverse_jm_area: inv.map(|e| JmAreaRecord {
                value: e.value(),
                normalized: e.normalized,
                std_error: e.std_error(),
                n_cells: e.n_samples,
                points_per_cell: if e.n_samples == 0 {
                    0
                } else {
                    self.jm_settings.points_per_cell
                },
            }),
            engine: Engine {
                name: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                threads: self.exec.threads(),
            },
            notes: Vec::new(),
        };
        let path = self.out_dir.join(&name);
        manifest.write(&path)?;
        self.manifest = Some((path, manifest));
        Ok(())
    }

    /// File name of the current manifest, for CSV comment lines.
    pub fn manifest_name(&self) -> String {
        self.manifest
            .as_ref()
            .and_then(|(p, _)| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn note(&mut self, text: impl Into<String>) {
        if let Some((_, m)) = self.manifest.as_mut() {
            m.notes.push(text.into());
        }
    }

    pub fn mark_divergent(&mut self) {
        self.divergent = true;
    }

    /// Checks the budget; once exceeded the run is marked partial.
    pub fn out_of_budget(&mut self) -> bool {
        if self.budget.exceeded() {
            if !self.partial {
                log::warn!(
                    "wall-clock budget exceeded after {:.1} s",
                    self.budget.elapsed().as_secs_f64()
                );
            }
            self.partial = true;
        }
        self.partial
    }

    /// Rewrites the manifest with the final state.
    pub fn finish(&mut self) -> Result<RunStatus, CliError> {
        let status = if self.partial {
            RunStatus::BudgetExceeded
        } else if self.divergent {
            RunStatus::Divergent
        } else {
            RunStatus::Success
        };
        if let Some((path, m)) = self.manifest.as_mut() {
            m.complete = !self.partial;
            m.divergent_outputs = self.divergent;
            m.write(path)?;
        }
        Ok(status)
    }
}

/// Checks that a dB grid is non-empty and strictly increasing.
pub fn check_grid(name: &str, grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Usage(format!("{name} is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(format!(
            "{name} must be finite and strictly increasing"
        )));
    }
    Ok(())
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    let recorded = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match crate::commands::dispatch(&cli, recorded) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
