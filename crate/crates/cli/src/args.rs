use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "timealloc", version, about = "Simulate, estimate and calibrate household time-allocation responses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic panel with known ground truth.
    Simulate(SimulateArgs),
    /// Run every estimator on a simulated (or freshly generated) panel.
    Estimate(EstimateArgs),
    /// Regenerate the scaled efficiency-gain calibration grid.
    #[command(name = "reproduce-table8")]
    ReproduceTable8(Table8Args),
    /// Household exposure (and purpose shares) from browsing shares.
    Exposure(ExposureArgs),
    /// Region-month precipitation from gridded daily weather.
    Weather(WeatherArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArg {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Overrides of generator settings.
#[derive(Debug, Clone, Default, Args)]
pub struct DgpOverrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_households: Option<usize>,
    #[arg(long)]
    pub n_quarters: Option<usize>,
    #[arg(long)]
    pub exposure_strength: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub confound_strength: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rain_elasticity: Option<f64>,
    /// Set every true adoption effect to zero.
    #[arg(long)]
    pub placebo: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub dgp: DgpOverrides,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Directory written by `simulate`; without it a panel is generated in memory.
    #[arg(long, value_name = "DIR")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[command(flatten)]
    pub dgp: DgpOverrides,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Table8Args {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub beta_z: Option<f64>,
    #[arg(long)]
    pub beta_l: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub bgpt_l: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub bgpt_z: Option<f64>,
    #[arg(long)]
    pub ratio_r: Option<f64>,
    /// Curvature levels (comma separated or repeated).
    #[arg(long = "eta-bar", value_delimiter = ',')]
    pub eta_bars: Vec<f64>,
    /// Efficiency gain ratios (comma separated or repeated).
    #[arg(long = "psi", value_delimiter = ',')]
    pub psis: Vec<f64>,
    /// Recompute the Engel ratio from beta_z / beta_l instead of the rounded value.
    #[arg(long)]
    pub strict_ratio: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExposureArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Website labels: domain,purpose,exposure_count.
    #[arg(long, value_name = "PATH")]
    pub labels: PathBuf,
    /// Browsing shares: household,domain,share.
    #[arg(long, value_name = "PATH")]
    pub shares: PathBuf,
    /// Optional browsing durations for purpose shares: household,domain,duration_seconds.
    #[arg(long, value_name = "PATH")]
    pub durations: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct WeatherArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Daily grid precipitation: grid_cell,county_fips,date,prec.
    #[arg(long, value_name = "PATH")]
    pub weather: PathBuf,
    /// County to region mapping: county_fips,region_id.
    #[arg(long, value_name = "PATH")]
    pub crosswalk: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}
