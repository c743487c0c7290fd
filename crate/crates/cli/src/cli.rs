use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::budgets::{parse_count, parse_range, parse_unit};

/// Fit and extrapolate data-filtering scaling laws.
#[derive(Debug, Parser)]
#[command(name = "qqt", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit scaling constants to an observation log by grid search.
    Fit(FitArgs),
    /// Predict one fitted pool's error at the given budgets.
    Extrapolate(ExtrapolateArgs),
    /// Predict the error of a uniform mixture of fitted pools.
    Mix(MixArgs),
    /// Pick the best prefix of a quality ladder at each budget.
    Recommend(RecommendArgs),
    /// Write a synthetic observation log.
    Simulate(SimulateArgs),
    /// Score half-life rescaling exponents against a merged-pool log.
    SweepK(SweepKArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Number of linearly spaced normalizer values in [0.001, 1].
    #[arg(long, default_value_t = 100)]
    pub a_points: usize,
    /// Number of geometrically spaced |b| values in [0.005, 0.5].
    #[arg(long, default_value_t = 100)]
    pub b_points: usize,
    /// Largest integer half-life.
    #[arg(long, default_value_t = 50)]
    pub tau_max: u32,
    /// Keep only normalizer values in LO:HI.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub a_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub b_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub tau_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub d_range: Option<(f64, f64)>,
    /// Force one half-life on every pool.
    #[arg(long)]
    pub shared_tau: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub observations: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// The log's third column holds accuracy rather than error.
    #[arg(long)]
    pub accuracy: bool,
    /// Raw samples per counting unit, e.g. 1M.
    #[arg(long, value_parser = parse_unit, default_value = "1")]
    pub sample_unit: f64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct ExtrapolateArgs {
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub pool_id: String,
    /// Comma-separated list (32M,64M) or geom:START:END:COUNT.
    #[arg(long)]
    pub budgets: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Formulation {
    /// Decaying utility, size-weighted mean exponent.
    Theorem1,
    /// Decaying utility and decaying sample worth.
    F3,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[arg(long)]
    pub fit: PathBuf,
    /// Comma-separated pool ids to mix.
    #[arg(long, value_delimiter = ',', required = true)]
    pub pools: Vec<String>,
    #[arg(long)]
    pub budgets: String,
    #[arg(long, value_enum, default_value_t = Formulation::Theorem1)]
    pub formulation: Formulation,
    /// Half-life rescaling exponent k in (N̂/N)^k.
    #[arg(long, default_value_t = 1.0)]
    pub tau_exponent: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub budgets: String,
    /// Report (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Plot series CSV; defaults to the report path with a .csv extension.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Name of the metric being predicted.
    #[arg(long, default_value = "error")]
    pub metric: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Take constants from this fit file instead of --a/--b/--d/--tau.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Pool to simulate (all pools of the fit if omitted); with --mix, the
    /// id written for the merged pool.
    #[arg(long)]
    pub pool_id: Option<String>,
    /// Simulate the merged pool of these fitted pools with the numerical
    /// integrator.
    #[arg(long, value_delimiter = ',')]
    pub mix: Option<Vec<String>>,
    #[arg(long, default_value_t = 1.0)]
    pub tau_exponent: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub pool_size: Option<u64>,
    /// Raw samples per counting unit for inline constants.
    #[arg(long, value_parser = parse_unit)]
    pub sample_unit: Option<f64>,
    #[arg(long)]
    pub budgets: String,
    /// Standard deviation of Gaussian noise added to each error.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Integrator step as a fraction of an epoch (merged pools only).
    #[arg(long, default_value_t = 1e-3)]
    pub step_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepKArgs {
    /// Log of a single merged pool.
    #[arg(long)]
    pub observations: PathBuf,
    #[arg(long)]
    pub fit: PathBuf,
    /// Constituent pools (all pools of the fit if omitted).
    #[arg(long, value_delimiter = ',')]
    pub pools: Option<Vec<String>>,
    /// LO:HI:STEP or a comma-separated list.
    #[arg(long, default_value = "0:2:0.25")]
    pub k_grid: String,
    #[arg(long)]
    pub accuracy: bool,
    #[arg(long)]
    pub out: PathBuf,
}
