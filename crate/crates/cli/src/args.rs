//! Command-line arguments. Flags mirror [`RunConfig`] fields and override
//! values from `--config`.

use std::path::PathBuf;

use anyhow::Result;
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use ecomal::ols::CovarianceKind;
use ecomal::selection::SignificanceCheck;
use ecomal::series::WeekPolicy;
use ecomal::{ArdlOrders, Granularity};

use crate::config::{RunConfig, TargetChoice};

#[derive(Debug, Parser)]
#[command(
    name = "ecomal",
    version,
    about = "Malware time series for package ecosystems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan an OSV snapshot into events.csv and breakdown.csv.
    Ingest(ConfigArgs),
    /// Aggregate events into per-granularity series CSVs.
    Build(ConfigArgs),
    /// Select lag orders for every configured series.
    Select(ConfigArgs),
    /// Fit the models and write multipliers.
    Fit(ModelArgs),
    /// Fit the models and run residual diagnostics.
    Diagnose(ModelArgs),
    /// Descriptive statistics of the series.
    Report(ConfigArgs),
    /// Run every stage and write summary.json.
    Pipeline(ConfigArgs),
    /// Write a seeded synthetic OSV snapshot.
    Simulate(SimulateArgs),
}

fn parse_significance(s: &str) -> Result<SignificanceCheck, String> {
    match s {
        "current-model" | "current" => Ok(SignificanceCheck::CurrentModel),
        "lower-candidate" | "lower" => Ok(SignificanceCheck::LowerCandidate),
        _ => Err(format!(
            "expected current-model or lower-candidate, got {s:?}"
        )),
    }
}

fn parse_covariance(s: &str) -> Result<CovarianceKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "classical" => Ok(CovarianceKind::Classical),
        "hc1" => Ok(CovarianceKind::Hc1),
        _ => Err(format!("expected classical or hc1, got {s:?}")),
    }
}

fn parse_week_policy(s: &str) -> Result<WeekPolicy, String> {
    match s {
        "iso-thursday" | "iso" => Ok(WeekPolicy::IsoThursday),
        "overlapping" => Ok(WeekPolicy::Overlapping),
        _ => Err(format!("expected iso-thursday or overlapping, got {s:?}")),
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with RunConfig keys; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// OSV snapshot directory or zip archive.
    #[arg(long = "snapshot")]
    pub snapshot_path: Option<PathBuf>,
    /// events.csv to model instead of a snapshot.
    #[arg(long = "events")]
    pub events_path: Option<PathBuf>,
    #[arg(long)]
    pub window_start: Option<NaiveDate>,
    #[arg(long)]
    pub window_end: Option<NaiveDate>,
    /// Comma-separated subset of daily, weekly, monthly.
    #[arg(long = "granularity", value_delimiter = ',')]
    pub granularities: Option<Vec<Granularity>>,
    #[arg(long, value_enum)]
    pub target: Option<TargetChoice>,
    #[arg(long)]
    pub p_max: Option<usize>,
    #[arg(long = "out", short = 'o')]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    /// current-model or lower-candidate.
    #[arg(long, value_parser = parse_significance)]
    pub significance: Option<SignificanceCheck>,
    /// classical or hc1.
    #[arg(long, value_parser = parse_covariance)]
    pub covariance: Option<CovarianceKind>,
    /// iso-thursday or overlapping.
    #[arg(long, value_parser = parse_week_policy)]
    pub week_policy: Option<WeekPolicy>,
    #[arg(long)]
    pub ma_window: Option<usize>,
    #[arg(long)]
    pub dm_horizon: Option<usize>,
}

impl ConfigArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { c.$field = v.clone().into(); })*
            };
        }
        take!(
            snapshot_path,
            events_path,
            window_start,
            window_end,
            granularities,
            target,
            p_max,
            output_dir,
            seed,
            confidence,
            significance,
            covariance,
            week_policy,
            ma_window,
            dm_horizon
        );
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Fixed orders `p1,p2,p3,p4` for every series; selected when omitted.
    #[arg(long)]
    pub orders: Option<ArdlOrders>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Directory that receives the synthetic snapshot.
    #[arg(long)]
    pub dest: PathBuf,
    /// Mean records per day across all ecosystems.
    #[arg(long, default_value_t = 6.0)]
    pub daily_rate: f64,
}
