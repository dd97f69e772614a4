//! Run configuration: defaults, TOML file, command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use ecomal::ols::CovarianceKind;
use ecomal::selection::{SelectionConfig, SignificanceCheck};
use ecomal::series::WeekPolicy;
use ecomal::{Granularity, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TargetChoice {
    Freq,
    Share,
    #[default]
    Both,
}

impl TargetChoice {
    pub fn targets(self) -> Vec<Target> {
        match self {
            TargetChoice::Freq => vec![Target::MalFreq],
            TargetChoice::Share => vec![Target::MalShare],
            TargetChoice::Both => Target::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// OSV snapshot: a directory tree or a zip archive.
    pub snapshot_path: Option<PathBuf>,
    /// Previously written `events.csv`, used instead of a snapshot.
    pub events_path: Option<PathBuf>,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub granularities: Vec<Granularity>,
    pub target: TargetChoice,
    pub p_max: usize,
    pub output_dir: PathBuf,
    /// Seed for the simulation subcommand.
    pub seed: u64,
    pub confidence: f64,
    pub significance: SignificanceCheck,
    pub covariance: CovarianceKind,
    pub week_policy: WeekPolicy,
    pub ma_window: usize,
    pub dm_horizon: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            snapshot_path: None,
            events_path: None,
            window_start: NaiveDate::from_ymd_opt(2022, 1, 1).expect("valid date"),
            window_end: NaiveDate::from_ymd_opt(2025, 3, 31).expect("valid date"),
            granularities: Granularity::ALL.to_vec(),
            target: TargetChoice::Both,
            p_max: 30,
            output_dir: PathBuf::from("out"),
            seed: 0,
            confidence: 0.95,
            significance: SignificanceCheck::default(),
            covariance: CovarianceKind::default(),
            week_policy: WeekPolicy::default(),
            ma_window: ecomal::series::DEFAULT_MOVING_AVERAGE,
            dm_horizon: 50,
        }
    }
}

impl RunConfig {
    /// Reads a TOML file. Bare TOML dates are accepted as well as quoted ones.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse()?;
        for (_, value) in table.iter_mut() {
            if let toml::Value::Datetime(d) = &*value {
                *value = toml::Value::String(d.to_string());
            }
        }
        let config = RunConfig::deserialize(table)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_start >= self.window_end {
            bail!(
                "window_start {} must precede window_end {}",
                self.window_start,
                self.window_end
            );
        }
        if self.p_max < 1 {
            bail!("p_max must be at least 1");
        }
        if self.granularities.is_empty() {
            bail!("at least one granularity is required");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            bail!("confidence must lie strictly between 0 and 1");
        }
        if self.ma_window == 0 || self.dm_horizon == 0 {
            bail!("ma_window and dm_horizon must be positive");
        }
        Ok(())
    }

    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            p_max: self.p_max,
            confidence: self.confidence,
            significance: self.significance,
        }
    }

    /// Granularities in canonical order, without repeats.
    pub fn granularity_list(&self) -> Vec<Granularity> {
        let mut g = self.granularities.clone();
        g.sort();
        g.dedup();
        g
    }

    /// The (granularity, target) model runs, in output order.
    pub fn jobs(&self) -> Vec<(Granularity, Target)> {
        let targets = self.target.targets();
        self.granularity_list()
            .into_iter()
            .flat_map(|g| targets.iter().map(move |&t| (g, t)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.jobs().len(), 6);
        assert_eq!(c.p_max, 30);
    }

    #[test]
    fn toml_with_bare_and_quoted_dates() {
        let c = RunConfig::from_toml(
            "window_start = 2023-01-01\nwindow_end = \"2024-06-30\"\n\
             granularities = [\"monthly\", \"weekly\"]\ntarget = \"share\"\np_max = 12\n\
             significance = \"lower-candidate\"\ncovariance = \"hc1\"\n",
        )
        .unwrap();
        assert_eq!(c.window_start, NaiveDate::from_ymd_opt(2023, 1, 1).unwrap());
        assert_eq!(c.window_end, NaiveDate::from_ymd_opt(2024, 6, 30).unwrap());
        assert_eq!(
            c.jobs(),
            vec![
                (Granularity::Weekly, Target::MalShare),
                (Granularity::Monthly, Target::MalShare)
            ]
        );
        assert_eq!(c.significance, SignificanceCheck::LowerCandidate);
        assert_eq!(c.covariance, CovarianceKind::Hc1);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(
            RunConfig::from_toml("window_start = 2025-01-01\nwindow_end = 2024-01-01").is_err()
        );
        assert!(RunConfig::from_toml("p_max = 0").is_err());
        assert!(RunConfig::from_toml("no_such_key = 1").is_err());
    }
}
