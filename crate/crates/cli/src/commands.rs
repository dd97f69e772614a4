//! Subcommand implementations. Every command reads a [`RunConfig`] and
//! writes under its `output_dir`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use ecomal::ardl::{
    build_design, dynamic_multipliers, fit_ols, long_run_multiplier, write_multipliers_csv,
    ArdlOrders, ModelData, MultiplierResult, Regressor, Target,
};
use ecomal::diagnostics::{
    adf_test, diagnose, write_acf_csv, write_fitted_csv, write_qq_csv, AdfLags, AdfResult,
    DeterministicTerm, JarqueBera, LjungBox,
};
use ecomal::osv::{read_events_csv, scan_snapshot, write_events_csv, EventRow, ScanStats};
use ecomal::selection::select_orders;
use ecomal::series::{
    aggregate_with_policy, descriptive_report, ecosystem_breakdown, write_breakdown_csv,
    write_series_csv, SeriesBundle,
};
use ecomal::Granularity;

use crate::config::RunConfig;
use crate::exit::ExitKind;
use crate::output::{create, write_json, write_with};

/// Event rows plus scan counters when they came from a snapshot.
#[derive(Debug, Clone)]
pub struct Events {
    pub rows: Vec<EventRow>,
    pub stats: Option<ScanStats>,
}

fn in_window(cfg: &RunConfig, date: NaiveDate) -> bool {
    date >= cfg.window_start && date <= cfg.window_end
}

fn scan(path: &Path) -> Result<Events> {
    let scan = scan_snapshot(path)
        .with_context(|| format!("scanning snapshot {}", path.display()))
        .context(ExitKind::Ingest)?;
    Ok(Events {
        rows: scan.rows,
        stats: Some(scan.stats),
    })
}

fn read_events(path: &Path) -> Result<Events> {
    let file = File::open(path)
        .with_context(|| format!("opening events file {}", path.display()))
        .context(ExitKind::Ingest)?;
    let rows = read_events_csv(BufReader::new(file))
        .with_context(|| format!("reading events file {}", path.display()))
        .context(ExitKind::Ingest)?;
    Ok(Events { rows, stats: None })
}

/// Event rows from, in order of preference, `events_path`, `snapshot_path`
/// or an `events.csv` left in the output directory by an earlier `ingest`.
pub fn load_events(cfg: &RunConfig) -> Result<Events> {
    if let Some(path) = &cfg.events_path {
        return read_events(path);
    }
    if let Some(path) = &cfg.snapshot_path {
        return scan(path);
    }
    let previous = cfg.output_dir.join("events.csv");
    if previous.is_file() {
        return read_events(&previous);
    }
    Err(anyhow!(
        "no input: pass --snapshot or --events, or run `ingest` first"
    ))
    .context(ExitKind::Ingest)
}

fn write_ingest_outputs(cfg: &RunConfig, events: &Events) -> Result<()> {
    write_with(&cfg.output_dir.join("events.csv"), |w| {
        write_events_csv(&events.rows, w)
    })?;
    let windowed: Vec<EventRow> = events
        .rows
        .iter()
        .filter(|r| in_window(cfg, r.date))
        .cloned()
        .collect();
    let breakdown = ecosystem_breakdown(&windowed);
    write_with(&cfg.output_dir.join("breakdown.csv"), |w| {
        write_breakdown_csv(&breakdown, w)
    })
}

/// Scans the snapshot and writes `events.csv` and `breakdown.csv`.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<Events> {
    let Some(path) = &cfg.snapshot_path else {
        return Err(anyhow!("ingest needs --snapshot")).context(ExitKind::Ingest);
    };
    let events = scan(path)?;
    write_ingest_outputs(cfg, &events)?;
    if let Some(s) = &events.stats {
        println!(
            "files {}  parsed {}  rows {}  skipped {}  out-of-scope {}  duplicate ids {}",
            s.files_seen,
            s.records_parsed,
            events.rows.len(),
            s.skipped,
            s.dropped_out_of_scope,
            s.duplicate_ids
        );
    }
    Ok(events)
}

fn build_bundles(
    cfg: &RunConfig,
    rows: &[EventRow],
) -> Result<BTreeMap<Granularity, SeriesBundle>> {
    cfg.granularity_list()
        .into_iter()
        .map(|g| {
            let bundle =
                aggregate_with_policy(rows, g, cfg.window_start, cfg.window_end, cfg.week_policy)?;
            Ok((g, bundle))
        })
        .collect()
}

fn write_bundles(cfg: &RunConfig, bundles: &BTreeMap<Granularity, SeriesBundle>) -> Result<()> {
    for (g, bundle) in bundles {
        write_with(&cfg.output_dir.join(format!("series_{g}.csv")), |w| {
            write_series_csv(bundle, w)
        })?;
    }
    Ok(())
}

/// Aggregates events into `series_{granularity}.csv`.
pub fn cmd_build(cfg: &RunConfig) -> Result<BTreeMap<Granularity, SeriesBundle>> {
    let events = load_events(cfg)?;
    let bundles = build_bundles(cfg, &events.rows)?;
    write_bundles(cfg, &bundles)?;
    for (g, b) in &bundles {
        println!("{g}: {} periods", b.len());
    }
    Ok(bundles)
}

fn write_reports(cfg: &RunConfig, bundles: &BTreeMap<Granularity, SeriesBundle>) -> Result<()> {
    for (g, bundle) in bundles {
        let report = descriptive_report(bundle, cfg.ma_window)?;
        write_json(&cfg.output_dir.join(format!("report_{g}.json")), &report)?;
        let mut out = create(&cfg.output_dir.join(format!("moving_average_{g}.csv")))?;
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["period", "mal_share", "moving_average"])?;
        for (i, ma) in report.mal_share_moving_average.iter().enumerate() {
            w.write_record([
                bundle.periods[i].to_string(),
                bundle.mal_share[i].to_string(),
                ma.to_string(),
            ])?;
        }
        w.flush()?;
        drop(w);
        out.flush()?;
    }
    Ok(())
}

/// Descriptive statistics and the moving average of the malware share.
pub fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let events = load_events(cfg)?;
    let bundles = build_bundles(cfg, &events.rows)?;
    write_reports(cfg, &bundles)?;
    for (g, b) in &bundles {
        let share = descriptive_report(b, cfg.ma_window)?;
        let median = share
            .series
            .iter()
            .find(|s| s.name == "mal_share")
            .map_or(f64::NAN, |s| s.median);
        println!("{g}: median malware share {median:.2}%");
    }
    Ok(())
}

/// How far a model run goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Select,
    Fit,
    Diagnose,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFailure {
    pub kind: ExitKind,
    pub message: String,
}

/// Per-series results gathered into `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub granularity: Granularity,
    pub target: Target,
    pub periods: usize,
    pub failure: Option<ModelFailure>,
    pub orders: Option<ArdlOrders>,
    pub selection_candidates: usize,
    pub n_obs: Option<usize>,
    pub r_squared: Option<f64>,
    pub sigma2: Option<f64>,
    pub condition_number: Option<f64>,
    pub lrm: Vec<MultiplierResult>,
    pub jarque_bera: Option<JarqueBera>,
    pub ljung_box: Option<LjungBox>,
    pub adf: Option<AdfResult>,
    pub adf_error: Option<String>,
    pub share_exceedance: Option<f64>,
}

impl ModelSummary {
    fn new(granularity: Granularity, target: Target, periods: usize) -> Self {
        ModelSummary {
            granularity,
            target,
            periods,
            failure: None,
            orders: None,
            selection_candidates: 0,
            n_obs: None,
            r_squared: None,
            sigma2: None,
            condition_number: None,
            lrm: Vec::new(),
            jarque_bera: None,
            ljung_box: None,
            adf: None,
            adf_error: None,
            share_exceedance: None,
        }
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.granularity, self.target)
    }

    /// Records a modelling error, or passes through errors that are not
    /// about the model (I/O and the like).
    fn fail(mut self, err: ecomal::Error) -> Result<Self> {
        let Some(kind) = ExitKind::of_model_error(&err) else {
            return Err(anyhow::Error::new(err).context(self.label()));
        };
        warn!("{}: {err}", self.label());
        self.failure = Some(ModelFailure {
            kind,
            message: err.to_string(),
        });
        Ok(self)
    }
}

fn model_dir(cfg: &RunConfig, g: Granularity, t: Target) -> PathBuf {
    cfg.output_dir.join("models").join(format!("{g}_{t}"))
}

fn run_model(
    cfg: &RunConfig,
    bundle: &SeriesBundle,
    target: Target,
    stage: Stage,
    fixed_orders: Option<ArdlOrders>,
) -> Result<ModelSummary> {
    let g = bundle.granularity;
    let dir = model_dir(cfg, g, target);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let summary = ModelSummary::new(g, target, bundle.len());
    let data = ModelData::from_bundle(bundle, target);
    let transform = target.default_transform();

    let mut summary = summary;
    let orders = match fixed_orders {
        Some(orders) => orders,
        None => match select_orders(&data, transform, &cfg.selection()) {
            Ok((orders, trace)) => {
                write_with(&dir.join("trace.jsonl"), |w| trace.write_jsonl(w))?;
                summary.selection_candidates = trace.candidates.len();
                orders
            }
            Err(err) => {
                if let ecomal::Error::SelectionFailed { trace, .. } = &err {
                    write_with(&dir.join("trace.jsonl"), |w| trace.write_jsonl(w))?;
                    summary.selection_candidates = trace.candidates.len();
                }
                return summary.fail(err);
            }
        },
    };
    summary.orders = Some(orders);
    info!("{}: orders {orders}", summary.label());
    if stage == Stage::Select {
        return Ok(summary);
    }

    let fit = match build_design(&data, orders, transform).and_then(|d| fit_ols(&d, cfg.covariance))
    {
        Ok(fit) => fit,
        Err(err) => return summary.fail(err),
    };
    write_json(&dir.join("fit.json"), &fit.report())?;
    summary.n_obs = Some(fit.n_obs());
    summary.r_squared = Some(fit.r_squared);
    summary.sigma2 = Some(fit.sigma2);
    summary.condition_number = Some(fit.condition_number);

    for r in Regressor::ALL {
        let dm = match dynamic_multipliers(&fit, r, cfg.dm_horizon) {
            Ok(dm) => dm,
            Err(err) => return summary.fail(err),
        };
        write_with(&dir.join(format!("dm_{r}.csv")), |w| {
            write_multipliers_csv(&dm, w)
        })?;
    }
    for r in Regressor::ALL {
        match long_run_multiplier(&fit, r) {
            Ok(m) => summary.lrm.push(m),
            Err(err) => return summary.fail(err),
        }
    }
    if stage == Stage::Fit {
        return Ok(summary);
    }

    let report = match diagnose(&fit, None) {
        Ok(report) => report,
        Err(err) => return summary.fail(err),
    };
    write_with(&dir.join("acf.csv"), |w| write_acf_csv(&report.acf, w))?;
    write_with(&dir.join("qq.csv"), |w| write_qq_csv(&report.qq, w))?;
    write_with(&dir.join("fitted.csv"), |w| write_fitted_csv(&fit, w))?;
    summary.jarque_bera = Some(report.jarque_bera);
    summary.ljung_box = Some(report.ljung_box);
    summary.share_exceedance = report.share_exceedance;

    let response: Vec<f64> = data.y.iter().map(|&v| transform.apply(v)).collect();
    match adf_test(&response, AdfLags::Auto, DeterministicTerm::Constant) {
        Ok(adf) => summary.adf = Some(adf),
        Err(err) => {
            warn!("{}: ADF skipped: {err}", summary.label());
            summary.adf_error = Some(err.to_string());
        }
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    window_start: NaiveDate,
    window_end: NaiveDate,
    week_policy: ecomal::series::WeekPolicy,
    p_max: usize,
    confidence: f64,
    significance: ecomal::selection::SignificanceCheck,
    covariance: ecomal::ols::CovarianceKind,
    event_rows: usize,
    ingest: Option<ScanStats>,
    mean_r_squared: Option<f64>,
    models: &'a [ModelSummary],
}

/// Writes `orders.csv`: one row per granularity, one column per target.
fn write_orders_table(path: &Path, models: &[ModelSummary]) -> Result<()> {
    let mut out = create(path)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["granularity", "freq", "share"])?;
    for g in Granularity::ALL {
        let rows: Vec<&ModelSummary> = models.iter().filter(|m| m.granularity == g).collect();
        if rows.is_empty() {
            continue;
        }
        let cell = |t: Target| {
            rows.iter()
                .find(|m| m.target == t)
                .and_then(|m| m.orders)
                .map(|o| o.to_string())
                .unwrap_or_default()
        };
        w.write_record([g.to_string(), cell(Target::MalFreq), cell(Target::MalShare)])?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

/// Writes `lrm.csv`: regressor-major, with an explicit significance column.
fn write_lrm_table(path: &Path, models: &[ModelSummary]) -> Result<()> {
    let mut out = create(path)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record([
        "regressor",
        "granularity",
        "target",
        "lrm",
        "std_error",
        "significant",
    ])?;
    for r in Regressor::ALL {
        for m in models {
            if let Some(lrm) = m.lrm.iter().find(|l| l.regressor == r) {
                w.write_record([
                    r.to_string(),
                    m.granularity.to_string(),
                    m.target.to_string(),
                    lrm.value.to_string(),
                    lrm.std_error.to_string(),
                    lrm.significant_95.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

/// Runs the configured models in parallel and writes the shared tables.
/// Per-series failures are recorded, then reported through the error.
fn run_models(
    cfg: &RunConfig,
    events: &Events,
    bundles: &BTreeMap<Granularity, SeriesBundle>,
    stage: Stage,
    fixed_orders: Option<ArdlOrders>,
) -> Result<Vec<ModelSummary>> {
    let jobs = cfg.jobs();
    let models = jobs
        .par_iter()
        .map(|&(g, t)| run_model(cfg, &bundles[&g], t, stage, fixed_orders))
        .collect::<Result<Vec<_>>>()?;

    write_orders_table(&cfg.output_dir.join("orders.csv"), &models)?;
    if stage >= Stage::Fit {
        write_lrm_table(&cfg.output_dir.join("lrm.csv"), &models)?;
    }
    let r2: Vec<f64> = models.iter().filter_map(|m| m.r_squared).collect();
    let summary = RunSummary {
        window_start: cfg.window_start,
        window_end: cfg.window_end,
        week_policy: cfg.week_policy,
        p_max: cfg.p_max,
        confidence: cfg.confidence,
        significance: cfg.significance,
        covariance: cfg.covariance,
        event_rows: events.rows.len(),
        ingest: events.stats,
        mean_r_squared: (!r2.is_empty()).then(|| r2.iter().sum::<f64>() / r2.len() as f64),
        models: &models,
    };
    write_json(&cfg.output_dir.join("summary.json"), &summary)?;

    for m in &models {
        match (&m.failure, m.orders) {
            (Some(f), _) => println!("{}: FAILED ({}) {}", m.label(), f.kind, f.message),
            (None, Some(o)) => match m.r_squared {
                Some(r2) => println!("{}: orders {o}  R2 {r2:.4}", m.label()),
                None => println!("{}: orders {o}", m.label()),
            },
            (None, None) => {}
        }
    }
    check_failures(&models)?;
    Ok(models)
}

/// Selection failures take precedence over numerical ones.
fn check_failures(models: &[ModelSummary]) -> Result<()> {
    for kind in [ExitKind::Selection, ExitKind::Numerical] {
        let failed: Vec<String> = models
            .iter()
            .filter(|m| m.failure.as_ref().is_some_and(|f| f.kind == kind))
            .map(|m| m.label())
            .collect();
        if !failed.is_empty() {
            return Err(anyhow!("failed series: {}", failed.join(", "))).context(kind);
        }
    }
    Ok(())
}

fn model_inputs(cfg: &RunConfig) -> Result<(Events, BTreeMap<Granularity, SeriesBundle>)> {
    let events = load_events(cfg)?;
    let bundles = build_bundles(cfg, &events.rows)?;
    Ok((events, bundles))
}

/// Order selection only: `orders.csv` plus a trace per series.
pub fn cmd_select(cfg: &RunConfig) -> Result<Vec<ModelSummary>> {
    let (events, bundles) = model_inputs(cfg)?;
    run_models(cfg, &events, &bundles, Stage::Select, None)
}

/// Fits each series with `orders`, or with selected orders when absent.
pub fn cmd_fit(cfg: &RunConfig, orders: Option<ArdlOrders>) -> Result<Vec<ModelSummary>> {
    let (events, bundles) = model_inputs(cfg)?;
    run_models(cfg, &events, &bundles, Stage::Fit, orders)
}

/// Fit plus the residual battery.
pub fn cmd_diagnose(cfg: &RunConfig, orders: Option<ArdlOrders>) -> Result<Vec<ModelSummary>> {
    let (events, bundles) = model_inputs(cfg)?;
    run_models(cfg, &events, &bundles, Stage::Diagnose, orders)
}

/// Everything: ingest outputs, series, descriptive reports, every model.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<Vec<ModelSummary>> {
    let events = match &cfg.snapshot_path {
        Some(_) if cfg.events_path.is_none() => cmd_ingest(cfg)?,
        _ => {
            let events = load_events(cfg)?;
            write_ingest_outputs(cfg, &events)?;
            events
        }
    };
    let bundles = build_bundles(cfg, &events.rows)?;
    write_bundles(cfg, &bundles)?;
    write_reports(cfg, &bundles)?;
    run_models(cfg, &events, &bundles, Stage::Diagnose, None)
}

/// Rejects output directories that would overwrite the input snapshot.
pub fn check_output_dir(cfg: &RunConfig) -> Result<()> {
    if let Some(snapshot) = &cfg.snapshot_path {
        if snapshot == &cfg.output_dir {
            bail!("output_dir must differ from snapshot_path");
        }
    }
    Ok(())
}
