//! Period aggregation of event rows into the five modelled series.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Datelike, Days, IsoWeek, Months, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::osv::{Ecosystem, EventRow, RecordKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Daily,
    Weekly,
    Monthly,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [
        Granularity::Daily,
        Granularity::Weekly,
        Granularity::Monthly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Daily => "daily",
            Granularity::Weekly => "weekly",
            Granularity::Monthly => "monthly",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "daily" | "day" | "d" => Ok(Granularity::Daily),
            "weekly" | "week" | "w" => Ok(Granularity::Weekly),
            "monthly" | "month" | "m" => Ok(Granularity::Monthly),
            other => Err(Error::InvalidArgument(format!(
                "unknown granularity {other:?}"
            ))),
        }
    }
}

/// Which ISO weeks make up the weekly index of a date window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeekPolicy {
    /// Weeks whose Thursday lies inside the window, i.e. the weeks ISO-8601
    /// assigns to the window's months. 2022-01-01..2025-03-31 gives 2022-W01..2025-W13.
    #[default]
    IsoThursday,
    /// Every week that overlaps the window, partial boundary weeks included.
    Overlapping,
}

/// A single aggregation period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    Day(NaiveDate),
    /// ISO week, identified by its Monday.
    Week(NaiveDate),
    Month {
        year: i32,
        month: u32,
    },
}

impl Period {
    pub fn containing(granularity: Granularity, date: NaiveDate) -> Self {
        match granularity {
            Granularity::Daily => Period::Day(date),
            Granularity::Weekly => Period::Week(monday_of(date.iso_week())),
            Granularity::Monthly => Period::Month {
                year: date.year(),
                month: date.month(),
            },
        }
    }

    pub fn first_day(self) -> NaiveDate {
        match self {
            Period::Day(d) | Period::Week(d) => d,
            Period::Month { year, month } => NaiveDate::from_ymd_opt(year, month, 1).unwrap(),
        }
    }

    pub fn last_day(self) -> NaiveDate {
        match self {
            Period::Day(d) => d,
            Period::Week(d) => d + Days::new(6),
            Period::Month { .. } => self.next().first_day().pred_opt().unwrap(),
        }
    }

    pub fn next(self) -> Self {
        match self {
            Period::Day(d) => Period::Day(d + Days::new(1)),
            Period::Week(d) => Period::Week(d + Days::new(7)),
            Period::Month { .. } => {
                let d = self.first_day() + Months::new(1);
                Period::Month {
                    year: d.year(),
                    month: d.month(),
                }
            }
        }
    }

    pub fn granularity(self) -> Granularity {
        match self {
            Period::Day(_) => Granularity::Daily,
            Period::Week(_) => Granularity::Weekly,
            Period::Month { .. } => Granularity::Monthly,
        }
    }
}

fn monday_of(week: IsoWeek) -> NaiveDate {
    NaiveDate::from_isoywd_opt(week.year(), week.week(), Weekday::Mon).unwrap()
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Day(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Period::Week(d) => {
                let w = d.iso_week();
                write!(f, "{:04}-W{:02}", w.year(), w.week())
            }
            Period::Month { year, month } => write!(f, "{year:04}-{month:02}"),
        }
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad period label {s:?}"));
        if let Some((year, week)) = s.split_once("-W") {
            let year: i32 = year.parse().map_err(|_| bad())?;
            let week: u32 = week.parse().map_err(|_| bad())?;
            return NaiveDate::from_isoywd_opt(year, week, Weekday::Mon)
                .map(Period::Week)
                .ok_or_else(bad);
        }
        match s.len() {
            10 => NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map(Period::Day)
                .map_err(|_| bad()),
            7 => {
                let (y, m) = s.split_once('-').ok_or_else(bad)?;
                let year: i32 = y.parse().map_err(|_| bad())?;
                let month: u32 = m.parse().map_err(|_| bad())?;
                if !(1..=12).contains(&month) {
                    return Err(bad());
                }
                Ok(Period::Month { year, month })
            }
            _ => Err(bad()),
        }
    }
}

/// Gap-free period index for a window.
pub fn period_index(
    granularity: Granularity,
    window_start: NaiveDate,
    window_end: NaiveDate,
    week_policy: WeekPolicy,
) -> Result<Vec<Period>> {
    if window_start > window_end {
        return Err(Error::InvalidArgument(format!(
            "window start {window_start} is after window end {window_end}"
        )));
    }
    let (mut first, last) = (
        Period::containing(granularity, window_start),
        Period::containing(granularity, window_end),
    );
    let mut last = last;
    if granularity == Granularity::Weekly && week_policy == WeekPolicy::IsoThursday {
        let thursday = |p: Period| p.first_day() + Days::new(3);
        if thursday(first) < window_start {
            first = first.next();
        }
        if thursday(last) > window_end {
            last = Period::Week(last.first_day() - Days::new(7));
        }
    }
    let mut out = Vec::new();
    let mut p = first;
    while p <= last {
        out.push(p);
        p = p.next();
    }
    Ok(out)
}

/// The five aligned series at one granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBundle {
    pub granularity: Granularity,
    pub periods: Vec<Period>,
    /// Malware entries per period.
    pub mal_freq: Vec<u64>,
    /// Malware entries as a percentage of all entries; 0 for empty periods.
    pub mal_share: Vec<f64>,
    /// Number of ecosystems with at least one malware entry.
    pub eco: Vec<u8>,
    /// ADVISORY references on malware entries.
    pub adv: Vec<u64>,
    /// ARTICLE references on malware entries.
    pub art: Vec<u64>,
}

impl SeriesBundle {
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    fn zeros(granularity: Granularity, periods: Vec<Period>) -> Self {
        let n = periods.len();
        SeriesBundle {
            granularity,
            periods,
            mal_freq: vec![0; n],
            mal_share: vec![0.0; n],
            eco: vec![0; n],
            adv: vec![0; n],
            art: vec![0; n],
        }
    }
}

pub fn aggregate(
    rows: &[EventRow],
    granularity: Granularity,
    window_start: NaiveDate,
    window_end: NaiveDate,
) -> Result<SeriesBundle> {
    aggregate_with_policy(
        rows,
        granularity,
        window_start,
        window_end,
        WeekPolicy::default(),
    )
}

/// Aggregates rows dated inside the window into a gap-free bundle.
///
/// Rows outside the window, or in a boundary week excluded by `week_policy`,
/// are ignored.
pub fn aggregate_with_policy(
    rows: &[EventRow],
    granularity: Granularity,
    window_start: NaiveDate,
    window_end: NaiveDate,
    week_policy: WeekPolicy,
) -> Result<SeriesBundle> {
    let periods = period_index(granularity, window_start, window_end, week_policy)?;
    let mut bundle = SeriesBundle::zeros(granularity, periods);
    let Some(&first) = bundle.periods.first() else {
        return Ok(bundle);
    };

    let n = bundle.len();
    let mut totals = vec![0u64; n];
    let mut ecosystems: Vec<BTreeSet<Ecosystem>> = vec![BTreeSet::new(); n];

    for row in rows {
        if row.date < window_start || row.date > window_end {
            continue;
        }
        let Some(t) = position(first, Period::containing(granularity, row.date)) else {
            continue;
        };
        if t >= n {
            continue;
        }
        totals[t] += 1;
        if row.kind == RecordKind::Malware {
            bundle.mal_freq[t] += 1;
            bundle.adv[t] += u64::from(row.advisory_count);
            bundle.art[t] += u64::from(row.article_count);
            ecosystems[t].insert(row.ecosystem);
        }
    }

    for t in 0..n {
        bundle.eco[t] = ecosystems[t].len() as u8;
        bundle.mal_share[t] = if totals[t] == 0 {
            0.0
        } else {
            100.0 * bundle.mal_freq[t] as f64 / totals[t] as f64
        };
    }
    Ok(bundle)
}

// Offset of `p` from `first` in periods, None if before it.
fn position(first: Period, p: Period) -> Option<usize> {
    let offset = match (first, p) {
        (Period::Day(a), Period::Day(b)) => (b - a).num_days(),
        (Period::Week(a), Period::Week(b)) => (b - a).num_days() / 7,
        (
            Period::Month {
                year: y0,
                month: m0,
            },
            Period::Month { year, month },
        ) => i64::from(year - y0) * 12 + i64::from(month) - i64::from(m0),
        _ => return None,
    };
    usize::try_from(offset).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub name: String,
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl SeriesSummary {
    pub fn of(name: &str, values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        SeriesSummary {
            name: name.to_owned(),
            median: median_sorted(&sorted),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        }
    }
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptiveReport {
    pub granularity: Granularity,
    pub periods: usize,
    pub series: Vec<SeriesSummary>,
    pub moving_average_window: usize,
    pub mal_share_moving_average: Vec<f64>,
}

pub const DEFAULT_MOVING_AVERAGE: usize = 9;

/// Median, mean and range of each series plus a centred moving average of
/// the malware share.
pub fn descriptive_report(bundle: &SeriesBundle, ma_window: usize) -> Result<DescriptiveReport> {
    if bundle.is_empty() {
        return Err(Error::InvalidArgument("empty series bundle".into()));
    }
    if ma_window == 0 {
        return Err(Error::InvalidArgument(
            "moving-average window must be positive".into(),
        ));
    }
    let as_f64 = |v: &[u64]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    let eco: Vec<f64> = bundle.eco.iter().map(|&x| f64::from(x)).collect();
    let series = vec![
        SeriesSummary::of("mal_freq", &as_f64(&bundle.mal_freq)),
        SeriesSummary::of("mal_share", &bundle.mal_share),
        SeriesSummary::of("eco", &eco),
        SeriesSummary::of("adv", &as_f64(&bundle.adv)),
        SeriesSummary::of("art", &as_f64(&bundle.art)),
    ];
    Ok(DescriptiveReport {
        granularity: bundle.granularity,
        periods: bundle.len(),
        series,
        moving_average_window: ma_window,
        mal_share_moving_average: centered_moving_average(&bundle.mal_share, ma_window),
    })
}

/// Centred moving average; the window shrinks at the edges.
/// For an even `window` the extra point is taken from the past.
pub fn centered_moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let back = window / 2;
    let ahead = (window - 1) / 2;
    (0..values.len())
        .map(|t| {
            let lo = t.saturating_sub(back);
            let hi = (t + ahead).min(values.len() - 1);
            let slice = &values[lo..=hi];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub ecosystem: Ecosystem,
    pub all_entries: u64,
    pub malware_entries: u64,
    pub malware_share: f64,
}

/// Per-ecosystem entry counts over all rows, one row per studied ecosystem.
pub fn ecosystem_breakdown(rows: &[EventRow]) -> Vec<BreakdownRow> {
    Ecosystem::STUDIED
        .iter()
        .map(|&eco| {
            let (all, mal) = rows
                .iter()
                .filter(|r| r.ecosystem == eco)
                .fold((0u64, 0u64), |(a, m), r| {
                    (a + 1, m + u64::from(r.kind == RecordKind::Malware))
                });
            BreakdownRow {
                ecosystem: eco,
                all_entries: all,
                malware_entries: mal,
                malware_share: if all == 0 {
                    0.0
                } else {
                    100.0 * mal as f64 / all as f64
                },
            }
        })
        .collect()
}

/// Writes the breakdown in table layout, shares rounded to two decimals.
pub fn write_breakdown_csv<W: Write>(rows: &[BreakdownRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "ecosystem",
        "all_entries",
        "malware_entries",
        "malware_share",
    ])?;
    for r in rows {
        w.write_record([
            r.ecosystem.to_string(),
            r.all_entries.to_string(),
            r.malware_entries.to_string(),
            format!("{:.2}", r.malware_share),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<breakdown csv>", e))?;
    Ok(())
}

pub const SERIES_CSV_HEADER: [&str; 6] = ["period", "mal_freq", "mal_share", "eco", "adv", "art"];

pub fn write_series_csv<W: Write>(bundle: &SeriesBundle, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_CSV_HEADER)?;
    for t in 0..bundle.len() {
        w.write_record([
            bundle.periods[t].to_string(),
            bundle.mal_freq[t].to_string(),
            bundle.mal_share[t].to_string(),
            bundle.eco[t].to_string(),
            bundle.adv[t].to_string(),
            bundle.art[t].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<series csv>", e))?;
    Ok(())
}

pub fn read_series_csv<R: Read>(input: R) -> Result<SeriesBundle> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(SERIES_CSV_HEADER) {
        return Err(Error::Schema(format!(
            "unexpected series header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut periods = Vec::new();
    let mut bundle = SeriesBundle::zeros(Granularity::Daily, Vec::new());
    let num = |s: &str| -> Result<u64> {
        s.parse()
            .map_err(|_| Error::Schema(format!("bad count {s:?}")))
    };
    for rec in r.records() {
        let rec = rec?;
        let period: Period = rec[0].parse()?;
        if let Some(prev) = periods.last() {
            if period != Period::next(*prev) {
                return Err(Error::Schema(format!(
                    "period {period} does not follow {prev}"
                )));
            }
        }
        periods.push(period);
        bundle.mal_freq.push(num(&rec[1])?);
        bundle.mal_share.push(
            rec[2]
                .parse()
                .map_err(|_| Error::Schema(format!("bad share {:?}", &rec[2])))?,
        );
        let eco = num(&rec[3])?;
        if eco > 6 {
            return Err(Error::Schema(format!("eco count {eco} exceeds 6")));
        }
        bundle.eco.push(eco as u8);
        bundle.adv.push(num(&rec[4])?);
        bundle.art.push(num(&rec[5])?);
    }
    bundle.granularity = periods
        .first()
        .map(|p| p.granularity())
        .ok_or_else(|| Error::Schema("series csv has no rows".into()))?;
    bundle.periods = periods;
    Ok(bundle)
}
