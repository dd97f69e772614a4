//! OSV record ingestion.
//!
//! Reads records in the public OSV JSON layout (one document per record),
//! either from a directory tree or from zip archives such as the bulk
//! `<Ecosystem>/all.zip` exports, and flattens them into [`EventRow`]s for
//! the six studied package ecosystems.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// Package ecosystem named in an OSV `affected[].package.ecosystem` field.
///
/// Ordering follows the alphabetical (case-insensitive) order of the names,
/// with [`Ecosystem::Other`] last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ecosystem {
    #[serde(rename = "CRAN")]
    Cran,
    #[serde(rename = "Go")]
    Go,
    #[serde(rename = "Maven")]
    Maven,
    #[serde(rename = "npm")]
    Npm,
    #[serde(rename = "PyPI")]
    PyPi,
    #[serde(rename = "RubyGems")]
    RubyGems,
    #[serde(other, rename = "Other")]
    Other,
}

impl Ecosystem {
    pub const STUDIED: [Ecosystem; 6] = [
        Ecosystem::Cran,
        Ecosystem::Go,
        Ecosystem::Maven,
        Ecosystem::Npm,
        Ecosystem::PyPi,
        Ecosystem::RubyGems,
    ];

    /// Maps an OSV ecosystem string onto a variant. Suffixes such as
    /// `Debian:11` are stripped before matching; matching is case-sensitive.
    pub fn parse(name: &str) -> Self {
        let base = name.split(':').next().unwrap_or("").trim();
        match base {
            "CRAN" => Ecosystem::Cran,
            "Go" => Ecosystem::Go,
            "Maven" => Ecosystem::Maven,
            "npm" => Ecosystem::Npm,
            "PyPI" => Ecosystem::PyPi,
            "RubyGems" => Ecosystem::RubyGems,
            _ => Ecosystem::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ecosystem::Cran => "CRAN",
            Ecosystem::Go => "Go",
            Ecosystem::Maven => "Maven",
            Ecosystem::Npm => "npm",
            Ecosystem::PyPi => "PyPI",
            Ecosystem::RubyGems => "RubyGems",
            Ecosystem::Other => "Other",
        }
    }

    pub fn is_studied(self) -> bool {
        self != Ecosystem::Other
    }
}

impl fmt::Display for Ecosystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ecosystem {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(Ecosystem::parse(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Malware,
    Vulnerability,
}

impl RecordKind {
    pub const MALWARE_PREFIX: &'static str = "MAL-";

    pub fn from_id(id: &str) -> Self {
        if id.starts_with(Self::MALWARE_PREFIX) {
            RecordKind::Malware
        } else {
            RecordKind::Vulnerability
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Malware => "malware",
            RecordKind::Vulnerability => "vulnerability",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub ref_type: String,
    pub url: String,
}

/// One parsed OSV entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OsvRecord {
    pub id: String,
    /// Ecosystem of the first affected package; `Other` when nothing is listed.
    pub ecosystem: Ecosystem,
    /// Distinct ecosystems over all affected packages, in order of appearance.
    pub ecosystems: Vec<Ecosystem>,
    pub published: Option<NaiveDate>,
    pub modified: Option<NaiveDate>,
    pub withdrawn: bool,
    pub references: Vec<Reference>,
}

impl OsvRecord {
    /// Date used to place the record in time: `published`, else `modified`.
    pub fn event_date(&self) -> NaiveDate {
        self.published
            .or(self.modified)
            .expect("parse_record guarantees at least one date")
    }

    pub fn kind(&self) -> RecordKind {
        classify_record(self)
    }

    pub fn studied_ecosystems(&self) -> impl Iterator<Item = Ecosystem> + '_ {
        self.ecosystems.iter().copied().filter(|e| e.is_studied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReferenceCounts {
    pub advisory: u32,
    pub article: u32,
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    published: Option<String>,
    modified: Option<String>,
    withdrawn: Option<String>,
    affected: Option<Vec<RawAffected>>,
    references: Option<Vec<RawReference>>,
}

#[derive(Deserialize)]
struct RawAffected {
    package: Option<RawPackage>,
}

#[derive(Deserialize)]
struct RawPackage {
    ecosystem: Option<String>,
}

#[derive(Deserialize)]
struct RawReference {
    #[serde(rename = "type")]
    ref_type: Option<String>,
    url: Option<String>,
}

/// Parses a single OSV JSON document.
pub fn parse_record(json_text: &str) -> Result<OsvRecord> {
    let raw: RawRecord = serde_json::from_str(json_text).map_err(|e| Error::Json {
        offset: byte_offset(json_text, e.line(), e.column()),
        message: e.to_string(),
    })?;

    let id = raw
        .id
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Schema("missing `id`".into()))?;

    let published = raw
        .published
        .as_deref()
        .map(|s| parse_osv_date(s).ok_or_else(|| bad_date(&id, "published", s)))
        .transpose()?;
    let modified = raw
        .modified
        .as_deref()
        .map(|s| parse_osv_date(s).ok_or_else(|| bad_date(&id, "modified", s)))
        .transpose()?;
    if published.is_none() && modified.is_none() {
        return Err(Error::Schema(format!(
            "{id}: neither `published` nor `modified` present"
        )));
    }
    if let (Some(p), Some(m)) = (published, modified) {
        if p > m {
            return Err(Error::Schema(format!(
                "{id}: published {p} is after modified {m}"
            )));
        }
    }

    let mut ecosystems = Vec::new();
    for affected in raw.affected.unwrap_or_default() {
        let eco = affected
            .package
            .and_then(|p| p.ecosystem)
            .map(|name| Ecosystem::parse(&name))
            .unwrap_or(Ecosystem::Other);
        if !ecosystems.contains(&eco) {
            ecosystems.push(eco);
        }
    }
    let ecosystem = ecosystems.first().copied().unwrap_or(Ecosystem::Other);

    let references = raw
        .references
        .unwrap_or_default()
        .into_iter()
        .map(|r| Reference {
            ref_type: r.ref_type.unwrap_or_else(|| "OTHER".to_owned()),
            url: r.url.unwrap_or_default(),
        })
        .collect();

    Ok(OsvRecord {
        id,
        ecosystem,
        ecosystems,
        published,
        modified,
        withdrawn: raw.withdrawn.is_some(),
        references,
    })
}

fn bad_date(id: &str, field: &str, value: &str) -> Error {
    Error::Schema(format!("{id}: unparseable `{field}` timestamp {value:?}"))
}

/// Accepts RFC 3339 timestamps (converted to UTC), zone-less timestamps
/// (taken as UTC) and bare `YYYY-MM-DD` dates.
pub fn parse_osv_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc).date_naive());
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f") {
        return Some(dt.date());
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

// serde_json reports 1-based line/column; column 0 means "before the first byte".
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

pub fn classify_record(record: &OsvRecord) -> RecordKind {
    RecordKind::from_id(&record.id)
}

/// Counts `ADVISORY` and `ARTICLE` references. Matching is exact: OSV
/// reference types are upper-case.
pub fn count_references(record: &OsvRecord) -> ReferenceCounts {
    record
        .references
        .iter()
        .fold(ReferenceCounts::default(), |mut acc, r| {
            match r.ref_type.as_str() {
                "ADVISORY" => acc.advisory += 1,
                "ARTICLE" => acc.article += 1,
                _ => {}
            }
            acc
        })
}

/// One record in one studied ecosystem.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventRow {
    pub date: NaiveDate,
    pub ecosystem: Ecosystem,
    /// Source record id. Not part of the CSV layout; empty when read back from CSV.
    pub id: String,
    pub kind: RecordKind,
    pub advisory_count: u32,
    pub article_count: u32,
}

impl EventRow {
    fn sort_key(&self) -> (NaiveDate, Ecosystem, &str) {
        (self.date, self.ecosystem, &self.id)
    }
}

/// Expands a record into one row per distinct studied ecosystem.
pub fn event_rows(record: &OsvRecord) -> Vec<EventRow> {
    let counts = count_references(record);
    let kind = record.kind();
    let date = record.event_date();
    record
        .studied_ecosystems()
        .map(|ecosystem| EventRow {
            date,
            ecosystem,
            id: record.id.clone(),
            kind,
            advisory_count: counts.advisory,
            article_count: counts.article,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScanStats {
    pub files_seen: usize,
    pub records_parsed: usize,
    /// Unreadable files, malformed JSON and schema violations.
    pub skipped: usize,
    /// Parsed records with no affected package in a studied ecosystem.
    pub dropped_out_of_scope: usize,
    /// Records whose id was already seen in another file (e.g. listed under two ecosystems).
    pub duplicate_ids: usize,
}

#[derive(Debug, Clone)]
pub struct Scan {
    pub rows: Vec<EventRow>,
    pub stats: ScanStats,
}

enum Source {
    File(PathBuf),
    Zip(PathBuf),
}

/// Scans a snapshot directory (or a single zip archive) and returns sorted
/// event rows for the studied ecosystems.
///
/// Bad files are logged and counted in [`ScanStats::skipped`]; the scan only
/// fails when not a single record could be parsed.
pub fn scan_snapshot(root: &Path) -> Result<Scan> {
    let sources = collect_sources(root)?;

    // (source label, parse outcome); labels make the duplicate resolution deterministic.
    let parsed: Vec<(String, Result<OsvRecord>)> = sources
        .par_iter()
        .flat_map_iter(read_source)
        .collect();

    let mut stats = ScanStats {
        files_seen: parsed.len(),
        ..ScanStats::default()
    };
    let mut records = Vec::with_capacity(parsed.len());
    for (label, outcome) in parsed {
        match outcome {
            Ok(rec) => records.push((label, rec)),
            Err(e) => {
                warn!("skipping {label}: {e}");
                stats.skipped += 1;
            }
        }
    }
    stats.records_parsed = records.len();
    if records.is_empty() {
        return Err(Error::EmptySnapshot(root.to_path_buf()));
    }

    records.sort_by(|a, b| a.1.id.cmp(&b.1.id).then_with(|| a.0.cmp(&b.0)));
    let before = records.len();
    records.dedup_by(|later, first| later.1.id == first.1.id);
    stats.duplicate_ids = before - records.len();

    let mut rows = Vec::new();
    for (label, rec) in &records {
        let expanded = event_rows(rec);
        if expanded.is_empty() {
            debug!("dropping {} ({label}): ecosystem {}", rec.id, rec.ecosystem);
            stats.dropped_out_of_scope += 1;
        }
        rows.extend(expanded);
    }
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

    Ok(Scan { rows, stats })
}

fn collect_sources(root: &Path) -> Result<Vec<Source>> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if meta.is_file() {
        return Ok(vec![classify_path(root.to_path_buf())]);
    }
    let mut sources = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                warn!("cannot walk {}: {e}", root.display());
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.into_path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") | Some("zip") => sources.push(classify_path(path)),
            _ => {}
        }
    }
    Ok(sources)
}

fn classify_path(path: PathBuf) -> Source {
    if path.extension().and_then(|e| e.to_str()) == Some("zip") {
        Source::Zip(path)
    } else {
        Source::File(path)
    }
}

fn read_source(src: &Source) -> Vec<(String, Result<OsvRecord>)> {
    match src {
        Source::File(path) => {
            let label = path.display().to_string();
            let outcome = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path, e))
                .and_then(|text| parse_record(&text));
            vec![(label, outcome)]
        }
        Source::Zip(path) => read_zip(path),
    }
}

fn read_zip(path: &Path) -> Vec<(String, Result<OsvRecord>)> {
    let label = path.display().to_string();
    let archive = File::open(path)
        .map_err(|e| Error::io(path, e))
        .and_then(|f| {
            zip::ZipArchive::new(f).map_err(|e| {
                Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::InvalidData, e),
                )
            })
        });
    let mut archive = match archive {
        Ok(a) => a,
        Err(e) => return vec![(label, Err(e))],
    };

    let mut entries = Vec::new();
    for i in 0..archive.len() {
        let mut file = match archive.by_index(i) {
            Ok(f) => f,
            Err(e) => {
                let err = std::io::Error::new(std::io::ErrorKind::InvalidData, e);
                entries.push((format!("{label}#{i}"), Err(Error::io(path, err))));
                continue;
            }
        };
        if !file.is_file() || !file.name().ends_with(".json") {
            continue;
        }
        let entry_label = format!("{label}!{}", file.name());
        let mut text = String::new();
        let outcome = file
            .read_to_string(&mut text)
            .map_err(|e| Error::io(path, e))
            .map(|_| text);
        entries.push((entry_label, outcome));
    }
    entries
        .into_par_iter()
        .map(|(l, text)| (l, text.and_then(|t| parse_record(&t))))
        .collect()
}

pub const EVENTS_CSV_HEADER: [&str; 5] = [
    "date",
    "ecosystem",
    "kind",
    "advisory_count",
    "article_count",
];

#[derive(Serialize, Deserialize)]
struct EventCsvRow {
    date: NaiveDate,
    ecosystem: Ecosystem,
    kind: RecordKind,
    advisory_count: u32,
    article_count: u32,
}

pub fn write_events_csv<W: Write>(rows: &[EventRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(EventCsvRow {
            date: r.date,
            ecosystem: r.ecosystem,
            kind: r.kind,
            advisory_count: r.advisory_count,
            article_count: r.article_count,
        })?;
    }
    if rows.is_empty() {
        w.write_record(EVENTS_CSV_HEADER)?;
    }
    w.flush().map_err(|e| Error::io("<events csv>", e))?;
    Ok(())
}

pub fn read_events_csv<R: Read>(input: R) -> Result<Vec<EventRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(EVENTS_CSV_HEADER) {
        return Err(Error::Schema(format!(
            "unexpected events header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    r.deserialize::<EventCsvRow>()
        .map(|row| {
            let row = row?;
            Ok(EventRow {
                date: row.date,
                ecosystem: row.ecosystem,
                id: String::new(),
                kind: row.kind,
                advisory_count: row.advisory_count,
                article_count: row.article_count,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, refs: &[&str]) -> String {
        let refs: Vec<String> = refs
            .iter()
            .map(|t| format!(r#"{{"type":"{t}","url":"https://example.org/{t}"}}"#))
            .collect();
        format!(
            r#"{{"id":"{id}","published":"2024-01-02T10:00:00Z","modified":"2024-02-01T00:00:00Z",
               "affected":[{{"package":{{"ecosystem":"npm","name":"left-pad-2"}}}}],
               "references":[{}]}}"#,
            refs.join(",")
        )
    }

    #[test]
    fn parses_malware_id() {
        let r = parse_record(&rec("MAL-2024-226", &[])).unwrap();
        assert_eq!(r.id, "MAL-2024-226");
        assert_eq!(r.ecosystem, Ecosystem::Npm);
        assert_eq!(r.published, NaiveDate::from_ymd_opt(2024, 1, 2));
        assert_eq!(classify_record(&r), RecordKind::Malware);
        assert_eq!(count_references(&r), ReferenceCounts::default());
    }

    #[test]
    fn classification_prefix_boundary() {
        assert_eq!(RecordKind::from_id("MAL-2024-226"), RecordKind::Malware);
        assert_eq!(
            RecordKind::from_id("GHSA-xxxx-xxxx-xxxx"),
            RecordKind::Vulnerability
        );
        assert_eq!(
            RecordKind::from_id("MALFORMED-1"),
            RecordKind::Vulnerability
        );
        assert_eq!(RecordKind::from_id("mal-2024-1"), RecordKind::Vulnerability);
    }

    #[test]
    fn reference_counting_is_exact_case() {
        let r = parse_record(&rec("X-1", &["ADVISORY", "ADVISORY", "ARTICLE"])).unwrap();
        assert_eq!(
            count_references(&r),
            ReferenceCounts {
                advisory: 2,
                article: 1
            }
        );
        let r = parse_record(&rec("X-2", &["WEB", "REPORT"])).unwrap();
        assert_eq!(count_references(&r), ReferenceCounts::default());
        let r = parse_record(&rec("X-3", &["advisory"])).unwrap();
        assert_eq!(count_references(&r), ReferenceCounts::default());
    }

    #[test]
    fn truncated_document_is_a_parse_error() {
        let full = rec("MAL-1", &["ADVISORY"]);
        let cut = &full[..full.len() / 2];
        match parse_record(cut) {
            Err(Error::Json { offset, .. }) => assert!(offset <= cut.len()),
            other => panic!("expected json error, got {other:?}"),
        }
    }

    #[test]
    fn byte_offset_points_at_bad_token() {
        let text = "{\n  \"id\": \"A\",\n  oops\n}";
        match parse_record(text) {
            Err(Error::Json { offset, .. }) => assert_eq!(&text[offset..offset + 1], "o"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(
            parse_record(r#"{"published":"2024-01-01T00:00:00Z"}"#),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_record(r#"{"id":"  "}"#),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_record(r#"{"id":"A-1"}"#),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_record(r#"{"id":"A-1","published":"last tuesday"}"#),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn missing_reference_type_becomes_other() {
        let r = parse_record(
            r#"{"id":"A-1","modified":"2023-05-06T00:00:00Z","references":[{"url":"u"}]}"#,
        )
        .unwrap();
        assert_eq!(r.references[0].ref_type, "OTHER");
        assert_eq!(r.event_date(), NaiveDate::from_ymd_opt(2023, 5, 6).unwrap());
        assert_eq!(r.ecosystem, Ecosystem::Other);
    }

    #[test]
    fn timestamps_are_normalised_to_utc() {
        assert_eq!(
            parse_osv_date("2024-01-01T23:30:00-02:00"),
            NaiveDate::from_ymd_opt(2024, 1, 2)
        );
        assert_eq!(
            parse_osv_date("2024-01-01"),
            NaiveDate::from_ymd_opt(2024, 1, 1)
        );
        assert_eq!(
            parse_osv_date("2024-01-01T05:00:00.123456"),
            NaiveDate::from_ymd_opt(2024, 1, 1)
        );
    }

    #[test]
    fn multi_ecosystem_record_yields_one_row_per_studied_ecosystem() {
        let r = parse_record(
            r#"{"id":"MAL-9","published":"2024-03-01T00:00:00Z","affected":[
                {"package":{"ecosystem":"PyPI","name":"a"}},
                {"package":{"ecosystem":"crates.io","name":"a"}},
                {"package":{"ecosystem":"PyPI","name":"b"}},
                {"package":{"ecosystem":"npm","name":"a"}}]}"#,
        )
        .unwrap();
        assert_eq!(r.ecosystem, Ecosystem::PyPi);
        let rows = event_rows(&r);
        let ecos: Vec<_> = rows.iter().map(|r| r.ecosystem).collect();
        assert_eq!(ecos, vec![Ecosystem::PyPi, Ecosystem::Npm]);
    }

    #[test]
    fn ecosystem_parsing_is_total() {
        for e in Ecosystem::STUDIED {
            assert_eq!(Ecosystem::parse(e.as_str()), e);
        }
        assert_eq!(Ecosystem::parse("crates.io"), Ecosystem::Other);
        assert_eq!(Ecosystem::parse("pypi"), Ecosystem::Other);
        assert_eq!(Ecosystem::parse("Maven:https://repo1"), Ecosystem::Maven);
        assert_eq!(Ecosystem::parse(""), Ecosystem::Other);
    }

    #[test]
    fn events_csv_round_trip() {
        let rows = vec![EventRow {
            date: NaiveDate::from_ymd_opt(2024, 1, 2).unwrap(),
            ecosystem: Ecosystem::PyPi,
            id: String::new(),
            kind: RecordKind::Malware,
            advisory_count: 1,
            article_count: 2,
        }];
        let mut buf = Vec::new();
        write_events_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "date,ecosystem,kind,advisory_count,article_count\n2024-01-02,PyPI,malware,1,2\n"
        );
        assert_eq!(read_events_csv(buf.as_slice()).unwrap(), rows);
    }
}
