//! Parsers for the on-disk stream formats: a mixed-kind JSONL file per
//! participant, or CSV files for accel/GPS plus JSONL self-reports.
//!
//! Malformed or invariant-violating rows are rejected individually and
//! reported with their line numbers; a stream where more than half of the
//! rows are rejected fails as a whole.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geocell::GeoPoint;
use crate::ingest::{
    AccelSample, GpsSample, MealType, Participant, ReportKind, SelfReportEvent, SensorStream,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamFormat {
    /// One `<pid>.jsonl` per participant, all record kinds mixed.
    Jsonl,
    /// `<pid>.accel.csv` + `<pid>.gps.csv` + `<pid>.reports.jsonl`.
    Csv,
}

/// A rejected input row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowError {
    pub file: String,
    pub line: usize,
    pub message: String,
}

/// Per-stream parse accounting.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParseReport {
    pub accepted: usize,
    pub rejected: Vec<RowError>,
}

impl ParseReport {
    fn reject(&mut self, file: &Path, line: usize, message: impl Into<String>) {
        self.rejected.push(RowError {
            file: file.display().to_string(),
            line,
            message: message.into(),
        });
    }

    fn check_reject_ratio(&self) -> Result<()> {
        let total = self.accepted + self.rejected.len();
        if total > 0 && self.rejected.len() * 2 > total {
            return Err(Error::validation(format!(
                "{} of {} rows rejected (more than half); first: {}",
                self.rejected.len(),
                total,
                self.rejected[0].message
            )));
        }
        Ok(())
    }
}

pub struct ParseOutcome {
    pub stream: SensorStream,
    pub report: ParseReport,
}

/// JSONL record shape: `pid`, `t`, `kind` plus the kind-specific payload.
#[derive(Debug, Deserialize)]
struct RawRecord {
    pid: String,
    t: i64,
    kind: String,
    #[serde(default)]
    x: Option<f64>,
    #[serde(default)]
    y: Option<f64>,
    #[serde(default)]
    z: Option<f64>,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
    #[serde(default)]
    accuracy_m: Option<f64>,
    #[serde(default)]
    event: Option<ReportKind>,
    #[serde(default)]
    meal_type: Option<MealType>,
    #[serde(default)]
    food_category: Option<String>,
    #[serde(default)]
    photo_ref: Option<String>,
}

/// Sequences under construction, with per-kind monotonicity enforcement.
#[derive(Default)]
struct Builder {
    accel: Vec<AccelSample>,
    gps: Vec<GpsSample>,
    reports: Vec<SelfReportEvent>,
}

impl Builder {
    fn push_accel(&mut self, s: AccelSample) -> std::result::Result<(), String> {
        if let Some(last) = self.accel.last() {
            if s.t <= last.t {
                return Err(format!("non-monotone accel timestamp {}", s.t));
            }
        }
        self.accel.push(s);
        Ok(())
    }

    fn push_gps(&mut self, s: GpsSample) -> std::result::Result<(), String> {
        if let Some(last) = self.gps.last() {
            if s.t <= last.t {
                return Err(format!("non-monotone gps timestamp {}", s.t));
            }
        }
        self.gps.push(s);
        Ok(())
    }

    fn push_report(&mut self, s: SelfReportEvent) -> std::result::Result<(), String> {
        if let Some(last) = self.reports.last() {
            if s.t <= last.t {
                return Err(format!("non-monotone report timestamp {}", s.t));
            }
        }
        self.reports.push(s);
        Ok(())
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(f).lines())
}

fn ingest_jsonl(path: &Path, expected_pid: &str, b: &mut Builder, report: &mut ParseReport) -> Result<()> {
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                report.reject(path, line_no, format!("malformed record: {e}"));
                continue;
            }
        };
        if raw.pid != expected_pid {
            report.reject(path, line_no, format!("pid {:?} does not match stream {expected_pid:?}", raw.pid));
            continue;
        }
        let outcome = match raw.kind.as_str() {
            "accel" => match (raw.x, raw.y, raw.z) {
                (Some(x), Some(y), Some(z)) => {
                    let s = AccelSample { t: raw.t, x, y, z };
                    s.validate()
                        .map_err(|e| e.to_string())
                        .and_then(|_| b.push_accel(s))
                }
                _ => Err("accel record missing x/y/z".into()),
            },
            "gps" => match (raw.lat, raw.lon) {
                (Some(lat), Some(lon)) => GeoPoint::new(lat, lon)
                    .map_err(|e| e.to_string())
                    .and_then(|point| {
                        let s = GpsSample {
                            t: raw.t,
                            point,
                            accuracy_m: raw.accuracy_m.unwrap_or(0.0),
                        };
                        s.validate().map_err(|e| e.to_string())?;
                        b.push_gps(s)
                    }),
                _ => Err("gps record missing lat/lon".into()),
            },
            "report" => match raw.event {
                Some(kind) => {
                    let s = SelfReportEvent {
                        t: raw.t,
                        kind,
                        meal_type: raw.meal_type,
                        food_category: raw.food_category,
                        photo_ref: raw.photo_ref,
                    };
                    s.validate()
                        .map_err(|e| e.to_string())
                        .and_then(|_| b.push_report(s))
                }
                None => Err("report record missing event".into()),
            },
            other => Err(format!("unknown record kind {other:?}")),
        };
        match outcome {
            Ok(()) => report.accepted += 1,
            Err(msg) => report.reject(path, line_no, msg),
        }
    }
    Ok(())
}

fn ingest_accel_csv(path: &Path, expected_pid: &str, b: &mut Builder, report: &mut ParseReport) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    for (idx, row) in rdr.records().enumerate() {
        let line_no = idx + 2; // header is line 1
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.reject(path, line_no, format!("malformed row: {e}"));
                continue;
            }
        };
        let parsed = parse_accel_row(&row, expected_pid).and_then(|s| b.push_accel(s));
        match parsed {
            Ok(()) => report.accepted += 1,
            Err(msg) => report.reject(path, line_no, msg),
        }
    }
    Ok(())
}

fn parse_accel_row(row: &csv::StringRecord, expected_pid: &str) -> std::result::Result<AccelSample, String> {
    if row.len() != 5 {
        return Err(format!("expected 5 fields, got {}", row.len()));
    }
    if &row[0] != expected_pid {
        return Err(format!("pid {:?} does not match stream {expected_pid:?}", &row[0]));
    }
    let t: i64 = row[1].parse().map_err(|e| format!("bad t: {e}"))?;
    let x: f64 = row[2].parse().map_err(|e| format!("bad x: {e}"))?;
    let y: f64 = row[3].parse().map_err(|e| format!("bad y: {e}"))?;
    let z: f64 = row[4].parse().map_err(|e| format!("bad z: {e}"))?;
    let s = AccelSample { t, x, y, z };
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

fn ingest_gps_csv(path: &Path, expected_pid: &str, b: &mut Builder, report: &mut ParseReport) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    for (idx, row) in rdr.records().enumerate() {
        let line_no = idx + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.reject(path, line_no, format!("malformed row: {e}"));
                continue;
            }
        };
        let parsed = parse_gps_row(&row, expected_pid).and_then(|s| b.push_gps(s));
        match parsed {
            Ok(()) => report.accepted += 1,
            Err(msg) => report.reject(path, line_no, msg),
        }
    }
    Ok(())
}

fn parse_gps_row(row: &csv::StringRecord, expected_pid: &str) -> std::result::Result<GpsSample, String> {
    if row.len() != 5 {
        return Err(format!("expected 5 fields, got {}", row.len()));
    }
    if &row[0] != expected_pid {
        return Err(format!("pid {:?} does not match stream {expected_pid:?}", &row[0]));
    }
    let t: i64 = row[1].parse().map_err(|e| format!("bad t: {e}"))?;
    let lat: f64 = row[2].parse().map_err(|e| format!("bad lat: {e}"))?;
    let lon: f64 = row[3].parse().map_err(|e| format!("bad lon: {e}"))?;
    let accuracy_m: f64 = row[4].parse().map_err(|e| format!("bad accuracy: {e}"))?;
    let point = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;
    let s = GpsSample { t, point, accuracy_m };
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

/// File names for one participant's stream in a corpus directory.
pub fn stream_paths(dir: &Path, pid: &str, format: StreamFormat) -> Vec<PathBuf> {
    match format {
        StreamFormat::Jsonl => vec![dir.join(format!("{pid}.jsonl"))],
        StreamFormat::Csv => vec![
            dir.join(format!("{pid}.accel.csv")),
            dir.join(format!("{pid}.gps.csv")),
            dir.join(format!("{pid}.reports.jsonl")),
        ],
    }
}

/// Parse one participant's stream from a single mixed-kind JSONL file.
pub fn parse_stream_jsonl(
    path: &Path,
    participant: Participant,
    gap_threshold_min: i64,
) -> Result<ParseOutcome> {
    let mut b = Builder::default();
    let mut report = ParseReport::default();
    ingest_jsonl(path, &participant.id.clone(), &mut b, &mut report)?;
    finish(participant, b, report, gap_threshold_min)
}

/// Parse one participant's stream from the CSV layout.
pub fn parse_stream_csv(
    dir: &Path,
    participant: Participant,
    gap_threshold_min: i64,
) -> Result<ParseOutcome> {
    let pid = participant.id.clone();
    let mut b = Builder::default();
    let mut report = ParseReport::default();
    let accel_path = dir.join(format!("{pid}.accel.csv"));
    let gps_path = dir.join(format!("{pid}.gps.csv"));
    let reports_path = dir.join(format!("{pid}.reports.jsonl"));
    if accel_path.exists() {
        ingest_accel_csv(&accel_path, &pid, &mut b, &mut report)?;
    }
    if gps_path.exists() {
        ingest_gps_csv(&gps_path, &pid, &mut b, &mut report)?;
    }
    if reports_path.exists() {
        ingest_jsonl(&reports_path, &pid, &mut b, &mut report)?;
    }
    finish(participant, b, report, gap_threshold_min)
}

/// Parse a stream in either format from a corpus directory.
pub fn load_stream(
    dir: &Path,
    participant: Participant,
    format: StreamFormat,
    gap_threshold_min: i64,
) -> Result<ParseOutcome> {
    match format {
        StreamFormat::Jsonl => {
            let path = dir.join(format!("{}.jsonl", participant.id));
            parse_stream_jsonl(&path, participant, gap_threshold_min)
        }
        StreamFormat::Csv => parse_stream_csv(dir, participant, gap_threshold_min),
    }
}

fn finish(
    participant: Participant,
    b: Builder,
    report: ParseReport,
    gap_threshold_min: i64,
) -> Result<ParseOutcome> {
    report.check_reject_ratio()?;
    let stream = SensorStream::new(participant, b.accel, b.gps, b.reports, gap_threshold_min)?;
    Ok(ParseOutcome { stream, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DeviceClass;
    use std::io::Write;

    fn participant() -> Participant {
        Participant {
            id: "p001".into(),
            age_band: "12-14".into(),
            gender: "m".into(),
            device_class: DeviceClass::Smartphone,
            school_calendar_id: "cal_a".into(),
            timezone: "Europe/Athens".into(),
            accel_rate_hz: 10.0,
        }
    }

    fn write_tmp(content: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p001.jsonl");
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn well_formed_file_parses_clean() {
        let content = r#"{"pid":"p001","t":1000,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
{"pid":"p001","t":61000,"kind":"gps","lat":40.6,"lon":22.9,"accuracy_m":8.0}
{"pid":"p001","t":120000,"kind":"report","event":"meal","meal_type":"lunch","food_category":"fast_food"}
"#;
        let (_d, path) = write_tmp(content);
        let out = parse_stream_jsonl(&path, participant(), 5).unwrap();
        assert_eq!(out.report.accepted, 3);
        assert!(out.report.rejected.is_empty());
        assert_eq!(out.stream.accel.len(), 1);
        assert_eq!(out.stream.gps.len(), 1);
        assert_eq!(out.stream.reports.len(), 1);
        assert!(out.stream.gaps.is_empty());
    }

    #[test]
    fn out_of_range_latitude_rejected_with_line() {
        let content = r#"{"pid":"p001","t":1000,"kind":"gps","lat":40.6,"lon":22.9,"accuracy_m":8.0}
{"pid":"p001","t":2000,"kind":"gps","lat":95.0,"lon":22.9,"accuracy_m":8.0}
{"pid":"p001","t":3000,"kind":"gps","lat":40.7,"lon":22.9,"accuracy_m":8.0}
"#;
        let (_d, path) = write_tmp(content);
        let out = parse_stream_jsonl(&path, participant(), 5).unwrap();
        assert_eq!(out.stream.gps.len(), 2);
        assert_eq!(out.report.rejected.len(), 1);
        assert_eq!(out.report.rejected[0].line, 2);
    }

    #[test]
    fn non_monotone_rejected_and_counted() {
        let content = r#"{"pid":"p001","t":5000,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
{"pid":"p001","t":4000,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
{"pid":"p001","t":6000,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
"#;
        let (_d, path) = write_tmp(content);
        let out = parse_stream_jsonl(&path, participant(), 5).unwrap();
        assert_eq!(out.stream.accel.len(), 2);
        assert_eq!(out.report.rejected.len(), 1);
        assert!(out.report.rejected[0].message.contains("non-monotone"));
    }

    #[test]
    fn majority_rejects_fail_stream() {
        let content = r#"{"pid":"p001","t":1000,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
not json at all
{"pid":"p001","t":900,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
"#;
        let (_d, path) = write_tmp(content);
        assert!(parse_stream_jsonl(&path, participant(), 5).is_err());
    }

    #[test]
    fn csv_layout_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("p001.accel.csv"),
            "pid,t,x,y,z\np001,1000,0.0,0.0,1.0\np001,1100,0.01,0.0,1.0\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("p001.gps.csv"),
            "pid,t,lat,lon,accuracy_m\np001,60000,40.6,22.9,8.0\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("p001.reports.jsonl"),
            "{\"pid\":\"p001\",\"t\":120000,\"kind\":\"report\",\"event\":\"meal\",\"meal_type\":\"dinner\"}\n",
        )
        .unwrap();
        let out = parse_stream_csv(dir.path(), participant(), 5).unwrap();
        assert_eq!(out.stream.accel.len(), 2);
        assert_eq!(out.stream.gps.len(), 1);
        assert_eq!(out.stream.reports.len(), 1);
        assert_eq!(out.report.accepted, 4);
    }

    #[test]
    fn gap_computed_from_parsed_stream() {
        let content = r#"{"pid":"p001","t":0,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
{"pid":"p001","t":600000,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
"#;
        let (_d, path) = write_tmp(content);
        let out = parse_stream_jsonl(&path, participant(), 5).unwrap();
        assert_eq!(out.stream.gaps.len(), 1);
        assert!((out.stream.gaps[0].duration_min() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn accel_over_16g_rejected() {
        let content = r#"{"pid":"p001","t":0,"kind":"accel","x":20.0,"y":0.0,"z":1.0}
{"pid":"p001","t":10,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
{"pid":"p001","t":20,"kind":"accel","x":0.0,"y":0.0,"z":1.0}
"#;
        let (_d, path) = write_tmp(content);
        let out = parse_stream_jsonl(&path, participant(), 5).unwrap();
        assert_eq!(out.stream.accel.len(), 2);
        assert_eq!(out.report.rejected.len(), 1);
    }
}
