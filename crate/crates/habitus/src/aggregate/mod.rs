//! The central tuple store and population-level aggregation.
//!
//! Every observation entering aggregation is a `(participant, cell, time
//! key, value)` tuple, e.g. `(5, sx0r4k, 20190701T11:52, 32)` for 32 steps
//! in that minute. Habits-mode tuples carry the participant's home cell;
//! use-of-resources tuples carry the visited cell.

pub mod choropleth;
pub mod functions;
pub mod gate;

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use crate::calendar::{CalendarSet, DayType};
use crate::error::{Error, Result};
use crate::geocell::GeoCell;
use crate::indicators::Value;
use crate::ingest::Participant;

/// Whether a tuple describes the participant's home region (habits) or the
/// region they were visiting (use of resources).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeTag {
    Habits,
    Resources,
}

impl ModeTag {
    pub fn name(&self) -> &'static str {
        match self {
            ModeTag::Habits => "habits",
            ModeTag::Resources => "resources",
        }
    }
}

/// One observation tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorTuple {
    pub u: String,
    pub g: GeoCell,
    /// Time key at the indicator's declared granularity, e.g.
    /// `20190701T11:52` (minute), `20190701` (day), `2019-W27` (week).
    pub t: String,
    pub name: String,
    pub value: Value,
    pub quality: f64,
    pub mode: ModeTag,
}

impl IndicatorTuple {
    /// Local date digits of the time key, when the granularity carries one.
    pub fn date_key(&self) -> Option<&str> {
        let head = self.t.get(..8)?;
        if head.bytes().all(|b| b.is_ascii_digit()) {
            Some(head)
        } else {
            None
        }
    }
}

/// Append-only tuple store, immutable during aggregation.
#[derive(Debug, Clone, Default)]
pub struct TupleStore {
    pub tuples: Vec<IndicatorTuple>,
}

impl TupleStore {
    pub fn new(tuples: Vec<IndicatorTuple>) -> Self {
        TupleStore { tuples }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn select<'a>(
        &'a self,
        indicator: &'a str,
        mode: ModeTag,
    ) -> impl Iterator<Item = &'a IndicatorTuple> {
        self.tuples
            .iter()
            .filter(move |t| t.name == indicator && t.mode == mode)
    }

    /// Distinct cells (coarsened to `len`) carrying tuples of an indicator.
    pub fn distinct_cells(&self, indicator: &str, mode: ModeTag, len: usize) -> BTreeSet<GeoCell> {
        self.select(indicator, mode)
            .filter(|t| t.g.len() >= len)
            .filter_map(|t| crate::geocell::coarsen(&t.g, len).ok())
            .collect()
    }

    /// Indicator names present in the store.
    pub fn indicator_names(&self) -> BTreeSet<String> {
        self.tuples.iter().map(|t| t.name.clone()).collect()
    }

    /// Write as JSONL partitioned by mode, indicator, and two-character cell
    /// prefix. Rows are sorted so the layout is byte-deterministic.
    pub fn write_partitioned(&self, dir: &Path) -> Result<()> {
        let mut parts: BTreeMap<(String, String, String), Vec<&IndicatorTuple>> = BTreeMap::new();
        for t in &self.tuples {
            let prefix = t.g.as_str().chars().take(2).collect::<String>();
            parts
                .entry((t.mode.name().to_string(), t.name.clone(), prefix))
                .or_default()
                .push(t);
        }
        for ((mode, name, prefix), mut rows) in parts {
            rows.sort_by(|a, b| (&a.g, &a.u, &a.t).cmp(&(&b.g, &b.u, &b.t)));
            let subdir = dir.join(&mode).join(&name);
            std::fs::create_dir_all(&subdir).map_err(|e| Error::io(&subdir, e))?;
            let path = subdir.join(format!("{prefix}.jsonl"));
            let mut f = std::io::BufWriter::new(
                std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?,
            );
            for row in rows {
                serde_json::to_writer(&mut f, row).map_err(|e| Error::format(&path, e.to_string()))?;
                f.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            }
        }
        Ok(())
    }

    pub fn load_partitioned(dir: &Path) -> Result<Self> {
        let mut tuples = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        let mut files = Vec::new();
        while let Some(d) = stack.pop() {
            let entries = std::fs::read_dir(&d).map_err(|e| Error::io(&d, e))?;
            for entry in entries {
                let entry = entry.map_err(|e| Error::io(&d, e))?;
                let path = entry.path();
                if path.is_dir() {
                    stack.push(path);
                } else if path.extension().is_some_and(|e| e == "jsonl") {
                    files.push(path);
                }
            }
        }
        files.sort();
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let t: IndicatorTuple = serde_json::from_str(line)
                    .map_err(|e| Error::format(&path, format!("line {}: {e}", i + 1)))?;
                tuples.push(t);
            }
        }
        Ok(TupleStore { tuples })
    }
}

/// Cross-indicator condition: keep participants whose mean of `indicator`
/// lies in the given bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorCondition {
    pub indicator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// Conjunction of tuple predicates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Filter {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub age_bands: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub genders: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub day_type: Option<DayType>,
    /// Inclusive time-key bounds; keys compare lexicographically within one
    /// granularity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_key_range: Option<(String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<IndicatorCondition>,
}

impl Filter {
    pub fn is_empty(&self) -> bool {
        self == &Filter::default()
    }
}

/// Shared lookups for filtering: participant attributes, school calendars,
/// and the store itself for cross-indicator conditions.
pub struct AggregationContext<'a> {
    pub participants: &'a BTreeMap<String, Participant>,
    pub calendars: &'a CalendarSet,
    pub store: &'a TupleStore,
}

impl<'a> AggregationContext<'a> {
    /// Apply a filter to tuples of one indicator/mode selection.
    pub fn apply_filter(
        &self,
        tuples: impl Iterator<Item = &'a IndicatorTuple>,
        filter: &Filter,
        mode: ModeTag,
    ) -> Vec<&'a IndicatorTuple> {
        // Participants passing the cross-indicator condition.
        let passing: Option<BTreeSet<&str>> = filter.condition.as_ref().map(|cond| {
            let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
            for t in self.store.select(&cond.indicator, mode) {
                if let Some(v) = t.value.as_num() {
                    let e = sums.entry(t.u.as_str()).or_insert((0.0, 0));
                    e.0 += v;
                    e.1 += 1;
                }
            }
            sums.into_iter()
                .filter(|(_, (sum, n))| {
                    let m = sum / *n as f64;
                    cond.min.map_or(true, |lo| m >= lo) && cond.max.map_or(true, |hi| m <= hi)
                })
                .map(|(u, _)| u)
                .collect()
        });

        tuples
            .filter(|t| {
                let p = self.participants.get(&t.u);
                if let Some(bands) = &filter.age_bands {
                    match p {
                        Some(p) if bands.contains(&p.age_band) => {}
                        _ => return false,
                    }
                }
                if let Some(genders) = &filter.genders {
                    match p {
                        Some(p) if genders.contains(&p.gender) => {}
                        _ => return false,
                    }
                }
                if let Some(want) = filter.day_type {
                    let Some(date_key) = t.date_key() else {
                        return false;
                    };
                    let Some(p) = p else { return false };
                    let Ok(cal) = self.calendars.get(&p.school_calendar_id) else {
                        return false;
                    };
                    let Ok(date) = chrono::NaiveDate::parse_from_str(date_key, "%Y%m%d") else {
                        return false;
                    };
                    if cal.day_type(date) != want {
                        return false;
                    }
                }
                if let Some((lo, hi)) = &filter.time_key_range {
                    if t.t.as_str() < lo.as_str() || t.t.as_str() > hi.as_str() {
                        return false;
                    }
                }
                if let Some(pass) = &passing {
                    if !pass.contains(t.u.as_str()) {
                        return false;
                    }
                }
                true
            })
            .collect()
    }
}

/// The aggregation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFunction {
    F1,
    F2,
    F3,
    F4,
}

impl AggFunction {
    pub fn name(&self) -> &'static str {
        match self {
            AggFunction::F1 => "f1",
            AggFunction::F2 => "f2",
            AggFunction::F3 => "f3",
            AggFunction::F4 => "f4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(AggFunction::F1),
            "f2" => Ok(AggFunction::F2),
            "f3" => Ok(AggFunction::F3),
            "f4" => Ok(AggFunction::F4),
            other => Err(Error::argument(format!(
                "unknown aggregation function {other:?} (expected f1, f2, f3, or f4)"
            ))),
        }
    }
}

/// Aggregate payload: a scalar or a probability mass function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggValue {
    Scalar(f64),
    Pmf(Vec<(String, f64)>),
}

/// Result of one aggregation request. Suppressed results carry no value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub cell: GeoCell,
    pub requested_cell: GeoCell,
    pub function: AggFunction,
    pub indicator: String,
    pub mode: ModeTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<AggValue>,
    pub n_participants: usize,
    pub n_tuples: usize,
    /// Values outside the histogram range clamped to edge bins (f3 only).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub n_clamped: usize,
    pub quality: f64,
    pub suppressed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}
