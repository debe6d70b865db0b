//! Stop/move timelines and transport modes.
//!
//! GPS trajectories segment into dwells at typed places and transitions
//! between them. Only the place type survives into downstream artifacts;
//! coordinates stay inside this module's intermediate types.

pub mod profile;
pub mod stops;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::calendar::{DayType, SchoolCalendar};
use crate::error::{Error, Result};
use crate::geocell::{self, GeoCell, GeoPoint};
use crate::indicators::activity::Intensity;
use crate::ingest::{GpsSample, ReportKind, SelfReportEvent};
use crate::lec::PoiSnapshot;
use crate::timeutil::{self, MS_PER_MIN};
use stops::RawStop;

/// Place type for stops with no POI match and no home-cell match.
pub const UNKNOWN_POI: &str = "unknown";
/// Place type assigned by home-cell inference.
pub const HOME_POI: &str = "home";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMode {
    Walking,
    Cycling,
    Vehicle,
}

impl TransportMode {
    pub fn name(&self) -> &'static str {
        match self {
            TransportMode::Walking => "walking",
            TransportMode::Cycling => "cycling",
            TransportMode::Vehicle => "vehicle",
        }
    }
}

/// Median-speed cut points between transport modes, km/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransportCutoffs {
    pub walk_max_kmh: f64,
    pub cycle_max_kmh: f64,
}

impl Default for TransportCutoffs {
    fn default() -> Self {
        TransportCutoffs {
            walk_max_kmh: 7.0,
            cycle_max_kmh: 16.0,
        }
    }
}

/// Base-indicator summaries attached to a timeline event.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventIndicators {
    /// Minutes per intensity class during the event.
    pub activity_minutes: BTreeMap<String, u32>,
    pub steps: u32,
    pub meals: u32,
}

impl EventIndicators {
    /// Minutes at moderate or vigorous intensity.
    pub fn active_minutes(&self) -> u32 {
        self.activity_minutes.get("moderate").copied().unwrap_or(0)
            + self.activity_minutes.get("vigorous").copied().unwrap_or(0)
    }

    pub fn sedentary_minutes(&self) -> u32 {
        self.activity_minutes.get("sedentary").copied().unwrap_or(0)
    }
}

/// A dwell at a typed place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopEvent {
    pub start: i64,
    pub end: i64,
    pub centroid: GeoPoint,
    pub poi_type: String,
    #[serde(default)]
    pub indicators: EventIndicators,
}

/// A transition between two dwells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveEvent {
    pub start: i64,
    pub end: i64,
    pub origin_poi: String,
    pub dest_poi: String,
    pub distance_m: f64,
    pub transport_mode: TransportMode,
    /// Set when the mode was judged from fewer than two fixes.
    #[serde(default)]
    pub low_quality_mode: bool,
    #[serde(default)]
    pub indicators: EventIndicators,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TimelineEvent {
    Stop(StopEvent),
    Move(MoveEvent),
}

impl TimelineEvent {
    pub fn start(&self) -> i64 {
        match self {
            TimelineEvent::Stop(s) => s.start,
            TimelineEvent::Move(m) => m.start,
        }
    }

    pub fn end(&self) -> i64 {
        match self {
            TimelineEvent::Stop(s) => s.end,
            TimelineEvent::Move(m) => m.end,
        }
    }

    fn is_stop(&self) -> bool {
        matches!(self, TimelineEvent::Stop(_))
    }
}

/// One participant-day of alternating stop and move events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub participant: String,
    pub date: NaiveDate,
    pub day_type: DayType,
    pub events: Vec<TimelineEvent>,
}

impl Timeline {
    pub fn new(
        participant: String,
        date: NaiveDate,
        day_type: DayType,
        events: Vec<TimelineEvent>,
    ) -> Result<Self> {
        for pair in events.windows(2) {
            if pair[0].is_stop() == pair[1].is_stop() {
                return Err(Error::validation("timeline events must alternate stop/move"));
            }
            if pair[1].start() < pair[0].end() {
                return Err(Error::validation("timeline events overlap"));
            }
        }
        Ok(Timeline {
            participant,
            date,
            day_type,
            events,
        })
    }

    pub fn stops(&self) -> impl Iterator<Item = &StopEvent> {
        self.events.iter().filter_map(|e| match e {
            TimelineEvent::Stop(s) => Some(s),
            _ => None,
        })
    }

    pub fn moves(&self) -> impl Iterator<Item = &MoveEvent> {
        self.events.iter().filter_map(|e| match e {
            TimelineEvent::Move(m) => Some(m),
            _ => None,
        })
    }
}

/// Assign a place type to a stop: the category of the nearest POI within
/// `match_radius_m` (ties broken by distance, then lexicographically
/// smallest category), else `home` when the centroid falls in the inferred
/// home cell, else `unknown`.
pub fn assign_poi_type(
    centroid: &GeoPoint,
    snapshot: &PoiSnapshot,
    home_cell: Option<&GeoCell>,
    match_radius_m: f64,
) -> String {
    let mut best: Option<(f64, &str)> = None;
    for poi in &snapshot.pois {
        let d = centroid.distance_m(&poi.location);
        if d > match_radius_m {
            continue;
        }
        let better = match best {
            Some((bd, bc)) => d < bd || (d == bd && poi.category.as_str() < bc),
            None => true,
        };
        if better {
            best = Some((d, poi.category.as_str()));
        }
    }
    if let Some((_, cat)) = best {
        return cat.to_string();
    }
    if let Some(home) = home_cell {
        if let Ok(cell) = geocell::encode(centroid, home.len()) {
            if cell == *home {
                return HOME_POI.to_string();
            }
        }
    }
    UNKNOWN_POI.to_string()
}

/// Classify transport mode from the median segment speed of the move's
/// fixes. A move with fewer than two fixes defaults to walking with a
/// low-quality flag.
pub fn classify_transport(fixes: &[GpsSample], cutoffs: &TransportCutoffs) -> (TransportMode, bool) {
    let mut speeds: Vec<f64> = Vec::new();
    for pair in fixes.windows(2) {
        let dt_h = (pair[1].t - pair[0].t) as f64 / 3_600_000.0;
        if dt_h <= 0.0 {
            continue;
        }
        let d_km = pair[0].point.distance_m(&pair[1].point) / 1000.0;
        speeds.push(d_km / dt_h);
    }
    if speeds.is_empty() {
        return (TransportMode::Walking, true);
    }
    speeds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = speeds[speeds.len() / 2];
    let mode = if median < cutoffs.walk_max_kmh {
        TransportMode::Walking
    } else if median <= cutoffs.cycle_max_kmh {
        TransportMode::Cycling
    } else {
        TransportMode::Vehicle
    };
    (mode, false)
}

/// Infer the home cell: the modal cell (at `cell_len`) of fixes between
/// 00:00 and 06:00 local time, ties broken lexicographically.
pub fn infer_home(gps: &[GpsSample], tz: Tz, cell_len: usize) -> Option<GeoCell> {
    let mut counts: BTreeMap<GeoCell, usize> = BTreeMap::new();
    for s in gps {
        let minute = timeutil::local_minute_of_day(s.t, tz);
        if minute < 6 * 60 {
            if let Ok(cell) = geocell::encode(&s.point, cell_len) {
                *counts.entry(cell).or_insert(0) += 1;
            }
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(cell, _)| cell)
}

/// Parameters for timeline assembly.
#[derive(Debug, Clone, Copy)]
pub struct TimelineParams {
    pub poi_match_radius_m: f64,
    /// GPS gaps longer than this split a move, with an unknown-type dwell
    /// covering the untracked interval.
    pub move_split_gap_min: i64,
    pub cutoffs: TransportCutoffs,
}

impl Default for TimelineParams {
    fn default() -> Self {
        TimelineParams {
            poi_match_radius_m: 75.0,
            move_split_gap_min: 30,
            cutoffs: TransportCutoffs::default(),
        }
    }
}

/// Per-minute context used to attach indicator summaries to events.
#[derive(Debug, Clone, Default)]
pub struct MinuteContext {
    /// Minute-aligned UTC ms -> intensity class.
    pub intensity: BTreeMap<i64, Intensity>,
    /// Minute-aligned UTC ms -> steps.
    pub steps: BTreeMap<i64, u32>,
}

impl MinuteContext {
    fn summarize(&self, start: i64, end: i64, reports: &[SelfReportEvent]) -> EventIndicators {
        let mut out = EventIndicators::default();
        let first = start.div_euclid(MS_PER_MIN) * MS_PER_MIN;
        let mut m = first;
        while m < end {
            if m >= start {
                if let Some(i) = self.intensity.get(&m) {
                    *out.activity_minutes.entry(i.name().to_string()).or_insert(0) += 1;
                }
                if let Some(s) = self.steps.get(&m) {
                    out.steps += s;
                }
            }
            m += MS_PER_MIN;
        }
        out.meals = reports
            .iter()
            .filter(|r| r.kind == ReportKind::Meal && r.t >= start && r.t < end)
            .count() as u32;
        out
    }
}

fn path_distance_m(points: &[GeoPoint]) -> f64 {
    points.windows(2).map(|w| w[0].distance_m(&w[1])).sum()
}

/// Build per-day timelines for one participant from detected stops.
///
/// Stops get their POI type here; the untyped intervals between them become
/// moves. GPS gaps longer than the split threshold inside a move insert an
/// unknown dwell. Events are then cut at local midnight into per-day
/// timelines typed by the school calendar.
#[allow(clippy::too_many_arguments)]
pub fn build_timelines(
    pid: &str,
    gps: &[GpsSample],
    raw_stops: &[RawStop],
    snapshot: &PoiSnapshot,
    home_cell: Option<&GeoCell>,
    calendar: &SchoolCalendar,
    tz: Tz,
    params: &TimelineParams,
    minutes: &MinuteContext,
    reports: &[SelfReportEvent],
) -> Result<Vec<Timeline>> {
    // Type the stops.
    #[derive(Clone)]
    struct TypedStop {
        start: i64,
        end: i64,
        centroid: GeoPoint,
        poi: String,
        first_idx: usize,
        last_idx: usize,
    }
    let typed: Vec<TypedStop> = raw_stops
        .iter()
        .map(|s| TypedStop {
            start: s.start,
            end: s.end,
            centroid: s.centroid,
            poi: assign_poi_type(&s.centroid, snapshot, home_cell, params.poi_match_radius_m),
            first_idx: s.first_idx,
            last_idx: s.last_idx,
        })
        .collect();

    // Whole-stream alternating event list.
    let mut events: Vec<TimelineEvent> = Vec::new();
    let split_ms = params.move_split_gap_min * MS_PER_MIN;

    let mut push_move_segments =
        |events: &mut Vec<TimelineEvent>,
         fix_range: std::ops::Range<usize>,
         origin: (&str, Option<GeoPoint>),
         dest: (&str, Option<GeoPoint>),
         start: i64,
         end: i64| {
            let fixes = &gps[fix_range];
            // Split at long GPS gaps: each untracked interval becomes an
            // unknown dwell between two move halves.
            let mut cut_points: Vec<usize> = Vec::new();
            for (k, pair) in fixes.windows(2).enumerate() {
                if pair[1].t - pair[0].t > split_ms {
                    cut_points.push(k + 1);
                }
            }
            let mut bounds = vec![0usize];
            bounds.extend(cut_points.iter().copied());
            bounds.push(fixes.len());
            let n_seg = bounds.len() - 1;
            for seg in 0..n_seg {
                let seg_fixes = &fixes[bounds[seg]..bounds[seg + 1]];
                let seg_start = if seg == 0 {
                    start
                } else {
                    let prev_last = fixes[bounds[seg] - 1].t;
                    // The unknown dwell covers the untracked interval.
                    let dwell_end = seg_fixes.first().map(|f| f.t).unwrap_or(end);
                    events.push(TimelineEvent::Stop(StopEvent {
                        start: prev_last,
                        end: dwell_end,
                        centroid: fixes[bounds[seg] - 1].point,
                        poi_type: UNKNOWN_POI.to_string(),
                        indicators: minutes.summarize(prev_last, dwell_end, reports),
                    }));
                    dwell_end
                };
                let seg_end = if seg == n_seg - 1 {
                    end
                } else {
                    seg_fixes.last().map(|f| f.t).unwrap_or(end)
                };
                if seg_end <= seg_start {
                    continue;
                }
                let seg_origin = if seg == 0 { origin.0 } else { UNKNOWN_POI };
                let seg_dest = if seg == n_seg - 1 { dest.0 } else { UNKNOWN_POI };
                let mut path: Vec<GeoPoint> = Vec::with_capacity(seg_fixes.len() + 2);
                if seg == 0 {
                    if let Some(p) = origin.1 {
                        path.push(p);
                    }
                }
                path.extend(seg_fixes.iter().map(|f| f.point));
                if seg == n_seg - 1 {
                    if let Some(p) = dest.1 {
                        path.push(p);
                    }
                }
                let (mode, low_quality) = classify_transport(seg_fixes, &params.cutoffs);
                events.push(TimelineEvent::Move(MoveEvent {
                    start: seg_start,
                    end: seg_end,
                    origin_poi: seg_origin.to_string(),
                    dest_poi: seg_dest.to_string(),
                    distance_m: path_distance_m(&path),
                    transport_mode: mode,
                    low_quality_mode: low_quality,
                    indicators: minutes.summarize(seg_start, seg_end, reports),
                }));
            }
        };

    for (k, stop) in typed.iter().enumerate() {
        // Move before this stop.
        let (prev_end, prev_poi, prev_centroid, fix_from) = if k == 0 {
            (gps.first().map(|f| f.t).unwrap_or(stop.start), UNKNOWN_POI, None, 0)
        } else {
            let prev = &typed[k - 1];
            (prev.end, prev.poi.as_str(), Some(prev.centroid), prev.last_idx + 1)
        };
        if stop.start > prev_end {
            push_move_segments(
                &mut events,
                fix_from..stop.first_idx,
                (prev_poi, prev_centroid),
                (stop.poi.as_str(), Some(stop.centroid)),
                prev_end,
                stop.start,
            );
        }
        events.push(TimelineEvent::Stop(StopEvent {
            start: stop.start,
            end: stop.end,
            centroid: stop.centroid,
            poi_type: stop.poi.clone(),
            indicators: minutes.summarize(stop.start, stop.end, reports),
        }));
    }
    // Trailing move after the last stop.
    if let (Some(last), Some(last_fix)) = (typed.last(), gps.last()) {
        if last_fix.t > last.end {
            push_move_segments(
                &mut events,
                last.last_idx + 1..gps.len(),
                (last.poi.as_str(), Some(last.centroid)),
                (UNKNOWN_POI, None),
                last.end,
                last_fix.t,
            );
        }
    }

    // Merge accidental adjacent same-kind events (can happen when a move
    // segment between split points carried no fixes).
    let mut merged: Vec<TimelineEvent> = Vec::new();
    for e in events {
        match (merged.last_mut(), &e) {
            (Some(TimelineEvent::Stop(a)), TimelineEvent::Stop(b)) if a.poi_type == b.poi_type => {
                a.end = b.end;
            }
            _ => merged.push(e),
        }
    }

    // Cut at local midnight into per-day timelines.
    let mut by_day: BTreeMap<NaiveDate, Vec<TimelineEvent>> = BTreeMap::new();
    for e in merged {
        let mut cursor = e.start();
        while cursor < e.end() {
            let date = timeutil::local_date(cursor, tz);
            let next_midnight = timeutil::local_to_utc_ms(date.succ_opt().expect("date range"), 0, tz);
            let piece_end = e.end().min(next_midnight);
            if piece_end > cursor {
                let piece = clip_event(&e, cursor, piece_end, minutes, reports);
                by_day.entry(date).or_default().push(piece);
            }
            cursor = piece_end.max(cursor + 1);
        }
    }

    let mut out = Vec::new();
    for (date, mut events) in by_day {
        events.sort_by_key(|e| e.start());
        // Same-kind neighbours after clipping collapse as above.
        let mut cleaned: Vec<TimelineEvent> = Vec::new();
        for e in events {
            match (cleaned.last_mut(), &e) {
                (Some(TimelineEvent::Stop(a)), TimelineEvent::Stop(b)) => a.end = b.end,
                (Some(TimelineEvent::Move(a)), TimelineEvent::Move(b)) => {
                    a.end = b.end;
                    a.distance_m += b.distance_m;
                    a.dest_poi = b.dest_poi.clone();
                }
                _ => cleaned.push(e),
            }
        }
        out.push(Timeline::new(
            pid.to_string(),
            date,
            calendar.day_type(date),
            cleaned,
        )?);
    }
    Ok(out)
}

fn clip_event(
    e: &TimelineEvent,
    start: i64,
    end: i64,
    minutes: &MinuteContext,
    reports: &[SelfReportEvent],
) -> TimelineEvent {
    match e {
        TimelineEvent::Stop(s) => TimelineEvent::Stop(StopEvent {
            start,
            end,
            centroid: s.centroid,
            poi_type: s.poi_type.clone(),
            indicators: minutes.summarize(start, end, reports),
        }),
        TimelineEvent::Move(m) => {
            let frac = (end - start) as f64 / (m.end - m.start).max(1) as f64;
            TimelineEvent::Move(MoveEvent {
                start,
                end,
                origin_poi: m.origin_poi.clone(),
                dest_poi: m.dest_poi.clone(),
                distance_m: m.distance_m * frac,
                transport_mode: m.transport_mode,
                low_quality_mode: m.low_quality_mode,
                indicators: minutes.summarize(start, end, reports),
            })
        }
    }
}
