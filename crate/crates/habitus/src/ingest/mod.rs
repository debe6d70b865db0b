//! Pseudonymous sensor streams: participant metadata, sample types,
//! validation, recording gaps, and per-day availability.

pub mod parse;
pub mod synth;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geocell::GeoPoint;
use crate::timeutil::{self, MS_PER_MIN};

/// Recording gaps are intervals with no accelerometer samples for more than
/// this many minutes (device suspended by the OS or not worn).
pub const DEFAULT_GAP_THRESHOLD_MIN: i64 = 5;

/// Acceleration magnitude ceiling in g-units.
pub const MAX_ACCEL_G: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceClass {
    Smartwatch,
    Smartphone,
}

impl DeviceClass {
    /// Source name used by the quality table.
    pub fn source_name(&self) -> &'static str {
        match self {
            DeviceClass::Smartwatch => "smartwatch",
            DeviceClass::Smartphone => "smartphone",
        }
    }
}

/// A registered participant. The id is an opaque registration code; no direct
/// identifiers are ever present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub age_band: String,
    pub gender: String,
    pub device_class: DeviceClass,
    pub school_calendar_id: String,
    /// IANA timezone for day/night boundaries.
    pub timezone: String,
    /// Nominal accelerometer sampling rate for this stream, 5-25 Hz.
    pub accel_rate_hz: f64,
}

impl Participant {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::validation("participant id must be non-empty"));
        }
        if !(5.0..=25.0).contains(&self.accel_rate_hz) {
            return Err(Error::validation(format!(
                "accel_rate_hz {} outside 5..=25",
                self.accel_rate_hz
            )));
        }
        timeutil::parse_tz(&self.timezone)?;
        Ok(())
    }

    pub fn tz(&self) -> Tz {
        timeutil::parse_tz(&self.timezone).expect("validated at construction")
    }
}

/// One accelerometer sample, components in g-units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelSample {
    pub t: i64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl AccelSample {
    pub fn validate(&self) -> Result<()> {
        let m = self.magnitude();
        if !m.is_finite() {
            return Err(Error::validation("accel components must be finite"));
        }
        if m >= MAX_ACCEL_G {
            return Err(Error::validation(format!("accel magnitude {m:.1} g >= {MAX_ACCEL_G} g")));
        }
        Ok(())
    }

    pub fn magnitude(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// One GPS fix, nominal cadence one per minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsSample {
    pub t: i64,
    pub point: GeoPoint,
    pub accuracy_m: f64,
}

impl GpsSample {
    pub fn validate(&self) -> Result<()> {
        GeoPoint::new(self.point.lat, self.point.lon)?;
        if !self.accuracy_m.is_finite() || self.accuracy_m < 0.0 {
            return Err(Error::validation("accuracy_m must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Meal,
    FoodAd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MealType {
    Breakfast,
    Lunch,
    Dinner,
    Snack,
}

impl MealType {
    pub const ALL: [MealType; 4] = [
        MealType::Breakfast,
        MealType::Lunch,
        MealType::Dinner,
        MealType::Snack,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MealType::Breakfast => "breakfast",
            MealType::Lunch => "lunch",
            MealType::Dinner => "dinner",
            MealType::Snack => "snack",
        }
    }
}

/// A self-reported meal or food-advertisement sighting. Photo references are
/// opaque; photo content is never parsed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfReportEvent {
    pub t: i64,
    pub kind: ReportKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meal_type: Option<MealType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub food_category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photo_ref: Option<String>,
}

impl SelfReportEvent {
    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.meal_type.is_some()) {
            (ReportKind::Meal, false) => Err(Error::validation("meal report without meal_type")),
            (ReportKind::FoodAd, true) => Err(Error::validation("food_ad report with meal_type")),
            _ => Ok(()),
        }
    }
}

/// A maximal interval with no accelerometer samples, in UTC ms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub start: i64,
    pub end: i64,
}

impl Gap {
    pub fn duration_min(&self) -> f64 {
        (self.end - self.start) as f64 / MS_PER_MIN as f64
    }

    pub fn contains(&self, t: i64) -> bool {
        t > self.start && t < self.end
    }
}

/// The validated sensor stream of one participant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorStream {
    pub participant: Participant,
    pub accel: Vec<AccelSample>,
    pub gps: Vec<GpsSample>,
    pub reports: Vec<SelfReportEvent>,
    /// Derived: maximal sample-free accel intervals above the gap threshold.
    pub gaps: Vec<Gap>,
}

impl SensorStream {
    /// Assemble a stream from validated, strictly increasing sequences and
    /// derive the recording gaps.
    pub fn new(
        participant: Participant,
        accel: Vec<AccelSample>,
        gps: Vec<GpsSample>,
        reports: Vec<SelfReportEvent>,
        gap_threshold_min: i64,
    ) -> Result<Self> {
        participant.validate()?;
        check_increasing(accel.iter().map(|s| s.t), "accel")?;
        check_increasing(gps.iter().map(|s| s.t), "gps")?;
        check_increasing(reports.iter().map(|s| s.t), "reports")?;
        let gaps = compute_gaps(&accel, gap_threshold_min);
        Ok(SensorStream {
            participant,
            accel,
            gps,
            reports,
            gaps,
        })
    }

    pub fn tz(&self) -> Tz {
        self.participant.tz()
    }

    /// All local dates with at least one sample of any kind.
    pub fn observed_days(&self) -> Vec<NaiveDate> {
        let tz = self.tz();
        let mut days = BTreeSet::new();
        for t in self
            .accel
            .iter()
            .map(|s| s.t)
            .chain(self.gps.iter().map(|s| s.t))
            .chain(self.reports.iter().map(|s| s.t))
        {
            days.insert(timeutil::local_date(t, tz));
        }
        days.into_iter().collect()
    }
}

fn check_increasing(ts: impl Iterator<Item = i64>, what: &str) -> Result<()> {
    let mut prev: Option<i64> = None;
    for t in ts {
        if let Some(p) = prev {
            if t <= p {
                return Err(Error::validation(format!(
                    "{what} timestamps not strictly increasing at t={t}"
                )));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

/// Maximal intervals between consecutive accel samples longer than the
/// threshold.
pub fn compute_gaps(accel: &[AccelSample], gap_threshold_min: i64) -> Vec<Gap> {
    let threshold_ms = gap_threshold_min * MS_PER_MIN;
    accel
        .windows(2)
        .filter(|w| w[1].t - w[0].t > threshold_ms)
        .map(|w| Gap {
            start: w[0].t,
            end: w[1].t,
        })
        .collect()
}

/// Hours of a local day covered by samples at nominal cadence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayAvailability {
    pub accel_hours: f64,
    pub gps_hours: f64,
}

/// Availability for one local day: the count of distinct minutes containing at
/// least one sample, in hours. Gap minutes contain no samples and so are
/// excluded by construction.
pub fn compute_availability(stream: &SensorStream, day: NaiveDate) -> DayAvailability {
    let tz = stream.tz();
    let minutes_covered = |ts: &mut dyn Iterator<Item = i64>| -> f64 {
        let mut minutes = BTreeSet::new();
        for t in ts {
            if timeutil::local_date(t, tz) == day {
                minutes.insert(t.div_euclid(MS_PER_MIN));
            }
        }
        minutes.len() as f64 / 60.0
    };
    DayAvailability {
        accel_hours: minutes_covered(&mut stream.accel.iter().map(|s| s.t)),
        gps_hours: minutes_covered(&mut stream.gps.iter().map(|s| s.t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn participant() -> Participant {
        Participant {
            id: "p001".into(),
            age_band: "12-14".into(),
            gender: "f".into(),
            device_class: DeviceClass::Smartwatch,
            school_calendar_id: "cal_a".into(),
            timezone: "Europe/Athens".into(),
            accel_rate_hz: 10.0,
        }
    }

    fn accel_at(ts: &[i64]) -> Vec<AccelSample> {
        ts.iter()
            .map(|&t| AccelSample {
                t,
                x: 0.0,
                y: 0.0,
                z: 1.0,
            })
            .collect()
    }

    #[test]
    fn gap_from_ten_minute_silence() {
        let samples = accel_at(&[0, 100, 10 * MS_PER_MIN + 100]);
        let gaps = compute_gaps(&samples, DEFAULT_GAP_THRESHOLD_MIN);
        assert_eq!(gaps.len(), 1);
        assert_eq!(gaps[0].start, 100);
        assert_eq!(gaps[0].end, 10 * MS_PER_MIN + 100);
        assert!((gaps[0].duration_min() - 10.0).abs() < 0.01);
    }

    #[test]
    fn no_gap_under_threshold() {
        let samples = accel_at(&[0, 4 * MS_PER_MIN]);
        assert!(compute_gaps(&samples, DEFAULT_GAP_THRESHOLD_MIN).is_empty());
    }

    #[test]
    fn stream_rejects_non_monotone() {
        let err = SensorStream::new(
            participant(),
            accel_at(&[10, 10]),
            vec![],
            vec![],
            DEFAULT_GAP_THRESHOLD_MIN,
        );
        assert!(err.is_err());
    }

    #[test]
    fn availability_counts_covered_minutes() {
        let tz = timeutil::parse_tz("Europe/Athens").unwrap();
        let day = NaiveDate::from_ymd_opt(2026, 5, 4).unwrap();
        let start = timeutil::local_to_utc_ms(day, 8 * 60, tz);
        // 6 hours continuous at 20 Hz.
        let mut samples = Vec::new();
        let mut t = start;
        while t < start + 6 * 3_600_000 {
            samples.push(AccelSample { t, x: 0.0, y: 0.0, z: 1.0 });
            t += 50;
        }
        let stream =
            SensorStream::new(participant(), samples, vec![], vec![], DEFAULT_GAP_THRESHOLD_MIN)
                .unwrap();
        let a = compute_availability(&stream, day);
        assert!((a.accel_hours - 6.0).abs() < 0.01, "{}", a.accel_hours);
        assert_eq!(a.gps_hours, 0.0);
    }

    #[test]
    fn availability_excludes_gap() {
        let tz = timeutil::parse_tz("Europe/Athens").unwrap();
        let day = NaiveDate::from_ymd_opt(2026, 5, 4).unwrap();
        let start = timeutil::local_to_utc_ms(day, 8 * 60, tz);
        // 8 h span with one 2 h hole in the middle: 6.0 h covered.
        let mut samples = Vec::new();
        let mut t = start;
        while t < start + 8 * 3_600_000 {
            let rel_h = (t - start) as f64 / 3_600_000.0;
            if !(3.0..5.0).contains(&rel_h) {
                samples.push(AccelSample { t, x: 0.0, y: 0.0, z: 1.0 });
            }
            t += 1000;
        }
        let stream =
            SensorStream::new(participant(), samples, vec![], vec![], DEFAULT_GAP_THRESHOLD_MIN)
                .unwrap();
        let a = compute_availability(&stream, day);
        assert!((a.accel_hours - 6.0).abs() < 0.02, "{}", a.accel_hours);
        assert_eq!(stream.gaps.len(), 1);
        assert!((stream.gaps[0].duration_min() - 120.0).abs() < 0.1);
    }

    #[test]
    fn empty_day_is_zero() {
        let stream = SensorStream::new(
            participant(),
            vec![],
            vec![],
            vec![],
            DEFAULT_GAP_THRESHOLD_MIN,
        )
        .unwrap();
        let a = compute_availability(&stream, NaiveDate::from_ymd_opt(2026, 5, 4).unwrap());
        assert_eq!(a.accel_hours, 0.0);
        assert_eq!(a.gps_hours, 0.0);
    }

    #[test]
    fn report_invariant() {
        let bad = SelfReportEvent {
            t: 0,
            kind: ReportKind::Meal,
            meal_type: None,
            food_category: None,
            photo_ref: None,
        };
        assert!(bad.validate().is_err());
        let ok = SelfReportEvent {
            t: 0,
            kind: ReportKind::Meal,
            meal_type: Some(MealType::Lunch),
            food_category: Some("fast_food".into()),
            photo_ref: None,
        };
        assert!(ok.validate().is_ok());
    }
}
