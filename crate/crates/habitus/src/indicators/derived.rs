//! Derived indicators computed from persisted base indicators and timelines
//! over an observation window (one week minimum, two weeks recommended).

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::calendar::SchoolCalendar;
use crate::error::{Error, Result};
use crate::indicators::{IndicatorValue, Value, Window, INTENSITY_CLASSES};
use crate::mobility::{Timeline, TransportMode, HOME_POI};
use crate::timeutil;

/// A derived indicator that could not be computed, with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmittedIndicator {
    pub pid: String,
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct DerivedOutcome {
    pub values: Vec<IndicatorValue>,
    pub omitted: Vec<OmittedIndicator>,
}

/// Inputs for one participant's derived-indicator pass.
pub struct DerivedInputs<'a> {
    pub pid: &'a str,
    /// Persisted base indicator rows (order does not matter).
    pub base: &'a [IndicatorValue],
    pub timelines: &'a [Timeline],
    pub calendar: &'a SchoolCalendar,
    pub tz: Tz,
    /// Observation window, inclusive first day and exclusive last.
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    /// Evening cutoff for the after-school window, minutes past midnight.
    pub after_school_end_min: u32,
    /// Quality attached to derived values (combined upstream).
    pub quality: f64,
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn pop_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}

/// Compute the derived indicator set for one participant.
pub fn derive_indicators(inputs: &DerivedInputs<'_>) -> Result<DerivedOutcome> {
    let days = (inputs.window_end - inputs.window_start).num_days();
    if days < 7 {
        return Err(Error::argument(format!(
            "derived indicators need a window of at least 7 days, got {days}"
        )));
    }
    let weeks = days as f64 / 7.0;
    let window = Window {
        start: timeutil::local_to_utc_ms(inputs.window_start, 0, inputs.tz),
        end: timeutil::local_to_utc_ms(inputs.window_end, 0, inputs.tz),
    };
    let in_window = |v: &&IndicatorValue| v.window.start >= window.start && v.window.start < window.end;

    let mut by_name: BTreeMap<&str, Vec<&IndicatorValue>> = BTreeMap::new();
    for v in inputs.base.iter().filter(in_window) {
        by_name.entry(v.name.as_str()).or_default().push(v);
    }
    // Canonical ordering regardless of input order.
    for rows in by_name.values_mut() {
        rows.sort_by_key(|v| v.window.start);
    }

    let mut out = DerivedOutcome::default();
    let mut emit = |out: &mut DerivedOutcome, name: String, value: f64| {
        out.values.push(IndicatorValue {
            pid: inputs.pid.to_string(),
            window,
            name,
            value: Value::Num(value),
            quality: inputs.quality,
        });
    };
    let omit = |out: &mut DerivedOutcome, name: &str, reason: &str| {
        out.omitted.push(OmittedIndicator {
            pid: inputs.pid.to_string(),
            name: name.to_string(),
            reason: reason.to_string(),
        });
    };

    // Diet: weekly frequencies from meal occurrence rows.
    let fast_food_n = by_name.get("eating_fast_food").map(|r| r.len()).unwrap_or(0);
    emit(&mut out, "fast_food_meals_per_week".into(), fast_food_n as f64 / weeks);
    let meals = by_name.get("meal").cloned().unwrap_or_default();
    for meal_type in ["breakfast", "lunch", "dinner", "snack"] {
        let n = meals
            .iter()
            .filter(|v| v.value.as_cat() == Some(meal_type))
            .count();
        emit(&mut out, format!("meal_freq_per_week_{meal_type}"), n as f64 / weeks);
    }

    // Adherence to eating schedule: mean over meal types (with at least two
    // meals) of the standard deviation of the meal's local clock time.
    {
        let mut stds = Vec::new();
        for meal_type in ["breakfast", "lunch", "dinner", "snack"] {
            let clocks: Vec<f64> = meals
                .iter()
                .filter(|v| v.value.as_cat() == Some(meal_type))
                .map(|v| timeutil::local_minute_of_day(v.window.start, inputs.tz) as f64)
                .collect();
            if clocks.len() >= 2 {
                stds.push(pop_std(&clocks));
            }
        }
        match mean(&stds) {
            Some(m) => emit(&mut out, "eating_schedule_stddev_min".into(), m),
            None => omit(&mut out, "eating_schedule_stddev_min", "fewer than two meals of any type"),
        }
    }

    // Mobility-derived: active commute to school, per school day with an
    // observed home-to-school transition.
    {
        let mut per_day: BTreeMap<NaiveDate, f64> = BTreeMap::new();
        for t in inputs.timelines {
            if t.date < inputs.window_start || t.date >= inputs.window_end {
                continue;
            }
            if !inputs.calendar.is_school_day(t.date) {
                continue;
            }
            for m in t.moves() {
                let active = matches!(m.transport_mode, TransportMode::Walking | TransportMode::Cycling);
                if active && m.origin_poi == HOME_POI && m.dest_poi == "school" {
                    *per_day.entry(t.date).or_insert(0.0) += (m.end - m.start) as f64 / 60_000.0;
                }
            }
        }
        let values: Vec<f64> = per_day.values().copied().collect();
        match mean(&values) {
            Some(m) => emit(&mut out, "active_commute_min_per_day".into(), m),
            None => omit(
                &mut out,
                "active_commute_min_per_day",
                "no active home-to-school transitions on school days",
            ),
        }
    }

    // Physical activity split into school and after-school windows, plus
    // sedentary minutes after school.
    {
        let intensity = by_name.get("activity_intensity").cloned().unwrap_or_default();
        if intensity.is_empty() {
            omit(&mut out, "pa_school_min_per_day", "no activity_intensity rows");
            omit(&mut out, "pa_after_school_min_per_day", "no activity_intensity rows");
            omit(&mut out, "sedentary_after_school_min_per_day", "no activity_intensity rows");
        } else {
            // class -> date -> minutes, per window, school days only.
            let mut school: BTreeMap<&str, BTreeMap<NaiveDate, u32>> = BTreeMap::new();
            let mut after: BTreeMap<&str, BTreeMap<NaiveDate, u32>> = BTreeMap::new();
            let mut school_days_observed: BTreeMap<NaiveDate, ()> = BTreeMap::new();
            let mut after_days_observed: BTreeMap<NaiveDate, ()> = BTreeMap::new();
            for v in &intensity {
                let date = timeutil::local_date(v.window.start, inputs.tz);
                if !inputs.calendar.is_school_day(date) {
                    continue;
                }
                let minute = timeutil::local_minute_of_day(v.window.start, inputs.tz);
                let Some(class) = v.value.as_cat() else { continue };
                if minute >= inputs.calendar.school_start_min && minute < inputs.calendar.school_end_min {
                    *school.entry(class).or_default().entry(date).or_insert(0) += 1;
                    school_days_observed.insert(date, ());
                } else if minute >= inputs.calendar.school_end_min && minute < inputs.after_school_end_min {
                    *after.entry(class).or_default().entry(date).or_insert(0) += 1;
                    after_days_observed.insert(date, ());
                }
            }
            let mean_over = |per_class: &BTreeMap<&str, BTreeMap<NaiveDate, u32>>,
                             class: &str,
                             observed: &BTreeMap<NaiveDate, ()>| {
                if observed.is_empty() {
                    return None;
                }
                let by_date = per_class.get(class);
                let total: u32 = observed
                    .keys()
                    .map(|d| by_date.and_then(|m| m.get(d)).copied().unwrap_or(0))
                    .sum();
                Some(total as f64 / observed.len() as f64)
            };
            for class in INTENSITY_CLASSES {
                if let Some(m) = mean_over(&school, class, &school_days_observed) {
                    emit(&mut out, format!("pa_school_min_per_day_{class}"), m);
                }
                if let Some(m) = mean_over(&after, class, &after_days_observed) {
                    emit(&mut out, format!("pa_after_school_min_per_day_{class}"), m);
                }
            }
            match mean_over(&after, "sedentary", &after_days_observed) {
                Some(m) => emit(&mut out, "sedentary_after_school_min_per_day".into(), m),
                None => omit(
                    &mut out,
                    "sedentary_after_school_min_per_day",
                    "no school-day minutes in the after-school window",
                ),
            }
        }
    }

    // Sleep averages.
    for (base, derived) in [
        ("sleep_hours", "avg_sleep_hours"),
        ("sleep_interruptions", "avg_sleep_interruptions"),
    ] {
        let values: Vec<f64> = by_name
            .get(base)
            .map(|rows| rows.iter().filter_map(|v| v.value.as_num()).collect())
            .unwrap_or_default();
        match mean(&values) {
            Some(m) => emit(&mut out, derived.into(), m),
            None => omit(&mut out, derived, "no base rows in window"),
        }
    }

    // Daily step totals, one row per observed day.
    if let Some(rows) = by_name.get("steps") {
        let mut per_day: BTreeMap<NaiveDate, f64> = BTreeMap::new();
        for v in rows.iter() {
            if let Some(n) = v.value.as_num() {
                *per_day
                    .entry(timeutil::local_date(v.window.start, inputs.tz))
                    .or_insert(0.0) += n;
            }
        }
        for (date, total) in per_day {
            let start = timeutil::local_to_utc_ms(date, 0, inputs.tz);
            let end = timeutil::local_to_utc_ms(date.succ_opt().expect("date range"), 0, inputs.tz);
            out.values.push(IndicatorValue {
                pid: inputs.pid.to_string(),
                window: Window { start, end },
                name: "daily_steps".into(),
                value: Value::Num(total),
                quality: inputs.quality,
            });
        }
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::SchoolCalendar;
    use crate::geocell::GeoPoint;
    use crate::mobility::{EventIndicators, MoveEvent, StopEvent, TimelineEvent};

    fn calendar() -> SchoolCalendar {
        SchoolCalendar {
            school_weekdays: vec![1, 2, 3, 4, 5],
            holidays: vec![],
            school_start_min: 8 * 60,
            school_end_min: 14 * 60,
        }
    }

    fn tz() -> Tz {
        timeutil::parse_tz("Europe/Athens").unwrap()
    }

    fn window() -> (NaiveDate, NaiveDate) {
        (
            NaiveDate::from_ymd_opt(2026, 5, 4).unwrap(),
            NaiveDate::from_ymd_opt(2026, 5, 18).unwrap(),
        )
    }

    fn meal_row(date: NaiveDate, minute: u32, meal_type: &str) -> IndicatorValue {
        IndicatorValue {
            pid: "p1".into(),
            window: Window::minute(timeutil::local_to_utc_ms(date, minute, tz())),
            name: "meal".into(),
            value: Value::Cat(meal_type.into()),
            quality: 0.8,
        }
    }

    fn occurrence(date: NaiveDate, minute: u32, name: &str) -> IndicatorValue {
        IndicatorValue {
            pid: "p1".into(),
            window: Window::minute(timeutil::local_to_utc_ms(date, minute, tz())),
            name: name.into(),
            value: Value::Num(1.0),
            quality: 0.8,
        }
    }

    fn inputs<'a>(
        base: &'a [IndicatorValue],
        timelines: &'a [Timeline],
        cal: &'a SchoolCalendar,
    ) -> DerivedInputs<'a> {
        let (start, end) = window();
        DerivedInputs {
            pid: "p1",
            base,
            timelines,
            calendar: cal,
            tz: tz(),
            window_start: start,
            window_end: end,
            after_school_end_min: 22 * 60,
            quality: 0.8,
        }
    }

    #[test]
    fn fast_food_frequency_arithmetic() {
        let (start, _) = window();
        let mut base = Vec::new();
        for k in 0..6 {
            let d = start + chrono::Duration::days(k * 2);
            base.push(occurrence(d, 13 * 60, "eating_fast_food"));
        }
        let cal = calendar();
        let out = derive_indicators(&inputs(&base, &[], &cal)).unwrap();
        let v = out
            .values
            .iter()
            .find(|v| v.name == "fast_food_meals_per_week")
            .unwrap();
        assert_eq!(v.value.as_num(), Some(3.0));
    }

    #[test]
    fn identical_meal_times_have_zero_stddev() {
        let (start, _) = window();
        let base: Vec<IndicatorValue> = (0..14)
            .map(|k| meal_row(start + chrono::Duration::days(k), 20 * 60 + 30, "dinner"))
            .collect();
        let cal = calendar();
        let out = derive_indicators(&inputs(&base, &[], &cal)).unwrap();
        let v = out
            .values
            .iter()
            .find(|v| v.name == "eating_schedule_stddev_min")
            .unwrap();
        assert_eq!(v.value.as_num(), Some(0.0));
        let freq = out
            .values
            .iter()
            .find(|v| v.name == "meal_freq_per_week_dinner")
            .unwrap();
        assert_eq!(freq.value.as_num(), Some(7.0));
    }

    #[test]
    fn commute_minutes_from_timelines() {
        let (start, _) = window();
        let cal = calendar();
        let mut timelines = Vec::new();
        for k in 0..14 {
            let date = start + chrono::Duration::days(k);
            if !cal.is_school_day(date) {
                continue;
            }
            let t0 = timeutil::local_to_utc_ms(date, 7 * 60 + 30, tz());
            let m = 60_000i64;
            let events = vec![
                TimelineEvent::Stop(StopEvent {
                    start: t0 - 60 * m,
                    end: t0,
                    centroid: GeoPoint::new(40.62, 22.95).unwrap(),
                    poi_type: "home".into(),
                    indicators: EventIndicators::default(),
                }),
                TimelineEvent::Move(MoveEvent {
                    start: t0,
                    end: t0 + 18 * m,
                    origin_poi: "home".into(),
                    dest_poi: "school".into(),
                    distance_m: 1500.0,
                    transport_mode: TransportMode::Walking,
                    low_quality_mode: false,
                    indicators: EventIndicators::default(),
                }),
                TimelineEvent::Stop(StopEvent {
                    start: t0 + 18 * m,
                    end: t0 + 300 * m,
                    centroid: GeoPoint::new(40.63, 22.96).unwrap(),
                    poi_type: "school".into(),
                    indicators: EventIndicators::default(),
                }),
            ];
            timelines.push(Timeline::new("p1".into(), date, cal.day_type(date), events).unwrap());
        }
        let out = derive_indicators(&inputs(&[], &timelines, &cal)).unwrap();
        let v = out
            .values
            .iter()
            .find(|v| v.name == "active_commute_min_per_day")
            .unwrap();
        let minutes = v.value.as_num().unwrap();
        assert!((minutes - 18.0).abs() <= 2.0, "{minutes}");
    }

    #[test]
    fn missing_base_is_omitted_with_reason() {
        let cal = calendar();
        let out = derive_indicators(&inputs(&[], &[], &cal)).unwrap();
        assert!(out.omitted.iter().any(|o| o.name == "avg_sleep_hours"));
        assert!(out
            .omitted
            .iter()
            .any(|o| o.name == "active_commute_min_per_day"));
    }

    #[test]
    fn short_window_rejected() {
        let cal = calendar();
        let (start, _) = window();
        let mut i = inputs(&[], &[], &cal);
        i.window_end = start + chrono::Duration::days(5);
        assert!(derive_indicators(&i).is_err());
    }

    #[test]
    fn order_invariance() {
        let (start, _) = window();
        let mut base = Vec::new();
        for k in 0..10u32 {
            base.push(meal_row(
                start + chrono::Duration::days(k as i64),
                13 * 60 + (k * 7) % 45,
                "lunch",
            ));
            base.push(occurrence(start + chrono::Duration::days(k as i64), 13 * 60, "eating_fast_food"));
        }
        let cal = calendar();
        let a = derive_indicators(&inputs(&base, &[], &cal)).unwrap();
        base.reverse();
        let b = derive_indicators(&inputs(&base, &[], &cal)).unwrap();
        let key = |vals: &[IndicatorValue]| {
            let mut v: Vec<String> = vals.iter().map(|x| serde_json::to_string(x).unwrap()).collect();
            v.sort();
            v
        };
        assert_eq!(key(&a.values), key(&b.values));
    }
}
