//! Timestamp helpers. All stored timestamps are UTC milliseconds; day and
//! night boundaries are evaluated in each participant's IANA timezone.

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Timelike, Utc};
use chrono_tz::Tz;

use crate::error::{Error, Result};

pub const MS_PER_MIN: i64 = 60_000;
pub const MS_PER_HOUR: i64 = 3_600_000;
pub const MS_PER_DAY: i64 = 86_400_000;

pub fn parse_tz(name: &str) -> Result<Tz> {
    name.parse::<Tz>()
        .map_err(|_| Error::validation(format!("unknown IANA timezone {name:?}")))
}

pub fn utc(t_ms: i64) -> DateTime<Utc> {
    DateTime::<Utc>::from_timestamp_millis(t_ms).expect("timestamp in range")
}

/// Local calendar date of a UTC-ms timestamp.
pub fn local_date(t_ms: i64, tz: Tz) -> NaiveDate {
    utc(t_ms).with_timezone(&tz).date_naive()
}

/// Minutes past local midnight of a UTC-ms timestamp.
pub fn local_minute_of_day(t_ms: i64, tz: Tz) -> u32 {
    let dt = utc(t_ms).with_timezone(&tz);
    dt.hour() * 60 + dt.minute()
}

/// UTC-ms instant of a local date + minutes past midnight. Non-existent local
/// times (DST spring forward) resolve to the earliest valid instant after.
pub fn local_to_utc_ms(date: NaiveDate, minute_of_day: u32, tz: Tz) -> i64 {
    let naive = date
        .and_hms_opt(minute_of_day / 60, minute_of_day % 60, 0)
        .expect("minute_of_day < 1440");
    match tz.from_local_datetime(&naive) {
        chrono::LocalResult::Single(dt) => dt.timestamp_millis(),
        chrono::LocalResult::Ambiguous(a, _) => a.timestamp_millis(),
        chrono::LocalResult::None => {
            // Walk forward in 15-minute steps until the local time exists.
            let mut n = naive;
            loop {
                n += chrono::Duration::minutes(15);
                if let chrono::LocalResult::Single(dt) | chrono::LocalResult::Ambiguous(dt, _) =
                    tz.from_local_datetime(&n)
                {
                    return dt.timestamp_millis();
                }
            }
        }
    }
}

/// Minute time key in the participant's local time, e.g. `20190701T11:52`.
pub fn minute_key(t_ms: i64, tz: Tz) -> String {
    let dt = utc(t_ms).with_timezone(&tz);
    format!(
        "{:04}{:02}{:02}T{:02}:{:02}",
        dt.year(),
        dt.month(),
        dt.day(),
        dt.hour(),
        dt.minute()
    )
}

/// Day time key, e.g. `20190701`.
pub fn day_key(t_ms: i64, tz: Tz) -> String {
    let d = local_date(t_ms, tz);
    format!("{:04}{:02}{:02}", d.year(), d.month(), d.day())
}

/// ISO-week time key, e.g. `2019-W27`.
pub fn week_key(t_ms: i64, tz: Tz) -> String {
    let d = local_date(t_ms, tz);
    let w = d.iso_week();
    format!("{:04}-W{:02}", w.year(), w.week())
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| Error::validation(format!("bad date {s:?}: {e}")))
}
