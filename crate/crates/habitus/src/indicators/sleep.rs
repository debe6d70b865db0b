//! Night sleep estimation from accelerometer stillness.
//!
//! The night window runs from 20:00 local on the given date to 12:00 local
//! the next day. Every minute in the window is classified as still, active,
//! or uncovered. A bracketed recording gap counts as still: the OS suspends
//! recording precisely when the device lies stationary, so a gap that the
//! stream resumes after is evidence of stillness rather than missing data.
//! Sleep is the longest tolerance-merged still run, extended across
//! interruption bouts when long stillness resumes afterwards.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::indicators::activity::{activity_counts, ActivityConfig};
use crate::ingest::SensorStream;
use crate::timeutil::{self, MS_PER_MIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SleepConfig {
    /// Window start, minutes past local midnight of the night's date.
    pub window_start_min: u32,
    /// Window end, minutes past local midnight of the following day.
    pub window_end_min: u32,
    /// Counts below this make a minute "still".
    pub still_max_counts: u32,
    /// Active bouts shorter than this merge into the surrounding stillness.
    pub tolerance_min: usize,
    /// Stillness must resume for at least this long to absorb an
    /// interruption bout into the sleep period.
    pub resume_min: usize,
    /// Longest absorbable interruption bout.
    pub max_interruption_min: usize,
    /// Gaps longer than this are treated as the device being off
    /// (uncovered), not as stillness.
    pub max_bridge_gap_hours: f64,
    /// Below this many covered hours the result is flagged very low quality.
    pub min_availability_hours: f64,
}

impl Default for SleepConfig {
    fn default() -> Self {
        SleepConfig {
            window_start_min: 20 * 60,
            window_end_min: 12 * 60,
            still_max_counts: 100,
            tolerance_min: 5,
            resume_min: 30,
            max_interruption_min: 120,
            max_bridge_gap_hours: 12.0,
            min_availability_hours: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SleepSummary {
    pub night: NaiveDate,
    /// UTC ms; absent when no sleep was found.
    pub sleep_start: Option<i64>,
    pub wake_time: Option<i64>,
    pub hours: f64,
    pub interruptions: u32,
    /// Covered share of the window was below the availability floor.
    pub very_low_quality: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MinuteState {
    Still,
    Active,
    Uncovered,
}

/// Estimate sleep for the night starting on `night`.
pub fn detect_sleep(
    stream: &SensorStream,
    night: NaiveDate,
    cfg: &SleepConfig,
    activity_cfg: &ActivityConfig,
) -> SleepSummary {
    let tz = stream.tz();
    let window_start = timeutil::local_to_utc_ms(night, cfg.window_start_min, tz);
    let next = night.succ_opt().expect("date range");
    let window_end = timeutil::local_to_utc_ms(next, cfg.window_end_min, tz);
    let n_minutes = ((window_end - window_start) / MS_PER_MIN) as usize;

    // Counts for every minute with samples in the window (pad the slice by
    // one gap threshold on both sides so edge minutes filter cleanly).
    let lo = window_start - activity_cfg.gap_threshold_min * MS_PER_MIN;
    let hi = window_end + activity_cfg.gap_threshold_min * MS_PER_MIN;
    let from = stream.accel.partition_point(|s| s.t < lo);
    let to = stream.accel.partition_point(|s| s.t < hi);
    let counts = activity_counts(&stream.accel[from..to], activity_cfg);
    let mut counts_by_minute = std::collections::BTreeMap::new();
    for m in &counts.minutes {
        counts_by_minute.insert(m.minute_start, m.counts);
    }

    let max_bridge_ms = (cfg.max_bridge_gap_hours * 3_600_000.0) as i64;
    let bridged = |t: i64| -> bool {
        // Inside a sample-free interval: still if bracketed by samples within
        // the bridge limit on both sides.
        let idx = stream.accel.partition_point(|s| s.t < t);
        if idx == 0 || idx >= stream.accel.len() {
            return false;
        }
        stream.accel[idx].t - stream.accel[idx - 1].t <= max_bridge_ms
    };

    let mut states = Vec::with_capacity(n_minutes);
    for i in 0..n_minutes {
        let t = window_start + i as i64 * MS_PER_MIN;
        let minute_aligned = t.div_euclid(MS_PER_MIN) * MS_PER_MIN;
        let state = match counts_by_minute.get(&minute_aligned) {
            Some(&c) if c >= cfg.still_max_counts => MinuteState::Active,
            Some(_) => MinuteState::Still,
            None => {
                // Minute without a complete-count value: if any samples fall
                // in it, judge by a crude threshold on presence of motion;
                // otherwise check gap bracketing.
                let a = stream.accel.partition_point(|s| s.t < minute_aligned);
                let b = stream.accel.partition_point(|s| s.t < minute_aligned + MS_PER_MIN);
                if b > a {
                    MinuteState::Still // partial-coverage minutes: too little signal to call active
                } else if bridged(minute_aligned) {
                    MinuteState::Still
                } else {
                    MinuteState::Uncovered
                }
            }
        };
        states.push(state);
    }

    let covered = states.iter().filter(|s| **s != MinuteState::Uncovered).count();
    let very_low_quality = (covered as f64) / 60.0 < cfg.min_availability_hours;

    // Tolerance pass: active bouts shorter than tolerance_min become still.
    let mut merged = states.clone();
    let mut i = 0;
    while i < merged.len() {
        if merged[i] == MinuteState::Active {
            let start = i;
            while i < merged.len() && merged[i] == MinuteState::Active {
                i += 1;
            }
            if i - start < cfg.tolerance_min {
                for s in &mut merged[start..i] {
                    *s = MinuteState::Still;
                }
            }
        } else {
            i += 1;
        }
    }

    // Collect still runs as (start_minute, end_minute) index pairs.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < merged.len() {
        if merged[i] == MinuteState::Still {
            let start = i;
            while i < merged.len() && merged[i] == MinuteState::Still {
                i += 1;
            }
            runs.push((start, i));
        } else {
            i += 1;
        }
    }

    let Some(main_idx) = runs
        .iter()
        .enumerate()
        .max_by_key(|(_, r)| r.1 - r.0)
        .map(|(i, _)| i)
    else {
        return SleepSummary {
            night,
            sleep_start: None,
            wake_time: None,
            hours: 0.0,
            interruptions: 0,
            very_low_quality,
        };
    };

    // Absorb neighbouring runs across interruption bouts.
    let absorbable = |between: std::ops::Range<usize>, next_len: usize| -> bool {
        let len = between.len();
        len <= cfg.max_interruption_min
            && next_len >= cfg.resume_min
            && merged[between].iter().all(|s| *s == MinuteState::Active)
    };
    let (mut lo_run, mut hi_run) = (main_idx, main_idx);
    let mut interruptions = 0u32;
    while lo_run > 0 {
        let prev = runs[lo_run - 1];
        let cur = runs[lo_run];
        if absorbable(prev.1..cur.0, prev.1 - prev.0) {
            interruptions += 1;
            lo_run -= 1;
        } else {
            break;
        }
    }
    while hi_run + 1 < runs.len() {
        let cur = runs[hi_run];
        let nxt = runs[hi_run + 1];
        if absorbable(cur.1..nxt.0, nxt.1 - nxt.0) {
            interruptions += 1;
            hi_run += 1;
        } else {
            break;
        }
    }

    let period = (runs[lo_run].0, runs[hi_run].1);
    let still_minutes: usize = runs[lo_run..=hi_run].iter().map(|r| r.1 - r.0).sum();
    SleepSummary {
        night,
        sleep_start: Some(window_start + period.0 as i64 * MS_PER_MIN),
        wake_time: Some(window_start + period.1 as i64 * MS_PER_MIN),
        hours: (still_minutes as f64 / 60.0).min(16.0),
        interruptions,
        very_low_quality,
    }
}
