//! Step counting by peak detection on the band-passed acceleration magnitude.

use serde::{Deserialize, Serialize};

use crate::indicators::activity::{design_bandpass, filter_signal};
use crate::ingest::AccelSample;
use crate::timeutil::MS_PER_MIN;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepConfig {
    /// Gait band in Hz.
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Absolute peak floor in g; below this nothing counts as a step.
    pub min_peak_g: f64,
    /// Peak must also exceed this multiple of the per-minute RMS, which makes
    /// the count insensitive to overall signal amplitude.
    pub rms_factor: f64,
    /// Refractory period between steps.
    pub min_step_interval_ms: i64,
    pub gap_threshold_min: i64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            band_low_hz: 0.5,
            band_high_hz: 3.0,
            min_peak_g: 0.05,
            rms_factor: 0.7,
            min_step_interval_ms: 300,
            gap_threshold_min: 5,
        }
    }
}

/// Steps counted in one minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinuteSteps {
    pub minute_start: i64,
    pub steps: u32,
}

fn segments(samples: &[AccelSample], gap_threshold_min: i64) -> Vec<&[AccelSample]> {
    let threshold = gap_threshold_min * MS_PER_MIN;
    let mut out = Vec::new();
    let mut start = 0usize;
    for i in 1..samples.len() {
        if samples[i].t - samples[i - 1].t > threshold {
            out.push(&samples[start..i]);
            start = i;
        }
    }
    if start < samples.len() {
        out.push(&samples[start..]);
    }
    out
}

/// Steps per minute over a (possibly gappy) accel sequence. Minutes without
/// samples yield no entry; stationary minutes yield zero.
pub fn count_steps(samples: &[AccelSample], cfg: &StepConfig) -> Vec<MinuteSteps> {
    let mut out: Vec<MinuteSteps> = Vec::new();
    for seg in segments(samples, cfg.gap_threshold_min) {
        if seg.len() < 4 {
            continue;
        }
        let span_s = (seg[seg.len() - 1].t - seg[0].t) as f64 / 1000.0;
        if span_s <= 0.0 {
            continue;
        }
        let rate = (seg.len() - 1) as f64 / span_s;
        let kernel = design_bandpass(rate, cfg.band_low_hz, cfg.band_high_hz);
        let mags: Vec<f64> = seg.iter().map(|s| s.magnitude()).collect();
        let y = filter_signal(&mags, &kernel);

        // Per-minute RMS for the adaptive threshold.
        let minute_of = |i: usize| seg[i].t.div_euclid(MS_PER_MIN);
        let mut rms_by_minute = std::collections::BTreeMap::new();
        {
            let mut i = 0usize;
            while i < seg.len() {
                let m = minute_of(i);
                let mut sum = 0.0;
                let mut n = 0usize;
                let mut j = i;
                while j < seg.len() && minute_of(j) == m {
                    sum += y[j] * y[j];
                    n += 1;
                    j += 1;
                }
                rms_by_minute.insert(m, (sum / n as f64).sqrt());
                i = j;
            }
        }

        let mut counts = std::collections::BTreeMap::new();
        let mut last_peak_t = i64::MIN / 2;
        for i in 1..seg.len().saturating_sub(1) {
            let m = minute_of(i);
            let threshold = cfg.min_peak_g.max(cfg.rms_factor * rms_by_minute[&m]);
            let is_peak = y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > threshold;
            if is_peak && seg[i].t - last_peak_t >= cfg.min_step_interval_ms {
                *counts.entry(m).or_insert(0u32) += 1;
                last_peak_t = seg[i].t;
            }
        }
        for (&m, _) in &rms_by_minute {
            out.push(MinuteSteps {
                minute_start: m * MS_PER_MIN,
                steps: counts.get(&m).copied().unwrap_or(0),
            });
        }
    }
    out.sort_by_key(|m| m.minute_start);
    out.dedup_by_key(|m| m.minute_start);
    out
}

/// Synthesize one minute of gait at `step_hz` on top of gravity; used by the
/// cohort generator and by tests.
pub fn gait_magnitude(t_s: f64, step_hz: f64, amplitude_g: f64) -> f64 {
    let phase = (t_s * step_hz).fract();
    // Heel-strike bump (raised cosine over the first 40% of the cycle) plus
    // the gait fundamental, which keeps each cycle resolvable at 5 Hz.
    let bump = if phase < 0.4 {
        0.5 * (1.0 - (2.0 * std::f64::consts::PI * phase / 0.4).cos())
    } else {
        0.0
    };
    let fundamental = (2.0 * std::f64::consts::PI * step_hz * t_s).sin();
    1.0 + amplitude_g * (0.6 * bump + 0.4 * fundamental)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RATE: f64 = 10.0;

    fn gait_samples(step_hz: f64, amplitude: f64, seconds: f64, noise: f64) -> Vec<AccelSample> {
        let n = (seconds * RATE) as usize;
        // Small deterministic pseudo-noise so ties never happen.
        let mut state = 0x9e3779b9u64;
        (0..n)
            .map(|i| {
                let t_s = i as f64 / RATE;
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let jitter = ((state >> 33) as f64 / (1u64 << 31) as f64 - 1.0) * noise;
                AccelSample {
                    t: (t_s * 1000.0) as i64,
                    x: 0.0,
                    y: 0.0,
                    z: gait_magnitude(t_s, step_hz, amplitude) + jitter,
                }
            })
            .collect()
    }

    /// Oracle: steps planted per minute is just step frequency times 60.
    #[test]
    fn gait_at_1_8_hz_counts_108() {
        let samples = gait_samples(1.8, 0.4, 60.0, 0.01);
        let minutes = count_steps(&samples, &StepConfig::default());
        assert_eq!(minutes.len(), 1);
        let steps = minutes[0].steps as i64;
        assert!((steps - 108).abs() <= 10, "counted {steps}");
    }

    #[test]
    fn stationary_counts_zero() {
        let samples: Vec<AccelSample> = (0..600)
            .map(|i| AccelSample {
                t: (i as f64 / RATE * 1000.0) as i64,
                x: 0.0,
                y: 0.0,
                z: 1.0,
            })
            .collect();
        let minutes = count_steps(&samples, &StepConfig::default());
        for m in minutes {
            assert_eq!(m.steps, 0);
        }
    }

    #[test]
    fn amplitude_doubling_changes_count_little() {
        let a = gait_samples(1.8, 0.3, 120.0, 0.01);
        let b = gait_samples(1.8, 0.6, 120.0, 0.01);
        let ca: u32 = count_steps(&a, &StepConfig::default()).iter().map(|m| m.steps).sum();
        let cb: u32 = count_steps(&b, &StepConfig::default()).iter().map(|m| m.steps).sum();
        let rel = (ca as f64 - cb as f64).abs() / ca as f64;
        assert!(rel <= 0.05, "{ca} vs {cb}");
    }

    #[test]
    fn low_rate_gait_still_close() {
        // 5 Hz sampling of a 1.8 Hz gait: sparse but countable.
        let rate = 5.0;
        let n = (120.0 * rate) as usize;
        let samples: Vec<AccelSample> = (0..n)
            .map(|i| {
                let t_s = i as f64 / rate;
                AccelSample {
                    t: (t_s * 1000.0) as i64,
                    x: 0.0,
                    y: 0.0,
                    z: gait_magnitude(t_s, 1.8, 0.4) + 0.01 * ((i * 2654435761) as f64 / u32::MAX as f64 - 0.5),
                }
            })
            .collect();
        let total: u32 = count_steps(&samples, &StepConfig::default()).iter().map(|m| m.steps).sum();
        let expected = 1.8 * 120.0;
        assert!(
            (total as f64 - expected).abs() / expected < 0.2,
            "counted {total}, planted {expected}"
        );
    }
}
