//! Activity counts per minute, intensity classes, and MET estimates.
//!
//! Counts follow actigraphy practice: the acceleration magnitude is band-pass
//! filtered (0.25-2.5 Hz by default, removing gravity and high-frequency
//! noise), rectified, and integrated per minute epoch. The scale is counts
//! per g-second of rectified in-band acceleration.

use serde::{Deserialize, Serialize};

use crate::ingest::AccelSample;
use crate::timeutil::MS_PER_MIN;

/// Counts-per-minute cut-points between intensity classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutPoints {
    pub light_min: f64,
    pub moderate_min: f64,
    pub vigorous_min: f64,
}

impl Default for CutPoints {
    fn default() -> Self {
        CutPoints {
            light_min: 100.0,
            moderate_min: 2000.0,
            vigorous_min: 6000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivityConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Counts per g-second of rectified band-passed magnitude.
    pub counts_scale: f64,
    pub cut_points: CutPoints,
    /// Piecewise-linear counts -> MET anchors; clamped outside.
    pub met_anchors: Vec<(f64, f64)>,
    /// Below this sampling rate results are flagged low quality.
    pub min_rate_hz: f64,
    /// Share of the nominal per-minute sample count required to emit a minute.
    pub min_minute_coverage: f64,
    /// Segments are split where consecutive samples are further apart.
    pub gap_threshold_min: i64,
}

impl Default for ActivityConfig {
    fn default() -> Self {
        ActivityConfig {
            band_low_hz: 0.25,
            band_high_hz: 2.5,
            counts_scale: 250.0,
            cut_points: CutPoints::default(),
            met_anchors: vec![(0.0, 1.0), (6000.0, 6.0)],
            min_rate_hz: 5.0,
            min_minute_coverage: 0.8,
            gap_threshold_min: 5,
        }
    }
}

/// Counts for one complete minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinuteCounts {
    /// Minute-aligned UTC ms.
    pub minute_start: i64,
    pub counts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intensity {
    Sedentary,
    Light,
    Moderate,
    Vigorous,
}

impl Intensity {
    pub fn name(&self) -> &'static str {
        match self {
            Intensity::Sedentary => "sedentary",
            Intensity::Light => "light",
            Intensity::Moderate => "moderate",
            Intensity::Vigorous => "vigorous",
        }
    }
}

/// Per-minute intensity class and MET estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinuteIntensity {
    pub minute_start: i64,
    pub counts: u32,
    pub intensity: Intensity,
    pub met: f64,
}

/// Output of [`activity_counts`] with the low-rate quality flag.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsResult {
    pub minutes: Vec<MinuteCounts>,
    /// True when any segment's estimated rate was below `min_rate_hz`.
    pub low_rate: bool,
}

/// Zero-phase FIR band-pass kernel: difference of two windowed-sinc low-pass
/// kernels (Hamming window), so the DC gain is exactly zero.
pub fn design_bandpass(rate_hz: f64, low_hz: f64, high_hz: f64) -> Vec<f64> {
    let high_hz = high_hz.min(0.999 * rate_hz / 2.0);
    // Transition band ~0.3 Hz.
    let mut taps = (11.0 * rate_hz).ceil() as usize;
    if taps % 2 == 0 {
        taps += 1;
    }
    taps = taps.clamp(21, 401);
    let m = (taps - 1) as f64;
    let sinc = |x: f64| {
        if x.abs() < 1e-12 {
            1.0
        } else {
            (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
        }
    };
    let lowpass = |fc: f64| -> Vec<f64> {
        let fc_n = fc / rate_hz; // cycles per sample
        let mut k: Vec<f64> = (0..taps)
            .map(|i| {
                let n = i as f64 - m / 2.0;
                let w = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / m).cos();
                2.0 * fc_n * sinc(2.0 * fc_n * n) * w
            })
            .collect();
        let sum: f64 = k.iter().sum();
        for v in &mut k {
            *v /= sum;
        }
        k
    };
    let hi = lowpass(high_hz);
    let lo = lowpass(low_hz);
    hi.iter().zip(lo.iter()).map(|(a, b)| a - b).collect()
}

/// Zero-phase convolution with reflected edges; output has input length.
pub fn filter_signal(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = x.len();
    let k = kernel.len();
    let half = k / 2;
    if n == 0 {
        return Vec::new();
    }
    let reflect = |i: i64| -> f64 {
        let len = n as i64;
        let mut idx = i;
        // Mirror until in range; terminates because the span shrinks.
        while idx < 0 || idx >= len {
            if idx < 0 {
                idx = -idx;
            }
            if idx >= len {
                idx = 2 * (len - 1) - idx;
            }
        }
        x[idx as usize]
    };
    (0..n as i64)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &w)| w * reflect(i + j as i64 - half as i64))
                .sum()
        })
        .collect()
}

/// Split samples into contiguous segments at recording gaps.
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

fn estimate_rate(seg: &[AccelSample]) -> f64 {
    if seg.len() < 2 {
        return 0.0;
    }
    let span_s = (seg[seg.len() - 1].t - seg[0].t) as f64 / 1000.0;
    if span_s <= 0.0 {
        return 0.0;
    }
    (seg.len() - 1) as f64 / span_s
}

/// Per-minute activity counts over a (possibly gappy) accel sequence.
/// Minutes inside gaps are omitted; only minutes with sufficient sample
/// coverage are emitted.
pub fn activity_counts(samples: &[AccelSample], cfg: &ActivityConfig) -> CountsResult {
    let mut minutes = Vec::new();
    let mut low_rate = false;
    for seg in segments(samples, cfg.gap_threshold_min) {
        if seg.len() < 4 {
            continue;
        }
        let rate = estimate_rate(seg);
        if rate <= 0.0 {
            continue;
        }
        if rate < cfg.min_rate_hz {
            low_rate = true;
        }
        let kernel = design_bandpass(rate, cfg.band_low_hz, cfg.band_high_hz);
        let mags: Vec<f64> = seg.iter().map(|s| s.magnitude()).collect();
        let filtered = filter_signal(&mags, &kernel);
        let dt_s = 1.0 / rate;
        // Accumulate rectified in-band magnitude per minute epoch.
        let mut acc: Option<(i64, f64, usize)> = None;
        let expected = rate * 60.0 * cfg.min_minute_coverage;
        for (s, &y) in seg.iter().zip(filtered.iter()) {
            let minute = s.t.div_euclid(MS_PER_MIN);
            match &mut acc {
                Some((m, sum, n)) if *m == minute => {
                    *sum += y.abs() * dt_s;
                    *n += 1;
                }
                _ => {
                    if let Some((m, sum, n)) = acc.take() {
                        if (n as f64) >= expected {
                            minutes.push(MinuteCounts {
                                minute_start: m * MS_PER_MIN,
                                counts: (sum * cfg.counts_scale).round() as u32,
                            });
                        }
                    }
                    acc = Some((minute, y.abs() * dt_s, 1));
                }
            }
        }
        if let Some((m, sum, n)) = acc {
            if (n as f64) >= expected {
                minutes.push(MinuteCounts {
                    minute_start: m * MS_PER_MIN,
                    counts: (sum * cfg.counts_scale).round() as u32,
                });
            }
        }
    }
    minutes.sort_by_key(|m| m.minute_start);
    minutes.dedup_by_key(|m| m.minute_start);
    CountsResult { minutes, low_rate }
}

/// Map counts to an intensity class using the configured cut-points.
pub fn classify_counts(counts: u32, cuts: &CutPoints) -> Intensity {
    let c = counts as f64;
    if c < cuts.light_min {
        Intensity::Sedentary
    } else if c < cuts.moderate_min {
        Intensity::Light
    } else if c < cuts.vigorous_min {
        Intensity::Moderate
    } else {
        Intensity::Vigorous
    }
}

/// Piecewise-linear MET from counts, clamped to the anchor range.
pub fn met_from_counts(counts: u32, anchors: &[(f64, f64)]) -> f64 {
    let c = counts as f64;
    debug_assert!(anchors.len() >= 2);
    if c <= anchors[0].0 {
        return anchors[0].1;
    }
    for pair in anchors.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if c <= x1 {
            return y0 + (y1 - y0) * (c - x0) / (x1 - x0);
        }
    }
    anchors[anchors.len() - 1].1
}

/// Classify each minute and attach the MET estimate. Output minutes match
/// input minutes one to one.
pub fn classify_activity(minutes: &[MinuteCounts], cfg: &ActivityConfig) -> Vec<MinuteIntensity> {
    minutes
        .iter()
        .map(|m| MinuteIntensity {
            minute_start: m.minute_start,
            counts: m.counts,
            intensity: classify_counts(m.counts, &cfg.cut_points),
            met: met_from_counts(m.counts, &cfg.met_anchors),
        })
        .collect()
}
