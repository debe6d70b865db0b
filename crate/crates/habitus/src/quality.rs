//! Measurement quality on the five-level scale, and fuzzy combination of
//! simultaneous error sources.
//!
//! Every measurement and aggregate in the pipeline carries a score in [0, 1]
//! anchored at {0.2, 0.4, 0.6, 0.8, 1.0}. Availability maps to the scale by
//! linear interpolation between a very-low and a very-high threshold; scores
//! from independent error sources combine through t-norms, corroborating
//! measurements of the same quantity through t-conorms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five anchor levels of the quality scale.
pub const LEVELS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

/// Bottom and top of the scale.
pub const VERY_LOW: f64 = 0.2;
pub const VERY_HIGH: f64 = 1.0;

/// A quality value in [0, 1] together with the raw scores it was combined from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<(String, f64)>,
}

impl QualityScore {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::validation(format!("quality {value} outside [0, 1]")));
        }
        Ok(QualityScore {
            value,
            provenance: Vec::new(),
        })
    }

    pub fn labelled(value: f64, source: impl Into<String>) -> Result<Self> {
        let mut q = Self::new(value)?;
        q.provenance.push((source.into(), value));
        Ok(q)
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Fuzzy intersection operators (t-norms).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    Min,
    Product,
    Lukasiewicz,
}

impl Norm {
    pub fn apply(&self, a: f64, b: f64) -> f64 {
        match self {
            Norm::Min => a.min(b),
            Norm::Product => a * b,
            Norm::Lukasiewicz => (a + b - 1.0).max(0.0),
        }
    }
}

/// Fuzzy union operators (t-conorms).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conorm {
    #[default]
    Max,
    ProbabilisticSum,
    BoundedSum,
}

impl Conorm {
    pub fn apply(&self, a: f64, b: f64) -> f64 {
        match self {
            Conorm::Max => a.max(b),
            Conorm::ProbabilisticSum => a + b - a * b,
            Conorm::BoundedSum => (a + b).min(1.0),
        }
    }
}

/// Combine quality levels of two independent error sources.
pub fn combine_intersect(m1: &QualityScore, m2: &QualityScore, norm: Norm) -> QualityScore {
    let mut provenance = m1.provenance.clone();
    provenance.extend(m2.provenance.iter().cloned());
    QualityScore {
        value: norm.apply(m1.value, m2.value),
        provenance,
    }
}

/// Combine quality levels of two measurements of the same quantity.
pub fn combine_union(m1: &QualityScore, m2: &QualityScore, conorm: Conorm) -> QualityScore {
    let mut provenance = m1.provenance.clone();
    provenance.extend(m2.provenance.iter().cloned());
    QualityScore {
        value: conorm.apply(m1.value, m2.value),
        provenance,
    }
}

/// Fold a sequence of scores with a t-norm. Empty input yields the norm's
/// neutral element 1.0.
pub fn combine_all(scores: &[QualityScore], norm: Norm) -> QualityScore {
    let mut acc = QualityScore {
        value: 1.0,
        provenance: Vec::new(),
    };
    for s in scores {
        acc = combine_intersect(&acc, s, norm);
    }
    acc
}

/// Very-low / very-high availability thresholds for one data type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub very_low: f64,
    pub very_high: f64,
}

impl Thresholds {
    pub fn new(very_low: f64, very_high: f64) -> Result<Self> {
        if !(very_low.is_finite() && very_high.is_finite() && very_low < very_high) {
            return Err(Error::validation(format!(
                "thresholds require very_low < very_high, got {very_low} / {very_high}"
            )));
        }
        Ok(Thresholds { very_low, very_high })
    }
}

/// Availability thresholds per data type. Defaults: daily accelerometer and
/// GPS hours 1 → 6, data hours per region 10 → 100, users per region 10 → 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AvailabilityThresholds {
    pub accel_hours_per_day: Thresholds,
    pub gps_hours_per_day: Thresholds,
    pub hours_per_region: Thresholds,
    pub users_per_region: Thresholds,
}

impl Default for AvailabilityThresholds {
    fn default() -> Self {
        AvailabilityThresholds {
            accel_hours_per_day: Thresholds { very_low: 1.0, very_high: 6.0 },
            gps_hours_per_day: Thresholds { very_low: 1.0, very_high: 6.0 },
            hours_per_region: Thresholds { very_low: 10.0, very_high: 100.0 },
            users_per_region: Thresholds { very_low: 10.0, very_high: 100.0 },
        }
    }
}

/// Map a data-availability measurement to the quality scale: at or below the
/// very-low threshold the score is 0.2, at or above the very-high threshold
/// it is 1.0, and values in between interpolate linearly.
pub fn availability_quality(value: f64, thresholds: &Thresholds) -> Result<QualityScore> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::validation(format!("availability {value} must be nonnegative")));
    }
    let v = if value <= thresholds.very_low {
        VERY_LOW
    } else if value >= thresholds.very_high {
        VERY_HIGH
    } else {
        VERY_LOW
            + (VERY_HIGH - VERY_LOW) * (value - thresholds.very_low)
                / (thresholds.very_high - thresholds.very_low)
    };
    QualityScore::labelled(v, "availability")
}

/// Per-source quality table. Smartwatch data is very high, smartphone high,
/// official statistics very high, Foursquare venues very high, Google maps
/// moderate. Unknown sources score moderate and are reported back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceQualityTable {
    pub scores: BTreeMap<String, f64>,
    pub unknown_default: f64,
}

impl Default for SourceQualityTable {
    fn default() -> Self {
        let mut scores = BTreeMap::new();
        scores.insert("smartwatch".to_string(), 1.0);
        scores.insert("smartphone".to_string(), 0.8);
        scores.insert("official_statistics".to_string(), 1.0);
        scores.insert("foursquare".to_string(), 1.0);
        scores.insert("gmaps".to_string(), 0.6);
        SourceQualityTable {
            scores,
            unknown_default: 0.6,
        }
    }
}

impl SourceQualityTable {
    /// Look up a source; unknown sources get the default and are flagged.
    pub fn source_quality(&self, source: &str) -> (QualityScore, bool) {
        match self.scores.get(source) {
            Some(&v) => (
                QualityScore::labelled(v, format!("source:{source}")).expect("table validated"),
                true,
            ),
            None => (
                QualityScore::labelled(self.unknown_default, format!("source:{source}(unknown)"))
                    .expect("default validated"),
                false,
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, &v) in &self.scores {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("source quality {name}={v} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.unknown_default) {
            return Err(Error::validation("unknown_default outside [0, 1]"));
        }
        Ok(())
    }
}

/// One participant row of the quality report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParticipantQualityRow {
    pub pid: String,
    pub days_observed: usize,
    pub mean_accel_hours: f64,
    pub mean_gps_hours: f64,
    pub availability_quality_accel: f64,
    pub availability_quality_gps: f64,
    pub source_quality: f64,
    pub combined: f64,
}

/// One region row of the quality report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionQualityRow {
    pub cell: String,
    pub hours_recorded: f64,
    pub n_users: usize,
    pub hours_quality: f64,
    pub users_quality: f64,
    pub combined: f64,
}

/// Quality audit over a processed dataset: per-participant availability and
/// source scores, per-region data volume scores, all combined with the
/// configured t-norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityReport {
    pub norm: Norm,
    pub participants: Vec<ParticipantQualityRow>,
    pub regions: Vec<RegionQualityRow>,
}

/// Inputs for one participant: device source plus per-day availability hours.
#[derive(Debug, Clone)]
pub struct ParticipantQualityInput {
    pub pid: String,
    pub source: String,
    pub daily_accel_hours: Vec<f64>,
    pub daily_gps_hours: Vec<f64>,
}

/// Inputs for one region cell.
#[derive(Debug, Clone)]
pub struct RegionQualityInput {
    pub cell: String,
    pub hours_recorded: f64,
    pub n_users: usize,
}

/// Build the quality report. Rows come out sorted by id so recomputation is
/// byte-identical.
pub fn quality_report(
    mut participants: Vec<ParticipantQualityInput>,
    mut regions: Vec<RegionQualityInput>,
    thresholds: &AvailabilityThresholds,
    sources: &SourceQualityTable,
    norm: Norm,
) -> Result<QualityReport> {
    participants.sort_by(|a, b| a.pid.cmp(&b.pid));
    regions.sort_by(|a, b| a.cell.cmp(&b.cell));

    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };

    let mut participant_rows = Vec::with_capacity(participants.len());
    for p in &participants {
        let accel_h = mean(&p.daily_accel_hours);
        let gps_h = mean(&p.daily_gps_hours);
        let qa = availability_quality(accel_h, &thresholds.accel_hours_per_day)?;
        let qg = availability_quality(gps_h, &thresholds.gps_hours_per_day)?;
        let (qs, _) = sources.source_quality(&p.source);
        let combined = combine_all(&[qa.clone(), qg.clone(), qs.clone()], norm);
        participant_rows.push(ParticipantQualityRow {
            pid: p.pid.clone(),
            days_observed: p.daily_accel_hours.len().max(p.daily_gps_hours.len()),
            mean_accel_hours: accel_h,
            mean_gps_hours: gps_h,
            availability_quality_accel: qa.value,
            availability_quality_gps: qg.value,
            source_quality: qs.value,
            combined: combined.value,
        });
    }

    let mut region_rows = Vec::with_capacity(regions.len());
    for r in &regions {
        let qh = availability_quality(r.hours_recorded, &thresholds.hours_per_region)?;
        let qu = availability_quality(r.n_users as f64, &thresholds.users_per_region)?;
        let combined = combine_intersect(&qh, &qu, norm);
        region_rows.push(RegionQualityRow {
            cell: r.cell.clone(),
            hours_recorded: r.hours_recorded,
            n_users: r.n_users,
            hours_quality: qh.value,
            users_quality: qu.value,
            combined: combined.value,
        });
    }

    Ok(QualityReport {
        norm,
        participants: participant_rows,
        regions: region_rows,
    })
}

impl QualityReport {
    /// Participant rows as CSV.
    pub fn participants_csv(&self) -> String {
        let mut out = String::from(
            "pid,days_observed,mean_accel_hours,mean_gps_hours,availability_quality_accel,availability_quality_gps,source_quality,combined\n",
        );
        for r in &self.participants {
            out.push_str(&format!(
                "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
                r.pid,
                r.days_observed,
                r.mean_accel_hours,
                r.mean_gps_hours,
                r.availability_quality_accel,
                r.availability_quality_gps,
                r.source_quality,
                r.combined
            ));
        }
        out
    }

    /// Region rows as CSV.
    pub fn regions_csv(&self) -> String {
        let mut out =
            String::from("cell,hours_recorded,n_users,hours_quality,users_quality,combined\n");
        for r in &self.regions {
            out.push_str(&format!(
                "{},{:.4},{},{:.4},{:.4},{:.4}\n",
                r.cell, r.hours_recorded, r.n_users, r.hours_quality, r.users_quality, r.combined
            ));
        }
        out
    }
}
