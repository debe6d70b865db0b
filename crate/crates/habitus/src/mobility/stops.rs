//! Stay detection over GPS trajectories: maximal dwell windows whose fixes
//! stay within a spatial radius of their running centroid for a minimum
//! duration.

use serde::{Deserialize, Serialize};

use crate::geocell::GeoPoint;
use crate::ingest::GpsSample;
use crate::timeutil::MS_PER_MIN;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopDetectParams {
    /// Spatial radius around the running centroid in meters.
    pub eps_m: f64,
    /// Minimum dwell duration in minutes.
    pub min_duration_min: f64,
    /// Minimum number of fixes in a stop.
    pub min_pts: usize,
}

impl Default for StopDetectParams {
    fn default() -> Self {
        // Sized to the one-fix-per-minute GPS cadence.
        StopDetectParams {
            eps_m: 75.0,
            min_duration_min: 10.0,
            min_pts: 3,
        }
    }
}

/// A detected dwell, with indices into the source fix sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RawStop {
    pub start: i64,
    pub end: i64,
    pub centroid: GeoPoint,
    pub first_idx: usize,
    pub last_idx: usize,
}

/// Detect stops. Fewer than two fixes yield no stops. Identical fixes
/// collapse into a single stop spanning the data.
pub fn detect_stops(gps: &[GpsSample], params: &StopDetectParams) -> Vec<RawStop> {
    let n = gps.len();
    let min_duration_ms = (params.min_duration_min * MS_PER_MIN as f64) as i64;
    let mut stops = Vec::new();
    let mut i = 0usize;
    while i < n {
        let mut sum_lat = gps[i].point.lat;
        let mut sum_lon = gps[i].point.lon;
        let mut count = 1usize;
        let mut j = i + 1;
        while j < n {
            let centroid = GeoPoint {
                lat: sum_lat / count as f64,
                lon: sum_lon / count as f64,
            };
            if centroid.distance_m(&gps[j].point) <= params.eps_m {
                sum_lat += gps[j].point.lat;
                sum_lon += gps[j].point.lon;
                count += 1;
                j += 1;
            } else {
                break;
            }
        }
        let duration = gps[j - 1].t - gps[i].t;
        if duration >= min_duration_ms && count >= params.min_pts {
            stops.push(RawStop {
                start: gps[i].t,
                end: gps[j - 1].t,
                centroid: GeoPoint {
                    lat: sum_lat / count as f64,
                    lon: sum_lon / count as f64,
                },
                first_idx: i,
                last_idx: j - 1,
            });
            i = j;
        } else {
            i += 1;
        }
    }
    stops
}
