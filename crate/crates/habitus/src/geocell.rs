//! Geohash cells: the spatial key for aggregation and environment measures.
//!
//! A cell is a base32 geohash string of length 1 to 12. String length sets the
//! resolution; any prefix of a cell is the containing coarser cell, which is
//! what the privacy gate exploits when it grows a region.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Standard geohash base32 alphabet (no a, i, l, o).
pub const BASE32: &[u8; 32] = b"0123456789bcdefghjkmnpqrstuvwxyz";

/// Maximum supported code length.
pub const MAX_LEN: usize = 12;

/// Mean spherical Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// A WGS84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::validation("coordinates must be finite"));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::validation(format!("latitude {lat} out of [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::validation(format!("longitude {lon} out of [-180, 180]")));
        }
        Ok(GeoPoint { lat, lon })
    }

    /// Great-circle distance to `other` in meters (haversine on the sphere).
    pub fn distance_m(&self, other: &GeoPoint) -> f64 {
        let lat1 = self.lat.to_radians();
        let lat2 = other.lat.to_radians();
        let dlat = (other.lat - self.lat).to_radians();
        let dlon = (other.lon - self.lon).to_radians();
        let a = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_KM * 1000.0 * a.sqrt().atan2((1.0 - a).sqrt())
    }
}

/// Geographic bounding box of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn contains(&self, p: &GeoPoint) -> bool {
        p.lat >= self.min_lat && p.lat <= self.max_lat && p.lon >= self.min_lon && p.lon <= self.max_lon
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        other.min_lat >= self.min_lat
            && other.max_lat <= self.max_lat
            && other.min_lon >= self.min_lon
            && other.max_lon <= self.max_lon
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: (self.min_lat + self.max_lat) / 2.0,
            lon: (self.min_lon + self.max_lon) / 2.0,
        }
    }

    pub fn width_deg(&self) -> f64 {
        self.max_lon - self.min_lon
    }

    pub fn height_deg(&self) -> f64 {
        self.max_lat - self.min_lat
    }
}

/// A geohash cell code, 1 to 12 lowercase base32 characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GeoCell(String);

impl GeoCell {
    pub fn parse(code: &str) -> Result<Self> {
        if code.is_empty() || code.len() > MAX_LEN {
            return Err(Error::validation(format!(
                "geohash length must be 1..={MAX_LEN}, got {}",
                code.len()
            )));
        }
        for c in code.bytes() {
            if !BASE32.contains(&c) {
                return Err(Error::validation(format!(
                    "invalid geohash character {:?} in {code:?}",
                    c as char
                )));
            }
        }
        Ok(GeoCell(code.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when `self` is a prefix of (contains) `other`.
    pub fn is_prefix_of(&self, other: &GeoCell) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for GeoCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for GeoCell {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        GeoCell::parse(&s)
    }
}

impl From<GeoCell> for String {
    fn from(c: GeoCell) -> String {
        c.0
    }
}

/// Encode a point to a cell of exactly `precision` characters.
///
/// Bisection is lower half-open: a point exactly on a dividing boundary
/// belongs to the upper half.
pub fn encode(p: &GeoPoint, precision: usize) -> Result<GeoCell> {
    GeoPoint::new(p.lat, p.lon)?;
    if precision == 0 || precision > MAX_LEN {
        return Err(Error::argument(format!(
            "precision must be 1..={MAX_LEN}, got {precision}"
        )));
    }
    let mut code = String::with_capacity(precision);
    let mut lat = (-90.0f64, 90.0f64);
    let mut lon = (-180.0f64, 180.0f64);
    let mut even_bit = true; // longitude first
    let mut ch = 0usize;
    let mut bit = 0usize;
    while code.len() < precision {
        if even_bit {
            let mid = (lon.0 + lon.1) / 2.0;
            if p.lon >= mid {
                ch = (ch << 1) | 1;
                lon.0 = mid;
            } else {
                ch <<= 1;
                lon.1 = mid;
            }
        } else {
            let mid = (lat.0 + lat.1) / 2.0;
            if p.lat >= mid {
                ch = (ch << 1) | 1;
                lat.0 = mid;
            } else {
                ch <<= 1;
                lat.1 = mid;
            }
        }
        even_bit = !even_bit;
        bit += 1;
        if bit == 5 {
            code.push(BASE32[ch] as char);
            bit = 0;
            ch = 0;
        }
    }
    Ok(GeoCell(code))
}

/// Decode a cell to its bounding box.
pub fn decode(cell: &GeoCell) -> BoundingBox {
    let mut lat = (-90.0f64, 90.0f64);
    let mut lon = (-180.0f64, 180.0f64);
    let mut even_bit = true;
    for c in cell.0.bytes() {
        let idx = BASE32.iter().position(|&b| b == c).expect("validated code") as u8;
        for shift in (0..5).rev() {
            let bit = (idx >> shift) & 1;
            if even_bit {
                let mid = (lon.0 + lon.1) / 2.0;
                if bit == 1 {
                    lon.0 = mid;
                } else {
                    lon.1 = mid;
                }
            } else {
                let mid = (lat.0 + lat.1) / 2.0;
                if bit == 1 {
                    lat.0 = mid;
                } else {
                    lat.1 = mid;
                }
            }
            even_bit = !even_bit;
        }
    }
    BoundingBox {
        min_lat: lat.0,
        max_lat: lat.1,
        min_lon: lon.0,
        max_lon: lon.1,
    }
}

/// Truncate a cell to `new_len` characters (its containing coarser cell).
pub fn coarsen(cell: &GeoCell, new_len: usize) -> Result<GeoCell> {
    if new_len == 0 || new_len > cell.len() {
        return Err(Error::argument(format!(
            "coarsen target length {new_len} outside 1..={}",
            cell.len()
        )));
    }
    Ok(GeoCell(cell.0[..new_len].to_string()))
}

/// Approximate area of the cell in square kilometers: haversine width at the
/// box's mid latitude times haversine height, on the spherical Earth model.
pub fn cell_area_km2(cell: &GeoCell) -> f64 {
    let b = decode(cell);
    let mid_lat = (b.min_lat + b.max_lat) / 2.0;
    let mid_lon = (b.min_lon + b.max_lon) / 2.0;
    let width_m = GeoPoint {
        lat: mid_lat,
        lon: b.min_lon,
    }
    .distance_m(&GeoPoint {
        lat: mid_lat,
        lon: b.max_lon,
    });
    let height_m = GeoPoint {
        lat: b.min_lat,
        lon: mid_lon,
    }
    .distance_m(&GeoPoint {
        lat: b.max_lat,
        lon: mid_lon,
    });
    (width_m / 1000.0) * (height_m / 1000.0)
}
