//! Local-environment measures per cell: POI taxonomy mapping, availability,
//! counts, densities, facility-type distributions, and the join with
//! official statistics tables.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geocell::{self, GeoCell, GeoPoint};

/// A point of interest from one provider snapshot, mapped to the internal
/// taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub location: GeoPoint,
    pub source: String,
    pub raw_category: String,
    pub category: String,
}

/// Internal taxonomy categories with a sink value for anything unmapped.
pub const OTHER_CATEGORY: &str = "other";

/// Category groups behind the availability and density measures.
pub fn category_groups() -> BTreeMap<&'static str, Vec<&'static str>> {
    BTreeMap::from([
        ("supermarkets_grocery", vec!["supermarket", "grocery"]),
        ("food_outlets", vec!["restaurant", "fast_food", "takeaway"]),
        ("takeaway", vec!["takeaway", "fast_food"]),
        ("cafes_bars", vec!["cafe_bar"]),
        ("liquor_stores", vec!["liquor_store"]),
        ("parks", vec!["park"]),
        ("indoor_recreation", vec!["indoor_recreation", "gym", "pool"]),
        (
            "outdoor_recreation",
            vec!["outdoor_recreation", "sports_field", "playground", "park"],
        ),
    ])
}

/// Categories counted as recreational facilities for the distribution LEC.
pub const RECREATION_CATEGORIES: [&str; 7] = [
    "gym",
    "pool",
    "sports_field",
    "playground",
    "indoor_recreation",
    "outdoor_recreation",
    "park",
];

/// Categories counted as open space for the neighborhood share.
pub const OPEN_SPACE_CATEGORIES: [&str; 3] = ["park", "outdoor_recreation", "playground"];

/// Provider category to internal taxonomy mapping. Rows with source `*`
/// apply to any provider; a provider-specific row wins over the wildcard.
#[derive(Debug, Clone, Default)]
pub struct TaxonomyTable {
    by_source: BTreeMap<(String, String), String>,
    wildcard: BTreeMap<String, String>,
}

impl TaxonomyTable {
    pub fn insert(&mut self, source: &str, raw: &str, category: &str) {
        if source == "*" {
            self.wildcard.insert(raw.to_string(), category.to_string());
        } else {
            self.by_source
                .insert((source.to_string(), raw.to_string()), category.to_string());
        }
    }

    /// CSV columns: source, raw_category, category.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut table = TaxonomyTable::default();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::format(path, e.to_string()))?;
        for row in rdr.records() {
            let row = row.map_err(|e| Error::format(path, e.to_string()))?;
            if row.len() != 3 {
                return Err(Error::format(path, format!("expected 3 columns, got {}", row.len())));
            }
            table.insert(&row[0], &row[1], &row[2]);
        }
        Ok(table)
    }

    /// Total mapping: provider-specific row, then wildcard, then `other`.
    /// Returns the category and whether the raw value was mapped.
    pub fn map_taxonomy(&self, source: &str, raw_category: &str) -> (String, bool) {
        if let Some(c) = self
            .by_source
            .get(&(source.to_string(), raw_category.to_string()))
        {
            return (c.clone(), true);
        }
        if let Some(c) = self.wildcard.get(raw_category) {
            return (c.clone(), true);
        }
        (OTHER_CATEGORY.to_string(), false)
    }
}

/// An immutable POI snapshot with mapping statistics.
#[derive(Debug, Clone, Default)]
pub struct PoiSnapshot {
    pub pois: Vec<Poi>,
    pub unmapped: usize,
    pub sources: BTreeSet<String>,
}

impl PoiSnapshot {
    pub fn from_pois(pois: Vec<Poi>, unmapped: usize) -> Self {
        let sources = pois.iter().map(|p| p.source.clone()).collect();
        PoiSnapshot {
            pois,
            unmapped,
            sources,
        }
    }

    /// Load a GeoJSON FeatureCollection of points with `source` and
    /// `raw_category` properties, mapping categories through the table.
    pub fn load_geojson(path: &Path, taxonomy: &TaxonomyTable) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if doc["type"] != "FeatureCollection" {
            return Err(Error::format(path, "expected a GeoJSON FeatureCollection"));
        }
        let features = doc["features"]
            .as_array()
            .ok_or_else(|| Error::format(path, "missing features array"))?;
        let mut pois = Vec::with_capacity(features.len());
        let mut unmapped = 0usize;
        for (i, f) in features.iter().enumerate() {
            let geom = &f["geometry"];
            if geom["type"] != "Point" {
                return Err(Error::format(path, format!("feature {i}: only Point geometry supported")));
            }
            let coords = geom["coordinates"]
                .as_array()
                .filter(|c| c.len() >= 2)
                .ok_or_else(|| Error::format(path, format!("feature {i}: bad coordinates")))?;
            let lon = coords[0].as_f64().ok_or_else(|| Error::format(path, "bad lon"))?;
            let lat = coords[1].as_f64().ok_or_else(|| Error::format(path, "bad lat"))?;
            let location = GeoPoint::new(lat, lon)
                .map_err(|e| Error::format(path, format!("feature {i}: {e}")))?;
            let props = &f["properties"];
            let source = props["source"].as_str().unwrap_or("other").to_string();
            let raw_category = props["raw_category"].as_str().unwrap_or_default().to_string();
            let (category, mapped) = taxonomy.map_taxonomy(&source, &raw_category);
            if !mapped {
                unmapped += 1;
            }
            pois.push(Poi {
                location,
                source,
                raw_category,
                category,
            });
        }
        Ok(PoiSnapshot::from_pois(pois, unmapped))
    }

    /// POIs inside a cell; boundary points follow the encoder's boundary rule.
    pub fn in_cell<'a>(&'a self, cell: &'a GeoCell) -> impl Iterator<Item = &'a Poi> {
        self.pois.iter().filter(move |p| {
            geocell::encode(&p.location, cell.len())
                .map(|c| c == *cell)
                .unwrap_or(false)
        })
    }
}

/// Value payload of a local-environment measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LecData {
    Bool(bool),
    Count(u32),
    Real(f64),
    Pmf(BTreeMap<String, f64>),
}

/// One local-environment measure for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LecValue {
    pub cell: GeoCell,
    pub name: String,
    pub value: LecData,
    pub quality: f64,
}

impl LecValue {
    pub fn validate(&self) -> Result<()> {
        match &self.value {
            LecData::Real(v) => {
                if !v.is_finite() {
                    return Err(Error::validation(format!("{}: non-finite value", self.name)));
                }
                if self.name.contains("density") && *v < 0.0 {
                    return Err(Error::validation(format!("{}: negative density", self.name)));
                }
            }
            LecData::Pmf(pmf) => {
                let sum: f64 = pmf.values().sum();
                if !pmf.is_empty() && (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::validation(format!("{}: pmf sums to {sum}", self.name)));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Availability, counts, densities, the recreation-type distribution, and
/// the open-space share for one cell. `quality` is the snapshot's source
/// quality.
pub fn compute_cell_lecs(snapshot: &PoiSnapshot, cell: &GeoCell, quality: f64) -> Result<Vec<LecValue>> {
    if cell.len() < 4 {
        return Err(Error::argument(format!(
            "LEC cells must be at least 4 characters, got {:?}",
            cell.as_str()
        )));
    }
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    for poi in snapshot.in_cell(cell) {
        *counts.entry(poi.category.as_str()).or_insert(0) += 1;
    }
    let group_count = |cats: &[&str]| -> u32 { cats.iter().map(|c| counts.get(c).copied().unwrap_or(0)).sum() };

    let mut out = Vec::new();
    for (group, cats) in category_groups() {
        let n = group_count(&cats);
        out.push(LecValue {
            cell: cell.clone(),
            name: format!("availability_{group}"),
            value: LecData::Bool(n > 0),
            quality,
        });
        out.push(LecValue {
            cell: cell.clone(),
            name: format!("count_{group}"),
            value: LecData::Count(n),
            quality,
        });
    }

    let area = geocell::cell_area_km2(cell);
    let food = group_count(&category_groups()["food_outlets"]);
    let recreation = group_count(&RECREATION_CATEGORIES);
    out.push(LecValue {
        cell: cell.clone(),
        name: "density_food_outlets".into(),
        value: LecData::Real(food as f64 / area),
        quality,
    });
    out.push(LecValue {
        cell: cell.clone(),
        name: "density_recreational_facilities".into(),
        value: LecData::Real(recreation as f64 / area),
        quality,
    });

    if recreation > 0 {
        let mut pmf = BTreeMap::new();
        for cat in RECREATION_CATEGORIES {
            let n = counts.get(cat).copied().unwrap_or(0);
            if n > 0 {
                pmf.insert(cat.to_string(), n as f64 / recreation as f64);
            }
        }
        out.push(LecValue {
            cell: cell.clone(),
            name: "distribution_recreation_type".into(),
            value: LecData::Pmf(pmf),
            quality,
        });
    }

    // Open-space share of the 6-character neighborhood around this cell.
    let neighborhood = if cell.len() >= 6 {
        geocell::coarsen(cell, 6)?
    } else {
        cell.clone()
    };
    let mut total = 0u32;
    let mut open = 0u32;
    for poi in snapshot.in_cell(&neighborhood) {
        total += 1;
        if OPEN_SPACE_CATEGORIES.contains(&poi.category.as_str()) {
            open += 1;
        }
    }
    if total > 0 {
        out.push(LecValue {
            cell: cell.clone(),
            name: "open_spaces_neighborhood_pct".into(),
            value: LecData::Real(100.0 * open as f64 / total as f64),
            quality,
        });
    }

    for v in &out {
        v.validate()?;
    }
    Ok(out)
}

/// Count POIs of the given categories within `radius_m` of a point.
pub fn count_within_radius(
    p: &GeoPoint,
    snapshot: &PoiSnapshot,
    categories: &[&str],
    radius_m: f64,
) -> Result<u32> {
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(Error::argument(format!("radius {radius_m} must be positive")));
    }
    Ok(snapshot
        .pois
        .iter()
        .filter(|poi| categories.contains(&poi.category.as_str()))
        .filter(|poi| p.distance_m(&poi.location) <= radius_m)
        .count() as u32)
}

/// One region row of the statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRegion {
    pub region_code: String,
    pub avg_income: f64,
    pub unemployment_rate: f64,
    pub education_low: f64,
    pub education_mid: f64,
    pub education_high: f64,
}

impl StatRegion {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.unemployment_rate) {
            return Err(Error::validation(format!(
                "region {}: unemployment_rate {} outside [0, 100]",
                self.region_code, self.unemployment_rate
            )));
        }
        let edu_sum = self.education_low + self.education_mid + self.education_high;
        if (edu_sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "region {}: education distribution sums to {edu_sum}",
                self.region_code
            )));
        }
        Ok(())
    }
}

/// Statistics table plus the region-code to cell-prefix map.
#[derive(Debug, Clone, Default)]
pub struct StatTable {
    pub regions: BTreeMap<String, StatRegion>,
    /// region_code -> covered cell prefixes.
    pub coverage: BTreeMap<String, Vec<String>>,
}

impl StatTable {
    /// Stats CSV columns: region_code, avg_income, unemployment_rate,
    /// education_low, education_mid, education_high.
    /// Region map CSV columns: region_code, cell_prefix.
    pub fn load_csv(stats_path: &Path, region_map_path: &Path) -> Result<Self> {
        let mut table = StatTable::default();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(stats_path)
            .map_err(|e| Error::format(stats_path, e.to_string()))?;
        for row in rdr.records() {
            let row = row.map_err(|e| Error::format(stats_path, e.to_string()))?;
            if row.len() != 6 {
                return Err(Error::format(stats_path, format!("expected 6 columns, got {}", row.len())));
            }
            let parse = |i: usize| -> Result<f64> {
                row[i]
                    .parse::<f64>()
                    .map_err(|e| Error::format(stats_path, format!("bad number {:?}: {e}", &row[i])))
            };
            let region = StatRegion {
                region_code: row[0].to_string(),
                avg_income: parse(1)?,
                unemployment_rate: parse(2)?,
                education_low: parse(3)?,
                education_mid: parse(4)?,
                education_high: parse(5)?,
            };
            region.validate()?;
            table.regions.insert(region.region_code.clone(), region);
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(region_map_path)
            .map_err(|e| Error::format(region_map_path, e.to_string()))?;
        for row in rdr.records() {
            let row = row.map_err(|e| Error::format(region_map_path, e.to_string()))?;
            if row.len() != 2 {
                return Err(Error::format(region_map_path, format!("expected 2 columns, got {}", row.len())));
            }
            GeoCell::parse(&row[1])?;
            table
                .coverage
                .entry(row[0].to_string())
                .or_default()
                .push(row[1].to_string());
        }
        for code in table.coverage.keys() {
            if !table.regions.contains_key(code) {
                return Err(Error::validation(format!("region map references unknown region {code:?}")));
            }
        }
        Ok(table)
    }

    /// The covering region of a cell: among regions with a prefix of the
    /// cell, the one with the longest (smallest-area) prefix wins.
    pub fn region_for(&self, cell: &GeoCell) -> Option<&StatRegion> {
        let mut best: Option<(usize, &str)> = None;
        for (code, prefixes) in &self.coverage {
            for prefix in prefixes {
                if cell.as_str().starts_with(prefix.as_str()) {
                    let better = match best {
                        Some((len, best_code)) => {
                            prefix.len() > len || (prefix.len() == len && code.as_str() < best_code)
                        }
                        None => true,
                    };
                    if better {
                        best = Some((prefix.len(), code));
                    }
                }
            }
        }
        best.and_then(|(_, code)| self.regions.get(code))
    }
}

/// Cells with no covering region, reported back to the caller.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UncoveredCell {
    pub cell: GeoCell,
    pub reason: String,
}

/// Join official statistics onto cells. Quality is very high (1.0).
pub fn join_stats(cells: &[GeoCell], table: &StatTable) -> (Vec<LecValue>, Vec<UncoveredCell>) {
    let mut out = Vec::new();
    let mut uncovered = Vec::new();
    for cell in cells {
        match table.region_for(cell) {
            Some(region) => {
                out.push(LecValue {
                    cell: cell.clone(),
                    name: "avg_income".into(),
                    value: LecData::Real(region.avg_income),
                    quality: 1.0,
                });
                out.push(LecValue {
                    cell: cell.clone(),
                    name: "unemployment_rate".into(),
                    value: LecData::Real(region.unemployment_rate),
                    quality: 1.0,
                });
                let pmf = BTreeMap::from([
                    ("low".to_string(), region.education_low),
                    ("mid".to_string(), region.education_mid),
                    ("high".to_string(), region.education_high),
                ]);
                out.push(LecValue {
                    cell: cell.clone(),
                    name: "education_distribution".into(),
                    value: LecData::Pmf(pmf),
                    quality: 1.0,
                });
            }
            None => uncovered.push(UncoveredCell {
                cell: cell.clone(),
                reason: "no covering region in the statistics table".into(),
            }),
        }
    }
    (out, uncovered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geocell::encode;

    fn taxonomy() -> TaxonomyTable {
        let mut t = TaxonomyTable::default();
        t.insert("osm", "amenity=fast_food", "fast_food");
        t.insert("osm", "leisure=park", "park");
        t.insert("osm", "leisure=pitch", "sports_field");
        t.insert("osm", "shop=supermarket", "supermarket");
        t.insert("*", "venue=burger", "fast_food");
        t.insert("foursquare", "venue=burger", "restaurant");
        t
    }

    fn poi(lat: f64, lon: f64, category: &str) -> Poi {
        Poi {
            location: GeoPoint::new(lat, lon).unwrap(),
            source: "osm".into(),
            raw_category: String::new(),
            category: category.into(),
        }
    }

    #[test]
    fn taxonomy_lookup_and_fallback() {
        let t = taxonomy();
        assert_eq!(t.map_taxonomy("osm", "amenity=fast_food"), ("fast_food".into(), true));
        let (cat, mapped) = t.map_taxonomy("osm", "amenity=weird_thing");
        assert_eq!(cat, OTHER_CATEGORY);
        assert!(!mapped);
        // Per-source row beats the wildcard.
        assert_eq!(t.map_taxonomy("foursquare", "venue=burger"), ("restaurant".into(), true));
        assert_eq!(t.map_taxonomy("gmaps", "venue=burger"), ("fast_food".into(), true));
    }

    #[test]
    fn cell_lecs_density_and_counts() {
        // A length-6 cell near Thessaloniki; place POIs at its center.
        let cell = encode(&GeoPoint::new(40.62, 22.95).unwrap(), 6).unwrap();
        let c = crate::geocell::decode(&cell).center();
        let snapshot = PoiSnapshot::from_pois(
            vec![
                poi(c.lat, c.lon, "fast_food"),
                poi(c.lat, c.lon, "restaurant"),
                poi(c.lat, c.lon, "restaurant"),
                poi(c.lat, c.lon, "takeaway"),
                poi(c.lat, c.lon, "takeaway"),
            ],
            0,
        );
        let lecs = compute_cell_lecs(&snapshot, &cell, 0.8).unwrap();
        let by_name: BTreeMap<&str, &LecValue> = lecs.iter().map(|l| (l.name.as_str(), l)).collect();
        assert_eq!(by_name["count_food_outlets"].value, LecData::Count(5));
        let area = geocell::cell_area_km2(&cell);
        match &by_name["density_food_outlets"].value {
            LecData::Real(d) => assert!((d - 5.0 / area).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(by_name["availability_parks"].value, LecData::Bool(false));
        assert_eq!(by_name["count_parks"].value, LecData::Count(0));
    }

    #[test]
    fn recreation_distribution_pmf() {
        let cell = encode(&GeoPoint::new(40.62, 22.95).unwrap(), 6).unwrap();
        let c = crate::geocell::decode(&cell).center();
        let snapshot = PoiSnapshot::from_pois(
            vec![
                poi(c.lat, c.lon, "gym"),
                poi(c.lat, c.lon, "gym"),
                poi(c.lat, c.lon, "pool"),
                poi(c.lat, c.lon, "park"),
            ],
            0,
        );
        let lecs = compute_cell_lecs(&snapshot, &cell, 0.8).unwrap();
        let dist = lecs
            .iter()
            .find(|l| l.name == "distribution_recreation_type")
            .unwrap();
        match &dist.value {
            LecData::Pmf(pmf) => {
                assert_eq!(pmf["gym"], 0.5);
                assert_eq!(pmf["pool"], 0.25);
                assert_eq!(pmf["park"], 0.25);
                assert!((pmf.values().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Independent check: brute-force haversine scan written against the
    /// fixture by hand.
    #[test]
    fn radius_counts() {
        let p = GeoPoint::new(40.62, 22.95).unwrap();
        // Offsets: ~50 m, ~90 m, ~150 m north of p (1 deg lat = 111.19 km).
        let d = |m: f64| m / 111_190.0;
        let snapshot = PoiSnapshot::from_pois(
            vec![
                poi(40.62 + d(50.0), 22.95, "fast_food"),
                poi(40.62 + d(90.0), 22.95, "fast_food"),
                poi(40.62 + d(150.0), 22.95, "fast_food"),
            ],
            0,
        );
        assert_eq!(count_within_radius(&p, &snapshot, &["fast_food"], 100.0).unwrap(), 2);
        assert_eq!(count_within_radius(&p, &snapshot, &["fast_food"], 1000.0).unwrap(), 3);
        assert_eq!(count_within_radius(&p, &PoiSnapshot::default(), &["fast_food"], 100.0).unwrap(), 0);
        assert!(count_within_radius(&p, &snapshot, &["fast_food"], -5.0).is_err());
    }

    #[test]
    fn child_counts_partition_parent() {
        let cell = encode(&GeoPoint::new(40.62, 22.95).unwrap(), 5).unwrap();
        // Scatter POIs across the parent cell.
        let b = crate::geocell::decode(&cell);
        let mut pois = Vec::new();
        for i in 0..40 {
            let f = i as f64 / 40.0;
            let lat = b.min_lat + (b.max_lat - b.min_lat) * (0.05 + 0.9 * f);
            let lon = b.min_lon + (b.max_lon - b.min_lon) * (0.05 + 0.9 * ((f * 7.3) % 1.0));
            pois.push(poi(lat, lon, "restaurant"));
        }
        let snapshot = PoiSnapshot::from_pois(pois, 0);
        let parent_count = snapshot.in_cell(&cell).count();
        let mut child_sum = 0usize;
        for ch in crate::geocell::BASE32 {
            let child = GeoCell::parse(&format!("{}{}", cell.as_str(), *ch as char)).unwrap();
            child_sum += snapshot.in_cell(&child).count();
        }
        assert_eq!(parent_count, 40);
        assert_eq!(child_sum, parent_count);
    }

    #[test]
    fn stats_join_longest_prefix_wins() {
        let mut table = StatTable::default();
        table.regions.insert(
            "R1".into(),
            StatRegion {
                region_code: "R1".into(),
                avg_income: 15000.0,
                unemployment_rate: 12.0,
                education_low: 0.3,
                education_mid: 0.5,
                education_high: 0.2,
            },
        );
        table.regions.insert(
            "R2".into(),
            StatRegion {
                region_code: "R2".into(),
                avg_income: 22000.0,
                unemployment_rate: 6.0,
                education_low: 0.2,
                education_mid: 0.5,
                education_high: 0.3,
            },
        );
        table.coverage.insert("R1".into(), vec!["sx0".into()]);
        table.coverage.insert("R2".into(), vec!["sx0r".into()]);

        let cells: Vec<GeoCell> = ["sx0r4k", "sx0bcd", "sx0r4m", "sx0r99", "u4pruy"]
            .iter()
            .map(|s| GeoCell::parse(s).unwrap())
            .collect();
        let (lecs, uncovered) = join_stats(&cells, &table);
        // Four covered cells, three LECs each.
        assert_eq!(lecs.len(), 12);
        assert_eq!(uncovered.len(), 1);
        assert_eq!(uncovered[0].cell.as_str(), "u4pruy");
        // All covered cells inherit region values at quality 1.0.
        for l in &lecs {
            assert_eq!(l.quality, 1.0);
        }
        // sx0r4k falls under both R1 (sx0) and R2 (sx0r): R2 wins.
        let r4k_unemp = lecs
            .iter()
            .find(|l| l.cell.as_str() == "sx0r4k" && l.name == "unemployment_rate")
            .unwrap();
        assert_eq!(r4k_unemp.value, LecData::Real(6.0));
        // sx0bcd only matches R1.
        let abc_unemp = lecs
            .iter()
            .find(|l| l.cell.as_str() == "sx0bcd" && l.name == "unemployment_rate")
            .unwrap();
        assert_eq!(abc_unemp.value, LecData::Real(12.0));
    }

    #[test]
    fn stat_region_invariants() {
        let bad = StatRegion {
            region_code: "R".into(),
            avg_income: 1.0,
            unemployment_rate: 140.0,
            education_low: 0.5,
            education_mid: 0.5,
            education_high: 0.0,
        };
        assert!(bad.validate().is_err());
    }
}
