//! Choropleth export: one GeoJSON polygon per aggregated cell.

use serde_json::{json, Map, Value as Json};

use crate::aggregate::{AggValue, AggregateResult};
use crate::error::{Error, Result};
use crate::geocell::decode;

/// Build a GeoJSON FeatureCollection from non-suppressed results.
///
/// Each feature's polygon is the decoded cell box (exterior ring
/// counterclockwise, closed). Suppressed results are skipped and never
/// serialized. Features come out ordered by cell code then indicator so the
/// document is deterministic.
pub fn export_choropleth(results: &[AggregateResult]) -> Result<Json> {
    let mut sorted: Vec<&AggregateResult> = results.iter().filter(|r| !r.suppressed).collect();
    sorted.sort_by(|a, b| {
        (&a.cell, &a.indicator, a.function.name(), a.mode.name()).cmp(&(
            &b.cell,
            &b.indicator,
            b.function.name(),
            b.mode.name(),
        ))
    });
    let mut features = Vec::with_capacity(sorted.len());
    for r in sorted {
        let b = decode(&r.cell);
        let ring = vec![
            vec![b.min_lon, b.min_lat],
            vec![b.max_lon, b.min_lat],
            vec![b.max_lon, b.max_lat],
            vec![b.min_lon, b.max_lat],
            vec![b.min_lon, b.min_lat],
        ];
        let mut props = Map::new();
        props.insert("cell".into(), json!(r.cell.as_str()));
        props.insert("function".into(), json!(r.function.name()));
        props.insert("indicator".into(), json!(r.indicator));
        props.insert("mode".into(), json!(r.mode.name()));
        props.insert("n_participants".into(), json!(r.n_participants));
        props.insert("n_tuples".into(), json!(r.n_tuples));
        props.insert("quality".into(), json!(r.quality));
        match &r.value {
            Some(AggValue::Scalar(v)) => {
                props.insert("value".into(), json!(v));
            }
            Some(AggValue::Pmf(pmf)) => {
                let mut obj = Map::new();
                for (label, p) in pmf {
                    obj.insert(label.clone(), json!(p));
                }
                props.insert("pmf".into(), Json::Object(obj));
            }
            None => {
                return Err(Error::validation(
                    "non-suppressed result without a value cannot be exported",
                ))
            }
        }
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "Polygon",
                "coordinates": [ring],
            },
            "properties": Json::Object(props),
        }));
    }
    Ok(json!({
        "type": "FeatureCollection",
        "features": features,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::{AggFunction, ModeTag};
    use crate::geocell::GeoCell;

    fn result(cell: &str, value: f64, suppressed: bool) -> AggregateResult {
        AggregateResult {
            cell: GeoCell::parse(cell).unwrap(),
            requested_cell: GeoCell::parse(cell).unwrap(),
            function: AggFunction::F2,
            indicator: "activity_counts".into(),
            mode: ModeTag::Resources,
            value: if suppressed { None } else { Some(AggValue::Scalar(value)) },
            n_participants: 12,
            n_tuples: 340,
            n_clamped: 0,
            quality: 0.6,
            suppressed,
            reason: None,
        }
    }

    #[test]
    fn one_feature_per_result() {
        let results = vec![
            result("sx0r4k9", 310.0, false),
            result("sx0r4m2", 120.0, false),
            result("sx0r2", 95.0, false),
        ];
        let doc = export_choropleth(&results).unwrap();
        assert_eq!(doc["type"], "FeatureCollection");
        assert_eq!(doc["features"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn polygon_equals_decoded_box() {
        let results = vec![result("sx0r4k9", 310.0, false)];
        let doc = export_choropleth(&results).unwrap();
        let b = decode(&GeoCell::parse("sx0r4k9").unwrap());
        let ring = &doc["features"][0]["geometry"]["coordinates"][0];
        assert_eq!(ring.as_array().unwrap().len(), 5);
        assert_eq!(ring[0][0], b.min_lon);
        assert_eq!(ring[0][1], b.min_lat);
        assert_eq!(ring[2][0], b.max_lon);
        assert_eq!(ring[2][1], b.max_lat);
        assert_eq!(ring[0], ring[4]); // closed ring
    }

    #[test]
    fn suppressed_results_never_serialize() {
        let results = vec![result("sx0r4k9", 310.0, false), result("sx0r4m2", 0.0, true)];
        let doc = export_choropleth(&results).unwrap();
        assert_eq!(doc["features"].as_array().unwrap().len(), 1);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(!text.contains("sx0r4m2"));
    }

    #[test]
    fn document_is_structurally_valid_geojson() {
        let results = vec![result("sx0r4k9", 310.0, false)];
        let doc = export_choropleth(&results).unwrap();
        assert_eq!(doc["type"], "FeatureCollection");
        for f in doc["features"].as_array().unwrap() {
            assert_eq!(f["type"], "Feature");
            assert_eq!(f["geometry"]["type"], "Polygon");
            let rings = f["geometry"]["coordinates"].as_array().unwrap();
            assert_eq!(rings.len(), 1);
            let ring = rings[0].as_array().unwrap();
            assert!(ring.len() >= 4);
            assert_eq!(ring.first(), ring.last());
            assert!(f["properties"].is_object());
        }
    }
}
