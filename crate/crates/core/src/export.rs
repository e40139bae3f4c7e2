//! GeoJSON (RFC 7946) track export: one Point feature per register.

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::record::{Dataset, Field};

/// A FeatureCollection whose features carry `value` (the selected channel)
/// and `style` (label tag, or null for unlabeled registers).
pub fn to_geojson(data: &Dataset, field: Field) -> Value {
    let features: Vec<Value> = data
        .registers
        .iter()
        .map(|r| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [r.longitude, r.latitude] },
                "properties": { "value": field.value(r), "style": r.label.map(|l| l.tag()) },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "properties": { "variable": field.name() }, "features": features })
}

pub fn write_geojson<W: Write>(data: &Dataset, field: Field, mut writer: W) -> io::Result<()> {
    serde_json::to_writer(&mut writer, &to_geojson(data, field))?;
    writeln!(writer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{sample_register, DrivingStyle, Provenance};

    #[test]
    fn one_point_per_register_in_lon_lat_order() {
        let mut b = sample_register();
        b.label = Some(DrivingStyle::Agg);
        b.velocity = 81.25;
        let data = Dataset::new(vec![sample_register(), b], Provenance::Derived("t".into()));
        let gj = to_geojson(&data, Field::Velocity);
        let features = gj["features"].as_array().unwrap();
        assert_eq!(features.len(), 2);
        assert_eq!(features[0]["geometry"]["coordinates"], json!([-0.45, 39.35]));
        assert_eq!(features[1]["properties"]["value"], json!(81.25));
        assert_eq!(features[1]["properties"]["style"], json!("AGG"));
        assert!(features[0]["properties"]["style"].is_null());
        assert_eq!(gj["type"], "FeatureCollection");
    }
}
