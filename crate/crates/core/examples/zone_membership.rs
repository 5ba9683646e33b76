//! Load an endemic zone from GeoJSON (with a hole) and classify points,
//! including points on the boundary.

use riskmap::zone::{EndemicZone, GeoPoint};

const ZONE: &str = r#"{
  "type": "Feature",
  "properties": {"name": "chaco with a lake"},
  "geometry": {"type": "Polygon", "coordinates": [
    [[-64, -22], [-58, -22], [-58, -28], [-64, -28], [-64, -22]],
    [[-62, -24], [-60, -24], [-60, -26], [-62, -26], [-62, -24]]
  ]}
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let zone = EndemicZone::from_geojson(ZONE)?;
    let probes = [
        ("interior", GeoPoint::new(-23.0, -63.0)),
        ("inside the hole", GeoPoint::new(-25.0, -61.0)),
        ("outer edge", GeoPoint::new(-22.0, -61.0)),
        ("hole edge", GeoPoint::new(-24.0, -61.0)),
        ("vertex", GeoPoint::new(-28.0, -58.0)),
        ("outside", GeoPoint::new(-34.6, -58.4)),
    ];
    for (label, p) in probes {
        println!(
            "{label:<16} ({:>6.2}, {:>6.2})  inside = {:<5}  distance to boundary {:.2} deg",
            p.lat,
            p.lon,
            zone.contains(p),
            zone.distance_to_boundary(p)
        );
    }
    println!("{}", serde_json::to_string(&zone.to_geojson())?);
    Ok(())
}
