//! Endemic-zone polygons and the point-in-zone predicate.
//!
//! Zones load from GeoJSON `Polygon`/`MultiPolygon` geometry (bare, wrapped
//! in a `Feature`, or spread across a `FeatureCollection`). Membership uses
//! the even-odd rule over every ring of every polygon, and points on an
//! edge or vertex count as inside.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Geographic position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

#[derive(Debug, Error)]
pub enum ZoneError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported GeoJSON: {0}")]
    Unsupported(String),
    #[error("ring {ring}: {reason}")]
    InvalidRing { ring: usize, reason: String },
    #[error("zone has no rings")]
    Empty,
}

/// Closed ring, first vertex repeated at the end.
pub type Ring = Vec<GeoPoint>;

#[derive(Debug, Clone, PartialEq)]
pub struct EndemicZone {
    name: String,
    /// Polygons as `[outer, holes...]`, kept for GeoJSON round trips.
    polygons: Vec<Vec<Ring>>,
    min: GeoPoint,
    max: GeoPoint,
}

impl EndemicZone {
    /// A zone made of independent rings, each treated as one polygon.
    pub fn from_rings(name: impl Into<String>, rings: Vec<Ring>) -> Result<Self, ZoneError> {
        Self::from_polygons(name, rings.into_iter().map(|r| vec![r]).collect())
    }

    pub fn from_polygons(name: impl Into<String>, polygons: Vec<Vec<Ring>>) -> Result<Self, ZoneError> {
        let mut min = GeoPoint::new(f64::INFINITY, f64::INFINITY);
        let mut max = GeoPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut count = 0;
        for (i, ring) in polygons.iter().flatten().enumerate() {
            validate_ring(ring).map_err(|reason| ZoneError::InvalidRing { ring: i, reason })?;
            for p in ring {
                min.lat = min.lat.min(p.lat);
                min.lon = min.lon.min(p.lon);
                max.lat = max.lat.max(p.lat);
                max.lon = max.lon.max(p.lon);
            }
            count += 1;
        }
        if count == 0 {
            return Err(ZoneError::Empty);
        }
        Ok(Self { name: name.into(), polygons, min, max })
    }

    /// Convenience for a closed ring from `(lat, lon)` pairs; the closing
    /// vertex is appended when missing.
    pub fn from_lat_lon(name: impl Into<String>, vertices: &[(f64, f64)]) -> Result<Self, ZoneError> {
        let mut ring: Ring = vertices.iter().map(|&(lat, lon)| GeoPoint::new(lat, lon)).collect();
        if ring.first() != ring.last() {
            if let Some(&first) = ring.first() {
                ring.push(first);
            }
        }
        Self::from_rings(name, vec![ring])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.polygons.iter().flatten()
    }

    pub fn polygons(&self) -> &[Vec<Ring>] {
        &self.polygons
    }

    /// Bounding box as `(min, max)` corners.
    pub fn bounds(&self) -> (GeoPoint, GeoPoint) {
        (self.min, self.max)
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        point_in_zone(p, self)
    }

    /// Planar distance in degrees from `p` to the nearest ring edge.
    pub fn distance_to_boundary(&self, p: GeoPoint) -> f64 {
        self.rings()
            .flat_map(|r| r.windows(2))
            .map(|e| point_segment_distance(p, e[0], e[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Parses GeoJSON text.
    pub fn from_geojson(text: &str) -> Result<Self, ZoneError> {
        let value: Value = serde_json::from_str(text)?;
        let mut name = None;
        let mut polygons = Vec::new();
        collect_polygons(&value, &mut name, &mut polygons)?;
        Self::from_polygons(name.unwrap_or_else(|| "endemic zone".to_string()), polygons)
    }

    /// GeoJSON `Feature` with the zone name as a property.
    pub fn to_geojson(&self) -> Value {
        let coords = |poly: &Vec<Ring>| -> Value {
            Value::Array(
                poly.iter()
                    .map(|ring| Value::Array(ring.iter().map(|p| json!([p.lon, p.lat])).collect()))
                    .collect(),
            )
        };
        let geometry = if self.polygons.len() == 1 {
            json!({ "type": "Polygon", "coordinates": coords(&self.polygons[0]) })
        } else {
            json!({ "type": "MultiPolygon", "coordinates": self.polygons.iter().map(coords).collect::<Vec<_>>() })
        };
        json!({ "type": "Feature", "properties": { "name": self.name }, "geometry": geometry })
    }
}

fn collect_polygons(v: &Value, name: &mut Option<String>, out: &mut Vec<Vec<Ring>>) -> Result<(), ZoneError> {
    let kind = v.get("type").and_then(Value::as_str).ok_or_else(|| ZoneError::Unsupported("missing type".into()))?;
    match kind {
        "FeatureCollection" => {
            let features = v
                .get("features")
                .and_then(Value::as_array)
                .ok_or_else(|| ZoneError::Unsupported("FeatureCollection without features".into()))?;
            for f in features {
                collect_polygons(f, name, out)?;
            }
        }
        "Feature" => {
            if name.is_none() {
                *name = v.pointer("/properties/name").and_then(Value::as_str).map(str::to_owned);
            }
            let geometry = v.get("geometry").ok_or_else(|| ZoneError::Unsupported("Feature without geometry".into()))?;
            collect_polygons(geometry, name, out)?;
        }
        "Polygon" => out.push(parse_polygon(coordinates(v)?)?),
        "MultiPolygon" => {
            let polys = coordinates(v)?
                .as_array()
                .ok_or_else(|| ZoneError::Unsupported("MultiPolygon coordinates must be an array".into()))?;
            for p in polys {
                out.push(parse_polygon(p)?);
            }
        }
        other => return Err(ZoneError::Unsupported(format!("geometry type {other}"))),
    }
    Ok(())
}

fn coordinates(v: &Value) -> Result<&Value, ZoneError> {
    v.get("coordinates").ok_or_else(|| ZoneError::Unsupported("geometry without coordinates".into()))
}

fn parse_polygon(v: &Value) -> Result<Vec<Ring>, ZoneError> {
    let bad = || ZoneError::Unsupported("polygon coordinates must be [[[lon, lat], ...], ...]".into());
    v.as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|ring| {
            ring.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|pos| {
                    let pos = pos.as_array().filter(|p| p.len() >= 2).ok_or_else(bad)?;
                    let lon = pos[0].as_f64().ok_or_else(bad)?;
                    let lat = pos[1].as_f64().ok_or_else(bad)?;
                    Ok(GeoPoint::new(lat, lon))
                })
                .collect()
        })
        .collect()
}

fn validate_ring(ring: &[GeoPoint]) -> Result<(), String> {
    if ring.len() < 4 {
        return Err(format!("needs at least 3 vertices plus the closing one, found {} positions", ring.len()));
    }
    if ring.first() != ring.last() {
        return Err("ring is not closed".into());
    }
    if let Some(p) = ring.iter().find(|p| !(-90.0..=90.0).contains(&p.lat) || !(-180.0..=180.0).contains(&p.lon)) {
        return Err(format!("vertex ({}, {}) out of range", p.lat, p.lon));
    }
    let n = ring.len() - 1;
    for i in 0..n {
        if ring[i] == ring[i + 1] {
            return Err(format!("repeated vertex at position {i}"));
        }
    }
    if signed_area(ring) == 0.0 {
        return Err("ring has zero area".into());
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[i + 1]);
        // folding back onto the previous edge
        let c = ring[(i + 2) % n];
        if cross(a, b, c) == 0.0 && dot(sub(b, a), sub(c, b)) < 0.0 {
            return Err(format!("edge {i} doubles back on itself"));
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(a, b, ring[j], ring[j + 1]) {
                return Err(format!("edges {i} and {j} intersect"));
            }
        }
    }
    Ok(())
}

/// Even-odd membership over all rings; boundary points are inside.
pub fn point_in_zone(p: GeoPoint, zone: &EndemicZone) -> bool {
    if p.lat < zone.min.lat || p.lat > zone.max.lat || p.lon < zone.min.lon || p.lon > zone.max.lon {
        return false;
    }
    let mut inside = false;
    for ring in zone.rings() {
        for e in ring.windows(2) {
            let (a, b) = (e[0], e[1]);
            let side = cross(a, b, p);
            if side == 0.0 && within_box(p, a, b) {
                return true;
            }
            if (a.lat > p.lat) != (b.lat > p.lat) && (side > 0.0) == (b.lat > a.lat) {
                inside = !inside;
            }
        }
    }
    inside
}

/// `(b - a) x (p - a)` in (lon, lat) coordinates; positive when `p` lies to
/// the left of `a -> b`.
#[inline]
fn cross(a: GeoPoint, b: GeoPoint, p: GeoPoint) -> f64 {
    (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat)
}

#[inline]
fn within_box(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool {
    p.lon >= a.lon.min(b.lon) && p.lon <= a.lon.max(b.lon) && p.lat >= a.lat.min(b.lat) && p.lat <= a.lat.max(b.lat)
}

fn sub(a: GeoPoint, b: GeoPoint) -> GeoPoint {
    GeoPoint::new(a.lat - b.lat, a.lon - b.lon)
}

fn dot(a: GeoPoint, b: GeoPoint) -> f64 {
    a.lat * b.lat + a.lon * b.lon
}

fn signed_area(ring: &[GeoPoint]) -> f64 {
    ring.windows(2).map(|e| e[0].lon * e[1].lat - e[1].lon * e[0].lat).sum::<f64>() / 2.0
}

fn segments_intersect(p1: GeoPoint, p2: GeoPoint, q1: GeoPoint, q2: GeoPoint) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && within_box(p1, q1, q2))
        || (d2 == 0.0 && within_box(p2, q1, q2))
        || (d3 == 0.0 && within_box(q1, p1, p2))
        || (d4 == 0.0 && within_box(q2, p1, p2))
}

fn point_segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = dot(ab, ab);
    let t = if len2 == 0.0 { 0.0 } else { (dot(ap, ab) / len2).clamp(0.0, 1.0) };
    let closest = GeoPoint::new(a.lat + t * ab.lat, a.lon + t * ab.lon);
    let d = sub(p, closest);
    dot(d, d).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> EndemicZone {
        EndemicZone::from_lat_lon("sq", &[(0.0, 0.0), (0.0, 2.0), (2.0, 2.0), (2.0, 0.0)]).unwrap()
    }

    #[test]
    fn centroid_and_outside() {
        let z = square();
        assert!(point_in_zone(GeoPoint::new(1.0, 1.0), &z));
        assert!(!point_in_zone(GeoPoint::new(5.0, 1.0), &z));
        assert!(!point_in_zone(GeoPoint::new(-0.1, 1.0), &z));
    }

    #[test]
    fn boundary_is_inside() {
        let z = square();
        for p in [(0.0, 0.0), (0.0, 1.0), (2.0, 2.0), (1.0, 2.0), (2.0, 0.5)] {
            assert!(point_in_zone(GeoPoint::new(p.0, p.1), &z), "{p:?}");
        }
    }

    #[test]
    fn hole_is_outside() {
        let outer: Ring = [(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0), (0.0, 0.0)]
            .iter()
            .map(|&(a, b)| GeoPoint::new(a, b))
            .collect();
        let hole: Ring = [(4.0, 4.0), (6.0, 4.0), (6.0, 6.0), (4.0, 6.0), (4.0, 4.0)]
            .iter()
            .map(|&(a, b)| GeoPoint::new(a, b))
            .collect();
        let z = EndemicZone::from_polygons("h", vec![vec![outer, hole]]).unwrap();
        assert!(!z.contains(GeoPoint::new(5.0, 5.0)));
        assert!(z.contains(GeoPoint::new(4.0, 5.0)));
        assert!(z.contains(GeoPoint::new(1.0, 1.0)));
    }

    #[test]
    fn concave_ring() {
        // U shape opening north
        let z = EndemicZone::from_lat_lon(
            "u",
            &[(0.0, 0.0), (0.0, 3.0), (3.0, 3.0), (3.0, 2.0), (1.0, 2.0), (1.0, 1.0), (3.0, 1.0), (3.0, 0.0)],
        )
        .unwrap();
        assert!(!z.contains(GeoPoint::new(2.0, 1.5)));
        assert!(z.contains(GeoPoint::new(2.0, 0.5)));
        assert!(z.contains(GeoPoint::new(0.5, 1.5)));
        assert!(z.contains(GeoPoint::new(1.0, 1.5)));
    }

    #[test]
    fn rejects_bad_rings() {
        assert!(EndemicZone::from_lat_lon("t", &[(0.0, 0.0), (1.0, 1.0)]).is_err());
        // collinear, zero area
        assert!(EndemicZone::from_lat_lon("t", &[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).is_err());
        // bow tie
        assert!(EndemicZone::from_lat_lon("t", &[(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]).is_err());
        // not closed via the raw constructor
        let open: Ring = vec![GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 1.0), GeoPoint::new(1.0, 1.0), GeoPoint::new(1.0, 0.5)];
        assert!(matches!(EndemicZone::from_rings("t", vec![open]), Err(ZoneError::InvalidRing { .. })));
        assert!(matches!(EndemicZone::from_rings("t", vec![]), Err(ZoneError::Empty)));
    }

    #[test]
    fn geojson_round_trip() {
        let text = r#"{"type":"Feature","properties":{"name":"Gran Chaco"},
            "geometry":{"type":"Polygon","coordinates":[[[-62,-22],[-58,-22],[-58,-28],[-62,-28],[-62,-22]]]}}"#;
        let z = EndemicZone::from_geojson(text).unwrap();
        assert_eq!(z.name(), "Gran Chaco");
        assert!(z.contains(GeoPoint::new(-25.0, -60.0)));
        assert!(!z.contains(GeoPoint::new(-30.0, -60.0)));
        let again = EndemicZone::from_geojson(&z.to_geojson().to_string()).unwrap();
        assert_eq!(again, z);
    }

    #[test]
    fn multipolygon_and_collection() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},"geometry":{"type":"MultiPolygon","coordinates":[
                [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
                [[[5,5],[6,5],[6,6],[5,6],[5,5]]]]}}]}"#;
        let z = EndemicZone::from_geojson(text).unwrap();
        assert_eq!(z.polygons().len(), 2);
        assert!(z.contains(GeoPoint::new(0.5, 0.5)));
        assert!(z.contains(GeoPoint::new(5.5, 5.5)));
        assert!(!z.contains(GeoPoint::new(3.0, 3.0)));
        assert!(EndemicZone::from_geojson(r#"{"type":"Point","coordinates":[0,0]}"#).is_err());
    }

    #[test]
    fn distance_to_boundary() {
        let z = square();
        assert!((z.distance_to_boundary(GeoPoint::new(1.0, 1.0)) - 1.0).abs() < 1e-12);
        assert!((z.distance_to_boundary(GeoPoint::new(5.0, 1.0)) - 3.0).abs() < 1e-12);
        assert_eq!(z.distance_to_boundary(GeoPoint::new(0.0, 1.0)), 0.0);
    }
}
