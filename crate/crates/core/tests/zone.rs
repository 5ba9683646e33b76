use proptest::prelude::*;
use riskmap::oracle::crossing_number_contains;
use riskmap::zone::{point_in_zone, EndemicZone, GeoPoint};

/// Concave 12-vertex "comb" with axis-aligned and slanted edges.
fn twelve_vertices() -> Vec<(f64, f64)> {
    vec![
        (-20.0, -66.0),
        (-20.0, -64.0),
        (-23.0, -63.0),
        (-20.0, -62.0),
        (-20.0, -60.0),
        (-24.5, -59.5),
        (-27.0, -60.0),
        (-27.0, -62.0),
        (-25.0, -62.5),
        (-27.0, -63.5),
        (-27.0, -66.0),
        (-24.0, -67.0),
    ]
}

fn oracle_rings(z: &EndemicZone) -> Vec<Vec<(f64, f64)>> {
    z.rings().map(|r| r.iter().map(|p| (p.lat, p.lon)).collect()).collect()
}

#[test]
fn thousand_points_against_the_crossing_number_oracle() {
    let zone = EndemicZone::from_lat_lon("comb", &twelve_vertices()).unwrap();
    let rings = oracle_rings(&zone);
    let mut points = Vec::new();
    for i in 0..40 {
        for j in 0..25 {
            points.push(GeoPoint::new(-28.0 + 9.0 * i as f64 / 39.0, -68.0 + 9.5 * j as f64 / 24.0));
        }
    }
    assert_eq!(points.len(), 1000);
    points.extend(twelve_vertices().into_iter().map(|(lat, lon)| GeoPoint::new(lat, lon)));
    let inside = points.iter().filter(|p| point_in_zone(**p, &zone)).count();
    for p in &points {
        assert_eq!(point_in_zone(*p, &zone), crossing_number_contains(&rings, p.lat, p.lon), "{p:?}");
    }
    assert!(inside > 200 && inside < 800);
}

#[test]
fn boundary_points_are_inside() {
    let zone = EndemicZone::from_lat_lon("comb", &twelve_vertices()).unwrap();
    for (lat, lon) in [(-20.0, -65.0), (-27.0, -61.0), (-27.0, -64.0), (-21.5, -63.5)] {
        assert!(zone.contains(GeoPoint::new(lat, lon)), "({lat}, {lon})");
    }
    assert!(!zone.contains(GeoPoint::new(-20.5, -63.0)), "notch between the teeth");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn agrees_with_the_oracle_on_random_points(lat in -29.0f64..-19.0, lon in -68.0f64..-58.0) {
        let zone = EndemicZone::from_lat_lon("comb", &twelve_vertices()).unwrap();
        prop_assert_eq!(point_in_zone(GeoPoint::new(lat, lon), &zone), crossing_number_contains(&oracle_rings(&zone), lat, lon));
    }

    #[test]
    fn geojson_round_trip_preserves_membership(lat in -29.0f64..-19.0, lon in -68.0f64..-58.0) {
        let zone = EndemicZone::from_lat_lon("comb", &twelve_vertices()).unwrap();
        let back = EndemicZone::from_geojson(&zone.to_geojson().to_string()).unwrap();
        let p = GeoPoint::new(lat, lon);
        prop_assert_eq!(zone.contains(p), back.contains(p));
    }
}
