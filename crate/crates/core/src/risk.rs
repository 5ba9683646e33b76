//! Endemic residency, vulnerability tagging and per-antenna indicators.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::SocialGraph;
use crate::homes::HomeAssignment;
use crate::ingest::{Antenna, AntennaId, AntennaRegistry, CallLog, Direction, IngestError};
use crate::users::{UserId, UserMask};
use crate::zone::{EndemicZone, GeoPoint};

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("home antenna #{antenna} of user {user} is not in the registry")]
    UnresolvableAntenna { user: UserId, antenna: u32 },
    #[error("indicator file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Registry(#[from] IngestError),
}

/// `<N_a, V_a, C_a, VC_a>` for one antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AntennaIndicators {
    pub antenna: AntennaId,
    /// Users whose home is this antenna.
    pub n_residents: u64,
    /// Of those, users tagged vulnerable.
    pub n_vulnerable: u64,
    /// Outgoing records routed through the antenna.
    pub calls_out: u64,
    /// Outgoing records whose callee lives in the endemic zone.
    pub vulnerable_calls: u64,
}

impl AntennaIndicators {
    pub fn empty(antenna: AntennaId) -> Self {
        Self { antenna, n_residents: 0, n_vulnerable: 0, calls_out: 0, vulnerable_calls: 0 }
    }

    /// `V_a / N_a`, undefined for unpopulated antennas.
    pub fn vulnerable_fraction(&self) -> Option<f64> {
        (self.n_residents > 0).then(|| self.n_vulnerable as f64 / self.n_residents as f64)
    }
}

pub type Indicators = BTreeMap<AntennaId, AntennaIndicators>;

/// Users whose home antenna lies inside `zone` (boundary included).
pub fn residents_of_zone(
    homes: &BTreeMap<UserId, HomeAssignment>,
    registry: &AntennaRegistry,
    zone: &EndemicZone,
) -> Result<BTreeSet<UserId>, RiskError> {
    let mut endemic: BTreeMap<AntennaId, bool> = BTreeMap::new();
    let mut residents = BTreeSet::new();
    for h in homes.values() {
        let inside = match endemic.get(&h.home_antenna) {
            Some(&inside) => inside,
            None => {
                let a = registry
                    .get(h.home_antenna)
                    .ok_or(RiskError::UnresolvableAntenna { user: h.user, antenna: h.home_antenna.0 })?;
                let inside = zone.contains(GeoPoint::new(a.lat, a.lon));
                endemic.insert(h.home_antenna, inside);
                inside
            }
        };
        if inside {
            residents.insert(h.user);
        }
    }
    Ok(residents)
}

/// Every graph neighbour of a resident. Residents outside the graph
/// contribute nothing; residency itself neither grants nor blocks the tag.
pub fn tag_vulnerable(graph: &SocialGraph, residents: &BTreeSet<UserId>) -> BTreeSet<UserId> {
    residents.iter().flat_map(|&r| graph.neighbors(r).iter().copied()).collect()
}

const CHUNK: usize = 1 << 16;

/// Aggregates the four indicators for every registry antenna, including
/// antennas where all four are zero.
pub fn compute_indicators(
    log: &CallLog,
    homes: &BTreeMap<UserId, HomeAssignment>,
    residents: &BTreeSet<UserId>,
    vulnerable: &BTreeSet<UserId>,
    registry: &AntennaRegistry,
) -> Indicators {
    let n = registry.len();
    let endemic_homed = UserMask::new(log.users.len(), residents.iter().filter(|u| homes.contains_key(u)));

    let (calls, vcalls) = log
        .records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut calls = vec![0u64; n];
            let mut vcalls = vec![0u64; n];
            for r in chunk.iter().filter(|r| r.direction == Direction::Outgoing) {
                let a = r.antenna.index();
                calls[a] += 1;
                if endemic_homed.contains(r.callee) {
                    vcalls[a] += 1;
                }
            }
            (calls, vcalls)
        })
        .reduce(
            || (vec![0u64; n], vec![0u64; n]),
            |(mut c1, mut v1), (c2, v2)| {
                c1.iter_mut().zip(c2).for_each(|(a, b)| *a += b);
                v1.iter_mut().zip(v2).for_each(|(a, b)| *a += b);
                (c1, v1)
            },
        );

    let mut out: Indicators = registry.ids().map(|a| (a, AntennaIndicators::empty(a))).collect();
    for (a, ind) in out.iter_mut() {
        ind.calls_out = calls[a.index()];
        ind.vulnerable_calls = vcalls[a.index()];
    }
    for h in homes.values() {
        if let Some(ind) = out.get_mut(&h.home_antenna) {
            ind.n_residents += 1;
            if vulnerable.contains(&h.user) {
                ind.n_vulnerable += 1;
            }
        }
    }
    out
}

pub const INDICATOR_CSV_HEADER: &str = "antenna_id,N,V,C,VC";

/// One indicator CSV row without the newline. Shortlists built by the
/// viewer reuse this exact format.
pub fn indicator_row(i: &AntennaIndicators, registry: &AntennaRegistry) -> String {
    format!(
        "{},{},{},{},{}",
        registry.antenna(i.antenna).id,
        i.n_residents,
        i.n_vulnerable,
        i.calls_out,
        i.vulnerable_calls
    )
}

/// `antenna_id,N,V,C,VC`, header first, sorted by antenna id.
pub fn write_indicators_csv<W: Write>(ind: &Indicators, registry: &AntennaRegistry, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{INDICATOR_CSV_HEADER}")?;
    for i in ind.values() {
        writeln!(out, "{}", indicator_row(i, registry))?;
    }
    out.flush()
}

/// Indicator rows with registry coordinates embedded.
pub fn indicators_json(ind: &Indicators, registry: &AntennaRegistry) -> Value {
    Value::Array(
        ind.values()
            .map(|i| {
                let a = registry.antenna(i.antenna);
                json!({
                    "antenna_id": a.id,
                    "lat": a.lat,
                    "lon": a.lon,
                    "N": i.n_residents,
                    "V": i.n_vulnerable,
                    "C": i.calls_out,
                    "VC": i.vulnerable_calls,
                })
            })
            .collect(),
    )
}

#[derive(Deserialize)]
struct IndicatorRow {
    antenna_id: String,
    lat: f64,
    lon: f64,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "V")]
    v: u64,
    #[serde(rename = "C")]
    c: u64,
    #[serde(rename = "VC")]
    vc: u64,
}

/// Reads [`indicators_json`] output back, rebuilding the registry from the
/// embedded coordinates.
pub fn read_indicators_json(text: &str) -> Result<(AntennaRegistry, Indicators), RiskError> {
    let rows: Vec<IndicatorRow> = serde_json::from_str(text).map_err(|e| RiskError::Malformed(e.to_string()))?;
    for r in &rows {
        if r.inconsistent() {
            return Err(RiskError::Malformed(format!("{}: V > N or VC > C", r.antenna_id)));
        }
    }
    let registry =
        AntennaRegistry::from_entries(rows.iter().map(|r| Antenna { id: r.antenna_id.clone(), lat: r.lat, lon: r.lon }))?;
    let ind = rows
        .iter()
        .map(|r| {
            let id = registry.lookup(&r.antenna_id).expect("registry built from rows");
            (id, AntennaIndicators { antenna: id, n_residents: r.n, n_vulnerable: r.v, calls_out: r.c, vulnerable_calls: r.vc })
        })
        .collect();
    Ok((registry, ind))
}

impl IndicatorRow {
    fn inconsistent(&self) -> bool {
        self.v > self.n || self.vc > self.c
    }
}

/// Mean `V_a / N_a` over populated antennas grouped by distance to the zone
/// edge. Bin 0 holds antennas inside the zone; bins `1..=outside_bins` split
/// the outside distances `(0, max]` evenly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceBin {
    pub inside: bool,
    pub min_distance: f64,
    pub max_distance: f64,
    pub antennas: usize,
    pub mean_fraction: Option<f64>,
}

pub fn distance_profile(
    ind: &Indicators,
    registry: &AntennaRegistry,
    zone: &EndemicZone,
    outside_bins: usize,
    max_distance: f64,
) -> Vec<DistanceBin> {
    let width = max_distance / outside_bins as f64;
    let mut sums = vec![(0.0f64, 0usize); outside_bins + 1];
    for i in ind.values() {
        let Some(frac) = i.vulnerable_fraction() else { continue };
        let a = registry.antenna(i.antenna);
        let p = GeoPoint::new(a.lat, a.lon);
        let bin = if zone.contains(p) {
            0
        } else {
            let d = zone.distance_to_boundary(p);
            1 + ((d / width) as usize).min(outside_bins - 1)
        };
        sums[bin].0 += frac;
        sums[bin].1 += 1;
    }
    sums.into_iter()
        .enumerate()
        .map(|(b, (sum, count))| DistanceBin {
            inside: b == 0,
            min_distance: if b == 0 { 0.0 } else { (b - 1) as f64 * width },
            max_distance: if b == 0 { 0.0 } else { b as f64 * width },
            antennas: count,
            mean_fraction: (count > 0).then(|| sum / count as f64),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::homes::{detect_homes, NightWindowConfig};
    use crate::ingest::{load_antennas, parse_cdr_bytes, ParseOptions};

    fn zone() -> EndemicZone {
        EndemicZone::from_lat_lon("z", &[(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]).unwrap()
    }

    fn home(user: u32, antenna: u32) -> (UserId, HomeAssignment) {
        (
            UserId(user),
            HomeAssignment { user: UserId(user), home_antenna: AntennaId(antenna), night_calls_at_home: 1, night_calls_total: 1 },
        )
    }

    #[test]
    fn residents_follow_home_coordinates() {
        let reg = load_antennas("IN,5,5\nEDGE,0,5\nOUT,20,20\n".as_bytes()).unwrap();
        let (edge, inside, out) = (reg.lookup("EDGE").unwrap(), reg.lookup("IN").unwrap(), reg.lookup("OUT").unwrap());
        let homes: BTreeMap<_, _> = [home(0, inside.0), home(1, edge.0), home(2, out.0)].into_iter().collect();
        let res = residents_of_zone(&homes, &reg, &zone()).unwrap();
        assert_eq!(res, [UserId(0), UserId(1)].into_iter().collect());
    }

    #[test]
    fn unresolvable_home_is_fatal() {
        let reg = load_antennas("IN,5,5\n".as_bytes()).unwrap();
        let homes: BTreeMap<_, _> = [home(0, 7)].into_iter().collect();
        assert!(matches!(
            residents_of_zone(&homes, &reg, &zone()),
            Err(RiskError::UnresolvableAntenna { antenna: 7, .. })
        ));
    }

    #[test]
    fn neighbours_of_residents_are_tagged() {
        let g = SocialGraph::from_pairs(6, [(UserId(0), UserId(1)), (UserId(0), UserId(2)), (UserId(3), UserId(4))]);
        let res: BTreeSet<_> = [UserId(0)].into_iter().collect();
        assert_eq!(tag_vulnerable(&g, &res), [UserId(1), UserId(2)].into_iter().collect());
        assert!(tag_vulnerable(&g, &BTreeSet::new()).is_empty());
        // resident with a resident neighbour is itself tagged
        let both: BTreeSet<_> = [UserId(0), UserId(1)].into_iter().collect();
        assert!(tag_vulnerable(&g, &both).contains(&UserId(0)));
    }

    #[test]
    fn empty_inputs_give_zero_rows() {
        let reg = load_antennas("A,1,1\nB,2,2\n".as_bytes()).unwrap();
        let log = parse_cdr_bytes(b"", &reg, &ParseOptions::default()).unwrap();
        let ind = compute_indicators(&log, &BTreeMap::new(), &BTreeSet::new(), &BTreeSet::new(), &reg);
        assert_eq!(ind.len(), 2);
        assert!(ind.values().all(|i| *i == AntennaIndicators::empty(i.antenna)));
    }

    #[test]
    fn small_scenario() {
        // e lives at E (inside), a and b at A (outside); a talks to e.
        let reg = load_antennas("A,20,20\nE,5,5\n".as_bytes()).unwrap();
        let text = "\
e,x,2011-11-08T21:00:00-03:00,out,E
a,e,2011-11-08T21:00:00-03:00,out,A
a,e,2011-11-08T21:00:00-03:00,in,E
b,a,2011-11-09T21:00:00-03:00,out,A
b,a,2011-11-09T21:00:00-03:00,in,A
b,x,2011-11-10T12:00:00-03:00,out,A
";
        let log = parse_cdr_bytes(text.as_bytes(), &reg, &ParseOptions::default()).unwrap();
        let clients: BTreeSet<_> = ["a", "b", "e"].iter().map(|n| log.user(n).unwrap()).collect();
        let homes = detect_homes(&log, &clients, &NightWindowConfig::default());
        let res = residents_of_zone(&homes, &reg, &zone()).unwrap();
        let g = build_graph(&log, &clients);
        let vul = tag_vulnerable(&g, &res);
        let ind = compute_indicators(&log, &homes, &res, &vul, &reg);
        let a = ind[&reg.lookup("A").unwrap()];
        let e = ind[&reg.lookup("E").unwrap()];
        assert_eq!((a.n_residents, a.n_vulnerable, a.calls_out, a.vulnerable_calls), (2, 1, 3, 1));
        assert_eq!((e.n_residents, e.n_vulnerable, e.calls_out, e.vulnerable_calls), (1, 0, 1, 0));
    }

    #[test]
    fn json_round_trip() {
        let reg = load_antennas("A,1.5,2.5\nB,-3,4\n".as_bytes()).unwrap();
        let mut ind: Indicators = reg.ids().map(|a| (a, AntennaIndicators::empty(a))).collect();
        ind.get_mut(&AntennaId(1)).unwrap().n_residents = 10;
        ind.get_mut(&AntennaId(1)).unwrap().n_vulnerable = 4;
        let text = indicators_json(&ind, &reg).to_string();
        let (reg2, ind2) = read_indicators_json(&text).unwrap();
        assert_eq!(ind2, ind);
        assert_eq!(reg2.to_csv(), reg.to_csv());
    }

    #[test]
    fn csv_layout() {
        let reg = load_antennas("A,1,1\n".as_bytes()).unwrap();
        let ind: Indicators = reg.ids().map(|a| (a, AntennaIndicators::empty(a))).collect();
        let mut buf = Vec::new();
        write_indicators_csv(&ind, &reg, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "antenna_id,N,V,C,VC\nA,0,0,0,0\n");
    }
}
