//! Self-check: runs the pipeline on a small generated dataset and compares
//! every stage against the brute-force oracles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::graph::build_graph;
use crate::heatmap::{build_circles, filter_antennas, FilterParams, Preset};
use crate::homes::detect_homes;
use crate::ingest::{filter_users_by_activity, load_antennas, parse_cdr_bytes, ActivityFilterConfig, ParseOptions};
use crate::oracle;
use crate::risk::{compute_indicators, residents_of_zone, tag_vulnerable};
use crate::synth::{generate, SynthConfig};
use crate::zone::{point_in_zone, GeoPoint};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {:<22} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        write!(f, "{} checks in {:.2?}", self.checks.len(), self.elapsed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_antennas: usize,
    pub partitions: usize,
    pub pip_points: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { seed: 11, n_users: 100, n_antennas: 20, partitions: 3, pip_points: 5000 }
    }
}

fn unit(rng: &mut Xoshiro256PlusPlus) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Check {
    Check { name, passed, detail: detail.into() }
}

/// Generates a dataset, injects bad lines and cross-checks each stage.
pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationReport, String> {
    let started = Instant::now();
    let synth = SynthConfig { seed: cfg.seed, n_users: cfg.n_users, n_antennas: cfg.n_antennas, ..SynthConfig::default() };
    let data = generate(&synth).map_err(|e| e.to_string())?;
    let mut checks = Vec::new();

    let u0 = &data.manifest.users[0].id;
    let u1 = &data.manifest.users[1].id;
    let a0 = &data.manifest.antennas[0].id;
    let mut text = String::from_utf8(data.cdr_bytes()).map_err(|e| e.to_string())?;
    text.push_str("not,a,record\n");
    text.push_str(&format!("{u0},{u1},2011-11-31T21:00:00-03:00,out,{a0}\n"));
    text.push_str(&format!("{u0},{u0},2011-11-08T21:00:00-03:00,out,{a0}\n"));
    text.push_str(&format!("{u0},{u1},2011-11-08T21:00:00-03:00,in,NO_SUCH_ANTENNA\n"));

    let registry = load_antennas(data.antennas_csv.as_bytes()).map_err(|e| e.to_string())?;
    let opts = ParseOptions::default().with_partitions(cfg.partitions);
    let log = parse_cdr_bytes(text.as_bytes(), &registry, &opts).map_err(|e| e.to_string())?;
    let ids = oracle::antenna_ids(&data.antennas_csv);
    let tally = oracle::tally_lines(&text, &ids);
    let r = &log.report;
    let got = (r.records_read, r.records_dropped_malformed, r.records_dropped_selfcall, r.records_dropped_unknown_antenna);
    let want = (tally.read, tally.malformed, tally.selfcall, tally.unknown_antenna);
    checks.push(check("ingest counters", got == want, format!("read/malformed/self/unknown {got:?} vs {want:?}")));
    checks.push(check(
        "ingest conservation",
        r.records_yielded() == log.records.len() as u64 && r.records_dropped() + r.records_yielded() == r.records_read,
        format!("{} yielded of {}", log.records.len(), r.records_read),
    ));

    let activity = ActivityFilterConfig::default();
    let clients = filter_users_by_activity(&log, &activity);
    let names = |set: &BTreeSet<crate::UserId>| -> BTreeSet<String> { set.iter().map(|&u| log.users.name(u).to_string()).collect() };
    let client_names = names(&clients);
    let want = oracle::activity_kept(&tally.calls, activity.mu, activity.m_cap);
    checks.push(check("activity filter", client_names == want, format!("{} kept vs {}", client_names.len(), want.len())));

    let graph = build_graph(&log, &clients);
    let got: BTreeSet<(String, String)> = graph
        .edges()
        .map(|e| {
            let (a, b) = (log.users.name(e.n_i).to_string(), log.users.name(e.n_j).to_string());
            if a < b { (a, b) } else { (b, a) }
        })
        .collect();
    let want = oracle::pairwise_edges(&tally.calls, &client_names);
    checks.push(check("social graph", got == want, format!("{} edges vs {}", got.len(), want.len())));

    let homes = detect_homes(&log, &clients, &crate::NightWindowConfig::default());
    let got: BTreeMap<String, (String, u32, u32)> = homes
        .values()
        .map(|h| {
            let a = registry.antenna(h.home_antenna).id.clone();
            (log.users.name(h.user).to_string(), (a, h.night_calls_at_home, h.night_calls_total))
        })
        .collect();
    let want = oracle::recount_homes(&tally.calls, &client_names);
    checks.push(check("home detection", got == want, format!("{} homes vs {}", got.len(), want.len())));
    let truth: BTreeMap<&str, &str> = data.manifest.users.iter().map(|u| (u.id.as_str(), u.home.as_str())).collect();
    let agree = got.iter().filter(|(u, (a, _, _))| truth.get(u.as_str()) == Some(&a.as_str())).count();
    checks.push(check("homes vs ground truth", agree == got.len(), format!("{agree}/{} match the manifest", got.len())));

    let zone = &data.zone;
    let rings: Vec<Vec<(f64, f64)>> = zone.rings().map(|r| r.iter().map(|p| (p.lat, p.lon)).collect()).collect();
    let (lo, hi) = zone.bounds();
    let (dlat, dlon) = (hi.lat - lo.lat, hi.lon - lo.lon);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let mut points: Vec<GeoPoint> = (0..cfg.pip_points)
        .map(|_| {
            GeoPoint::new(lo.lat - 0.1 * dlat + 1.2 * dlat * unit(&mut rng), lo.lon - 0.1 * dlon + 1.2 * dlon * unit(&mut rng))
        })
        .collect();
    for ring in zone.rings() {
        points.extend(ring.iter().copied());
        for w in ring.windows(2) {
            if w[0].lat == w[1].lat || w[0].lon == w[1].lon {
                points.push(GeoPoint::new((w[0].lat + w[1].lat) / 2.0, (w[0].lon + w[1].lon) / 2.0));
            }
        }
    }
    let mismatches = points
        .iter()
        .filter(|p| point_in_zone(**p, zone) != oracle::crossing_number_contains(&rings, p.lat, p.lon))
        .count();
    checks.push(check("point in zone", mismatches == 0, format!("{mismatches} mismatches over {} points", points.len())));

    let residents = residents_of_zone(&homes, &registry, zone).map_err(|e| e.to_string())?;
    let vulnerable = tag_vulnerable(&graph, &residents);
    let nodes: Vec<u32> = graph.nodes().iter().map(|u| u.0).collect();
    let edges: Vec<(u32, u32)> = graph.edges().map(|e| (e.n_i.0, e.n_j.0)).collect();
    let want = oracle::vulnerable_by_scan(&nodes, &edges, &residents.iter().map(|u| u.0).collect());
    let got: BTreeSet<u32> = vulnerable.iter().map(|u| u.0).collect();
    checks.push(check("vulnerable tagging", got == want, format!("{} vulnerable of {} clients", got.len(), nodes.len())));

    let indicators = compute_indicators(&log, &homes, &residents, &vulnerable, &registry);
    let home_names: BTreeMap<String, String> = got_homes(&homes, &log, &registry);
    let want = oracle::recount_indicators(&ids, &tally.calls, &home_names, &names(&residents), &names(&vulnerable));
    let got: BTreeMap<String, (u64, u64, u64, u64)> = indicators
        .values()
        .map(|i| (registry.antenna(i.antenna).id.clone(), (i.n_residents, i.n_vulnerable, i.calls_out, i.vulnerable_calls)))
        .collect();
    checks.push(check("indicators", got == want, format!("{} antennas", got.len())));
    let outgoing = tally.calls.iter().filter(|c| c.outgoing).count() as u64;
    let conserved = indicators.values().all(|i| i.n_vulnerable <= i.n_residents && i.vulnerable_calls <= i.calls_out)
        && indicators.values().map(|i| i.n_residents).sum::<u64>() == homes.len() as u64
        && indicators.values().map(|i| i.calls_out).sum::<u64>() == outgoing;
    checks.push(check("indicator conservation", conserved, format!("{outgoing} outgoing records")));

    let rows: Vec<(String, u64, u64)> = got.iter().map(|(a, t)| (a.clone(), t.0, t.1)).collect();
    let mut grid_ok = true;
    let mut params: Vec<FilterParams> = Preset::ALL.iter().map(|p| p.params()).collect();
    for beta in [0.0, 0.05, 0.2, 0.5, 0.9] {
        for m in [0, 1, 3, 5, 10] {
            params.push(FilterParams { beta, min_volume: m });
        }
    }
    for p in &params {
        let kept: Vec<String> = filter_antennas(&indicators, p).iter().map(|i| registry.antenna(i.antenna).id.clone()).collect();
        grid_ok &= kept == oracle::filter_rows(&rows, p.beta, p.min_volume);
    }
    checks.push(check("heatmap filter", grid_ok, format!("{} parameter pairs", params.len())));

    let loose = FilterParams { beta: 0.0, min_volume: 0 };
    let k = 1.5;
    let circles = build_circles(&filter_antennas(&indicators, &loose), &registry, k).map_err(|e| e.to_string())?;
    let bad = circles
        .iter()
        .filter(|c| {
            let (n, v, _, _) = got[&c.antenna_id];
            (c.radius_scale - k * (n as f64).sqrt()).abs() > 1e-9 || (c.intensity - v as f64 / n as f64).abs() > 1e-12
        })
        .count();
    checks.push(check("circle geometry", bad == 0, format!("{bad} of {} circles off", circles.len())));

    Ok(ValidationReport { checks, elapsed: started.elapsed() })
}

fn got_homes(
    homes: &BTreeMap<crate::UserId, crate::HomeAssignment>,
    log: &crate::CallLog,
    registry: &crate::AntennaRegistry,
) -> BTreeMap<String, String> {
    homes
        .values()
        .map(|h| (log.users.name(h.user).to_string(), registry.antenna(h.home_antenna).id.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_validation_passes() {
        let report = run_validation(&ValidationConfig { n_users: 40, pip_points: 500, ..Default::default() }).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.checks.len() >= 10);
    }
}
