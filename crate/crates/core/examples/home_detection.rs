//! Infer home antennas from weekday-night calls and compare them with the
//! generator's ground truth.

use std::collections::BTreeMap;

use riskmap::ingest::{load_antennas, parse_cdr_sources, ParseOptions};
use riskmap::synth::{generate, SynthConfig};
use riskmap::{detect_homes, filter_users_by_activity, NightWindowConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SynthConfig { n_users: 2000, n_antennas: 80, ..SynthConfig::default() })?;
    let registry = load_antennas(data.antennas_csv.as_bytes())?;
    let log = parse_cdr_sources(&data.cdr_sources(), &registry, &ParseOptions::default())?;
    let clients = filter_users_by_activity(&log, &Default::default());

    let night = NightWindowConfig::default();
    let homes = detect_homes(&log, &clients, &night);
    let truth: BTreeMap<&str, &str> = data.manifest.users.iter().map(|u| (u.id.as_str(), u.home.as_str())).collect();
    let correct = homes
        .values()
        .filter(|h| truth.get(log.users.name(h.user)) == Some(&registry.antenna(h.home_antenna).id.as_str()))
        .count();
    println!("{} of {} clients homed, {correct} match the manifest", homes.len(), clients.len());

    // a narrower window sees fewer nights and can no longer place everyone
    let late = NightWindowConfig { start_hour: 23, end_hour: 4, ..night };
    println!("23:00-04:00 window homes {} clients", detect_homes(&log, &clients, &late).len());

    let mut out = Vec::new();
    riskmap::homes::write_homes(&homes, &log.users, &registry, &mut out)?;
    for line in String::from_utf8(out)?.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
