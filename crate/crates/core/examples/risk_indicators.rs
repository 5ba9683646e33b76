//! Residents, vulnerable users and the per-antenna indicators, with the
//! conservation identities checked on the way out.

use riskmap::ingest::{load_antennas, parse_cdr_sources, Direction, ParseOptions};
use riskmap::synth::{generate, SynthConfig};
use riskmap::{build_graph, compute_indicators, detect_homes, filter_users_by_activity, residents_of_zone, tag_vulnerable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig { n_users: 3000, n_antennas: 80, ..SynthConfig::default() };
    let data = generate(&cfg)?;
    let registry = load_antennas(data.antennas_csv.as_bytes())?;
    let log = parse_cdr_sources(&data.cdr_sources(), &registry, &ParseOptions::default())?;
    let clients = filter_users_by_activity(&log, &Default::default());
    let graph = build_graph(&log, &clients);
    let homes = detect_homes(&log, &clients, &cfg.night);

    let residents = residents_of_zone(&homes, &registry, &data.zone)?;
    let vulnerable = tag_vulnerable(&graph, &residents);
    println!("{} residents of {:?}, {} vulnerable clients", residents.len(), data.zone.name(), vulnerable.len());

    let ind = compute_indicators(&log, &homes, &residents, &vulnerable, &registry);
    let n: u64 = ind.values().map(|i| i.n_residents).sum();
    let c: u64 = ind.values().map(|i| i.calls_out).sum();
    let outgoing = log.records.iter().filter(|r| r.direction == Direction::Outgoing).count() as u64;
    assert_eq!(n, homes.len() as u64);
    assert_eq!(c, outgoing);
    assert!(ind.values().all(|i| i.n_vulnerable <= i.n_residents && i.vulnerable_calls <= i.calls_out));
    println!("sum N = {n} homed clients, sum C = {c} outgoing records");

    let mut top: Vec<_> = ind.values().filter(|i| i.n_residents >= 20).collect();
    top.sort_by(|a, b| b.vulnerable_fraction().partial_cmp(&a.vulnerable_fraction()).expect("finite"));
    println!("antenna    N    V      C     VC   V/N");
    for i in top.iter().take(8) {
        let a = registry.antenna(i.antenna);
        let share = i.vulnerable_fraction().unwrap_or(0.0);
        println!("{:<6} {:>4} {:>4} {:>6} {:>6}  {share:.2}", a.id, i.n_residents, i.n_vulnerable, i.calls_out, i.vulnerable_calls);
    }
    Ok(())
}
