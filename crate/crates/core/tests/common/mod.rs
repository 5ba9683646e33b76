#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use riskmap::ingest::{load_antennas, parse_cdr_sources, ParseOptions};
use riskmap::risk::Indicators;
use riskmap::synth::{generate, GeneratedDataset, SynthConfig};
use riskmap::{
    build_graph, compute_indicators, detect_homes, filter_users_by_activity, residents_of_zone, tag_vulnerable,
    AntennaRegistry, CallLog, HomeAssignment, SocialGraph, UserId,
};

pub struct Run {
    pub data: GeneratedDataset,
    pub registry: AntennaRegistry,
    pub log: CallLog,
    pub clients: BTreeSet<UserId>,
    pub graph: SocialGraph,
    pub homes: BTreeMap<UserId, HomeAssignment>,
    pub residents: BTreeSet<UserId>,
    pub vulnerable: BTreeSet<UserId>,
    pub indicators: Indicators,
}

pub fn small(seed: u64, n_users: usize, n_antennas: usize) -> SynthConfig {
    SynthConfig { seed, n_users, n_antennas, ..SynthConfig::default() }
}

pub fn run(cfg: &SynthConfig, partitions: usize) -> Run {
    let data = generate(cfg).expect("feasible config");
    let registry = load_antennas(data.antennas_csv.as_bytes()).unwrap();
    let opts = ParseOptions::default().with_partitions(partitions);
    let log = parse_cdr_sources(&data.cdr_sources(), &registry, &opts).unwrap();
    let clients = filter_users_by_activity(&log, &Default::default());
    let graph = build_graph(&log, &clients);
    let homes = detect_homes(&log, &clients, &cfg.night);
    let residents = residents_of_zone(&homes, &registry, &data.zone).unwrap();
    let vulnerable = tag_vulnerable(&graph, &residents);
    let indicators = compute_indicators(&log, &homes, &residents, &vulnerable, &registry);
    Run { data, registry, log, clients, graph, homes, residents, vulnerable, indicators }
}

pub fn names(log: &CallLog, set: &BTreeSet<UserId>) -> BTreeSet<String> {
    set.iter().map(|&u| log.users.name(u).to_string()).collect()
}

pub fn registry(ids: &[&str]) -> AntennaRegistry {
    let text: String = ids.iter().enumerate().map(|(i, id)| format!("{id},-30.{i:03},-60.{i:03}\n")).collect();
    load_antennas(text.as_bytes()).unwrap()
}
