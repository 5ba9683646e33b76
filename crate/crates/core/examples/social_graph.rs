//! Build the client communication graph from a synthetic dataset, query
//! neighbours and round-trip the edge list.

use riskmap::graph::SocialGraph;
use riskmap::ingest::{load_antennas, parse_cdr_sources, ParseOptions};
use riskmap::synth::{generate, SynthConfig};
use riskmap::{build_graph, filter_users_by_activity};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SynthConfig { n_users: 500, ..SynthConfig::default() })?;
    let registry = load_antennas(data.antennas_csv.as_bytes())?;
    let log = parse_cdr_sources(&data.cdr_sources(), &registry, &ParseOptions::default())?;
    let clients = filter_users_by_activity(&log, &Default::default());
    let graph = build_graph(&log, &clients);
    println!("{} clients, {} edges", graph.node_count(), graph.edge_count());

    let hub = graph.nodes().iter().copied().max_by_key(|&u| graph.neighbors(u).len()).expect("non-empty graph");
    let names: Vec<&str> = graph.neighbors(hub).iter().map(|&v| log.users.name(v)).collect();
    println!("best connected client {} talks to {names:?}", log.users.name(hub));

    let mut buf = Vec::new();
    graph.write_edge_list(&log.users, &mut buf)?;
    let back = SocialGraph::read_edge_list(&log.users, buf.as_slice())?;
    println!("edge list round trip: {} lines, equal = {}", buf.split(|&b| b == b'\n').filter(|l| !l.is_empty()).count(), back.edges().eq(graph.edges()));
    println!("generator drew {} edges", data.manifest.edges.len());
    Ok(())
}
