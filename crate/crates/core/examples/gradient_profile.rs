//! Mean vulnerable share by distance from the endemic zone, pooled over
//! several seeds of the synthetic generator.
//!
//! ```text
//! cargo run --release --example gradient_profile -- [seeds] [bins]
//! ```

use riskmap::ingest::{load_antennas, parse_cdr_sources, ParseOptions};
use riskmap::risk::distance_profile;
use riskmap::synth::{generate, SynthConfig};
use riskmap::{build_graph, compute_indicators, detect_homes, filter_users_by_activity, residents_of_zone, tag_vulnerable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let bins: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let max_distance = 10.0;

    let mut pooled = vec![(0.0, 0usize); bins + 1];
    for seed in 0..seeds {
        let cfg = SynthConfig { seed, n_users: 3000, n_antennas: 120, ..SynthConfig::default() };
        let data = generate(&cfg)?;
        let registry = load_antennas(data.antennas_csv.as_bytes())?;
        let log = parse_cdr_sources(&data.cdr_sources(), &registry, &ParseOptions::default())?;
        let clients = filter_users_by_activity(&log, &Default::default());
        let graph = build_graph(&log, &clients);
        let homes = detect_homes(&log, &clients, &cfg.night);
        let residents = residents_of_zone(&homes, &registry, &data.zone)?;
        let vulnerable = tag_vulnerable(&graph, &residents);
        let ind = compute_indicators(&log, &homes, &residents, &vulnerable, &registry);
        for (slot, bin) in pooled.iter_mut().zip(distance_profile(&ind, &registry, &data.zone, bins, max_distance)) {
            if let Some(m) = bin.mean_fraction {
                slot.0 += m * bin.antennas as f64;
                slot.1 += bin.antennas;
            }
        }
    }

    let width = max_distance / bins as f64;
    for (b, (sum, n)) in pooled.iter().enumerate() {
        let label = if b == 0 { "inside".to_string() } else { format!("{:.1}-{:.1} deg", (b - 1) as f64 * width, b as f64 * width) };
        let mean = if *n > 0 { format!("{:.3}", sum / *n as f64) } else { "-".into() };
        println!("{label:>14}  antennas {n:>4}  mean V/N {mean}");
    }
    Ok(())
}
