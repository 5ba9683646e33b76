//! Apply each named filter preset to one indicator table and export the
//! surviving antennas as GeoJSON and CSV circle layers.

use riskmap::heatmap::kept_ids;
use riskmap::ingest::{load_antennas, parse_cdr_sources, ParseOptions};
use riskmap::synth::{generate, SynthConfig};
use riskmap::{
    build_circles, build_graph, compute_indicators, detect_homes, export_layer, filter_antennas, filter_users_by_activity,
    residents_of_zone, tag_vulnerable, FilterParams, LayerFormat, Preset,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // ~100 residents per antenna so the population floors bite
    let cfg = SynthConfig { n_users: 6000, n_antennas: 60, ..SynthConfig::default() };
    let data = generate(&cfg)?;
    let registry = load_antennas(data.antennas_csv.as_bytes())?;
    let log = parse_cdr_sources(&data.cdr_sources(), &registry, &ParseOptions::default())?;
    let clients = filter_users_by_activity(&log, &Default::default());
    let homes = detect_homes(&log, &clients, &cfg.night);
    let residents = residents_of_zone(&homes, &registry, &data.zone)?;
    let vulnerable = tag_vulnerable(&build_graph(&log, &clients), &residents);
    let ind = compute_indicators(&log, &homes, &residents, &vulnerable, &registry);

    for preset in Preset::ALL {
        let p = preset.params();
        println!("{preset:<18} beta {:<5} min volume {:<3} keeps {:>2} antennas", p.beta, p.min_volume, kept_ids(&ind, &p).len());
    }

    let custom = FilterParams::new(0.6, 80)?;
    let circles = build_circles(&filter_antennas(&ind, &custom), &registry, 0.05)?;
    println!("\nbeta 0.6, min volume 80: {} circles", circles.len());
    print!("{}", String::from_utf8(export_layer(&circles, LayerFormat::Csv))?);
    let geojson = export_layer(&circles, LayerFormat::GeoJson);
    println!("GeoJSON layer is {} bytes", geojson.len());
    Ok(())
}
