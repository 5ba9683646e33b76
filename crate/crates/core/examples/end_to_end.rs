//! Full pipeline from a TOML config: synthesize inputs, run every stage,
//! re-run to hit the cache and emit the viewer bundle.

use riskmap::pipeline::{run_pipeline, PipelineConfig, StageStatus, VIEWER_BUNDLE};
use riskmap::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let data = generate(&SynthConfig { n_users: 4000, n_antennas: 60, cdr_parts: 4, ..SynthConfig::default() })?;
    data.write_to_dir(dir.path())?;

    let toml = r#"
partitions = 2
emit_viewer_bundle = true

[paths]
cdr = "cdr_part*.csv"
antennas = "antennas.csv"
zone = "zone.geojson"
output = "out"

[heatmap]
preset = "argentina-broad"
radius_k = 0.1
"#;
    let config_path = dir.path().join("riskmap.toml");
    std::fs::write(&config_path, toml)?;
    let cfg = PipelineConfig::load(&config_path)?;

    for attempt in ["first", "second"] {
        let summary = run_pipeline(&cfg)?;
        let cached = summary.stages.iter().filter(|(_, s)| *s == StageStatus::Cached).count();
        println!("{attempt} run: {cached}/{} stages cached in {:.2?}", summary.stages.len(), summary.elapsed);
    }

    let mut names: Vec<_> = std::fs::read_dir(&cfg.paths.output)?.map(|e| e.map(|e| e.file_name())).collect::<Result<_, _>>()?;
    names.sort();
    println!("artifacts: {names:?}");
    let bundle: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cfg.paths.output.join(VIEWER_BUNDLE))?)?;
    println!("viewer bundle: {} antennas, {} presets", bundle["antennas"].as_array().map_or(0, Vec::len), bundle["presets"].as_array().map_or(0, Vec::len));
    Ok(())
}

