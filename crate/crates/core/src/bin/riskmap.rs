use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use riskmap::pipeline::{
    self, config_for_synthetic_dir, golden_table, run_pipeline, run_single_stage, viewer_bundle, write_heatmap,
    HeatmapConfig, OneOrMany, PipelineConfig, PipelineError, Stage, GOLDEN_BETAS, GOLDEN_MIN_VOLUMES, INDICATORS_JSON,
    VIEWER_BUNDLE, VIEWER_GOLDEN,
};
use riskmap::risk::read_indicators_json;
use riskmap::synth::{generate, SynthConfig};
use riskmap::validate::{run_validation, ValidationConfig};
use riskmap::zone::EndemicZone;

/// Map social exposure to an endemic zone from call-detail records.
///
/// Exit codes: 2 config, 10 ingest, 11 graph, 12 homes, 13 risk,
/// 14 heatmap, 15 synth, 16 validate.
#[derive(Parser)]
#[command(name = "riskmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage from a TOML config, reusing cached stages.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "RISKMAP_OUTPUT_DIR")]
        output: Option<PathBuf>,
        #[arg(long)]
        partitions: Option<usize>,
        /// Also write viewer_bundle.json and viewer_golden.csv.
        #[arg(long)]
        emit_viewer_bundle: bool,
    },
    /// Parse and activity-filter CDRs; writes the ingest report.
    Ingest(StageArgs),
    /// Build the client graph; writes edges.csv.
    Graph(StageArgs),
    /// Detect home antennas; writes homes.csv.
    Homes(StageArgs),
    /// Compute per-antenna indicators; writes indicators.csv/.json.
    Risk(StageArgs),
    /// Filter indicators into heatmap layers.
    Heatmap(HeatmapArgs),
    /// Generate a synthetic dataset with a ground-truth manifest.
    Synth(SynthArgs),
    /// Compare every stage against brute-force oracles.
    Validate {
        /// 100-user dataset (the default size).
        #[arg(long)]
        small: bool,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long, default_value_t = 11)]
        seed: u64,
    },
}

#[derive(Args)]
struct StageArgs {
    /// Take inputs from a config file; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CDR glob; repeatable.
    #[arg(long)]
    cdr: Vec<String>,
    #[arg(long)]
    antennas: Option<PathBuf>,
    #[arg(long)]
    zone: Option<PathBuf>,
    #[arg(long, env = "RISKMAP_OUTPUT_DIR")]
    output: Option<PathBuf>,
    /// Minimum monthly calls (inclusive).
    #[arg(long)]
    mu: Option<u32>,
    /// Maximum monthly calls (inclusive).
    #[arg(long)]
    m_cap: Option<u32>,
    #[arg(long)]
    partitions: Option<usize>,
    /// Abort on the first malformed record or unknown antenna.
    #[arg(long)]
    strict: bool,
}

impl StageArgs {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => {
                let missing = |what: &str| PipelineError::new(Stage::Config, format!("--{what} is required without --config"));
                let cdr = self.cdr.first().ok_or_else(|| missing("cdr"))?;
                let antennas = self.antennas.clone().ok_or_else(|| missing("antennas"))?;
                PipelineConfig::new(cdr.clone(), antennas, self.zone.clone().unwrap_or_default(), "riskmap-out")
            }
        };
        if !self.cdr.is_empty() {
            cfg.paths.cdr = OneOrMany::Many(self.cdr.clone());
        }
        if let Some(a) = &self.antennas {
            cfg.paths.antennas = a.clone();
        }
        if let Some(z) = &self.zone {
            cfg.paths.zone = z.clone();
        }
        if let Some(o) = &self.output {
            cfg.paths.output = o.clone();
        }
        if let Some(mu) = self.mu {
            cfg.activity.mu = mu;
        }
        if let Some(m) = self.m_cap {
            cfg.activity.m_cap = m;
        }
        if let Some(p) = self.partitions {
            cfg.partitions = p;
        }
        cfg.strict |= self.strict;
        Ok(cfg)
    }
}

#[derive(Args)]
struct HeatmapArgs {
    /// Indicator JSON; defaults to indicators.json in the output dir.
    #[arg(long)]
    indicators: Option<PathBuf>,
    #[arg(long, env = "RISKMAP_OUTPUT_DIR", default_value = "riskmap-out")]
    output: PathBuf,
    /// argentina-national, argentina-broad, amba or mexico.
    #[arg(long)]
    preset: Option<String>,
    /// Minimum vulnerable share, exclusive.
    #[arg(long)]
    beta: Option<f64>,
    /// Minimum residents per antenna, exclusive.
    #[arg(long)]
    min_volume: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    radius_k: f64,
    /// Zone GeoJSON; required with --emit-viewer-bundle.
    #[arg(long)]
    zone: Option<PathBuf>,
    #[arg(long)]
    emit_viewer_bundle: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "synth-out")]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    users: usize,
    #[arg(long, default_value_t = 60)]
    antennas: usize,
    #[arg(long, default_value_t = 30)]
    days: u32,
    #[arg(long)]
    endemic_fraction: Option<f64>,
    /// Split the CDRs over this many files.
    #[arg(long, default_value_t = 1)]
    parts: usize,
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Run { config, output, partitions, emit_viewer_bundle } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(o) = output {
                cfg.paths.output = o;
            }
            if let Some(p) = partitions {
                cfg.partitions = p;
            }
            cfg.emit_viewer_bundle |= emit_viewer_bundle;
            let summary = run_pipeline(&cfg)?;
            for (stage, status) in &summary.stages {
                println!("{stage:<8} {}", if *status == pipeline::StageStatus::Cached { "cached" } else { "ran" });
            }
            if let Some(r) = &summary.report {
                println!("records read {} yielded {} users kept {}", r.records_read, r.records_yielded(), r.users_kept);
            }
            println!("outputs in {} ({:.2?})", summary.output.display(), summary.elapsed);
        }
        Command::Ingest(a) => print_paths(run_single_stage(&a.config()?, Stage::Ingest)?),
        Command::Graph(a) => print_paths(run_single_stage(&a.config()?, Stage::Graph)?),
        Command::Homes(a) => print_paths(run_single_stage(&a.config()?, Stage::Homes)?),
        Command::Risk(a) => {
            let cfg = a.config()?;
            if !cfg.paths.zone.is_file() {
                return Err(PipelineError::new(Stage::Risk, format!("zone file {} does not exist", cfg.paths.zone.display())));
            }
            print_paths(run_single_stage(&cfg, Stage::Risk)?)
        }
        Command::Heatmap(a) => heatmap(a)?,
        Command::Synth(a) => {
            let mut cfg = SynthConfig { seed: a.seed, n_users: a.users, n_antennas: a.antennas, n_days: a.days, cdr_parts: a.parts, ..Default::default() };
            if let Some(f) = a.endemic_fraction {
                cfg.endemic_fraction = f;
            }
            let data = generate(&cfg).map_err(|e| PipelineError::new(Stage::Synth, e))?;
            let mut paths = data.write_to_dir(&a.out).map_err(|e| PipelineError::new(Stage::Synth, e))?;
            let run_cfg = config_for_synthetic_dir(PathBuf::from(".").as_path(), PathBuf::from("out").as_path());
            let cfg_path = a.out.join("riskmap.toml");
            fs::write(&cfg_path, run_cfg.to_toml()).map_err(|e| PipelineError::new(Stage::Synth, e))?;
            paths.push(cfg_path);
            println!("{} records, {} users, {} antennas", data.manifest.records, data.manifest.users.len(), data.manifest.antennas.len());
            print_paths(paths);
        }
        Command::Validate { small: _, users, seed } => {
            let mut cfg = ValidationConfig { seed, ..Default::default() };
            if let Some(u) = users {
                cfg.n_users = u;
            }
            let report = run_validation(&cfg).map_err(|e| PipelineError::new(Stage::Validate, e))?;
            println!("{report}");
            if !report.passed() {
                return Err(PipelineError::new(Stage::Validate, "oracle mismatch"));
            }
        }
    }
    Ok(())
}

fn heatmap(a: HeatmapArgs) -> Result<(), PipelineError> {
    let params = HeatmapConfig { preset: a.preset, beta: a.beta, min_volume: a.min_volume, radius_k: a.radius_k }.resolve()?;
    let path = a.indicators.unwrap_or_else(|| a.output.join(INDICATORS_JSON));
    let text = fs::read_to_string(&path).map_err(|e| PipelineError::new(Stage::Heatmap, format!("{}: {e}", path.display())))?;
    let (registry, indicators) = read_indicators_json(&text).map_err(|e| PipelineError::new(Stage::Heatmap, e))?;
    fs::create_dir_all(&a.output).map_err(|e| PipelineError::new(Stage::Heatmap, e))?;
    let kept = write_heatmap(&indicators, &registry, &params, a.radius_k, &a.output)?;
    println!("{kept} antennas kept (beta {}, min volume {})", params.beta, params.min_volume);
    if a.emit_viewer_bundle {
        let zone_path = a.zone.ok_or_else(|| PipelineError::new(Stage::Config, "--emit-viewer-bundle needs --zone"))?;
        let zone_text = fs::read_to_string(&zone_path)
            .map_err(|e| PipelineError::new(Stage::Heatmap, format!("{}: {e}", zone_path.display())))?;
        let zone = EndemicZone::from_geojson(&zone_text).map_err(|e| PipelineError::new(Stage::Heatmap, e))?;
        let mut bundle = serde_json::to_vec_pretty(&viewer_bundle(&indicators, &registry, &zone, &params, a.radius_k))
            .map_err(|e| PipelineError::new(Stage::Heatmap, e))?;
        bundle.push(b'\n');
        fs::write(a.output.join(VIEWER_BUNDLE), bundle).map_err(|e| PipelineError::new(Stage::Heatmap, e))?;
        let table = golden_table(&indicators, &registry, &GOLDEN_BETAS, &GOLDEN_MIN_VOLUMES);
        fs::write(a.output.join(VIEWER_GOLDEN), table).map_err(|e| PipelineError::new(Stage::Heatmap, e))?;
    }
    Ok(())
}

fn print_paths(paths: Vec<PathBuf>) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riskmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
