//! Config-driven orchestration of the full pipeline.
//!
//! Stages run in order `ingest -> graph -> homes -> risk -> heatmap`. Each
//! stage has a cache key derived from the content of its inputs and the
//! config values it reads; when a key and the stage's artifacts are
//! unchanged from the previous run, the stage is skipped.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::build_graph;
use crate::heatmap::{build_circles, export_layer, filter_antennas, kept_ids, FilterParams, LayerFormat, Preset};
use crate::homes::{detect_homes, write_homes, NightWindowConfig};
use crate::ingest::{
    filter_users_by_activity, load_antennas, parse_cdr_sources, read_source, ActivityFilterConfig, AntennaRegistry,
    AntennaId, CallLog, IngestReport, ParseMode, ParseOptions, Source,
};
use crate::risk::{
    compute_indicators, indicator_row, indicators_json, read_indicators_json, residents_of_zone, tag_vulnerable, write_indicators_csv,
    Indicators, INDICATOR_CSV_HEADER,
};
use crate::zone::EndemicZone;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Ingest,
    Graph,
    Homes,
    Risk,
    Heatmap,
    Synth,
    Validate,
}

impl Stage {
    /// Process exit code reported when this stage fails.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Ingest => 10,
            Stage::Graph => 11,
            Stage::Homes => 12,
            Stage::Risk => 13,
            Stage::Heatmap => 14,
            Stage::Synth => 15,
            Stage::Validate => 16,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Graph => "graph",
            Stage::Homes => "homes",
            Stage::Risk => "risk",
            Stage::Heatmap => "heatmap",
            Stage::Synth => "synth",
            Stage::Validate => "validate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        Self { stage, message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

trait StageContext<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: fmt::Display> StageContext<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn patterns(&self) -> Vec<String> {
        match self {
            OneOrMany::One(s) => vec![s.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// Glob pattern(s) for CDR files; matches are read in sorted order.
    pub cdr: OneOrMany,
    pub antennas: PathBuf,
    pub zone: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapConfig {
    pub preset: Option<String>,
    pub beta: Option<f64>,
    pub min_volume: Option<u64>,
    #[serde(default = "default_radius_k")]
    pub radius_k: f64,
}

fn default_radius_k() -> f64 {
    1.0
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self { preset: None, beta: None, min_volume: None, radius_k: 1.0 }
    }
}

impl HeatmapConfig {
    /// Preset values (default `argentina-national`) overridden by explicit
    /// `beta` / `min_volume`.
    pub fn resolve(&self) -> Result<FilterParams, PipelineError> {
        let preset = match &self.preset {
            Some(name) => name.parse::<Preset>().at(Stage::Config)?,
            None => Preset::ArgentinaNational,
        };
        let mut params = preset.params();
        if let Some(b) = self.beta {
            params.beta = b;
        }
        if let Some(m) = self.min_volume {
            params.min_volume = m;
        }
        params.validate().at(Stage::Config)?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub start: NaiveDate,
    /// Exclusive.
    pub end: NaiveDate,
}

fn default_partitions() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub activity: ActivityFilterConfig,
    #[serde(default)]
    pub night: NightWindowConfig,
    #[serde(default)]
    pub heatmap: HeatmapConfig,
    #[serde(default)]
    pub window: Option<WindowConfig>,
    #[serde(default = "default_partitions")]
    pub partitions: usize,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub emit_viewer_bundle: bool,
}

impl PipelineConfig {
    pub fn new(cdr: impl Into<String>, antennas: impl Into<PathBuf>, zone: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        Self {
            paths: PathsConfig {
                cdr: OneOrMany::One(cdr.into()),
                antennas: antennas.into(),
                zone: zone.into(),
                output: output.into(),
            },
            activity: ActivityFilterConfig::default(),
            night: NightWindowConfig::default(),
            heatmap: HeatmapConfig::default(),
            window: None,
            partitions: 1,
            strict: false,
            emit_viewer_bundle: false,
        }
    }

    /// Loads a TOML config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| PipelineError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        let fix_str = |s: &String| {
            if Path::new(s).is_relative() {
                base.join(s).to_string_lossy().into_owned()
            } else {
                s.clone()
            }
        };
        self.paths.cdr = match &self.paths.cdr {
            OneOrMany::One(s) => OneOrMany::One(fix_str(s)),
            OneOrMany::Many(v) => OneOrMany::Many(v.iter().map(fix_str).collect()),
        };
        self.paths.antennas = fix(&self.paths.antennas);
        self.paths.zone = fix(&self.paths.zone);
        self.paths.output = fix(&self.paths.output);
    }

    /// Checks parameter invariants and that every referenced file exists.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.activity.validate().at(Stage::Config)?;
        self.night.validate().at(Stage::Config)?;
        self.heatmap.resolve()?;
        if !(self.heatmap.radius_k.is_finite() && self.heatmap.radius_k > 0.0) {
            return Err(PipelineError::new(Stage::Config, "heatmap.radius_k must be positive"));
        }
        if self.partitions == 0 {
            return Err(PipelineError::new(Stage::Config, "partitions must be at least 1"));
        }
        if let Some(w) = self.window {
            if w.start >= w.end {
                return Err(PipelineError::new(Stage::Config, format!("window start {} is not before end {}", w.start, w.end)));
            }
        }
        if !self.paths.antennas.is_file() {
            return Err(PipelineError::new(
                Stage::Ingest,
                format!("antenna file {} does not exist", self.paths.antennas.display()),
            ));
        }
        if !self.paths.zone.is_file() {
            return Err(PipelineError::new(Stage::Risk, format!("zone file {} does not exist", self.paths.zone.display())));
        }
        self.cdr_paths()?;
        Ok(())
    }

    /// Expanded, sorted CDR paths; an empty match set is an error.
    pub fn cdr_paths(&self) -> Result<Vec<PathBuf>, PipelineError> {
        let mut paths = Vec::new();
        for pattern in self.paths.cdr.patterns() {
            let matches = glob::glob(&pattern).map_err(|e| PipelineError::new(Stage::Ingest, format!("bad CDR glob {pattern:?}: {e}")))?;
            let before = paths.len();
            for m in matches {
                let p = m.at(Stage::Ingest)?;
                if p.is_file() {
                    paths.push(p);
                }
            }
            if paths.len() == before {
                return Err(PipelineError::new(Stage::Ingest, format!("no CDR files match {pattern:?}")));
            }
        }
        paths.sort();
        paths.dedup();
        Ok(paths)
    }

    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            mode: if self.strict { ParseMode::Strict } else { ParseMode::Lenient },
            window: self.window.map(|w| (w.start, w.end)),
            partitions: self.partitions,
        }
    }
}

pub const INGEST_REPORT_TXT: &str = "ingest_report.txt";
pub const INGEST_REPORT_JSON: &str = "ingest_report.json";
pub const EDGES_CSV: &str = "edges.csv";
pub const HOMES_CSV: &str = "homes.csv";
pub const INDICATORS_CSV: &str = "indicators.csv";
pub const INDICATORS_JSON: &str = "indicators.json";
pub const HEATMAP_GEOJSON: &str = "heatmap.geojson";
pub const HEATMAP_CSV: &str = "heatmap.csv";
pub const VIEWER_BUNDLE: &str = "viewer_bundle.json";
pub const VIEWER_GOLDEN: &str = "viewer_golden.csv";
pub const CACHE_FILE: &str = ".riskmap-cache.json";

pub const VIEWER_BUNDLE_VERSION: u32 = 1;

fn artifacts(stage: Stage) -> &'static [&'static str] {
    match stage {
        Stage::Ingest => &[INGEST_REPORT_TXT, INGEST_REPORT_JSON],
        Stage::Graph => &[EDGES_CSV],
        Stage::Homes => &[HOMES_CSV],
        Stage::Risk => &[INDICATORS_CSV, INDICATORS_JSON],
        Stage::Heatmap => &[HEATMAP_GEOJSON, HEATMAP_CSV],
        _ => &[],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ran,
    Cached,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub stages: Vec<(Stage, StageStatus)>,
    pub output: PathBuf,
    pub elapsed: Duration,
    /// Present when the ingest stage actually ran.
    pub report: Option<IngestReport>,
}

impl RunSummary {
    pub fn all_cached(&self) -> bool {
        self.stages.iter().all(|(_, s)| *s == StageStatus::Cached)
    }

    pub fn status(&self, stage: Stage) -> Option<StageStatus> {
        self.stages.iter().find(|(s, _)| *s == stage).map(|(_, st)| *st)
    }
}

struct Keys {
    ingest: String,
    graph: String,
    homes: String,
    risk: String,
    heatmap: String,
}

fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec(v).expect("config serializes")
}

/// Digest of one input file plus the metadata it was taken under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct FileStamp {
    len: u64,
    mtime_ns: u64,
    /// Wall clock just before the file was read.
    checked_ns: u64,
    sha256: String,
}

fn nanos(t: SystemTime) -> u64 {
    t.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64)
}

/// Content digest of `path`. A previous stamp is reused only if size and
/// mtime match and the mtime predates the previous read, so a write that
/// lands in the same clock tick as that read still forces a rehash.
fn file_digest(path: &Path, memo: Option<&FileStamp>) -> Result<FileStamp, PipelineError> {
    let err = |e: std::io::Error| PipelineError::new(Stage::Ingest, format!("{}: {e}", path.display()));
    let meta = fs::metadata(path).map_err(err)?;
    let mtime_ns = nanos(meta.modified().map_err(err)?);
    if let Some(m) = memo {
        if m.len == meta.len() && m.mtime_ns == mtime_ns && mtime_ns < m.checked_ns {
            return Ok(m.clone());
        }
    }
    let checked_ns = nanos(SystemTime::now());
    let bytes = fs::read(path).map_err(err)?;
    Ok(FileStamp { len: meta.len(), mtime_ns, checked_ns, sha256: hex(&Sha256::digest(&bytes)) })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheManifest {
    stages: BTreeMap<String, String>,
    files: BTreeMap<String, FileStamp>,
}

impl CacheManifest {
    fn read(dir: &Path) -> Self {
        fs::read_to_string(dir.join(CACHE_FILE))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default()
    }

    fn is_fresh(&self, stage: Stage, key: &str, dir: &Path, extra: &[&str]) -> bool {
        self.stages.get(stage.name()).is_some_and(|k| k == key)
            && artifacts(stage).iter().chain(extra).all(|f| dir.join(f).is_file())
    }
}

fn read_text(path: &Path, stage: Stage) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::new(stage, format!("{}: {e}", path.display())))
}

fn read_sources(paths: &[PathBuf]) -> Result<Vec<Source>, PipelineError> {
    paths.iter().map(|p| read_source(p)).collect::<Result<Vec<_>, _>>().at(Stage::Ingest)
}

fn stage_keys(
    cdr: &[(String, String)],
    antenna_text: &str,
    zone_text: &str,
    cfg: &PipelineConfig,
    params: &FilterParams,
) -> Keys {
    let mut parts: Vec<&[u8]> = vec![b"ingest/v1"];
    for (name, sha) in cdr {
        parts.push(name.as_bytes());
        parts.push(sha.as_bytes());
    }
    parts.push(antenna_text.as_bytes());
    let activity = json_bytes(&cfg.activity);
    let window = json_bytes(&cfg.window);
    let strict = [u8::from(cfg.strict)];
    parts.extend([activity.as_slice(), window.as_slice(), &strict]);
    let ingest = digest(&parts);
    let graph = digest(&[b"graph/v1", ingest.as_bytes()]);
    let homes = digest(&[b"homes/v1", ingest.as_bytes(), &json_bytes(&cfg.night)]);
    let risk = digest(&[b"risk/v1", graph.as_bytes(), homes.as_bytes(), zone_text.as_bytes()]);
    let bundle = [u8::from(cfg.emit_viewer_bundle)];
    let heatmap = digest(&[b"heatmap/v1", risk.as_bytes(), &json_bytes(params), &cfg.heatmap.radius_k.to_le_bytes(), &bundle]);
    Keys { ingest, graph, homes, risk, heatmap }
}

/// In-memory results of the analysis stages.
pub struct Analysis {
    pub log: CallLog,
    pub clients: std::collections::BTreeSet<crate::UserId>,
    pub graph: crate::SocialGraph,
    pub homes: BTreeMap<crate::UserId, crate::HomeAssignment>,
    pub residents: std::collections::BTreeSet<crate::UserId>,
    pub vulnerable: std::collections::BTreeSet<crate::UserId>,
    pub indicators: Indicators,
}

/// Parses and activity-filters the CDRs; `report.users_kept` is filled in.
pub fn ingest(
    sources: &[Source],
    registry: &AntennaRegistry,
    cfg: &PipelineConfig,
) -> Result<(CallLog, std::collections::BTreeSet<crate::UserId>), PipelineError> {
    let mut log = parse_cdr_sources(sources, registry, &cfg.parse_options()).at(Stage::Ingest)?;
    let clients = filter_users_by_activity(&log, &cfg.activity);
    log.report.users_kept = clients.len() as u64;
    Ok((log, clients))
}

/// Runs ingest through risk in memory.
pub fn analyze(
    sources: &[Source],
    registry: &AntennaRegistry,
    zone: &EndemicZone,
    cfg: &PipelineConfig,
) -> Result<Analysis, PipelineError> {
    let (log, clients) = ingest(sources, registry, cfg)?;
    let graph = build_graph(&log, &clients);
    let homes = detect_homes(&log, &clients, &cfg.night);
    let residents = residents_of_zone(&homes, registry, zone).at(Stage::Risk)?;
    let vulnerable = tag_vulnerable(&graph, &residents);
    let indicators = compute_indicators(&log, &homes, &residents, &vulnerable, registry);
    Ok(Analysis { log, clients, graph, homes, residents, vulnerable, indicators })
}

fn write(stage: Stage, dir: &Path, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| PipelineError::new(stage, format!("cannot write {}: {e}", path.display())))
}

fn render<F>(f: F) -> Vec<u8>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

pub fn write_stage_artifacts(stage: Stage, a: &Analysis, registry: &AntennaRegistry, dir: &Path) -> Result<(), PipelineError> {
    match stage {
        Stage::Ingest => {
            write(stage, dir, INGEST_REPORT_TXT, a.log.report.to_key_value().as_bytes())?;
            write(stage, dir, INGEST_REPORT_JSON, a.log.report.to_json().as_bytes())
        }
        Stage::Graph => write(stage, dir, EDGES_CSV, &render(|b| a.graph.write_edge_list(&a.log.users, b))),
        Stage::Homes => write(stage, dir, HOMES_CSV, &render(|b| write_homes(&a.homes, &a.log.users, registry, b))),
        Stage::Risk => {
            write(stage, dir, INDICATORS_CSV, &render(|b| write_indicators_csv(&a.indicators, registry, b)))?;
            let mut json = serde_json::to_vec_pretty(&indicators_json(&a.indicators, registry)).expect("serializes");
            json.push(b'\n');
            write(stage, dir, INDICATORS_JSON, &json)
        }
        _ => Ok(()),
    }
}

/// Filters indicators and writes both heatmap layers.
pub fn write_heatmap(
    indicators: &Indicators,
    registry: &AntennaRegistry,
    params: &FilterParams,
    radius_k: f64,
    dir: &Path,
) -> Result<usize, PipelineError> {
    let kept = filter_antennas(indicators, params);
    let circles = build_circles(&kept, registry, radius_k).at(Stage::Heatmap)?;
    write(Stage::Heatmap, dir, HEATMAP_GEOJSON, &export_layer(&circles, LayerFormat::GeoJson))?;
    write(Stage::Heatmap, dir, HEATMAP_CSV, &export_layer(&circles, LayerFormat::Csv))?;
    Ok(circles.len())
}

/// The JSON document consumed by the map viewer.
pub fn viewer_bundle(
    indicators: &Indicators,
    registry: &AntennaRegistry,
    zone: &EndemicZone,
    active: &FilterParams,
    radius_k: f64,
) -> serde_json::Value {
    let antennas: Vec<_> = indicators
        .values()
        .map(|i| {
            let a = registry.antenna(i.antenna);
            json!({
                "id": a.id, "lat": a.lat, "lon": a.lon,
                "N": i.n_residents, "V": i.n_vulnerable, "C": i.calls_out, "VC": i.vulnerable_calls,
            })
        })
        .collect();
    let presets: Vec<_> = Preset::ALL
        .iter()
        .map(|p| json!({ "name": p.name(), "beta": p.params().beta, "min_volume": p.params().min_volume }))
        .collect();
    json!({
        "schema": "riskmap-viewer-bundle",
        "version": VIEWER_BUNDLE_VERSION,
        "radius_k": radius_k,
        "filter": { "beta": active.beta, "min_volume": active.min_volume },
        "zone": zone.to_geojson(),
        "presets": presets,
        "antennas": antennas,
    })
}

/// Runs every stage, reusing cached stages whose inputs are unchanged.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    let started = Instant::now();
    cfg.validate()?;
    let params = cfg.heatmap.resolve()?;
    let out = cfg.paths.output.clone();
    fs::create_dir_all(&out).map_err(|e| PipelineError::new(Stage::Config, format!("cannot create {}: {e}", out.display())))?;

    let cdr_paths = cfg.cdr_paths()?;
    let antenna_text = read_text(&cfg.paths.antennas, Stage::Ingest)?;
    let zone_text = read_text(&cfg.paths.zone, Stage::Risk)?;
    let cache = CacheManifest::read(&out);
    let mut files = BTreeMap::new();
    let mut cdr_digests = Vec::new();
    for p in &cdr_paths {
        let id = p.to_string_lossy().into_owned();
        let stamp = file_digest(p, cache.files.get(&id))?;
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        cdr_digests.push((name, stamp.sha256.clone()));
        files.insert(id, stamp);
    }
    let keys = stage_keys(&cdr_digests, &antenna_text, &zone_text, cfg, &params);
    let bundle_extra: &[&str] = if cfg.emit_viewer_bundle { &[VIEWER_BUNDLE, VIEWER_GOLDEN] } else { &[] };

    let analysis_stages = [
        (Stage::Ingest, &keys.ingest),
        (Stage::Graph, &keys.graph),
        (Stage::Homes, &keys.homes),
        (Stage::Risk, &keys.risk),
    ];
    let fresh: Vec<bool> = analysis_stages.iter().map(|(s, k)| cache.is_fresh(*s, k, &out, &[])).collect();
    let heatmap_fresh = cache.is_fresh(Stage::Heatmap, &keys.heatmap, &out, bundle_extra);

    let mut stages = Vec::new();
    let mut report = None;
    let registry = load_antennas(antenna_text.as_bytes()).at(Stage::Ingest)?;
    let zone = EndemicZone::from_geojson(&zone_text).at(Stage::Risk)?;

    let indicators = if fresh.iter().all(|&f| f) {
        stages.extend(analysis_stages.iter().map(|(s, _)| (*s, StageStatus::Cached)));
        if heatmap_fresh {
            None
        } else {
            let text = fs::read_to_string(out.join(INDICATORS_JSON)).at(Stage::Heatmap)?;
            Some(read_indicators_json(&text).at(Stage::Heatmap)?.1)
        }
    } else {
        let a = analyze(&read_sources(&cdr_paths)?, &registry, &zone, cfg)?;
        for ((stage, _), &f) in analysis_stages.iter().zip(&fresh) {
            if f {
                stages.push((*stage, StageStatus::Cached));
            } else {
                write_stage_artifacts(*stage, &a, &registry, &out)?;
                stages.push((*stage, StageStatus::Ran));
            }
        }
        report = Some(a.log.report);
        Some(a.indicators)
    };

    match indicators {
        Some(ind) if !heatmap_fresh || stages.iter().any(|(_, s)| *s == StageStatus::Ran) => {
            write_heatmap(&ind, &registry, &params, cfg.heatmap.radius_k, &out)?;
            if cfg.emit_viewer_bundle {
                let mut b = serde_json::to_vec_pretty(&viewer_bundle(&ind, &registry, &zone, &params, cfg.heatmap.radius_k))
                    .expect("serializes");
                b.push(b'\n');
                write(Stage::Heatmap, &out, VIEWER_BUNDLE, &b)?;
                let table = golden_table(&ind, &registry, &GOLDEN_BETAS, &GOLDEN_MIN_VOLUMES);
                write(Stage::Heatmap, &out, VIEWER_GOLDEN, table.as_bytes())?;
            }
            stages.push((Stage::Heatmap, StageStatus::Ran));
        }
        _ => stages.push((Stage::Heatmap, StageStatus::Cached)),
    }

    let mut new_cache = CacheManifest { stages: BTreeMap::new(), files };
    for (stage, key) in analysis_stages.iter().chain([(Stage::Heatmap, &keys.heatmap)].iter()) {
        new_cache.stages.insert(stage.name().to_string(), (*key).clone());
    }
    let mut text = serde_json::to_string_pretty(&new_cache).expect("serializes");
    text.push('\n');
    write(Stage::Heatmap, &out, CACHE_FILE, text.as_bytes())?;

    Ok(RunSummary { stages, output: out, elapsed: started.elapsed(), report })
}

/// Runs the pipeline prefix needed for `stage` without caching and writes
/// only that stage's artifacts. Used by the single-stage subcommands.
pub fn run_single_stage(cfg: &PipelineConfig, stage: Stage) -> Result<Vec<PathBuf>, PipelineError> {
    cfg.activity.validate().at(Stage::Config)?;
    cfg.night.validate().at(Stage::Config)?;
    let out = &cfg.paths.output;
    fs::create_dir_all(out).map_err(|e| PipelineError::new(Stage::Config, format!("cannot create {}: {e}", out.display())))?;
    let sources = read_sources(&cfg.cdr_paths()?)?;
    let registry = load_antennas(read_text(&cfg.paths.antennas, Stage::Ingest)?.as_bytes()).at(Stage::Ingest)?;
    let (log, clients) = ingest(&sources, &registry, cfg)?;

    let mut a = Analysis {
        log,
        clients,
        graph: Default::default(),
        homes: BTreeMap::new(),
        residents: Default::default(),
        vulnerable: Default::default(),
        indicators: BTreeMap::new(),
    };
    if matches!(stage, Stage::Graph | Stage::Risk) {
        a.graph = build_graph(&a.log, &a.clients);
    }
    if matches!(stage, Stage::Homes | Stage::Risk) {
        a.homes = detect_homes(&a.log, &a.clients, &cfg.night);
    }
    if stage == Stage::Risk {
        let zone = EndemicZone::from_geojson(&read_text(&cfg.paths.zone, Stage::Risk)?).at(Stage::Risk)?;
        a.residents = residents_of_zone(&a.homes, &registry, &zone).at(Stage::Risk)?;
        a.vulnerable = tag_vulnerable(&a.graph, &a.residents);
        a.indicators = compute_indicators(&a.log, &a.homes, &a.residents, &a.vulnerable, &registry);
    }
    write_stage_artifacts(stage, &a, &registry, out)?;
    Ok(artifacts(stage).iter().map(|f| out.join(f)).collect())
}

/// Shortlist CSV for the given antennas: the indicator header and rows,
/// byte-identical to the matching lines of `indicators.csv`.
pub fn shortlist_csv(indicators: &Indicators, registry: &AntennaRegistry, ids: &[AntennaId]) -> String {
    let mut s = format!("{INDICATOR_CSV_HEADER}\n");
    for id in ids {
        if let Some(i) = indicators.get(id) {
            s.push_str(&indicator_row(i, registry));
            s.push('\n');
        }
    }
    s
}

pub const GOLDEN_BETAS: [f64; 7] = [0.0, 0.01, 0.02, 0.05, 0.15, 0.3, 0.5];
pub const GOLDEN_MIN_VOLUMES: [u64; 6] = [0, 10, 25, 50, 80, 150];

/// Visible antenna set for every `(beta, min_volume)` pair, one line per
/// pair: `beta,min_volume,count,id id id`.
pub fn golden_table(indicators: &Indicators, registry: &AntennaRegistry, betas: &[f64], min_volumes: &[u64]) -> String {
    let mut s = String::from("beta,min_volume,count,antenna_ids\n");
    for &beta in betas {
        for &min_volume in min_volumes {
            let ids = kept_ids(indicators, &FilterParams { beta, min_volume });
            let names: Vec<&str> = ids.iter().map(|&a| registry.antenna(a).id.as_str()).collect();
            s.push_str(&format!("{beta},{min_volume},{},{}\n", names.len(), names.join(" ")));
        }
    }
    s
}

/// Config that runs the pipeline over a dataset written by
/// [`GeneratedDataset::write_to_dir`](crate::synth::GeneratedDataset::write_to_dir).
pub fn config_for_synthetic_dir(dir: &Path, output: &Path) -> PipelineConfig {
    PipelineConfig::new(
        dir.join("cdr*.csv").to_string_lossy().into_owned(),
        dir.join(crate::synth::ANTENNA_FILE),
        dir.join(crate::synth::ZONE_FILE),
        output,
    )
}
