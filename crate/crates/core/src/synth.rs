//! Seeded synthetic CDR datasets with a ground-truth manifest.
//!
//! Randomness comes from xoshiro256++ seeded through SplitMix64
//! (`rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64`). Every draw that
//! affects counts is an integer draw: bounded integers use Lemire's
//! multiply-shift rejection on `next_u64`, and probabilities are compared
//! as 32-bit fixed-point thresholds against the upper half of `next_u64`.
//! Antenna coordinates are integer micro-degrees and the edge-distance
//! decay is evaluated in integer arithmetic, so fixtures reproduce exactly
//! from a seed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, FixedOffset, NaiveDate, NaiveDateTime, TimeZone, Timelike};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homes::{is_weekday_night, NightWindowConfig};
use crate::ingest::Source;
use crate::zone::{EndemicZone, GeoPoint};

pub const GENERATOR_ID: &str = "xoshiro256++ seeded via splitmix64; lemire bounded draws";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    fn contains(&self, p: GeoPoint) -> bool {
        (self.lat_min..=self.lat_max).contains(&p.lat) && (self.lon_min..=self.lon_max).contains(&p.lon)
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_antennas: usize,
    pub n_days: u32,
    pub start_date: NaiveDate,
    pub utc_offset_hours: i32,
    pub bbox: BoundingBox,
    pub endemic_zone: EndemicZone,
    /// Share of users homed at antennas inside the zone.
    pub endemic_fraction: f64,
    /// Probability that one of a user's own night calls uses the home antenna.
    pub home_night_affinity: f64,
    pub mean_degree: u32,
    /// Edge-weight multiplier towards users homed in the zone.
    pub endemic_tie_bias: f64,
    pub calls_per_user_day: f64,
    /// Distance in degrees over which edge weight halves.
    pub distance_decay: f64,
    /// Lower bound on each user's own weekday-night calls.
    pub min_night_calls: u32,
    pub night: NightWindowConfig,
    /// Number of CDR files to split the output into.
    pub cdr_parts: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_users: 1000,
            n_antennas: 60,
            n_days: 30,
            start_date: NaiveDate::from_ymd_opt(2011, 11, 1).expect("valid date"),
            utc_offset_hours: -3,
            bbox: BoundingBox { lat_min: -40.0, lat_max: -20.0, lon_min: -70.0, lon_max: -55.0 },
            endemic_zone: default_zone(),
            endemic_fraction: 0.25,
            home_night_affinity: 0.8,
            mean_degree: 6,
            endemic_tie_bias: 2.0,
            calls_per_user_day: 1.0,
            distance_decay: 2.0,
            min_night_calls: 4,
            night: NightWindowConfig::default(),
            cdr_parts: 1,
        }
    }
}

/// Hexagonal zone covering the north of the default bounding box.
pub fn default_zone() -> EndemicZone {
    EndemicZone::from_lat_lon(
        "synthetic endemic zone",
        &[(-20.5, -66.0), (-20.5, -57.0), (-24.0, -55.5), (-27.5, -58.0), (-27.5, -64.0), (-24.5, -68.0)],
    )
    .expect("default zone is valid")
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn infeasible(msg: impl Into<String>) -> SynthError {
    SynthError::Infeasible(msg.into())
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_users < 2 {
            return Err(infeasible("need at least 2 users"));
        }
        if self.n_users > u32::MAX as usize / 2 {
            return Err(infeasible("too many users"));
        }
        if self.n_antennas == 0 {
            return Err(infeasible("need at least 1 antenna"));
        }
        if self.n_days == 0 {
            return Err(infeasible("n_days must be positive"));
        }
        if self.mean_degree == 0 || self.mean_degree as usize >= self.n_users {
            return Err(infeasible(format!("mean_degree {} must be in 1..n_users", self.mean_degree)));
        }
        if !(self.home_night_affinity > 0.5 && self.home_night_affinity <= 1.0) {
            return Err(infeasible("home_night_affinity must be in (0.5, 1]"));
        }
        if !(0.0..=1.0).contains(&self.endemic_fraction) {
            return Err(infeasible("endemic_fraction must be in [0, 1]"));
        }
        if !(self.endemic_tie_bias.is_finite() && self.endemic_tie_bias > 0.0) {
            return Err(infeasible("endemic_tie_bias must be positive"));
        }
        if !(self.distance_decay.is_finite() && self.distance_decay > 0.0) {
            return Err(infeasible("distance_decay must be positive"));
        }
        if !(self.calls_per_user_day.is_finite() && self.calls_per_user_day >= 0.0) {
            return Err(infeasible("calls_per_user_day must be non-negative"));
        }
        if self.min_night_calls == 0 {
            return Err(infeasible("min_night_calls must be positive"));
        }
        if !(-23..=23).contains(&self.utc_offset_hours) {
            return Err(infeasible("utc offset out of range"));
        }
        if self.cdr_parts == 0 {
            return Err(infeasible("cdr_parts must be positive"));
        }
        let b = &self.bbox;
        if !(b.lat_min < b.lat_max && b.lon_min < b.lon_max) || !(-90.0..=90.0).contains(&b.lat_min)
            || !(-90.0..=90.0).contains(&b.lat_max) || !(-180.0..=180.0).contains(&b.lon_min)
            || !(-180.0..=180.0).contains(&b.lon_max)
        {
            return Err(infeasible("invalid bounding box"));
        }
        let (lo, hi) = self.endemic_zone.bounds();
        if !(b.contains(lo) && b.contains(hi)) {
            return Err(infeasible("endemic zone must lie inside the bounding box"));
        }
        self.night.validate().map_err(|e| infeasible(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestUser {
    pub id: String,
    pub home: String,
    pub endemic: bool,
    /// Weekday-night records that localize this user.
    pub night_calls: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestAntenna {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub endemic: bool,
    pub population: u32,
}

/// Ground truth for a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthManifest {
    pub generator: String,
    pub seed: u64,
    pub start_date: String,
    pub n_days: u32,
    pub records: usize,
    pub users: Vec<ManifestUser>,
    pub antennas: Vec<ManifestAntenna>,
    pub edges: Vec<(String, String)>,
}

impl GroundTruthManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    /// CDR file contents, one entry per part.
    pub cdr_parts: Vec<Vec<u8>>,
    pub antennas_csv: String,
    pub zone: EndemicZone,
    pub manifest: GroundTruthManifest,
}

pub const ANTENNA_FILE: &str = "antennas.csv";
pub const ZONE_FILE: &str = "zone.geojson";
pub const MANIFEST_FILE: &str = "manifest.json";

impl GeneratedDataset {
    pub fn zone_geojson(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.zone.to_geojson()).expect("zone serializes");
        s.push('\n');
        s
    }

    pub fn cdr_file_names(&self) -> Vec<String> {
        if self.cdr_parts.len() == 1 {
            vec!["cdr.csv".to_string()]
        } else {
            (0..self.cdr_parts.len()).map(|i| format!("cdr_part{i:03}.csv")).collect()
        }
    }

    /// In-memory sources named like the files [`write_to_dir`](Self::write_to_dir) produces.
    pub fn cdr_sources(&self) -> Vec<Source> {
        self.cdr_file_names()
            .into_iter()
            .zip(&self.cdr_parts)
            .map(|(name, bytes)| Source { name, bytes: bytes.clone() })
            .collect()
    }

    /// Concatenation of all CDR parts.
    pub fn cdr_bytes(&self) -> Vec<u8> {
        self.cdr_parts.concat()
    }

    /// Writes CDR parts, antennas, zone and manifest; returns the paths.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>, SynthError> {
        let io = |path: &Path, source| SynthError::Io { path: path.display().to_string(), source };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> Result<(), SynthError> {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| io(&path, e))?;
            written.push(path);
            Ok(())
        };
        for (name, bytes) in self.cdr_file_names().iter().zip(&self.cdr_parts) {
            put(name, bytes)?;
        }
        put(ANTENNA_FILE, self.antennas_csv.as_bytes())?;
        put(ZONE_FILE, self.zone_geojson().as_bytes())?;
        put(MANIFEST_FILE, self.manifest.to_json().as_bytes())?;
        Ok(written)
    }
}

struct Rng(Xoshiro256PlusPlus);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Uniform in `0..n`.
    fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let mut m = u128::from(self.0.next_u64()) * u128::from(n);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = u128::from(self.0.next_u64()) * u128::from(n);
            }
        }
        (m >> 64) as u64
    }

    fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// True with probability `threshold / 2^32`.
    fn chance(&mut self, threshold: u64) -> bool {
        (self.0.next_u64() >> 32) < threshold
    }
}

fn fixed32(p: f64) -> u64 {
    (p * 4_294_967_296.0).round().clamp(0.0, 4_294_967_296.0) as u64
}

fn micro(deg: f64) -> i64 {
    (deg * 1e6).round() as i64
}

fn micro_to_deg(m: i64) -> f64 {
    m as f64 / 1e6
}

fn format_micro(m: i64) -> String {
    let sign = if m < 0 { "-" } else { "" };
    let a = m.unsigned_abs();
    format!("{sign}{}.{:06}", a / 1_000_000, a % 1_000_000)
}

fn isqrt(v: u128) -> u64 {
    if v == 0 {
        return 0;
    }
    let mut x = (v as f64).sqrt() as u128;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x as u64
}

const DECAY_BASE_BITS: u32 = 24;

/// `2^24 * 2^(-d/decay)`, piecewise-linear between halvings.
fn decay_weight(dist: u64, decay: u64) -> u64 {
    let halvings = dist / decay;
    if halvings >= u64::from(DECAY_BASE_BITS) {
        return 0;
    }
    let hi = (1u64 << DECAY_BASE_BITS) >> halvings;
    let lo = hi >> 1;
    hi - (hi - lo) * (dist % decay) / decay
}

struct AntennaSite {
    id: String,
    lat: i64,
    lon: i64,
    endemic: bool,
}

#[derive(Clone, Copy)]
struct Emitted {
    utc: i64,
    caller: u32,
    callee: u32,
    outgoing: bool,
    antenna: u32,
}

/// Generates a dataset. Identical configs produce identical bytes.
pub fn generate(cfg: &SynthConfig) -> Result<GeneratedDataset, SynthError> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);

    // antennas
    let width = digits(cfg.n_antennas);
    let (lat0, lat1) = (micro(cfg.bbox.lat_min), micro(cfg.bbox.lat_max));
    let (lon0, lon1) = (micro(cfg.bbox.lon_min), micro(cfg.bbox.lon_max));
    let sites: Vec<AntennaSite> = (0..cfg.n_antennas)
        .map(|i| {
            let lat = lat0 + rng.below((lat1 - lat0) as u64 + 1) as i64;
            let lon = lon0 + rng.below((lon1 - lon0) as u64 + 1) as i64;
            let endemic = cfg.endemic_zone.contains(GeoPoint::new(micro_to_deg(lat), micro_to_deg(lon)));
            AntennaSite { id: format!("A{i:0width$}"), lat, lon, endemic }
        })
        .collect();
    let endemic_sites: Vec<usize> = (0..sites.len()).filter(|&i| sites[i].endemic).collect();
    let other_sites: Vec<usize> = (0..sites.len()).filter(|&i| !sites[i].endemic).collect();

    // homes
    let n = cfg.n_users;
    let n_endemic = (cfg.endemic_fraction * n as f64).round() as usize;
    if n_endemic > 0 && endemic_sites.is_empty() {
        return Err(infeasible("no antenna fell inside the endemic zone"));
    }
    if n_endemic < n && other_sites.is_empty() {
        return Err(infeasible("no antenna fell outside the endemic zone"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.index(i + 1));
    }
    let mut endemic_user = vec![false; n];
    for &u in &order[..n_endemic] {
        endemic_user[u] = true;
    }
    let home: Vec<usize> = (0..n)
        .map(|u| {
            let pool = if endemic_user[u] { &endemic_sites } else { &other_sites };
            pool[rng.index(pool.len())]
        })
        .collect();

    // per-user antenna pools: home plus 2-3 of the home's nearest antennas
    let dist2 = |a: usize, b: usize| -> u128 {
        let dl = i128::from(sites[a].lat - sites[b].lat);
        let dn = i128::from(sites[a].lon - sites[b].lon);
        (dl * dl + dn * dn) as u128
    };
    let nearest: Vec<Vec<usize>> = (0..sites.len())
        .map(|a| {
            let mut others: Vec<usize> = (0..sites.len()).filter(|&b| b != a).collect();
            others.sort_by_key(|&b| (dist2(a, b), b));
            others.truncate(8);
            others
        })
        .collect();
    let pools: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            let mut near = nearest[home[u]].clone();
            let extra = (2 + rng.index(2)).min(near.len());
            let mut pool = vec![home[u]];
            for k in 0..extra {
                let j = k + rng.index(near.len() - k);
                near.swap(k, j);
                pool.push(near[k]);
            }
            pool
        })
        .collect();

    // social edges
    let mut residents_at: Vec<Vec<u32>> = vec![Vec::new(); sites.len()];
    for u in 0..n {
        residents_at[home[u]].push(u as u32);
    }
    let decay = (micro(cfg.distance_decay) as u64).max(1);
    let bias = ((cfg.endemic_tie_bias * 256.0).round() as u64).max(1);
    let mut rows: Vec<Option<(Vec<u64>, u64)>> = vec![None; sites.len()];
    let mut row_for = |a: usize| -> (Vec<u64>, u64) {
        rows[a]
            .get_or_insert_with(|| {
                let mut cum = Vec::with_capacity(sites.len());
                let mut total = 0u64;
                for (b, site) in sites.iter().enumerate() {
                    let w = residents_at[b].len() as u64
                        * decay_weight(isqrt(dist2(a, b)), decay)
                        * if site.endemic { bias } else { 256 };
                    total += w;
                    cum.push(total);
                }
                (cum, total)
            })
            .clone()
    };
    let mut edges: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut draw_partner = |u: usize, rng: &mut Rng, edges: &mut BTreeSet<(u32, u32)>| -> bool {
        let (cum, total) = row_for(home[u]);
        for _ in 0..32 {
            let x = rng.below(total);
            let b = cum.partition_point(|&c| c <= x);
            let at = &residents_at[b];
            let v = at[rng.index(at.len())] as usize;
            if v == u {
                continue;
            }
            let key = (u.min(v) as u32, u.max(v) as u32);
            if edges.insert(key) {
                return true;
            }
        }
        false
    };
    let half = cfg.mean_degree / 2;
    for u in 0..n {
        let draws = half + u32::from(cfg.mean_degree % 2 == 1 && u % 2 == 1);
        for _ in 0..draws {
            draw_partner(u, &mut rng, &mut edges);
        }
    }
    let mut degree = vec![0u32; n];
    for &(a, b) in &edges {
        degree[a as usize] += 1;
        degree[b as usize] += 1;
    }
    let isolated: Vec<usize> = (0..n).filter(|&u| degree[u] == 0).collect();
    for u in isolated {
        // fall back to a uniform partner if the weighted draw keeps colliding
        if !draw_partner(u, &mut rng, &mut edges) {
            loop {
                let v = rng.index(n);
                if v != u && edges.insert((u.min(v) as u32, u.max(v) as u32)) {
                    break;
                }
            }
        }
    }
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(a, b) in &edges {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }

    // calls
    let offset = FixedOffset::east_opt(cfg.utc_offset_hours * 3600).expect("offset validated");
    let clock = Clock::new(cfg);
    if clock.night.is_empty() {
        return Err(infeasible("observation window contains no weekday night"));
    }
    let affinity = fixed32(cfg.home_night_affinity);
    let day_base = (cfg.calls_per_user_day * f64::from(cfg.n_days)).round() as u64;
    let mut night_calls = vec![0u32; n];
    let mut out: Vec<Emitted> = Vec::new();
    let emit = |out: &mut Vec<Emitted>, t: NaiveDateTime, u: usize, v: usize, au: usize, av: usize| {
        let utc = offset.from_local_datetime(&t).single().expect("fixed offset").timestamp();
        out.push(Emitted { utc, caller: u as u32, callee: v as u32, outgoing: true, antenna: au as u32 });
        out.push(Emitted { utc, caller: u as u32, callee: v as u32, outgoing: false, antenna: av as u32 });
    };
    for u in 0..n {
        let pool = &pools[u];
        let partner = |rng: &mut Rng| adj[u][rng.index(adj[u].len())] as usize;

        let k = cfg.min_night_calls as usize + rng.index(3);
        let antennas = loop {
            let picks: Vec<usize> = (0..k)
                .map(|_| {
                    if pool.len() == 1 || rng.chance(affinity) {
                        0
                    } else {
                        1 + rng.index(pool.len() - 1)
                    }
                })
                .collect();
            let mut counts = vec![0usize; pool.len()];
            for &p in &picks {
                counts[p] += 1;
            }
            if counts[1..].iter().all(|&c| c < counts[0]) {
                break picks;
            }
        };
        for p in antennas {
            let t = clock.night_time(&mut rng);
            let v = partner(&mut rng);
            emit(&mut out, t, u, v, pool[p], home[v]);
            night_calls[u] += 1;
            night_calls[v] += 1;
        }

        let day_calls = rng.below(2 * day_base + 1);
        for _ in 0..day_calls {
            let t = clock.day_time(&mut rng);
            let v = partner(&mut rng);
            let au = pool[rng.index(pool.len())];
            let av = pools[v][rng.index(pools[v].len())];
            emit(&mut out, t, u, v, au, av);
        }

        if !clock.off_nights.is_empty() {
            for _ in 0..rng.index(3) {
                let t = clock.off_night_time(&mut rng);
                let v = partner(&mut rng);
                let au = away(pool, &mut rng);
                let av = away(&pools[v], &mut rng);
                emit(&mut out, t, u, v, au, av);
            }
        }
    }
    out.sort_by_key(|e| (e.utc, e.caller, e.callee, !e.outgoing));

    // render
    let uwidth = digits(n);
    let user_id = |u: u32| format!("u{:0uwidth$}", u);
    let parts = cfg.cdr_parts.min(out.len().max(1));
    let per_part = out.len().div_ceil(parts).max(1);
    let mut cdr_parts = Vec::with_capacity(parts);
    for chunk in out.chunks(per_part) {
        let mut text = String::with_capacity(chunk.len() * 48);
        for e in chunk {
            let local = chrono::DateTime::from_timestamp(e.utc, 0).expect("in range").with_timezone(&offset);
            let _ = writeln!(
                text,
                "{},{},{:04}-{:02}-{:02}T{:02}:{:02}:{:02}{},{},{}",
                user_id(e.caller),
                user_id(e.callee),
                local.year(),
                local.month(),
                local.day(),
                local.hour(),
                local.minute(),
                local.second(),
                offset,
                if e.outgoing { "out" } else { "in" },
                sites[e.antenna as usize].id
            );
        }
        cdr_parts.push(text.into_bytes());
    }
    while cdr_parts.len() < parts {
        cdr_parts.push(Vec::new());
    }

    let mut antennas_csv = String::new();
    for s in &sites {
        let _ = writeln!(antennas_csv, "{},{},{}", s.id, format_micro(s.lat), format_micro(s.lon));
    }

    let manifest = GroundTruthManifest {
        generator: GENERATOR_ID.to_string(),
        seed: cfg.seed,
        start_date: cfg.start_date.to_string(),
        n_days: cfg.n_days,
        records: out.len(),
        users: (0..n)
            .map(|u| ManifestUser {
                id: user_id(u as u32),
                home: sites[home[u]].id.clone(),
                endemic: endemic_user[u],
                night_calls: night_calls[u],
            })
            .collect(),
        antennas: sites
            .iter()
            .enumerate()
            .map(|(i, s)| ManifestAntenna {
                id: s.id.clone(),
                lat: micro_to_deg(s.lat),
                lon: micro_to_deg(s.lon),
                endemic: s.endemic,
                population: residents_at[i].len() as u32,
            })
            .collect(),
        edges: edges.iter().map(|&(a, b)| (user_id(a), user_id(b))).collect(),
    };

    Ok(GeneratedDataset { cdr_parts, antennas_csv, zone: cfg.endemic_zone.clone(), manifest })
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

/// A non-home pool antenna when one exists.
fn away(pool: &[usize], rng: &mut Rng) -> usize {
    if pool.len() == 1 {
        pool[0]
    } else {
        pool[1 + rng.index(pool.len() - 1)]
    }
}

/// Samples local timestamps inside the window by category.
struct Clock {
    start: NaiveDateTime,
    night_cfg: NightWindowConfig,
    n_days: i64,
    /// `(first second, length)` offsets from the window start.
    night: Vec<(i64, i64)>,
    off_nights: Vec<(i64, i64)>,
}

impl Clock {
    fn new(cfg: &SynthConfig) -> Self {
        let start = cfg.start_date.and_hms_opt(0, 0, 0).expect("midnight");
        let n_days = i64::from(cfg.n_days);
        let evening = i64::from(cfg.night.start_hour) * 3600;
        let morning = i64::from(cfg.night.end_hour) * 3600;
        let mut night = Vec::new();
        let mut off_nights = Vec::new();
        for d in 0..n_days {
            let date = cfg.start_date + Duration::days(d);
            let base = d * 86_400;
            if cfg.night.night_days.contains(&date.weekday()) {
                night.push((base + evening, 86_400 - evening));
                if d + 1 < n_days && morning > 0 {
                    night.push((base + 86_400, morning));
                }
            } else {
                off_nights.push((base + evening, 86_400 - evening));
            }
        }
        let check = |slots: Vec<(i64, i64)>, want: bool| -> Vec<(i64, i64)> {
            slots
                .into_iter()
                .filter(|&(s, len)| {
                    len > 0
                        && [s, s + len - 1].iter().all(|&t| is_weekday_night(&(start + Duration::seconds(t)), &cfg.night) == want)
                })
                .collect()
        };
        Self { start, night_cfg: cfg.night.clone(), n_days, night: check(night, true), off_nights: check(off_nights, false) }
    }

    fn pick(&self, slots: &[(i64, i64)], rng: &mut Rng) -> NaiveDateTime {
        let (s, len) = slots[rng.index(slots.len())];
        self.start + Duration::seconds(s + rng.below(len as u64) as i64)
    }

    fn night_time(&self, rng: &mut Rng) -> NaiveDateTime {
        self.pick(&self.night, rng)
    }

    fn off_night_time(&self, rng: &mut Rng) -> NaiveDateTime {
        self.pick(&self.off_nights, rng)
    }

    /// Daytime between the end of one night and the start of the next.
    fn day_time(&self, rng: &mut Rng) -> NaiveDateTime {
        let from = i64::from(self.night_cfg.end_hour) * 3600;
        let to = i64::from(self.night_cfg.start_hour) * 3600;
        loop {
            let d = rng.below(self.n_days as u64) as i64;
            let t = self.start + Duration::seconds(d * 86_400 + from + rng.below((to - from).max(1) as u64) as i64);
            if !is_weekday_night(&t, &self.night_cfg) {
                return t;
            }
        }
    }
}
