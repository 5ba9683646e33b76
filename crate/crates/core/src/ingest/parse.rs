use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate};
use flate2::read::GzDecoder;
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::{AntennaId, AntennaRegistry, CallRecord, Direction, IngestError, IngestReport};
use crate::users::{UserId, UserTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Fail on the first malformed line or unknown antenna.
    Strict,
    /// Count and skip bad lines.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOptions {
    pub mode: ParseMode,
    /// Half-open local-date window `[start, end)`; records outside are dropped.
    pub window: Option<(NaiveDate, NaiveDate)>,
    /// Number of line-aligned partitions each source is split into.
    pub partitions: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { mode: ParseMode::Lenient, window: None, partitions: 1 }
    }
}

impl ParseOptions {
    pub fn strict() -> Self {
        Self { mode: ParseMode::Strict, ..Self::default() }
    }

    pub fn with_partitions(mut self, partitions: usize) -> Self {
        self.partitions = partitions;
        self
    }
}

/// One named input, already decompressed.
#[derive(Debug, Clone)]
pub struct Source {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Reads a CDR file, transparently gunzipping `*.gz`.
pub fn read_source(path: &Path) -> Result<Source, IngestError> {
    let io = |source| IngestError::Io { path: path.display().to_string(), source };
    let mut file = File::open(path).map_err(io)?;
    let mut bytes = Vec::new();
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(file).read_to_end(&mut bytes).map_err(io)?;
    } else {
        file.read_to_end(&mut bytes).map_err(io)?;
    }
    Ok(Source { name: path.display().to_string(), bytes })
}

/// Clean, interned call records plus the ingest accounting.
#[derive(Debug, Clone)]
pub struct CallLog {
    pub users: UserTable,
    pub records: Vec<CallRecord>,
    pub report: IngestReport,
}

impl CallLog {
    /// Looks up a user by its hashed identifier.
    pub fn user(&self, name: &str) -> Option<UserId> {
        self.users.lookup(name)
    }
}

/// Parses a single CDR stream.
pub fn parse_cdr_stream<R: Read>(
    mut source: R,
    registry: &AntennaRegistry,
    opts: &ParseOptions,
) -> Result<CallLog, IngestError> {
    let mut bytes = Vec::new();
    source
        .read_to_end(&mut bytes)
        .map_err(|source| IngestError::Io { path: "<stream>".into(), source })?;
    parse_cdr_bytes(&bytes, registry, opts)
}

pub fn parse_cdr_bytes(bytes: &[u8], registry: &AntennaRegistry, opts: &ParseOptions) -> Result<CallLog, IngestError> {
    parse_segments(&[("<stream>", bytes)], registry, opts)
}

/// Parses several sources as if they were concatenated in order.
pub fn parse_cdr_sources(
    sources: &[Source],
    registry: &AntennaRegistry,
    opts: &ParseOptions,
) -> Result<CallLog, IngestError> {
    let segments: Vec<(&str, &[u8])> = sources.iter().map(|s| (s.name.as_str(), s.bytes.as_slice())).collect();
    parse_segments(&segments, registry, opts)
}

struct Chunk<'a> {
    source_name: &'a str,
    bytes: &'a [u8],
    first_line: usize,
}

#[derive(Clone, Copy)]
struct RawRecord {
    caller: u32,
    callee: u32,
    timestamp: DateTime<FixedOffset>,
    direction: Direction,
    antenna: AntennaId,
}

struct ChunkOutput<'a> {
    names: Vec<&'a str>,
    records: Vec<RawRecord>,
    report: IngestReport,
}

fn parse_segments(
    segments: &[(&str, &[u8])],
    registry: &AntennaRegistry,
    opts: &ParseOptions,
) -> Result<CallLog, IngestError> {
    let parts = opts.partitions.max(1);
    let mut chunks = Vec::new();
    for &(name, bytes) in segments {
        split_lines(name, bytes, parts, &mut chunks);
    }

    let outputs: Vec<Result<ChunkOutput<'_>, IngestError>> =
        chunks.par_iter().map(|c| parse_chunk(c, registry, opts)).collect();
    let outputs = outputs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut all_names: Vec<&str> = outputs.iter().flat_map(|o| o.names.iter().copied()).collect();
    all_names.par_sort_unstable();
    all_names.dedup();

    let total: usize = outputs.iter().map(|o| o.records.len()).sum();
    let mut records = Vec::with_capacity(total);
    let mut report = IngestReport::default();
    for out in &outputs {
        let remap: Vec<u32> = out
            .names
            .iter()
            .map(|n| all_names.binary_search(n).expect("name interned") as u32)
            .collect();
        records.extend(out.records.iter().map(|r| CallRecord {
            caller: UserId(remap[r.caller as usize]),
            callee: UserId(remap[r.callee as usize]),
            timestamp: r.timestamp,
            direction: r.direction,
            antenna: r.antenna,
        }));
        report += out.report;
    }
    report.users_seen = all_names.len() as u64;

    let users = UserTable::from_sorted_unchecked(all_names.into_iter().map(str::to_owned).collect());
    Ok(CallLog { users, records, report })
}

/// Splits `bytes` into at most `parts` pieces that end on line boundaries.
fn split_lines<'a>(name: &'a str, bytes: &'a [u8], parts: usize, out: &mut Vec<Chunk<'a>>) {
    let target = bytes.len().div_ceil(parts).max(1);
    let mut start = 0;
    let mut line = 1;
    while start < bytes.len() {
        let mut end = (start + target).min(bytes.len());
        if end < bytes.len() {
            end = match bytes[end - 1..].iter().position(|&b| b == b'\n') {
                Some(p) => end + p,
                None => bytes.len(),
            };
        }
        let piece = &bytes[start..end];
        out.push(Chunk { source_name: name, bytes: piece, first_line: line });
        line += piece.iter().filter(|&&b| b == b'\n').count();
        start = end;
    }
}

fn parse_chunk<'a>(
    chunk: &Chunk<'a>,
    registry: &AntennaRegistry,
    opts: &ParseOptions,
) -> Result<ChunkOutput<'a>, IngestError> {
    let mut interner: FxHashMap<&'a str, u32> = FxHashMap::default();
    let mut names: Vec<&'a str> = Vec::new();
    let mut records = Vec::new();
    let mut report = IngestReport::default();
    let mut intern = |s: &'a str| -> u32 {
        *interner.entry(s).or_insert_with(|| {
            names.push(s);
            (names.len() - 1) as u32
        })
    };

    for (offset, raw) in chunk.bytes.split(|&b| b == b'\n').enumerate() {
        let line_no = chunk.first_line + offset;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        report.records_read += 1;

        let line = match parse_line(raw) {
            Ok(line) => line,
            Err(reason) => {
                if opts.mode == ParseMode::Strict {
                    return Err(IngestError::MalformedRecord {
                        source_name: chunk.source_name.to_string(),
                        line: line_no,
                        reason,
                    });
                }
                report.records_dropped_malformed += 1;
                continue;
            }
        };

        if line.caller == line.callee {
            report.records_dropped_selfcall += 1;
            continue;
        }
        let Some(antenna) = registry.lookup(line.antenna) else {
            if opts.mode == ParseMode::Strict {
                return Err(IngestError::UnknownAntenna {
                    source_name: chunk.source_name.to_string(),
                    line: line_no,
                    antenna: line.antenna.to_string(),
                });
            }
            report.records_dropped_unknown_antenna += 1;
            continue;
        };
        if let Some((start, end)) = opts.window {
            let day = line.timestamp.date_naive();
            if day < start || day >= end {
                report.records_dropped_out_of_window += 1;
                continue;
            }
        }
        records.push(RawRecord {
            caller: intern(line.caller),
            callee: intern(line.callee),
            timestamp: line.timestamp,
            direction: line.direction,
            antenna,
        });
    }
    Ok(ChunkOutput { names, records, report })
}

struct ParsedLine<'a> {
    caller: &'a str,
    callee: &'a str,
    timestamp: DateTime<FixedOffset>,
    direction: Direction,
    antenna: &'a str,
}

fn parse_line(raw: &[u8]) -> Result<ParsedLine<'_>, String> {
    let text = std::str::from_utf8(raw).map_err(|_| "invalid UTF-8".to_string())?;
    let mut fields = text.split(',');
    let mut next = |what: &str| -> Result<&str, String> {
        match fields.next() {
            Some(f) if !f.is_empty() => Ok(f),
            Some(_) => Err(format!("empty {what}")),
            None => Err(format!("missing {what}")),
        }
    };
    let caller = next("caller_id")?;
    let callee = next("callee_id")?;
    let ts = next("timestamp")?;
    let dir = next("direction")?;
    let antenna = next("antenna_id")?;
    if fields.next().is_some() {
        return Err("too many fields".into());
    }
    let timestamp = DateTime::parse_from_rfc3339(ts).map_err(|e| format!("bad timestamp {ts:?}: {e}"))?;
    let direction = Direction::parse(dir).ok_or_else(|| format!("bad direction {dir:?}"))?;
    Ok(ParsedLine { caller, callee, timestamp, direction, antenna })
}
