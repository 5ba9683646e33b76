//! Home antenna inference from weekday-night calls.
//!
//! A user's home is the antenna that localizes most of their calls inside
//! the night window (by default Monday to Thursday nights, 20:00 to 06:00
//! the next morning). Ties go to the smallest antenna id.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{AntennaId, AntennaRegistry, CallLog};
use crate::users::{UserId, UserMask, UserTable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NightWindowConfig {
    /// First night hour, inclusive.
    pub start_hour: u32,
    /// Morning hour at which the night ends, exclusive.
    pub end_hour: u32,
    /// Days whose evening opens a night window.
    #[serde(with = "weekday_names")]
    pub night_days: Vec<Weekday>,
}

impl Default for NightWindowConfig {
    fn default() -> Self {
        Self {
            start_hour: 20,
            end_hour: 6,
            night_days: vec![Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu],
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NightWindowError {
    #[error("night hour {0} out of range 0..=23")]
    HourOutOfRange(u32),
    #[error("night_days must not be empty")]
    NoNightDays,
}

impl NightWindowConfig {
    pub fn validate(&self) -> Result<(), NightWindowError> {
        for h in [self.start_hour, self.end_hour] {
            if h > 23 {
                return Err(NightWindowError::HourOutOfRange(h));
            }
        }
        if self.night_days.is_empty() {
            return Err(NightWindowError::NoNightDays);
        }
        Ok(())
    }

    fn opens_night(&self, day: Weekday) -> bool {
        self.night_days.contains(&day)
    }
}

/// True iff `t` (local civil time) falls in `[start_hour, 24)` of a night
/// day or in `[0, end_hour)` of the day after one.
pub fn is_weekday_night(t: &NaiveDateTime, cfg: &NightWindowConfig) -> bool {
    let hour = t.hour();
    let day = t.date().weekday();
    (hour >= cfg.start_hour && cfg.opens_night(day)) || (hour < cfg.end_hour && cfg.opens_night(day.pred()))
}

/// Inferred home of one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HomeAssignment {
    pub user: UserId,
    pub home_antenna: AntennaId,
    pub night_calls_at_home: u32,
    pub night_calls_total: u32,
}

const CHUNK: usize = 1 << 16;

/// Night-call histogram keyed by `(user, antenna)`. Only records localizing
/// a client contribute.
pub fn night_histogram(
    log: &CallLog,
    clients: &BTreeSet<UserId>,
    cfg: &NightWindowConfig,
) -> FxHashMap<(UserId, AntennaId), u32> {
    let mask = UserMask::new(log.users.len(), clients);
    log.records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut h: FxHashMap<(UserId, AntennaId), u32> = FxHashMap::default();
            for r in chunk {
                let u = r.localized_user();
                if mask.contains(u) && is_weekday_night(&r.timestamp.naive_local(), cfg) {
                    *h.entry((u, r.antenna)).or_default() += 1;
                }
            }
            h
        })
        .reduce(FxHashMap::default, |mut a, b| {
            let (mut big, small) = if a.len() >= b.len() { (std::mem::take(&mut a), b) } else { (b, a) };
            for (k, v) in small {
                *big.entry(k).or_default() += v;
            }
            big
        })
}

/// Assigns each client with at least one night call the antenna holding the
/// most of them. Clients without night calls get no entry.
pub fn detect_homes(
    log: &CallLog,
    clients: &BTreeSet<UserId>,
    cfg: &NightWindowConfig,
) -> BTreeMap<UserId, HomeAssignment> {
    let mut cells: Vec<((UserId, AntennaId), u32)> = night_histogram(log, clients, cfg).into_iter().collect();
    cells.par_sort_unstable_by_key(|&(k, _)| k);

    let mut homes = BTreeMap::new();
    for group in cells.chunk_by(|a, b| a.0 .0 == b.0 .0) {
        let user = group[0].0 .0;
        let mut best = group[0];
        let mut total = 0;
        for &cell in group {
            total += cell.1;
            // ascending antenna order: strict comparison keeps the smallest id on ties
            if cell.1 > best.1 {
                best = cell;
            }
        }
        homes.insert(
            user,
            HomeAssignment { user, home_antenna: best.0 .1, night_calls_at_home: best.1, night_calls_total: total },
        );
    }
    homes
}

/// Writes `user_id,antenna_id,night_calls_at_home,night_calls_total`, sorted
/// by user id, after a header row.
pub fn write_homes<W: Write>(
    homes: &BTreeMap<UserId, HomeAssignment>,
    users: &UserTable,
    registry: &AntennaRegistry,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "user_id,antenna_id,night_calls_at_home,night_calls_total")?;
    for h in homes.values() {
        writeln!(
            out,
            "{},{},{},{}",
            users.name(h.user),
            registry.antenna(h.home_antenna).id,
            h.night_calls_at_home,
            h.night_calls_total
        )?;
    }
    out.flush()
}

mod weekday_names {
    use chrono::Weekday;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(days: &[Weekday], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(days.iter().map(|d| d.to_string().to_lowercase()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Weekday>, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names
            .iter()
            .map(|n| n.parse::<Weekday>().map_err(|_| serde::de::Error::custom(format!("unknown weekday {n:?}"))))
            .collect()
    }
}
