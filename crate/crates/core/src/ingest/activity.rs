use std::collections::BTreeSet;

use chrono::Datelike;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{CallLog, IngestError};
use crate::users::UserId;

/// Monthly participation bounds. Users are kept when every active month has
/// `mu <= count <= m_cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityFilterConfig {
    pub mu: u32,
    pub m_cap: u32,
}

impl Default for ActivityFilterConfig {
    fn default() -> Self {
        Self { mu: 5, m_cap: 400 }
    }
}

impl ActivityFilterConfig {
    pub fn new(mu: u32, m_cap: u32) -> Result<Self, IngestError> {
        let cfg = Self { mu, m_cap };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.mu > self.m_cap {
            return Err(IngestError::InvalidActivityConfig { mu: self.mu, m_cap: self.m_cap });
        }
        Ok(())
    }
}

/// Calendar month in the record's local time: `year * 12 + month0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthKey(pub i32);

impl MonthKey {
    pub fn of<D: Datelike>(d: &D) -> Self {
        MonthKey(d.year() * 12 + d.month0() as i32)
    }
}

const CHUNK: usize = 1 << 16;

/// Per-(user, month) participation counts. Both caller and callee
/// appearances count.
pub fn monthly_activity(log: &CallLog) -> FxHashMap<(UserId, MonthKey), u32> {
    log.records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut counts: FxHashMap<(UserId, MonthKey), u32> = FxHashMap::default();
            for r in chunk {
                let month = MonthKey::of(&r.timestamp);
                *counts.entry((r.caller, month)).or_default() += 1;
                *counts.entry((r.callee, month)).or_default() += 1;
            }
            counts
        })
        .reduce(FxHashMap::default, |mut a, b| {
            let (mut big, small) = if a.len() >= b.len() { (std::mem::take(&mut a), b) } else { (b, a) };
            for (k, v) in small {
                *big.entry(k).or_default() += v;
            }
            big
        })
}

/// Returns the users whose every active month lies within `[mu, m_cap]`.
pub fn filter_users_by_activity(log: &CallLog, cfg: &ActivityFilterConfig) -> BTreeSet<UserId> {
    let counts = monthly_activity(log);
    let mut ok: FxHashMap<UserId, bool> = FxHashMap::default();
    for (&(user, _), &c) in &counts {
        let within = cfg.mu <= c && c <= cfg.m_cap;
        ok.entry(user).and_modify(|v| *v &= within).or_insert(within);
    }
    ok.into_iter().filter_map(|(u, keep)| keep.then_some(u)).collect()
}
