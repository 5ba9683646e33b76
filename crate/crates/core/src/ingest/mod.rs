//! CDR and antenna file ingestion.
//!
//! Call records arrive as comma-delimited text,
//! `caller_id,callee_id,timestamp,direction,antenna_id`, optionally gzipped.
//! Parsing resolves antenna ids against an [`AntennaRegistry`], interns user
//! ids into a sorted [`UserTable`](crate::UserTable) and counts every dropped
//! line in an [`IngestReport`]. Input may be split into partitions that are
//! parsed in parallel; the merged result does not depend on the partition
//! count.

mod activity;
mod parse;
mod registry;
mod report;

use chrono::{DateTime, FixedOffset};
use thiserror::Error;

use crate::users::UserId;

pub use activity::{filter_users_by_activity, monthly_activity, ActivityFilterConfig, MonthKey};
pub use parse::{parse_cdr_bytes, parse_cdr_sources, parse_cdr_stream, read_source, CallLog, ParseMode, ParseOptions, Source};
pub use registry::{load_antennas, Antenna, AntennaId, AntennaRegistry};
pub use report::IngestReport;

/// Direction of a call relative to the operator's client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Incoming,
    Outgoing,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Incoming => "in",
            Direction::Outgoing => "out",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "in" => Some(Direction::Incoming),
            "out" => Some(Direction::Outgoing),
            _ => None,
        }
    }
}

/// One communication event `<caller, callee, time, direction, antenna>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallRecord {
    pub caller: UserId,
    pub callee: UserId,
    pub timestamp: DateTime<FixedOffset>,
    pub direction: Direction,
    pub antenna: AntennaId,
}

impl CallRecord {
    /// The user whose position the record's antenna reveals: the caller on
    /// outgoing records, the callee on incoming ones.
    #[inline]
    pub fn localized_user(&self) -> UserId {
        match self.direction {
            Direction::Outgoing => self.caller,
            Direction::Incoming => self.callee,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: malformed record: {reason}")]
    MalformedRecord { source_name: String, line: usize, reason: String },
    #[error("{source_name}:{line}: unknown antenna {antenna:?}")]
    UnknownAntenna { source_name: String, line: usize, antenna: String },
    #[error("antenna file line {line}: {reason}")]
    MalformedAntenna { line: usize, reason: String },
    #[error("antenna file line {line}: duplicate antenna id {id:?}")]
    DuplicateAntenna { line: usize, id: String },
    #[error("antenna file line {line}: coordinates of {id:?} out of range ({lat}, {lon})")]
    CoordinateOutOfRange { line: usize, id: String, lat: f64, lon: f64 },
    #[error("invalid activity filter: mu {mu} exceeds cap {m_cap}")]
    InvalidActivityConfig { mu: u32, m_cap: u32 },
}
