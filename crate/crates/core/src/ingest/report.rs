use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

/// Line accounting for one ingest run.
///
/// `records_read` counts every non-blank line; each line is either yielded
/// or lands in exactly one `records_dropped_*` counter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub records_read: u64,
    pub records_dropped_malformed: u64,
    pub records_dropped_selfcall: u64,
    pub records_dropped_unknown_antenna: u64,
    pub records_dropped_out_of_window: u64,
    pub users_seen: u64,
    pub users_kept: u64,
}

impl IngestReport {
    pub fn records_dropped(&self) -> u64 {
        self.records_dropped_malformed
            + self.records_dropped_selfcall
            + self.records_dropped_unknown_antenna
            + self.records_dropped_out_of_window
    }

    pub fn records_yielded(&self) -> u64 {
        self.records_read - self.records_dropped()
    }

    /// Flat `key=value` block, one counter per line.
    pub fn to_key_value(&self) -> String {
        format!(
            "records_read={}\nrecords_dropped_malformed={}\nrecords_dropped_selfcall={}\n\
             records_dropped_unknown_antenna={}\nrecords_dropped_out_of_window={}\n\
             users_seen={}\nusers_kept={}\n",
            self.records_read,
            self.records_dropped_malformed,
            self.records_dropped_selfcall,
            self.records_dropped_unknown_antenna,
            self.records_dropped_out_of_window,
            self.users_seen,
            self.users_kept,
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Record counters merge by addition; user counters are recomputed after a
/// merge, so they are left untouched.
impl AddAssign for IngestReport {
    fn add_assign(&mut self, rhs: Self) {
        self.records_read += rhs.records_read;
        self.records_dropped_malformed += rhs.records_dropped_malformed;
        self.records_dropped_selfcall += rhs.records_dropped_selfcall;
        self.records_dropped_unknown_antenna += rhs.records_dropped_unknown_antenna;
        self.records_dropped_out_of_window += rhs.records_dropped_out_of_window;
    }
}
