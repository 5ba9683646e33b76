//! Brute-force reference implementations.
//!
//! Everything here works from raw text and plain strings, shares no code
//! with the production path, and favours obviousness over speed. The
//! `validate` command and the test suites compare the pipeline against
//! these.

use std::collections::{BTreeMap, BTreeSet};

/// Classification of one raw CDR line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineVerdict {
    Blank,
    Malformed,
    SelfCall,
    UnknownAntenna,
    Valid(RawCall),
}

/// A CDR line split into its textual fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCall {
    pub caller: String,
    pub callee: String,
    /// Local wall-clock fields as written in the timestamp.
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub outgoing: bool,
    pub antenna: String,
}

impl RawCall {
    pub fn localized(&self) -> &str {
        if self.outgoing {
            &self.caller
        } else {
            &self.callee
        }
    }
}

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 0,
    }
}

fn digits(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// `YYYY-MM-DDTHH:MM:SS` followed by `Z` or `±HH:MM`.
fn parse_stamp(s: &str) -> Option<(i32, u32, u32, u32)> {
    if s.len() < 20 || !s.is_ascii() {
        return None;
    }
    let b = s.as_bytes();
    if b[4] != b'-' || b[7] != b'-' || b[10] != b'T' || b[13] != b':' || b[16] != b':' {
        return None;
    }
    let year = digits(&s[0..4])? as i32;
    let month = digits(&s[5..7])?;
    let day = digits(&s[8..10])?;
    let hour = digits(&s[11..13])?;
    let minute = digits(&s[14..16])?;
    let second = digits(&s[17..19])?;
    let zone = &s[19..];
    let zone_ok = zone == "Z"
        || (zone.len() == 6
            && (zone.starts_with('+') || zone.starts_with('-'))
            && &zone[3..4] == ":"
            && digits(&zone[1..3]).is_some_and(|h| h <= 23)
            && digits(&zone[4..6]).is_some_and(|m| m <= 59));
    let ok = zone_ok
        && (1..=12).contains(&month)
        && day >= 1
        && day <= days_in_month(year, month)
        && hour <= 23
        && minute <= 59
        && second <= 59;
    ok.then_some((year, month, day, hour))
}

/// Classifies a line against the set of known antenna ids.
pub fn classify_line(line: &str, antennas: &BTreeSet<String>) -> LineVerdict {
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.trim().is_empty() {
        return LineVerdict::Blank;
    }
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 5 || f.iter().any(|x| x.is_empty()) {
        return LineVerdict::Malformed;
    }
    let Some((year, month, day, hour)) = parse_stamp(f[2]) else {
        return LineVerdict::Malformed;
    };
    let outgoing = match f[3] {
        "out" => true,
        "in" => false,
        _ => return LineVerdict::Malformed,
    };
    if f[0] == f[1] {
        return LineVerdict::SelfCall;
    }
    if !antennas.contains(f[4]) {
        return LineVerdict::UnknownAntenna;
    }
    LineVerdict::Valid(RawCall {
        caller: f[0].to_string(),
        callee: f[1].to_string(),
        year,
        month,
        day,
        hour,
        outgoing,
        antenna: f[4].to_string(),
    })
}

/// Counts per verdict plus the valid calls, in input order.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct LineTally {
    pub read: u64,
    pub malformed: u64,
    pub selfcall: u64,
    pub unknown_antenna: u64,
    pub calls: Vec<RawCall>,
}

pub fn tally_lines(text: &str, antennas: &BTreeSet<String>) -> LineTally {
    let mut t = LineTally::default();
    for line in text.split('\n') {
        match classify_line(line, antennas) {
            LineVerdict::Blank => continue,
            LineVerdict::Malformed => t.malformed += 1,
            LineVerdict::SelfCall => t.selfcall += 1,
            LineVerdict::UnknownAntenna => t.unknown_antenna += 1,
            LineVerdict::Valid(c) => t.calls.push(c),
        }
        t.read += 1;
    }
    t
}

/// Antenna ids listed in an `id,lat,lon` file.
pub fn antenna_ids(text: &str) -> BTreeSet<String> {
    text.lines()
        .filter_map(|l| l.split(',').next())
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().to_string())
        .collect()
}

/// Antenna coordinates from an `id,lat,lon` file.
pub fn antenna_coords(text: &str) -> BTreeMap<String, (f64, f64)> {
    text.lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return None;
            }
            Some((f[0].to_string(), (f[1].parse().ok()?, f[2].parse().ok()?)))
        })
        .collect()
}

/// Users whose every active month has between `mu` and `cap` appearances.
pub fn activity_kept(calls: &[RawCall], mu: u32, cap: u32) -> BTreeSet<String> {
    let mut counts: BTreeMap<(&str, i32, u32), u32> = BTreeMap::new();
    for c in calls {
        *counts.entry((&c.caller, c.year, c.month)).or_default() += 1;
        *counts.entry((&c.callee, c.year, c.month)).or_default() += 1;
    }
    let users: BTreeSet<&str> = counts.keys().map(|k| k.0).collect();
    users
        .into_iter()
        .filter(|u| counts.iter().filter(|(k, _)| k.0 == *u).all(|(_, &c)| mu <= c && c <= cap))
        .map(str::to_string)
        .collect()
}

/// Edge set by scanning every client pair against every call.
pub fn pairwise_edges(calls: &[RawCall], clients: &BTreeSet<String>) -> BTreeSet<(String, String)> {
    let list: Vec<&String> = clients.iter().collect();
    let mut edges = BTreeSet::new();
    for i in 0..list.len() {
        for j in i + 1..list.len() {
            let (a, b) = (list[i], list[j]);
            if calls.iter().any(|c| (&c.caller == a && &c.callee == b) || (&c.caller == b && &c.callee == a)) {
                edges.insert((a.clone(), b.clone()));
            }
        }
    }
    edges
}

/// Day of week for a Gregorian date, 0 = Sunday (Sakamoto).
pub fn day_of_week(year: i32, month: u32, day: u32) -> u32 {
    const T: [i32; 12] = [0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4];
    let y = if month < 3 { year - 1 } else { year };
    ((y + y / 4 - y / 100 + y / 400 + T[month as usize - 1] + day as i32).rem_euclid(7)) as u32
}

/// Monday-to-Thursday nights, 20:00 to 06:00.
pub fn default_night(c: &RawCall) -> bool {
    let dow = day_of_week(c.year, c.month, c.day);
    let evening = c.hour >= 20 && (1..=4).contains(&dow);
    // mornings of Tuesday..Friday close the previous night
    let morning = c.hour < 6 && (2..=5).contains(&dow);
    evening || morning
}

/// Home antenna per client by direct recount of default-night calls.
pub fn recount_homes(calls: &[RawCall], clients: &BTreeSet<String>) -> BTreeMap<String, (String, u32, u32)> {
    let mut per_user: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
    for c in calls.iter().filter(|c| default_night(c)) {
        let u = c.localized();
        if clients.contains(u) {
            *per_user.entry(u.to_string()).or_default().entry(c.antenna.clone()).or_default() += 1;
        }
    }
    per_user
        .into_iter()
        .map(|(u, hist)| {
            let total = hist.values().sum();
            let best = *hist.values().max().expect("non-empty");
            let antenna = hist.iter().find(|(_, &c)| c == best).map(|(a, _)| a.clone()).expect("max exists");
            (u, (antenna, best, total))
        })
        .collect()
}

/// Textbook crossing-number test with an explicit on-edge check.
/// Rings are `(lat, lon)` vertex lists, closed or not.
pub fn crossing_number_contains(rings: &[Vec<(f64, f64)>], lat: f64, lon: f64) -> bool {
    let mut crossings = 0usize;
    for ring in rings {
        let n = ring.len();
        for i in 0..n {
            let (y0, x0) = ring[i];
            let (y1, x1) = ring[(i + 1) % n];
            if (y0, x0) == (y1, x1) {
                continue;
            }
            // on-edge: collinear and inside the segment's extent
            let collinear = (x1 - x0) * (lat - y0) == (lon - x0) * (y1 - y0);
            if collinear && lon >= x0.min(x1) && lon <= x0.max(x1) && lat >= y0.min(y1) && lat <= y0.max(y1) {
                return true;
            }
            let upward = y0 <= lat && y1 > lat;
            let downward = y0 > lat && y1 <= lat;
            if upward || downward {
                let t = (lat - y0) / (y1 - y0);
                if lon < x0 + t * (x1 - x0) {
                    crossings += 1;
                }
            }
        }
    }
    crossings % 2 == 1
}

/// `{u : some neighbour of u is a resident}` by scanning the edge list.
pub fn vulnerable_by_scan(nodes: &[u32], edges: &[(u32, u32)], residents: &BTreeSet<u32>) -> BTreeSet<u32> {
    nodes
        .iter()
        .copied()
        .filter(|&u| {
            edges
                .iter()
                .any(|&(a, b)| (a == u && residents.contains(&b)) || (b == u && residents.contains(&a)))
        })
        .collect()
}

/// `(N, V, C, VC)` per antenna by direct recount.
pub fn recount_indicators(
    antennas: &BTreeSet<String>,
    calls: &[RawCall],
    homes: &BTreeMap<String, String>,
    residents: &BTreeSet<String>,
    vulnerable: &BTreeSet<String>,
) -> BTreeMap<String, (u64, u64, u64, u64)> {
    antennas
        .iter()
        .map(|a| {
            let n = homes.values().filter(|h| *h == a).count() as u64;
            let v = homes.iter().filter(|(u, h)| *h == a && vulnerable.contains(*u)).count() as u64;
            let c = calls.iter().filter(|c| c.outgoing && &c.antenna == a).count() as u64;
            let vc = calls
                .iter()
                .filter(|c| c.outgoing && &c.antenna == a && residents.contains(&c.callee) && homes.contains_key(&c.callee))
                .count() as u64;
            (a.clone(), (n, v, c, vc))
        })
        .collect()
}

/// Literal reading of the plotting rule on `(id, N, V)` rows.
pub fn filter_rows(rows: &[(String, u64, u64)], beta: f64, min_volume: u64) -> Vec<String> {
    rows.iter()
        .filter(|(_, n, v)| *n > 0 && *n > min_volume && (*v as f64) / (*n as f64) > beta)
        .map(|(id, _, _)| id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sakamoto_matches_known_dates() {
        assert_eq!(day_of_week(2011, 11, 7), 1); // Monday
        assert_eq!(day_of_week(2000, 2, 29), 2); // Tuesday
        assert_eq!(day_of_week(2024, 1, 7), 0); // Sunday
    }

    #[test]
    fn stamp_validation() {
        assert!(parse_stamp("2011-11-07T21:15:00-03:00").is_some());
        assert!(parse_stamp("2011-02-29T21:15:00-03:00").is_none());
        assert!(parse_stamp("2011-11-07 21:15:00-03:00").is_none());
        assert!(parse_stamp("2011-11-07T21:15:00").is_none());
        assert!(parse_stamp("2011-11-07T21:15:00Z").is_some());
    }

    #[test]
    fn crossing_number_square() {
        let sq = vec![vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]];
        assert!(crossing_number_contains(&sq, 0.5, 0.5));
        assert!(crossing_number_contains(&sq, 0.0, 0.5));
        assert!(!crossing_number_contains(&sq, 1.5, 0.5));
    }
}
