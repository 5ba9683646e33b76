//! Boolean, undirected client-to-client communication graph.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::CallLog;
use crate::users::{UserId, UserMask, UserTable};

/// One materialized edge-list row: `n_i < n_j`, communicated at least once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeListEntry {
    pub n_i: UserId,
    pub n_j: UserId,
}

impl EdgeListEntry {
    /// Canonical ordering of an unordered pair; `None` for self-loops.
    pub fn new(a: UserId, b: UserId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self { n_i: a, n_j: b }),
            std::cmp::Ordering::Greater => Some(Self { n_i: b, n_j: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    #[inline]
    fn pack(self) -> u64 {
        (u64::from(self.n_i.0) << 32) | u64::from(self.n_j.0)
    }

    #[inline]
    fn unpack(v: u64) -> Self {
        Self { n_i: UserId((v >> 32) as u32), n_j: UserId(v as u32) }
    }
}

/// The client graph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SocialGraph {
    nodes: Vec<UserId>,
    adjacency: Vec<Vec<UserId>>,
    edges: usize,
}

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("edge list line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("edge list line {line}: unknown user {user:?}")]
    UnknownUser { line: usize, user: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const CHUNK: usize = 1 << 16;

/// Builds `G_C`: an edge `{i, j}` exists iff both are clients and some
/// record joins them. Records touching non-clients are ignored.
pub fn build_graph(log: &CallLog, clients: &BTreeSet<UserId>) -> SocialGraph {
    let mask = UserMask::new(log.users.len(), clients);
    let mut pairs: Vec<u64> = log
        .records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut local: Vec<u64> = chunk
                .iter()
                .filter(|r| mask.contains(r.caller) && mask.contains(r.callee))
                .filter_map(|r| EdgeListEntry::new(r.caller, r.callee).map(EdgeListEntry::pack))
                .collect();
            local.sort_unstable();
            local.dedup();
            local
        })
        .flatten_iter()
        .collect();
    pairs.par_sort_unstable();
    pairs.dedup();

    SocialGraph::from_sorted_edges(
        log.users.len(),
        clients.iter().copied().collect(),
        pairs.into_iter().map(EdgeListEntry::unpack),
    )
}

impl SocialGraph {
    /// `edges` must be canonical, sorted and unique; every endpoint must be
    /// in `nodes` (sorted).
    fn from_sorted_edges(universe: usize, nodes: Vec<UserId>, edges: impl Iterator<Item = EdgeListEntry>) -> Self {
        let mut adjacency: Vec<Vec<UserId>> = vec![Vec::new(); universe];
        let mut count = 0;
        for e in edges {
            adjacency[e.n_i.index()].push(e.n_j);
            adjacency[e.n_j.index()].push(e.n_i);
            count += 1;
        }
        debug_assert!(adjacency.iter().all(|a| a.windows(2).all(|w| w[0] < w[1])));
        Self { nodes, adjacency, edges: count }
    }

    /// Graph over `universe` user slots from arbitrary pairs; self-loops and
    /// duplicates are discarded. Nodes are the edge endpoints.
    pub fn from_pairs(universe: usize, pairs: impl IntoIterator<Item = (UserId, UserId)>) -> Self {
        let set: BTreeSet<EdgeListEntry> = pairs.into_iter().filter_map(|(a, b)| EdgeListEntry::new(a, b)).collect();
        let nodes: BTreeSet<UserId> = set.iter().flat_map(|e| [e.n_i, e.n_j]).collect();
        Self::from_sorted_edges(universe, nodes.into_iter().collect(), set.into_iter())
    }

    /// Sorted neighbours of `u`; empty for unknown users.
    pub fn neighbors(&self, u: UserId) -> &[UserId] {
        self.adjacency.get(u.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nodes(&self) -> &[UserId] {
        &self.nodes
    }

    pub fn contains_node(&self, u: UserId) -> bool {
        self.nodes.binary_search(&u).is_ok()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn has_edge(&self, a: UserId, b: UserId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Canonical edges in `(n_i, n_j)` order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeListEntry> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, adj)| {
            let me = UserId(i as u32);
            adj.iter().filter(move |&&v| v > me).map(move |&v| EdgeListEntry { n_i: me, n_j: v })
        })
    }

    /// Writes `n_i,n_j` per line, sorted lexicographically.
    pub fn write_edge_list<W: Write>(&self, users: &UserTable, mut out: W) -> std::io::Result<()> {
        for e in self.edges() {
            writeln!(out, "{},{}", users.name(e.n_i), users.name(e.n_j))?;
        }
        out.flush()
    }

    /// Reads an edge list written by [`write_edge_list`](Self::write_edge_list).
    pub fn read_edge_list<R: BufRead>(users: &UserTable, input: R) -> Result<Self, EdgeListError> {
        let mut pairs = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| EdgeListError::Malformed {
                line: line_no,
                reason: "expected n_i,n_j".into(),
            })?;
            let resolve = |s: &str| {
                users.lookup(s).ok_or_else(|| EdgeListError::UnknownUser { line: line_no, user: s.to_string() })
            };
            let (a, b) = (resolve(a)?, resolve(b)?);
            if a == b {
                return Err(EdgeListError::Malformed { line: line_no, reason: "self-loop".into() });
            }
            pairs.push((a, b));
        }
        Ok(Self::from_pairs(users.len(), pairs))
    }
}
