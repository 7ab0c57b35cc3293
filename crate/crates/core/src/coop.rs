//! Cooperation between the cloudlet's cache nodes: discovery of peer copies,
//! supplier choice and dissemination (what to cache, and where).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::net::{transfer_time, Topology};
use crate::store::CacheState;
use crate::types::{Micros, NodeId, ObjectId};

/// Which nodes hold a copy of each object. Maintained synchronously with
/// every insert, eviction and invalidation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Directory {
    holders: BTreeMap<ObjectId, BTreeSet<NodeId>>,
}

impl Directory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, node: NodeId, id: ObjectId) {
        self.holders.entry(id).or_default().insert(node);
    }

    /// Removing an absent pair is a no-op.
    pub fn remove(&mut self, node: NodeId, id: ObjectId) {
        if let Some(set) = self.holders.get_mut(&id) {
            set.remove(&node);
            if set.is_empty() {
                self.holders.remove(&id);
            }
        }
    }

    pub fn holders(&self, id: ObjectId) -> impl Iterator<Item = NodeId> + '_ {
        self.holders.get(&id).into_iter().flatten().copied()
    }

    /// Rebuilds the directory from the caches themselves.
    pub fn from_caches(caches: &[CacheState]) -> Self {
        let mut dir = Directory::new();
        for cache in caches {
            for e in cache.entries() {
                dir.add(cache.node(), e.object_id);
            }
        }
        dir
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiscoveryMode {
    /// Ask the cloudlet directory: one `directory_rtt`.
    #[default]
    Directory,
    /// Query every peer in parallel: one LAN round trip.
    Broadcast,
}

impl DiscoveryMode {
    pub const NAMES: &'static str = "directory|broadcast";

    pub fn as_str(self) -> &'static str {
        match self {
            DiscoveryMode::Directory => "directory",
            DiscoveryMode::Broadcast => "broadcast",
        }
    }
}

impl fmt::Display for DiscoveryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiscoveryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "directory" => Ok(DiscoveryMode::Directory),
            "broadcast" => Ok(DiscoveryMode::Broadcast),
            _ => Err(format!("expected one of {}, got `{s}`", Self::NAMES)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscoveryResult {
    /// Peers holding a copy; never includes the requesting node.
    pub holders: BTreeSet<NodeId>,
    pub overhead_us: Micros,
}

pub fn discover(
    mode: DiscoveryMode,
    directory: &Directory,
    caches: &[CacheState],
    topo: &Topology,
    id: ObjectId,
    home: NodeId,
) -> DiscoveryResult {
    let (holders, overhead_us) = match mode {
        DiscoveryMode::Directory => (directory.holders(id).collect::<BTreeSet<_>>(), topo.directory_rtt_us),
        DiscoveryMode::Broadcast => {
            (caches.iter().filter(|c| c.contains(id)).map(CacheState::node).collect(), topo.lan.round_trip())
        }
    };
    let holders = holders.into_iter().filter(|&n| n != home).collect();
    DiscoveryResult { holders, overhead_us }
}

/// Holders ordered by LAN delivery time of `size` bytes, then node id.
pub fn rank_suppliers(holders: &BTreeSet<NodeId>, topo: &Topology, size: u64) -> Vec<NodeId> {
    let mut ranked: Vec<NodeId> = holders.iter().copied().collect();
    ranked.sort_by_key(|&n| (transfer_time(size, topo.lan_from(n)), n));
    ranked
}

pub fn select_supplier(holders: &BTreeSet<NodeId>, topo: &Topology, size: u64) -> Option<NodeId> {
    rank_suppliers(holders, topo, size).first().copied()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PlacementRule {
    #[default]
    Requester,
    /// Node with the most free bytes, lowest id on ties.
    LeastLoaded,
}

impl PlacementRule {
    pub const NAMES: &'static str = "requester|least_loaded";

    pub fn as_str(self) -> &'static str {
        match self {
            PlacementRule::Requester => "requester",
            PlacementRule::LeastLoaded => "least_loaded",
        }
    }
}

impl FromStr for PlacementRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "requester" => Ok(PlacementRule::Requester),
            "least_loaded" => Ok(PlacementRule::LeastLoaded),
            _ => Err(format!("expected one of {}, got `{s}`", Self::NAMES)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DisseminationMode {
    /// The requester's home node caches everything it fetches.
    #[default]
    ClientInitiated,
    /// The cloudlet caches an object once its cloudlet-wide access count
    /// reaches `threshold`.
    ServerInitiated { threshold: u64, placement: PlacementRule },
}

impl DisseminationMode {
    pub fn name(&self) -> &'static str {
        match self {
            DisseminationMode::ClientInitiated => "client",
            DisseminationMode::ServerInitiated { .. } => "server",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    CacheAt(NodeId),
    NoCache,
}

/// Cloudlet-wide request counts per object.
#[derive(Clone, Debug, Default)]
pub struct History {
    counts: BTreeMap<ObjectId, u64>,
}

impl History {
    pub fn record(&mut self, id: ObjectId) -> u64 {
        let c = self.counts.entry(id).or_insert(0);
        *c += 1;
        *c
    }

    pub fn count(&self, id: ObjectId) -> u64 {
        self.counts.get(&id).copied().unwrap_or(0)
    }
}

pub fn least_loaded(caches: &[CacheState]) -> NodeId {
    caches
        .iter()
        .min_by_key(|c| (std::cmp::Reverse(c.free_bytes()), c.node()))
        .map(CacheState::node)
        .expect("at least one cache node")
}

/// Placement decision for a request that missed locally. `history` must
/// already include the current request.
pub fn disseminate(
    mode: DisseminationMode,
    history: &History,
    id: ObjectId,
    home: NodeId,
    caches: &[CacheState],
) -> Placement {
    match mode {
        DisseminationMode::ClientInitiated => Placement::CacheAt(home),
        DisseminationMode::ServerInitiated { threshold, placement } => {
            if history.count(id) < threshold {
                return Placement::NoCache;
            }
            match placement {
                PlacementRule::Requester => Placement::CacheAt(home),
                PlacementRule::LeastLoaded => Placement::CacheAt(least_loaded(caches)),
            }
        }
    }
}
