//! Capacity-bounded per-node cache and its replacement policies.
//!
//! Policies other than `Weighted` keep an ordered index of resident entries
//! keyed by their priority, so picking a victim is a `first()` on a
//! `BTreeSet`. The weighted score depends on the current time and on the
//! whole resident set, so it is recomputed by a scan.
//!
//! Every policy breaks ties by the lower object id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use ordered_float::OrderedFloat;

use crate::consistency::Freshness;
use crate::types::{Micros, NodeId, ObjectId};

/// Weights of the combined recency/frequency/cost score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedParams {
    pub recency: f64,
    pub frequency: f64,
    pub cost: f64,
    /// Recency decay constant, microseconds.
    pub tau_us: f64,
}

impl Default for WeightedParams {
    fn default() -> Self {
        WeightedParams { recency: 1.0, frequency: 1.0, cost: 1.0, tau_us: 60_000_000.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum PolicyKind {
    #[default]
    Lru,
    Lfu,
    /// Evict the largest object first.
    Size,
    /// GreedyDual-Size: priority `L + fetch_cost / size`.
    Gds,
    Weighted(WeightedParams),
}

impl PolicyKind {
    pub const NAMES: &'static str = "lru|lfu|size|gds|weighted";

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Lru => "lru",
            PolicyKind::Lfu => "lfu",
            PolicyKind::Size => "size",
            PolicyKind::Gds => "gds",
            PolicyKind::Weighted(_) => "weighted",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    /// `weighted` parses with default weights.
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lru" => Ok(PolicyKind::Lru),
            "lfu" => Ok(PolicyKind::Lfu),
            "size" => Ok(PolicyKind::Size),
            "gds" => Ok(PolicyKind::Gds),
            "weighted" => Ok(PolicyKind::Weighted(WeightedParams::default())),
            _ => Err(format!("expected one of {}, got `{s}`", Self::NAMES)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheEntry {
    pub object_id: ObjectId,
    pub size: u64,
    pub inserted_at: Micros,
    pub last_access: Micros,
    pub access_count: u64,
    /// Cost of re-obtaining the object from its cheapest non-local source,
    /// frozen at insertion.
    pub fetch_cost: Micros,
    pub expires_at: Option<Micros>,
    pub version: u64,
    pub gds_h: f64,
    /// Exempt from eviction.
    pub pinned: bool,
}

impl CacheEntry {
    pub fn new(object_id: ObjectId, size: u64, now: Micros, fetch_cost: Micros) -> Self {
        CacheEntry {
            object_id,
            size,
            inserted_at: now,
            last_access: now,
            access_count: 1,
            fetch_cost,
            expires_at: None,
            version: 0,
            gds_h: 0.0,
            pinned: false,
        }
    }

    fn cost_density(&self) -> f64 {
        self.fetch_cost as f64 / self.size as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Lookup {
    Hit(CacheEntry),
    Miss,
    /// The copy failed the freshness check and has been dropped.
    Stale(CacheEntry),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Insertion {
    /// Stored after evicting these objects, in eviction order.
    Stored { evicted: Vec<ObjectId> },
    /// Larger than the evictable capacity; the cache is untouched.
    Rejected,
}

impl Insertion {
    pub fn evicted(&self) -> &[ObjectId] {
        match self {
            Insertion::Stored { evicted } => evicted,
            Insertion::Rejected => &[],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Rank {
    Int(u64),
    Float(OrderedFloat<f64>),
}

#[derive(Clone, Debug)]
pub struct CacheState {
    node: NodeId,
    capacity: u64,
    used: u64,
    pinned_bytes: u64,
    entries: BTreeMap<ObjectId, CacheEntry>,
    policy: PolicyKind,
    gds_l: f64,
    eviction_count: u64,
    /// Evictable entries ordered by priority; empty under `Weighted`.
    order: BTreeSet<(Rank, ObjectId)>,
}

impl CacheState {
    pub fn new(node: NodeId, capacity: u64, policy: PolicyKind) -> Self {
        CacheState {
            node,
            capacity,
            used: 0,
            pinned_bytes: 0,
            entries: BTreeMap::new(),
            policy,
            gds_l: 0.0,
            eviction_count: 0,
            order: BTreeSet::new(),
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn free_bytes(&self) -> u64 {
        self.capacity - self.used
    }

    pub fn policy(&self) -> &PolicyKind {
        &self.policy
    }

    pub fn gds_l(&self) -> f64 {
        self.gds_l
    }

    pub fn eviction_count(&self) -> u64 {
        self.eviction_count
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn peek(&self, id: ObjectId) -> Option<&CacheEntry> {
        self.entries.get(&id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CacheEntry> {
        self.entries.values()
    }

    /// Sum of resident sizes, recomputed from scratch.
    pub fn recount(&self) -> u64 {
        self.entries.values().map(|e| e.size).sum()
    }

    fn rank(&self, e: &CacheEntry) -> Option<Rank> {
        if e.pinned {
            return None;
        }
        match self.policy {
            PolicyKind::Lru => Some(Rank::Int(e.last_access)),
            PolicyKind::Lfu => Some(Rank::Int(e.access_count)),
            PolicyKind::Size => Some(Rank::Int(u64::MAX - e.size)),
            PolicyKind::Gds => Some(Rank::Float(OrderedFloat(e.gds_h))),
            PolicyKind::Weighted(_) => None,
        }
    }

    fn index(&mut self, e: &CacheEntry) {
        if let Some(r) = self.rank(e) {
            self.order.insert((r, e.object_id));
        }
    }

    fn unindex(&mut self, e: &CacheEntry) {
        if let Some(r) = self.rank(e) {
            self.order.remove(&(r, e.object_id));
        }
    }

    fn gds_priority(&self, e: &CacheEntry) -> f64 {
        self.gds_l + e.cost_density()
    }

    /// Looks `id` up at time `now`. A hit refreshes recency and frequency
    /// (and the GreedyDual priority); a stale copy is removed.
    pub fn lookup(&mut self, id: ObjectId, now: Micros, fresh: Freshness<'_>) -> Lookup {
        let Some(entry) = self.entries.get(&id) else {
            return Lookup::Miss;
        };
        if !fresh.check(entry, now) {
            let stale = self.remove(id).expect("entry present");
            return Lookup::Stale(stale);
        }
        let mut entry = self.entries.remove(&id).expect("entry present");
        self.unindex(&entry);
        entry.last_access = now;
        entry.access_count += 1;
        if self.policy == PolicyKind::Gds {
            entry.gds_h = self.gds_priority(&entry);
        }
        self.index(&entry);
        self.entries.insert(id, entry.clone());
        Lookup::Hit(entry)
    }

    /// Drops `id` without counting an eviction.
    pub fn remove(&mut self, id: ObjectId) -> Option<CacheEntry> {
        let entry = self.entries.remove(&id)?;
        self.unindex(&entry);
        self.used -= entry.size;
        if entry.pinned {
            self.pinned_bytes -= entry.size;
        }
        Some(entry)
    }

    /// Entry the policy would evict next at time `now`. Pinned entries are
    /// never chosen.
    pub fn victim(&self, now: Micros) -> Option<ObjectId> {
        match self.policy {
            PolicyKind::Weighted(w) => self.weighted_victim(&w, now),
            _ => self.order.first().map(|&(_, id)| id),
        }
    }

    fn weighted_victim(&self, w: &WeightedParams, now: Micros) -> Option<ObjectId> {
        let max_density = self.entries.values().map(CacheEntry::cost_density).fold(0.0, f64::max);
        let mut best: Option<(f64, ObjectId)> = None;
        for e in self.entries.values().filter(|e| !e.pinned) {
            let s = weighted_score(w, e, now, max_density);
            // ascending id order: strict < keeps the lower id on ties
            if best.is_none_or(|(b, _)| s < b) {
                best = Some((s, e.object_id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Inserts `candidate`, evicting per policy until it fits. A duplicate
    /// id refreshes the resident entry. The candidate's `gds_h` is assigned
    /// here.
    pub fn insert(&mut self, mut candidate: CacheEntry) -> Insertion {
        assert!(candidate.size > 0, "cache entries need a positive size");
        let id = candidate.object_id;
        let pinned_elsewhere = self.pinned_bytes - self.entries.get(&id).filter(|e| e.pinned).map_or(0, |e| e.size);
        if pinned_elsewhere.saturating_add(candidate.size) > self.capacity {
            return Insertion::Rejected;
        }
        self.remove(id);

        let now = candidate.inserted_at;
        let mut evicted = Vec::new();
        while self.used.saturating_add(candidate.size) > self.capacity {
            let victim = self.victim(now).expect("unpinned bytes cover the shortfall");
            let gone = self.remove(victim).expect("victim is resident");
            if self.policy == PolicyKind::Gds {
                debug_assert!(gone.gds_h >= self.gds_l);
                self.gds_l = gone.gds_h;
            }
            self.eviction_count += 1;
            evicted.push(victim);
        }

        candidate.gds_h = self.gds_priority(&candidate);
        self.used += candidate.size;
        if candidate.pinned {
            self.pinned_bytes += candidate.size;
        }
        self.index(&candidate);
        self.entries.insert(id, candidate);
        Insertion::Stored { evicted }
    }
}

/// Lower scores are evicted first.
pub fn weighted_score(w: &WeightedParams, e: &CacheEntry, now: Micros, max_density: f64) -> f64 {
    let age = now.saturating_sub(e.last_access) as f64;
    let recency = (-age / w.tau_us).exp();
    let frequency = (1.0 + e.access_count as f64).ln();
    let cost = if max_density > 0.0 { e.cost_density() / max_density } else { 0.0 };
    w.recency * recency + w.frequency * frequency + w.cost * cost
}
