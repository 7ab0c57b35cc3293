//! Event loop and request resolution.
//!
//! A request walks the cloudlet tiers in a fixed order:
//!
//! 1. uplink of the request message to the client's home node;
//! 2. local cache lookup;
//! 3. cooperative discovery and delivery from a peer node;
//! 4. for launch VMs, synthesis from a base image found locally or at a peer;
//! 5. otherwise a WAN fetch from the distant cloud (the base image, followed
//!    by synthesis, for launch VMs);
//! 6. dissemination decides where the fetched object is cached.
//!
//! Requests resolve atomically at their arrival time. Latency is accounting
//! only: it never delays later events.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use crate::consistency::{ConsistencyMode, Freshness, OriginState};
use crate::coop::{self, Directory, DiscoveryMode, DisseminationMode, History, Placement};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::net::{synthesis_time, transfer_time, Topology};
use crate::store::{CacheEntry, CacheState, Insertion, Lookup, PolicyKind};
use crate::types::{Micros, NodeId, ObjectId};
use crate::workload::{Catalog, CatalogObject, ObjectKind, Request, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    LocalHit,
    CoopHit,
    BaseSynthesis,
    CloudFetch,
    CloudFetchWithSynthesis,
}

impl Tier {
    pub const ALL: [Tier; 5] =
        [Tier::LocalHit, Tier::CoopHit, Tier::BaseSynthesis, Tier::CloudFetch, Tier::CloudFetchWithSynthesis];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::LocalHit => "local_hit",
            Tier::CoopHit => "coop_hit",
            Tier::BaseSynthesis => "base_synthesis",
            Tier::CloudFetch => "cloud_fetch",
            Tier::CloudFetchWithSynthesis => "cloud_fetch_with_synthesis",
        }
    }

    /// Whether the distant cloud was contacted for data.
    pub fn uses_wan(self) -> bool {
        matches!(self, Tier::CloudFetch | Tier::CloudFetchWithSynthesis)
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Latency components of one request, microseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Breakdown {
    pub discovery: Micros,
    pub lan: Micros,
    pub wlan_up: Micros,
    pub wlan_down: Micros,
    pub wan: Micros,
    pub synthesis: Micros,
    pub validation: Micros,
}

impl Breakdown {
    pub fn total(&self) -> Micros {
        self.discovery + self.lan + self.wlan_up + self.wlan_down + self.wan + self.synthesis + self.validation
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ByteCounts {
    pub wlan: u64,
    pub lan: u64,
    pub wan: u64,
}

/// The cached copy a response was built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ServedCopy {
    pub object: ObjectId,
    pub node: NodeId,
    pub version: u64,
    pub expires_at: Option<Micros>,
}

impl ServedCopy {
    fn from_entry(node: NodeId, e: &CacheEntry) -> Self {
        ServedCopy { object: e.object_id, node, version: e.version, expires_at: e.expires_at }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequestOutcome {
    pub request: Request,
    pub tier: Tier,
    pub latency_total: Micros,
    pub breakdown: Breakdown,
    pub bytes: ByteCounts,
    /// Cached copy used: the object itself on hits, the base image on
    /// `BaseSynthesis`, none when the cloud supplied the data.
    pub served: Option<ServedCopy>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Per-node capacity in bytes.
    pub capacity: u64,
    pub policy: PolicyKind,
    pub cooperation: bool,
    pub discovery: DiscoveryMode,
    pub dissemination: DisseminationMode,
    pub consistency: ConsistencyMode,
    pub replicate_on_coop_hit: bool,
    pub pin_bases: bool,
    /// When false, synthesized launch-VM states are never cached.
    pub cache_launch_states: bool,
    pub req_msg_bytes: u64,
    pub resp_bytes: u64,
    /// Check cache and directory invariants after every event.
    pub audit: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            capacity: u64::MAX,
            policy: PolicyKind::Lru,
            cooperation: true,
            discovery: DiscoveryMode::Directory,
            dissemination: DisseminationMode::ClientInitiated,
            consistency: ConsistencyMode::Off,
            replicate_on_coop_hit: false,
            pin_bases: false,
            cache_launch_states: true,
            req_msg_bytes: 512,
            resp_bytes: 1024,
            audit: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub outcomes: Vec<RequestOutcome>,
    pub metrics: MetricsReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    OriginUpdate(usize),
    Arrival(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    time: Micros,
    seq: u64,
    kind: EventKind,
}

/// Charges accumulated while a request resolves.
#[derive(Default)]
struct Charges {
    latency: Breakdown,
    bytes: ByteCounts,
}

pub struct Engine<'a> {
    catalog: &'a Catalog,
    topo: &'a Topology,
    cfg: SimConfig,
    caches: Vec<CacheState>,
    directory: Directory,
    origin: OriginState,
    history: History,
}

impl<'a> Engine<'a> {
    pub fn new(catalog: &'a Catalog, topo: &'a Topology, cfg: SimConfig) -> Self {
        let caches = topo.nodes().map(|n| CacheState::new(n, cfg.capacity, cfg.policy)).collect();
        Engine {
            catalog,
            topo,
            cfg,
            caches,
            directory: Directory::new(),
            origin: OriginState::new(catalog),
            history: History::default(),
        }
    }

    pub fn caches(&self) -> &[CacheState] {
        &self.caches
    }

    pub fn directory(&self) -> &Directory {
        &self.directory
    }

    pub fn origin(&self) -> &OriginState {
        &self.origin
    }

    pub fn apply_origin_update(&mut self, id: ObjectId) -> Result<u64> {
        self.origin.apply_update(id)
    }

    /// Verifies byte accounting of every cache and that the directory lists
    /// exactly the resident copies.
    pub fn audit(&self) -> std::result::Result<(), (NodeId, String)> {
        for c in &self.caches {
            let recount = c.recount();
            if recount != c.used() {
                return Err((c.node(), format!("used {} but resident bytes {}", c.used(), recount)));
            }
            if c.used() > c.capacity() {
                return Err((c.node(), format!("used {} exceeds capacity {}", c.used(), c.capacity())));
            }
        }
        if Directory::from_caches(&self.caches) != self.directory {
            return Err((NodeId(0), "directory differs from cache contents".into()));
        }
        Ok(())
    }

    /// Processes the whole trace in `(time, seq)` order. Origin updates get
    /// the lower sequence numbers, so an update takes effect before a
    /// request with the same timestamp.
    pub fn run(mut self, trace: &Trace) -> Result<RunOutput> {
        let mut queue = BinaryHeap::with_capacity(trace.requests.len() + trace.updates.len());
        let mut seq = 0u64;
        for (i, u) in trace.updates.iter().enumerate() {
            queue.push(Reverse(Event { time: u.time_us, seq, kind: EventKind::OriginUpdate(i) }));
            seq += 1;
        }
        for (i, r) in trace.requests.iter().enumerate() {
            queue.push(Reverse(Event { time: r.time_us, seq, kind: EventKind::Arrival(i) }));
            seq += 1;
        }

        let mut outcomes = Vec::with_capacity(trace.requests.len());
        let mut processed = 0usize;
        while let Some(Reverse(event)) = queue.pop() {
            match event.kind {
                EventKind::OriginUpdate(i) => {
                    let id = trace.updates[i].object;
                    self.origin.apply_update(id).map_err(|_| Error::UnknownUpdate { position: i + 1, object: id })?;
                }
                EventKind::Arrival(i) => {
                    outcomes.push(self.resolve_request(&trace.requests[i], i + 1)?);
                }
            }
            processed += 1;
            if self.cfg.audit {
                self.audit().map_err(|(node, msg)| Error::Audit { event: processed, node, msg })?;
            }
        }
        let evictions = self.caches.iter().map(CacheState::eviction_count).collect();
        let metrics = MetricsReport::from_outcomes(&outcomes, evictions);
        Ok(RunOutput { outcomes, metrics })
    }

    fn freshness(&self) -> Freshness<'_> {
        Freshness { mode: self.cfg.consistency, origin: &self.origin }
    }

    /// Freshness-checked lookup at `node`. Validation is charged whenever a
    /// copy exists under `ValidateOnHit`; a stale copy leaves the directory.
    fn lookup_at(&mut self, node: NodeId, id: ObjectId, now: Micros, charges: &mut Charges) -> Option<ServedCopy> {
        let cache = &self.caches[node.index()];
        if !cache.contains(id) {
            return None;
        }
        if self.cfg.consistency.validates() {
            charges.latency.validation += self.topo.wan.round_trip();
        }
        let fresh = Freshness { mode: self.cfg.consistency, origin: &self.origin };
        match self.caches[node.index()].lookup(id, now, fresh) {
            Lookup::Hit(entry) => Some(ServedCopy::from_entry(node, &entry)),
            Lookup::Stale(_) => {
                self.directory.remove(node, id);
                None
            }
            Lookup::Miss => None,
        }
    }

    /// Discovers peer copies of `obj` and pulls the first fresh one over the
    /// LAN, trying suppliers in delivery-time order.
    fn fetch_from_peers(
        &mut self,
        obj: &CatalogObject,
        home: NodeId,
        now: Micros,
        charges: &mut Charges,
    ) -> Option<(ServedCopy, Micros)> {
        let found = coop::discover(self.cfg.discovery, &self.directory, &self.caches, self.topo, obj.id, home);
        charges.latency.discovery += found.overhead_us;
        for supplier in coop::rank_suppliers(&found.holders, self.topo, obj.size) {
            if let Some(copy) = self.lookup_at(supplier, obj.id, now, charges) {
                let lan = transfer_time(obj.size, self.topo.lan_from(supplier));
                charges.latency.lan += lan;
                charges.bytes.lan += obj.size;
                return Some((copy, lan));
            }
        }
        None
    }

    fn wlan_up(&self, bytes: u64, charges: &mut Charges) -> Micros {
        let t = transfer_time(bytes, self.topo.wlan);
        charges.latency.wlan_up += t;
        charges.bytes.wlan += bytes;
        t
    }

    fn wlan_down(&self, bytes: u64, charges: &mut Charges) {
        charges.latency.wlan_down += transfer_time(bytes, self.topo.wlan);
        charges.bytes.wlan += bytes;
    }

    fn wan_fetch(&self, obj: &CatalogObject, charges: &mut Charges) -> Micros {
        let t = transfer_time(obj.size, self.topo.wan);
        charges.latency.wan += t;
        charges.bytes.wan += obj.size;
        t
    }

    /// Overlay upload, synthesis and response downlink. Returns the part of
    /// the cost that recreating the launch state would take.
    fn synthesize(&self, vm: &CatalogObject, charges: &mut Charges) -> Micros {
        let overlay = vm.overlay_size.expect("launch VM has an overlay");
        let upload = self.wlan_up(overlay, charges);
        let synth = synthesis_time(overlay, self.topo);
        charges.latency.synthesis += synth;
        self.wlan_down(self.cfg.resp_bytes, charges);
        upload + synth
    }

    /// Bytes sent to the client when the object is served: the object for
    /// data, the execution response for launch VMs.
    fn delivery_bytes(&self, obj: &CatalogObject) -> u64 {
        match obj.kind {
            ObjectKind::Data => obj.size,
            ObjectKind::LaunchVm => self.cfg.resp_bytes,
        }
    }

    fn is_cacheable(&self, obj: &CatalogObject) -> bool {
        obj.kind != ObjectKind::LaunchVm || self.cfg.cache_launch_states
    }

    fn current_version(&self, id: ObjectId) -> u64 {
        self.origin.version(id).expect("catalog object")
    }

    /// Stores `obj` where `placement` says, unless a fresh copy of the same
    /// version already sits there.
    fn place(&mut self, placement: Placement, obj: &CatalogObject, now: Micros, version: u64, fetch_cost: Micros) {
        let Placement::CacheAt(node) = placement else {
            return;
        };
        let fresh = self.freshness();
        if let Some(e) = self.caches[node.index()].peek(obj.id) {
            if e.version == version && fresh.check(e, now) {
                return;
            }
        }
        let entry = CacheEntry {
            version,
            expires_at: obj.ttl_us.map(|ttl| now + ttl),
            pinned: self.cfg.pin_bases && self.catalog.is_base(obj.id),
            ..CacheEntry::new(obj.id, obj.size, now, fetch_cost)
        };
        if let Insertion::Stored { evicted } = self.caches[node.index()].insert(entry) {
            for id in evicted {
                self.directory.remove(node, id);
            }
            self.directory.add(node, obj.id);
        }
    }

    fn decide(&self, id: ObjectId, home: NodeId) -> Placement {
        coop::disseminate(self.cfg.dissemination, &self.history, id, home, &self.caches)
    }

    /// Resolves one request against the current cloudlet state. `position`
    /// is the 1-based index of the request in its trace, for diagnostics.
    pub fn resolve_request(&mut self, req: &Request, position: usize) -> Result<RequestOutcome> {
        let catalog = self.catalog;
        let obj = catalog.get(req.object).ok_or(Error::UnknownObject {
            position,
            time_us: req.time_us,
            object: req.object,
        })?;
        let home = self.topo.home(req.client).ok_or(Error::UnknownClient {
            position,
            time_us: req.time_us,
            client: req.client,
            clients: self.topo.num_clients(),
        })?;
        let now = req.time_us;
        self.history.record(obj.id);

        let mut charges = Charges::default();
        self.wlan_up(self.cfg.req_msg_bytes, &mut charges);

        let (tier, served) = 'resolve: {
            if let Some(copy) = self.lookup_at(home, obj.id, now, &mut charges) {
                self.wlan_down(self.delivery_bytes(obj), &mut charges);
                break 'resolve (Tier::LocalHit, Some(copy));
            }

            if self.cfg.cooperation {
                if let Some((copy, lan)) = self.fetch_from_peers(obj, home, now, &mut charges) {
                    self.wlan_down(self.delivery_bytes(obj), &mut charges);
                    let placement = self.decide(obj.id, home);
                    if self.cfg.replicate_on_coop_hit && self.is_cacheable(obj) {
                        self.place(placement, obj, now, copy.version, lan);
                    }
                    break 'resolve (Tier::CoopHit, Some(copy));
                }
            }

            match obj.kind {
                ObjectKind::Data => {
                    let wan = self.wan_fetch(obj, &mut charges);
                    self.wlan_down(obj.size, &mut charges);
                    let placement = self.decide(obj.id, home);
                    self.place(placement, obj, now, self.current_version(obj.id), wan);
                    (Tier::CloudFetch, None)
                }
                ObjectKind::LaunchVm => {
                    let base = catalog.get(obj.base_id.expect("launch VM has a base")).expect("validated catalog");
                    let mut base_cost = 0;
                    let mut base_copy = self.lookup_at(home, base.id, now, &mut charges);
                    if base_copy.is_none() && self.cfg.cooperation {
                        if let Some((copy, lan)) = self.fetch_from_peers(base, home, now, &mut charges) {
                            base_copy = Some(copy);
                            base_cost = lan;
                        }
                    }
                    let tier = if base_copy.is_some() {
                        Tier::BaseSynthesis
                    } else {
                        base_cost = self.wan_fetch(base, &mut charges);
                        self.place(Placement::CacheAt(home), base, now, self.current_version(base.id), base_cost);
                        Tier::CloudFetchWithSynthesis
                    };
                    let synth_cost = self.synthesize(obj, &mut charges);
                    let placement = self.decide(obj.id, home);
                    if self.cfg.cache_launch_states {
                        self.place(placement, obj, now, self.current_version(obj.id), base_cost + synth_cost);
                    }
                    (tier, base_copy)
                }
            }
        };

        Ok(RequestOutcome {
            request: *req,
            tier,
            latency_total: charges.latency.total(),
            breakdown: charges.latency,
            bytes: charges.bytes,
            served,
        })
    }
}

/// Runs `trace` from an empty cloudlet.
pub fn run(catalog: &Catalog, topo: &Topology, cfg: SimConfig, trace: &Trace) -> Result<RunOutput> {
    Engine::new(catalog, topo, cfg).run(trace)
}
