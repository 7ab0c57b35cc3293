//! Straight-line reference model of the cloudlet.
//!
//! No event queue, no directory and no priority index: holders are found by
//! scanning every cache, victims by scanning every entry. Shares only the
//! plain data types (catalog, topology, trace, outcome records) with the
//! engine.

use coopcache::consistency::ConsistencyMode;
use coopcache::coop::{DiscoveryMode, DisseminationMode, PlacementRule};
use coopcache::engine::{Breakdown, ByteCounts, RequestOutcome, ServedCopy, SimConfig, Tier};
use coopcache::net::{Link, Topology};
use coopcache::store::PolicyKind;
use coopcache::{Catalog, CatalogObject, Micros, NodeId, ObjectId, ObjectKind, Trace};

pub fn xfer(size: u64, link: Link) -> Micros {
    let num = size as u128 * 1_000_000;
    let bw = link.bandwidth as u128;
    link.latency_us + num.div_ceil(bw) as Micros
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefEntry {
    pub id: u32,
    pub size: u64,
    pub last_access: Micros,
    pub count: u64,
    pub cost: Micros,
    pub expires_at: Option<Micros>,
    pub version: u64,
    pub h: f64,
    pub pinned: bool,
}

impl RefEntry {
    pub fn new(id: u32, size: u64, now: Micros, cost: Micros) -> Self {
        RefEntry { id, size, last_access: now, count: 1, cost, expires_at: None, version: 0, h: 0.0, pinned: false }
    }

    fn density(&self) -> f64 {
        self.cost as f64 / self.size as f64
    }
}

#[derive(Clone, Debug)]
pub struct RefCache {
    pub capacity: u64,
    pub policy: PolicyKind,
    pub entries: Vec<RefEntry>,
    pub l: f64,
    pub evictions: u64,
}

impl RefCache {
    pub fn new(capacity: u64, policy: PolicyKind) -> Self {
        RefCache { capacity, policy, entries: Vec::new(), l: 0.0, evictions: 0 }
    }

    pub fn used(&self) -> u64 {
        self.entries.iter().map(|e| e.size).sum()
    }

    pub fn get(&self, id: u32) -> Option<&RefEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn remove(&mut self, id: u32) -> Option<RefEntry> {
        let i = self.entries.iter().position(|e| e.id == id)?;
        Some(self.entries.remove(i))
    }

    /// Marks a hit on a resident entry.
    pub fn touch(&mut self, id: u32, now: Micros) -> RefEntry {
        let gds = self.policy == PolicyKind::Gds;
        let l = self.l;
        let e = self.entries.iter_mut().find(|e| e.id == id).unwrap();
        e.last_access = now;
        e.count += 1;
        if gds {
            e.h = l + e.density();
        }
        e.clone()
    }

    pub fn victim(&self, now: Micros) -> Option<u32> {
        let candidates = self.entries.iter().filter(|e| !e.pinned);
        let key = |e: &RefEntry| -> f64 {
            match self.policy {
                PolicyKind::Lru => e.last_access as f64,
                PolicyKind::Lfu => e.count as f64,
                PolicyKind::Size => -(e.size as f64),
                PolicyKind::Gds => e.h,
                PolicyKind::Weighted(w) => {
                    let max_d = self.entries.iter().map(RefEntry::density).fold(0.0, f64::max);
                    let age = now.saturating_sub(e.last_access) as f64;
                    let c = if max_d > 0.0 { e.density() / max_d } else { 0.0 };
                    w.recency * (-age / w.tau_us).exp() + w.frequency * (1.0 + e.count as f64).ln() + w.cost * c
                }
            }
        };
        let mut best: Option<(f64, u32)> = None;
        for e in candidates {
            let k = key(e);
            let better = match best {
                None => true,
                Some((bk, bid)) => k < bk || (k == bk && e.id < bid),
            };
            if better {
                best = Some((k, e.id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Returns the evicted ids, or `None` when the candidate cannot fit
    /// beside the pinned bytes.
    pub fn insert(&mut self, mut cand: RefEntry, now: Micros) -> Option<Vec<u32>> {
        let pinned: u64 = self.entries.iter().filter(|e| e.pinned && e.id != cand.id).map(|e| e.size).sum();
        if pinned.saturating_add(cand.size) > self.capacity {
            return None;
        }
        self.remove(cand.id);
        let mut evicted = Vec::new();
        while self.used().saturating_add(cand.size) > self.capacity {
            let v = self.victim(now).unwrap();
            let gone = self.remove(v).unwrap();
            if self.policy == PolicyKind::Gds {
                self.l = gone.h;
            }
            self.evictions += 1;
            evicted.push(v);
        }
        cand.h = self.l + cand.density();
        self.entries.push(cand);
        Some(evicted)
    }
}

pub struct Reference<'a> {
    catalog: &'a Catalog,
    topo: &'a Topology,
    cfg: SimConfig,
    pub caches: Vec<RefCache>,
    versions: Vec<u64>,
    counts: Vec<u64>,
}

#[derive(Default)]
struct Acc {
    lat: Breakdown,
    bytes: ByteCounts,
}

impl<'a> Reference<'a> {
    pub fn new(catalog: &'a Catalog, topo: &'a Topology, cfg: SimConfig) -> Self {
        let caches = (0..topo.num_nodes()).map(|_| RefCache::new(cfg.capacity, cfg.policy)).collect();
        Reference { catalog, topo, cfg, caches, versions: vec![0; catalog.len()], counts: vec![0; catalog.len()] }
    }

    /// Outcomes plus evictions per node.
    pub fn run(&mut self, trace: &Trace) -> (Vec<RequestOutcome>, Vec<u64>) {
        let mut updates = trace.updates.clone();
        updates.sort_by_key(|u| u.time_us);
        let mut next_update = 0;
        let mut out = Vec::new();
        for req in &trace.requests {
            while next_update < updates.len() && updates[next_update].time_us <= req.time_us {
                self.versions[updates[next_update].object.index()] += 1;
                next_update += 1;
            }
            out.push(self.resolve(req.time_us, req.client.0, req.object.0));
        }
        (out, self.caches.iter().map(|c| c.evictions).collect())
    }

    fn fresh(&self, e: &RefEntry, now: Micros) -> bool {
        match self.cfg.consistency {
            ConsistencyMode::Off => true,
            ConsistencyMode::Ttl => match e.expires_at {
                Some(x) => now < x,
                None => true,
            },
            ConsistencyMode::ValidateOnHit => self.versions[e.id as usize] == e.version,
        }
    }

    fn probe(&mut self, node: usize, id: u32, now: Micros, acc: &mut Acc) -> Option<ServedCopy> {
        let e = self.caches[node].get(id)?.clone();
        if self.cfg.consistency == ConsistencyMode::ValidateOnHit {
            acc.lat.validation += 2 * self.topo.wan.latency_us;
        }
        if !self.fresh(&e, now) {
            self.caches[node].remove(id);
            return None;
        }
        let e = self.caches[node].touch(id, now);
        Some(ServedCopy {
            object: ObjectId(id),
            node: NodeId(node as u32),
            version: e.version,
            expires_at: e.expires_at,
        })
    }

    fn peer_fetch(
        &mut self,
        obj: &CatalogObject,
        home: usize,
        now: Micros,
        acc: &mut Acc,
    ) -> Option<(ServedCopy, Micros)> {
        acc.lat.discovery += match self.cfg.discovery {
            DiscoveryMode::Directory => self.topo.directory_rtt_us,
            DiscoveryMode::Broadcast => 2 * self.topo.lan.latency_us,
        };
        let mut peers: Vec<(Micros, usize)> = (0..self.caches.len())
            .filter(|&n| n != home && self.caches[n].get(obj.id.0).is_some())
            .map(|n| (xfer(obj.size, self.topo.lan_from(NodeId(n as u32))), n))
            .collect();
        peers.sort();
        for (lan, n) in peers {
            if let Some(copy) = self.probe(n, obj.id.0, now, acc) {
                acc.lat.lan += lan;
                acc.bytes.lan += obj.size;
                return Some((copy, lan));
            }
        }
        None
    }

    fn target(&self, id: u32, home: usize) -> Option<usize> {
        match self.cfg.dissemination {
            DisseminationMode::ClientInitiated => Some(home),
            DisseminationMode::ServerInitiated { threshold, placement } => {
                if self.counts[id as usize] < threshold {
                    return None;
                }
                Some(match placement {
                    PlacementRule::Requester => home,
                    PlacementRule::LeastLoaded => {
                        let mut best = 0;
                        for n in 1..self.caches.len() {
                            let free = |i: usize| self.caches[i].capacity - self.caches[i].used();
                            if free(n) > free(best) {
                                best = n;
                            }
                        }
                        best
                    }
                })
            }
        }
    }

    fn place(&mut self, node: Option<usize>, obj: &CatalogObject, now: Micros, version: u64, cost: Micros) {
        let Some(node) = node else { return };
        if let Some(e) = self.caches[node].get(obj.id.0) {
            if e.version == version && self.fresh(e, now) {
                return;
            }
        }
        let mut e = RefEntry::new(obj.id.0, obj.size, now, cost);
        e.version = version;
        e.expires_at = obj.ttl_us.map(|t| now + t);
        e.pinned = self.cfg.pin_bases && self.catalog.objects().iter().any(|o| o.base_id == Some(obj.id));
        self.caches[node].insert(e, now);
    }

    fn up(&self, bytes: u64, acc: &mut Acc) -> Micros {
        let t = xfer(bytes, self.topo.wlan);
        acc.lat.wlan_up += t;
        acc.bytes.wlan += bytes;
        t
    }

    fn down(&self, bytes: u64, acc: &mut Acc) {
        acc.lat.wlan_down += xfer(bytes, self.topo.wlan);
        acc.bytes.wlan += bytes;
    }

    fn wan(&self, obj: &CatalogObject, acc: &mut Acc) -> Micros {
        let t = xfer(obj.size, self.topo.wan);
        acc.lat.wan += t;
        acc.bytes.wan += obj.size;
        t
    }

    fn resolve(&mut self, now: Micros, client: u32, id: u32) -> RequestOutcome {
        let catalog = self.catalog;
        let obj = &catalog.objects()[id as usize];
        let home = self.topo.homes()[client as usize].0 as usize;
        self.counts[id as usize] += 1;
        let mut acc = Acc::default();
        self.up(self.cfg.req_msg_bytes, &mut acc);
        let deliver = match obj.kind {
            ObjectKind::Data => obj.size,
            ObjectKind::LaunchVm => self.cfg.resp_bytes,
        };
        let cacheable = obj.kind == ObjectKind::Data || self.cfg.cache_launch_states;

        let (tier, served) = if let Some(copy) = self.probe(home, id, now, &mut acc) {
            self.down(deliver, &mut acc);
            (Tier::LocalHit, Some(copy))
        } else if let Some((copy, lan)) =
            if self.cfg.cooperation { self.peer_fetch(obj, home, now, &mut acc) } else { None }
        {
            self.down(deliver, &mut acc);
            let t = self.target(id, home);
            if self.cfg.replicate_on_coop_hit && cacheable {
                self.place(t, obj, now, copy.version, lan);
            }
            (Tier::CoopHit, Some(copy))
        } else if obj.kind == ObjectKind::Data {
            let cost = self.wan(obj, &mut acc);
            self.down(obj.size, &mut acc);
            let t = self.target(id, home);
            self.place(t, obj, now, self.versions[id as usize], cost);
            (Tier::CloudFetch, None)
        } else {
            let base = &catalog.objects()[obj.base_id.unwrap().index()];
            let mut base_cost = 0;
            let mut base_copy = self.probe(home, base.id.0, now, &mut acc);
            if base_copy.is_none() && self.cfg.cooperation {
                if let Some((c, lan)) = self.peer_fetch(base, home, now, &mut acc) {
                    base_copy = Some(c);
                    base_cost = lan;
                }
            }
            let tier = if base_copy.is_some() {
                Tier::BaseSynthesis
            } else {
                base_cost = self.wan(base, &mut acc);
                self.place(Some(home), base, now, self.versions[base.id.index()], base_cost);
                Tier::CloudFetchWithSynthesis
            };
            let overlay = obj.overlay_size.unwrap();
            let upload = self.up(overlay, &mut acc);
            let synth = {
                let num = overlay as u128 * 1_000_000;
                let r = self.topo.synthesis_rate as u128;
                num.div_ceil(r) as Micros
            };
            acc.lat.synthesis += synth;
            self.down(self.cfg.resp_bytes, &mut acc);
            let t = self.target(id, home);
            if self.cfg.cache_launch_states {
                self.place(t, obj, now, self.versions[id as usize], base_cost + upload + synth);
            }
            (tier, base_copy)
        };

        let lat = acc.lat;
        let total = lat.discovery + lat.lan + lat.wlan_up + lat.wlan_down + lat.wan + lat.synthesis + lat.validation;
        RequestOutcome {
            request: coopcache::Request::new(now, client, id),
            tier,
            latency_total: total,
            breakdown: lat,
            bytes: acc.bytes,
            served,
        }
    }
}
