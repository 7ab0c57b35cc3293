//! Randomized small cloudlet scenarios.

use std::collections::BTreeMap;

use coopcache::coop::{DiscoveryMode, DisseminationMode, PlacementRule};
use coopcache::net::{build_topology, NetConfig};
use coopcache::store::WeightedParams;
use coopcache::workload::OriginUpdate;
use coopcache::{
    Catalog, CatalogObject, ConsistencyMode, Link, ObjectId, PolicyKind, Request, SimConfig, Topology, Trace,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Scenario {
    pub catalog: Catalog,
    pub topo: Topology,
    pub sim: SimConfig,
    pub trace: Trace,
}

pub const POLICIES: usize = 5;
pub const DISCOVERIES: usize = 2;
pub const DISSEMINATIONS: usize = 3;
pub const CONSISTENCIES: usize = 3;
pub const COMBINATIONS: usize = POLICIES * DISCOVERIES * DISSEMINATIONS * CONSISTENCIES;

pub fn policy(i: usize, rng: &mut ChaCha8Rng) -> PolicyKind {
    match i {
        0 => PolicyKind::Lru,
        1 => PolicyKind::Lfu,
        2 => PolicyKind::Size,
        3 => PolicyKind::Gds,
        _ => PolicyKind::Weighted(WeightedParams {
            recency: rng.random_range(0.0..2.0),
            frequency: rng.random_range(0.0..2.0),
            cost: rng.random_range(0.0..2.0),
            tau_us: rng.random_range(10.0..5_000.0),
        }),
    }
}

fn catalog(rng: &mut ChaCha8Rng) -> Catalog {
    let n = rng.random_range(1..=10u32);
    let vms = if n >= 3 && rng.random_bool(0.5) { rng.random_range(1..=n / 3) } else { 0 };
    let bases = if vms > 0 { rng.random_range(1..=vms.min(2)) } else { 0 };
    let data = n - vms - bases;
    let ttl = rng.random_bool(0.6).then(|| rng.random_range(1..400u64));
    let mut objects = Vec::new();
    for id in 0..data + bases {
        let size = if id >= data { rng.random_range(200..=400) } else { rng.random_range(1..=300) };
        objects.push(CatalogObject::data(id, size));
    }
    for k in 0..vms {
        let base = data + k % bases;
        let base_size = objects[base as usize].size;
        let overlay = rng.random_range(1..base_size);
        objects.push(CatalogObject::launch_vm(data + bases + k, rng.random_range(200..=500), base, overlay));
    }
    let objects = objects
        .into_iter()
        .map(|o| match ttl {
            Some(t) if rng.random_bool(0.8) => o.with_ttl(t),
            _ => o,
        })
        .collect();
    Catalog::from_objects(objects).unwrap()
}

fn topology(clients: u32, nodes: u32, rng: &mut ChaCha8Rng) -> Topology {
    let mut overrides = BTreeMap::new();
    for n in 0..nodes {
        if rng.random_bool(0.3) {
            overrides.insert(n, rng.random_range(0..50));
        }
    }
    let mut homes = BTreeMap::new();
    for c in 0..clients {
        if rng.random_bool(0.3) {
            homes.insert(c, rng.random_range(0..nodes));
        }
    }
    build_topology(&NetConfig {
        clients,
        cache_nodes: nodes,
        client_homes: homes,
        wlan: Link { latency_us: rng.random_range(0..100), bandwidth: rng.random_range(100..5_000_000) },
        lan: Link { latency_us: rng.random_range(0..30), bandwidth: rng.random_range(1_000..10_000_000) },
        wan: Link { latency_us: rng.random_range(0..500), bandwidth: rng.random_range(100..1_000_000) },
        lan_latency_overrides: overrides,
        directory_rtt_us: rng.random_range(0..200),
        synthesis_rate: rng.random_range(1_000..5_000_000),
    })
    .unwrap()
}

fn trace(catalog: &Catalog, clients: u32, len: usize, updates: bool, rng: &mut ChaCha8Rng) -> Trace {
    let ids: Vec<u32> = (0..catalog.len() as u32).collect();
    let mut t = 0;
    let mut requests = Vec::with_capacity(len);
    for _ in 0..len {
        t += rng.random_range(0..40);
        requests.push(Request::new(t, rng.random_range(0..clients), *ids.choose(rng).unwrap()));
    }
    let mut trace = Trace::new(requests);
    if updates {
        for _ in 0..rng.random_range(0..=len / 4) {
            trace
                .updates
                .push(OriginUpdate { time_us: rng.random_range(0..=t), object: ObjectId(*ids.choose(rng).unwrap()) });
        }
        trace.updates.sort_by_key(|u| (u.time_us, u.object));
    }
    trace
}

/// Scenario `index`; its policy, discovery, dissemination and consistency
/// cycle through every combination as `index` advances.
pub fn scenario(seed: u64, index: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(index as u64));
    let combo = index % COMBINATIONS;
    let (p, rest) = (combo % POLICIES, combo / POLICIES);
    let (d, rest) = (rest % DISCOVERIES, rest / DISCOVERIES);
    let (s, c) = (rest % DISSEMINATIONS, rest / DISSEMINATIONS);

    let catalog = catalog(&mut rng);
    let nodes = rng.random_range(1..=3);
    let clients = rng.random_range(1..=5);
    let topo = topology(clients, nodes, &mut rng);
    let threshold = if rng.random_bool(0.1) { u64::MAX } else { rng.random_range(1..=3) };
    let sim = SimConfig {
        capacity: if rng.random_bool(0.15) { u64::MAX } else { rng.random_range(1..=1_500) },
        policy: policy(p, &mut rng),
        cooperation: rng.random_bool(0.8),
        discovery: [DiscoveryMode::Directory, DiscoveryMode::Broadcast][d],
        dissemination: match s {
            0 => DisseminationMode::ClientInitiated,
            1 => DisseminationMode::ServerInitiated { threshold, placement: PlacementRule::Requester },
            _ => DisseminationMode::ServerInitiated { threshold, placement: PlacementRule::LeastLoaded },
        },
        consistency: [ConsistencyMode::Off, ConsistencyMode::Ttl, ConsistencyMode::ValidateOnHit][c],
        replicate_on_coop_hit: rng.random_bool(0.5),
        pin_bases: rng.random_bool(0.4),
        cache_launch_states: rng.random_bool(0.8),
        req_msg_bytes: rng.random_range(1..600),
        resp_bytes: rng.random_range(1..600),
        audit: true,
    };
    let len = rng.random_range(0..=100);
    let trace = trace(&catalog, clients, len, true, &mut rng);
    Scenario { catalog, topo, sim, trace }
}
