//! Three-tier network model: client-cloudlet WLAN, intra-cloudlet LAN and
//! cloudlet-cloud WAN.
//!
//! Links are contention-free pipes: a transfer costs the one-way latency plus
//! its serialization delay, rounded up to the next microsecond.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::types::{ClientId, Micros, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub latency_us: Micros,
    /// Bytes per second; always positive.
    pub bandwidth: u64,
}

impl Link {
    pub fn new(latency_us: Micros, bandwidth: u64) -> Result<Self> {
        if bandwidth == 0 {
            return Err(Error::Topology("link bandwidth must be positive".into()));
        }
        Ok(Link { latency_us, bandwidth })
    }

    pub fn transfer_time(&self, size: u64) -> Micros {
        transfer_time(size, *self)
    }

    pub fn round_trip(&self) -> Micros {
        2 * self.latency_us
    }
}

/// `ceil(numer * 1e6 / rate)` without intermediate overflow.
fn ceil_micros(numer: u64, rate: u64) -> Micros {
    let scaled = numer as u128 * 1_000_000;
    scaled.div_ceil(rate as u128) as Micros
}

pub fn transfer_time(size: u64, link: Link) -> Micros {
    link.latency_us + ceil_micros(size, link.bandwidth)
}

pub fn synthesis_time(overlay_size: u64, topo: &Topology) -> Micros {
    ceil_micros(overlay_size, topo.synthesis_rate)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetConfig {
    pub clients: u32,
    pub cache_nodes: u32,
    /// Explicit client placements; unlisted clients go round-robin.
    pub client_homes: BTreeMap<u32, u32>,
    pub wlan: Link,
    pub lan: Link,
    pub wan: Link,
    /// LAN one-way latency of individual supplier nodes.
    pub lan_latency_overrides: BTreeMap<u32, Micros>,
    pub directory_rtt_us: Micros,
    pub synthesis_rate: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            clients: 4,
            cache_nodes: 2,
            client_homes: BTreeMap::new(),
            wlan: Link { latency_us: 50_000, bandwidth: 2_500_000 },
            lan: Link { latency_us: 500, bandwidth: 100_000_000 },
            wan: Link { latency_us: 150_000, bandwidth: 1_000_000 },
            lan_latency_overrides: BTreeMap::new(),
            directory_rtt_us: 1_000,
            synthesis_rate: 20_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    client_home: Vec<NodeId>,
    num_nodes: u32,
    pub wlan: Link,
    pub lan: Link,
    pub wan: Link,
    lan_overrides: BTreeMap<NodeId, Micros>,
    pub directory_rtt_us: Micros,
    pub synthesis_rate: u64,
}

impl Topology {
    pub fn num_clients(&self) -> u32 {
        self.client_home.len() as u32
    }

    pub fn num_nodes(&self) -> u32 {
        self.num_nodes
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.num_nodes).map(NodeId)
    }

    pub fn home(&self, client: ClientId) -> Option<NodeId> {
        self.client_home.get(client.index()).copied()
    }

    pub fn homes(&self) -> &[NodeId] {
        &self.client_home
    }

    /// LAN link used when `node` supplies an object.
    pub fn lan_from(&self, node: NodeId) -> Link {
        match self.lan_overrides.get(&node) {
            Some(&latency_us) => Link { latency_us, ..self.lan },
            None => self.lan,
        }
    }

    /// True when the cloud is at least as far and as narrow as the LAN.
    pub fn links_in_regime(&self) -> bool {
        self.wan.latency_us >= self.lan.latency_us && self.wan.bandwidth <= self.lan.bandwidth
    }
}

pub fn build_topology(cfg: &NetConfig) -> Result<Topology> {
    let err = |msg: String| Err(Error::Topology(msg));
    if cfg.cache_nodes == 0 {
        return err("the cloudlet needs at least one cache node".into());
    }
    if cfg.synthesis_rate == 0 {
        return err("synthesis_rate must be positive".into());
    }
    for (name, link) in [("wlan", cfg.wlan), ("lan", cfg.lan), ("wan", cfg.wan)] {
        if link.bandwidth == 0 {
            return err(format!("{name} bandwidth must be positive"));
        }
    }
    for (&client, &node) in &cfg.client_homes {
        if client >= cfg.clients {
            return err(format!("client map names client {client}, but there are {} clients", cfg.clients));
        }
        if node >= cfg.cache_nodes {
            return err(format!("client {client} mapped to unknown node {node}"));
        }
    }
    for &node in cfg.lan_latency_overrides.keys() {
        if node >= cfg.cache_nodes {
            return err(format!("latency override for unknown node {node}"));
        }
    }
    let client_home =
        (0..cfg.clients).map(|c| NodeId(cfg.client_homes.get(&c).copied().unwrap_or(c % cfg.cache_nodes))).collect();
    Ok(Topology {
        client_home,
        num_nodes: cfg.cache_nodes,
        wlan: cfg.wlan,
        lan: cfg.lan,
        wan: cfg.wan,
        lan_overrides: cfg.lan_latency_overrides.iter().map(|(&n, &l)| (NodeId(n), l)).collect(),
        directory_rtt_us: cfg.directory_rtt_us,
        synthesis_rate: cfg.synthesis_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn link(latency_us: u64, bandwidth: u64) -> Link {
        Link::new(latency_us, bandwidth).unwrap()
    }

    #[test]
    fn transfer_examples() {
        assert_eq!(transfer_time(0, link(10_000, 5)), 10_000);
        assert_eq!(transfer_time(1_000_000, link(10_000, 1_000_000)), 1_010_000);
        let fast = link(10_000, 1_000_000_000_000);
        assert!(transfer_time(2_000, fast) - transfer_time(1_000, fast) <= 1);
    }

    #[test]
    fn synthesis_examples() {
        let topo = |rate| build_topology(&NetConfig { synthesis_rate: rate, ..NetConfig::default() }).unwrap();
        assert_eq!(synthesis_time(1_000_000, &topo(10_000_000)), 100_000);
        assert_eq!(synthesis_time(1, &topo(10_000_000)), 1);
        assert_eq!(synthesis_time(1, &topo(u64::MAX)), 1);
    }

    #[test]
    fn round_robin_homes() {
        let t = build_topology(&NetConfig { clients: 4, cache_nodes: 2, ..NetConfig::default() }).unwrap();
        assert_eq!(t.homes(), &[NodeId(0), NodeId(1), NodeId(0), NodeId(1)]);
        let t = build_topology(&NetConfig { clients: 3, cache_nodes: 1, ..NetConfig::default() }).unwrap();
        assert!(t.homes().iter().all(|&n| n == NodeId(0)));
    }

    #[test]
    fn explicit_map_honoured() {
        let cfg = NetConfig { clients: 1, cache_nodes: 2, client_homes: [(0, 1)].into(), ..NetConfig::default() };
        assert_eq!(build_topology(&cfg).unwrap().home(ClientId(0)), Some(NodeId(1)));
    }

    #[test]
    fn topology_errors() {
        assert!(build_topology(&NetConfig { cache_nodes: 0, ..NetConfig::default() }).is_err());
        let cfg = NetConfig { clients: 1, cache_nodes: 2, client_homes: [(0, 2)].into(), ..NetConfig::default() };
        assert!(build_topology(&cfg).is_err());
        assert!(Link::new(1, 0).is_err());
    }

    #[test]
    fn default_links_in_regime() {
        assert!(build_topology(&NetConfig::default()).unwrap().links_in_regime());
    }

    proptest! {
        #[test]
        fn transfer_monotone(size in 0u64..1 << 40, extra in 0u64..1 << 20,
                             lat in 0u64..1 << 30, dlat in 0u64..1000,
                             bw in 1u64..1 << 40, dbw in 0u64..1 << 20) {
            let base = transfer_time(size, link(lat, bw));
            prop_assert!(transfer_time(size + extra, link(lat, bw)) >= base);
            prop_assert!(transfer_time(size, link(lat + dlat, bw)) >= base);
            prop_assert!(transfer_time(size, link(lat, bw + dbw)) <= base);
        }
    }
}
