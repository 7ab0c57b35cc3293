//! Run configuration: a flat `key = value` format grouped by `[section]`
//! headers.
//!
//! ```text
//! [run]
//! seed = 7
//!
//! [cache]
//! policy = gds
//! capacity = 10%
//! ```
//!
//! Unknown sections and keys are errors. Every key has a default except
//! `run.seed`. [`RunConfig::echo`] writes the fully resolved configuration
//! back out in the same format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::consistency::ConsistencyMode;
use crate::coop::{DiscoveryMode, DisseminationMode, PlacementRule};
use crate::engine::SimConfig;
use crate::net::NetConfig;
use crate::store::{PolicyKind, WeightedParams};
use crate::types::Micros;
use crate::workload::{CatalogSpec, SizeDist, WorkloadSpec};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value` or `[section]`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { line: usize, section: String },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { at: String, key: String },
    #[error("{at}: `{key}`: {msg}")]
    Value { at: String, key: String, msg: String },
    #[error("line {line}: `{key}` is set twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("`{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Per-node cache capacity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Capacity {
    Bytes(u64),
    /// Percentage of the total catalog bytes.
    CatalogPercent(f64),
    Infinite,
}

impl Capacity {
    pub fn resolve(&self, catalog_bytes: u64) -> u64 {
        match *self {
            Capacity::Bytes(b) => b,
            Capacity::CatalogPercent(p) => (catalog_bytes as f64 * p / 100.0).floor() as u64,
            Capacity::Infinite => u64::MAX,
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Bytes(b) => write!(f, "{b}"),
            Capacity::CatalogPercent(p) => write!(f, "{p}%"),
            Capacity::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Capacity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "inf" {
            return Ok(Capacity::Infinite);
        }
        if let Some(p) = s.strip_suffix('%') {
            let p: f64 = p.trim().parse().map_err(|_| format!("bad percentage `{s}`"))?;
            if !(p > 0.0 && p <= 100.0) {
                return Err(format!("percentage must be in (0, 100], got {p}"));
            }
            return Ok(Capacity::CatalogPercent(p));
        }
        s.parse().map(Capacity::Bytes).map_err(|_| format!("expected bytes, `P%` or `inf`, got `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DisseminationKind {
    #[default]
    Client,
    Server,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub audit: bool,
    pub catalog: CatalogSpec,
    /// Where to dump the generated catalog, if anywhere.
    pub catalog_dump: Option<PathBuf>,
    pub workload: WorkloadSpec,
    /// Replay this trace instead of generating one.
    pub trace: Option<PathBuf>,
    pub net: NetConfig,
    pub req_msg_bytes: u64,
    pub resp_bytes: u64,
    pub allow_odd_links: bool,
    pub capacity: Capacity,
    pub policy: PolicyKind,
    pub weights: WeightedParams,
    pub pin_bases: bool,
    pub cache_launch_states: bool,
    pub cooperation: bool,
    pub discovery: DiscoveryMode,
    pub dissemination: DisseminationKind,
    /// `u64::MAX` means never.
    pub server_threshold: u64,
    pub placement: PlacementRule,
    pub replicate_on_coop_hit: bool,
    pub consistency: ConsistencyMode,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        RunConfig {
            seed: 0,
            audit: false,
            catalog: CatalogSpec::default(),
            catalog_dump: None,
            workload: WorkloadSpec::default(),
            trace: None,
            net: NetConfig::default(),
            req_msg_bytes: sim.req_msg_bytes,
            resp_bytes: sim.resp_bytes,
            allow_odd_links: false,
            capacity: Capacity::CatalogPercent(10.0),
            policy: PolicyKind::Lru,
            weights: WeightedParams::default(),
            pin_bases: sim.pin_bases,
            cache_launch_states: sim.cache_launch_states,
            cooperation: sim.cooperation,
            discovery: sim.discovery,
            dissemination: DisseminationKind::Client,
            server_threshold: 2,
            placement: PlacementRule::Requester,
            replicate_on_coop_hit: sim.replicate_on_coop_hit,
            consistency: sim.consistency,
            output_dir: PathBuf::from("out"),
        }
    }
}

const SECTIONS: &[&str] = &["run", "catalog", "workload", "network", "cache", "coop", "consistency", "output"];

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(format!("expected true|false|on|off, got `{v}`")),
    }
}

fn parse_num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn parse_float(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got `{v}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got `{v}`"))
    }
}

fn parse_opt<T>(v: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, String> {
    if v == "none" || v.is_empty() {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

fn parse_pairs(v: &str) -> Result<BTreeMap<u32, u64>, String> {
    let mut out = BTreeMap::new();
    if v == "none" || v.is_empty() {
        return Ok(out);
    }
    for pair in v.split(',') {
        let (a, b) = pair.split_once(':').ok_or_else(|| format!("expected `a:b` pairs, got `{pair}`"))?;
        let a: u32 = parse_num(a.trim())?;
        if out.insert(a, parse_num(b.trim())?).is_some() {
            return Err(format!("`{a}` listed twice"));
        }
    }
    Ok(out)
}

fn fmt_pairs<V: fmt::Display>(m: &BTreeMap<u32, V>) -> String {
    if m.is_empty() {
        return "none".into();
    }
    m.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(",")
}

fn fmt_opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

fn fmt_threshold(k: u64) -> String {
    if k == u64::MAX {
        "inf".into()
    } else {
        k.to_string()
    }
}

impl RunConfig {
    /// Assigns one `section.key`. Shared by the file parser, command-line
    /// overrides and sweep axes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        let v = value.trim();
        let r: Result<(), String> = (|| {
            match key {
                "run.seed" => self.seed = parse_num(v)?,
                "run.audit" => self.audit = parse_bool(v)?,

                "catalog.data_objects" => self.catalog.data_objects = parse_num(v)?,
                "catalog.launch_vms" => self.catalog.launch_vms = parse_num(v)?,
                "catalog.base_images" => self.catalog.base_images = parse_num(v)?,
                "catalog.data_size" => self.catalog.data_size = v.parse::<SizeDist>()?,
                "catalog.base_size" => self.catalog.base_size = v.parse::<SizeDist>()?,
                "catalog.vm_size" => self.catalog.vm_size = v.parse::<SizeDist>()?,
                "catalog.overlay_size" => self.catalog.overlay_size = v.parse::<SizeDist>()?,
                "catalog.ttl_us" => self.catalog.ttl_us = parse_opt(v, parse_num)?,
                "catalog.dump" => self.catalog_dump = parse_opt(v, |s| Ok(PathBuf::from(s)))?,

                "workload.trace" => self.trace = parse_opt(v, |s| Ok(PathBuf::from(s)))?,
                "workload.clients" => self.workload.clients = parse_num(v)?,
                "workload.rate" => self.workload.rate_per_sec = parse_float(v)?,
                "workload.duration_s" => {
                    let s = parse_float(v)?;
                    if s < 0.0 {
                        return Err("duration must not be negative".into());
                    }
                    self.workload.duration_us = (s * 1e6).round() as Micros;
                }
                "workload.zipf_alpha" => self.workload.zipf_alpha = parse_float(v)?,
                "workload.per_client_permutation" => self.workload.per_client_permutation = parse_bool(v)?,

                "network.cache_nodes" => self.net.cache_nodes = parse_num(v)?,
                "network.client_homes" => {
                    self.net.client_homes = parse_pairs(v)?
                        .into_iter()
                        .map(|(c, n)| u32::try_from(n).map(|n| (c, n)).map_err(|_| format!("node {n} out of range")))
                        .collect::<Result<_, _>>()?
                }
                "network.wlan_latency_us" => self.net.wlan.latency_us = parse_num(v)?,
                "network.wlan_bandwidth" => self.net.wlan.bandwidth = parse_num(v)?,
                "network.lan_latency_us" => self.net.lan.latency_us = parse_num(v)?,
                "network.lan_bandwidth" => self.net.lan.bandwidth = parse_num(v)?,
                "network.wan_latency_us" => self.net.wan.latency_us = parse_num(v)?,
                "network.wan_bandwidth" => self.net.wan.bandwidth = parse_num(v)?,
                "network.lan_latency_overrides" => self.net.lan_latency_overrides = parse_pairs(v)?,
                "network.directory_rtt_us" => self.net.directory_rtt_us = parse_num(v)?,
                "network.synthesis_rate" => self.net.synthesis_rate = parse_num(v)?,
                "network.req_msg_bytes" => self.req_msg_bytes = parse_num(v)?,
                "network.resp_bytes" => self.resp_bytes = parse_num(v)?,
                "network.allow_odd_links" => self.allow_odd_links = parse_bool(v)?,

                "cache.capacity" => self.capacity = v.parse()?,
                "cache.policy" => self.policy = v.parse()?,
                "cache.weight_recency" => self.weights.recency = parse_float(v)?,
                "cache.weight_frequency" => self.weights.frequency = parse_float(v)?,
                "cache.weight_cost" => self.weights.cost = parse_float(v)?,
                "cache.weight_tau_us" => self.weights.tau_us = parse_float(v)?,
                "cache.pin_bases" => self.pin_bases = parse_bool(v)?,
                "cache.cache_launch_states" => self.cache_launch_states = parse_bool(v)?,

                "coop.cooperation" => self.cooperation = parse_bool(v)?,
                "coop.discovery" => self.discovery = v.parse()?,
                "coop.dissemination" => {
                    self.dissemination = match v {
                        "client" => DisseminationKind::Client,
                        "server" => DisseminationKind::Server,
                        _ => return Err(format!("expected one of client|server, got `{v}`")),
                    }
                }
                "coop.server_threshold" => self.server_threshold = if v == "inf" { u64::MAX } else { parse_num(v)? },
                "coop.placement" => self.placement = v.parse()?,
                "coop.replicate_on_coop_hit" => self.replicate_on_coop_hit = parse_bool(v)?,

                "consistency.mode" => self.consistency = v.parse()?,

                "output.dir" => self.output_dir = PathBuf::from(v),

                _ => return Err(UNKNOWN.into()),
            }
            Ok(())
        })();
        if let PolicyKind::Weighted(_) = self.policy {
            self.policy = PolicyKind::Weighted(self.weights);
        }
        r.map_err(|msg| if msg == UNKNOWN { SetError::UnknownKey } else { SetError::Value(msg) })
    }

    /// The resolved configuration in the file format; parsing it back gives
    /// an identical `RunConfig`.
    pub fn echo(&self) -> String {
        let mut o = String::from("# resolved configuration (defaults are artifact choices, not measured values)\n");
        let mut section = |name: &str, rows: Vec<(&str, String)>| {
            let _ = writeln!(o, "\n[{name}]");
            for (k, v) in rows {
                let _ = writeln!(o, "{k} = {v}");
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        section("run", vec![("seed", self.seed.to_string()), ("audit", self.audit.to_string())]);
        let c = &self.catalog;
        section(
            "catalog",
            vec![
                ("data_objects", c.data_objects.to_string()),
                ("launch_vms", c.launch_vms.to_string()),
                ("base_images", c.base_images.to_string()),
                ("data_size", c.data_size.to_string()),
                ("base_size", c.base_size.to_string()),
                ("vm_size", c.vm_size.to_string()),
                ("overlay_size", c.overlay_size.to_string()),
                ("ttl_us", fmt_opt(&c.ttl_us)),
                ("dump", path(&self.catalog_dump)),
            ],
        );
        let w = &self.workload;
        section(
            "workload",
            vec![
                ("trace", path(&self.trace)),
                ("clients", w.clients.to_string()),
                ("rate", w.rate_per_sec.to_string()),
                ("duration_s", (w.duration_us as f64 / 1e6).to_string()),
                ("zipf_alpha", w.zipf_alpha.to_string()),
                ("per_client_permutation", w.per_client_permutation.to_string()),
            ],
        );
        let n = &self.net;
        section(
            "network",
            vec![
                ("cache_nodes", n.cache_nodes.to_string()),
                ("client_homes", fmt_pairs(&n.client_homes)),
                ("wlan_latency_us", n.wlan.latency_us.to_string()),
                ("wlan_bandwidth", n.wlan.bandwidth.to_string()),
                ("lan_latency_us", n.lan.latency_us.to_string()),
                ("lan_bandwidth", n.lan.bandwidth.to_string()),
                ("wan_latency_us", n.wan.latency_us.to_string()),
                ("wan_bandwidth", n.wan.bandwidth.to_string()),
                ("lan_latency_overrides", fmt_pairs(&n.lan_latency_overrides)),
                ("directory_rtt_us", n.directory_rtt_us.to_string()),
                ("synthesis_rate", n.synthesis_rate.to_string()),
                ("req_msg_bytes", self.req_msg_bytes.to_string()),
                ("resp_bytes", self.resp_bytes.to_string()),
                ("allow_odd_links", self.allow_odd_links.to_string()),
            ],
        );
        section(
            "cache",
            vec![
                ("capacity", self.capacity.to_string()),
                ("policy", self.policy.to_string()),
                ("weight_recency", self.weights.recency.to_string()),
                ("weight_frequency", self.weights.frequency.to_string()),
                ("weight_cost", self.weights.cost.to_string()),
                ("weight_tau_us", self.weights.tau_us.to_string()),
                ("pin_bases", self.pin_bases.to_string()),
                ("cache_launch_states", self.cache_launch_states.to_string()),
            ],
        );
        section(
            "coop",
            vec![
                ("cooperation", if self.cooperation { "on" } else { "off" }.to_string()),
                ("discovery", self.discovery.to_string()),
                (
                    "dissemination",
                    match self.dissemination {
                        DisseminationKind::Client => "client".to_string(),
                        DisseminationKind::Server => "server".to_string(),
                    },
                ),
                ("server_threshold", fmt_threshold(self.server_threshold)),
                ("placement", self.placement.as_str().to_string()),
                ("replicate_on_coop_hit", self.replicate_on_coop_hit.to_string()),
            ],
        );
        section("consistency", vec![("mode", self.consistency.to_string())]);
        section("output", vec![("dir", self.output_dir.display().to_string())]);
        o
    }

    /// Cross-key checks that single assignments cannot catch.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, msg: String| Err(ConfigError::Invalid { key: key.into(), msg });
        if let Some(t) = &self.trace {
            if !t.is_file() {
                return invalid("workload.trace", format!("{} does not exist", t.display()));
            }
        }
        if self.net.cache_nodes == 0 {
            return invalid("network.cache_nodes", "must be at least 1".into());
        }
        for (key, bw) in [
            ("network.wlan_bandwidth", self.net.wlan.bandwidth),
            ("network.lan_bandwidth", self.net.lan.bandwidth),
            ("network.wan_bandwidth", self.net.wan.bandwidth),
            ("network.synthesis_rate", self.net.synthesis_rate),
        ] {
            if bw == 0 {
                return invalid(key, "must be positive".into());
            }
        }
        if !self.allow_odd_links {
            let (lan, wan) = (self.net.lan, self.net.wan);
            if wan.latency_us < lan.latency_us {
                return invalid(
                    "network.wan_latency_us",
                    "WAN latency below LAN latency (set allow_odd_links to permit)".into(),
                );
            }
            if wan.bandwidth > lan.bandwidth {
                return invalid(
                    "network.wan_bandwidth",
                    "WAN bandwidth above LAN bandwidth (set allow_odd_links to permit)".into(),
                );
            }
        }
        for (&c, &n) in &self.net.client_homes {
            if c >= self.workload.clients {
                return invalid("network.client_homes", format!("client {c} does not exist"));
            }
            if n >= self.net.cache_nodes {
                return invalid("network.client_homes", format!("node {n} does not exist"));
            }
        }
        if let Some(&n) = self.net.lan_latency_overrides.keys().find(|&&n| n >= self.net.cache_nodes) {
            return invalid("network.lan_latency_overrides", format!("node {n} does not exist"));
        }
        if self.workload.rate_per_sec <= 0.0 {
            return invalid("workload.rate", "must be positive".into());
        }
        if self.workload.zipf_alpha < 0.0 {
            return invalid("workload.zipf_alpha", "must be >= 0".into());
        }
        if self.weights.tau_us <= 0.0 {
            return invalid("cache.weight_tau_us", "must be positive".into());
        }
        let c = &self.catalog;
        if c.launch_vms > 0 && c.base_images == 0 {
            return invalid("catalog.base_images", "launch VMs need at least one base image".into());
        }
        if c.data_size.min() == 0 {
            return invalid("catalog.data_size", "must be positive".into());
        }
        if c.launch_vms > 0 {
            for (key, d) in [
                ("catalog.base_size", c.base_size),
                ("catalog.vm_size", c.vm_size),
                ("catalog.overlay_size", c.overlay_size),
            ] {
                if d.min() == 0 {
                    return invalid(key, "must be positive".into());
                }
            }
            if c.overlay_size.max() >= c.base_size.min() {
                return invalid("catalog.overlay_size", "overlays must be smaller than base images".into());
            }
        }
        if c.ttl_us == Some(0) {
            return invalid("catalog.ttl_us", "must be positive".into());
        }
        Ok(())
    }

    pub fn dissemination_mode(&self) -> DisseminationMode {
        match self.dissemination {
            DisseminationKind::Client => DisseminationMode::ClientInitiated,
            DisseminationKind::Server => {
                DisseminationMode::ServerInitiated { threshold: self.server_threshold, placement: self.placement }
            }
        }
    }

    /// Engine settings; `catalog_bytes` resolves percentage capacities.
    pub fn sim_config(&self, catalog_bytes: u64) -> SimConfig {
        SimConfig {
            capacity: self.capacity.resolve(catalog_bytes),
            policy: self.policy,
            cooperation: self.cooperation,
            discovery: self.discovery,
            dissemination: self.dissemination_mode(),
            consistency: self.consistency,
            replicate_on_coop_hit: self.replicate_on_coop_hit,
            pin_bases: self.pin_bases,
            cache_launch_states: self.cache_launch_states,
            req_msg_bytes: self.req_msg_bytes,
            resp_bytes: self.resp_bytes,
            audit: self.audit,
        }
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig { clients: self.workload.clients, ..self.net.clone() }
    }

    /// Makes relative input paths relative to `base`.
    fn anchor_inputs(&mut self, base: &Path) {
        for p in [&mut self.trace, &mut self.catalog_dump].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

const UNKNOWN: &str = "\0unknown";

#[derive(Debug, PartialEq, Eq)]
pub enum SetError {
    UnknownKey,
    Value(String),
}

impl SetError {
    fn at(self, at: String, key: &str) -> ConfigError {
        match self {
            SetError::UnknownKey => ConfigError::UnknownKey { at, key: key.into() },
            SetError::Value(msg) => ConfigError::Value { at, key: key.into(), msg },
        }
    }
}

/// Parses config text without touching the filesystem. Relative paths are
/// kept as written.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section: Option<&str> = None;
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim();
            section = Some(
                SECTIONS
                    .iter()
                    .copied()
                    .find(|&s| s == name)
                    .ok_or_else(|| ConfigError::UnknownSection { line, section: name.into() })?,
            );
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: body.into() });
        };
        let k = k.trim();
        let Some(sec) = section else {
            return Err(ConfigError::UnknownKey { at: format!("line {line}"), key: k.into() });
        };
        let key = format!("{sec}.{k}");
        if !seen.insert(key.clone()) {
            return Err(ConfigError::Duplicate { line, key });
        }
        cfg.set(&key, v).map_err(|e| e.at(format!("line {line}"), &key))?;
    }
    if !seen.contains("run.seed") {
        return Err(ConfigError::Missing { key: "run.seed".into() });
    }
    Ok(cfg)
}

/// Reads a config file; relative input paths resolve against its directory.
pub fn parse_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let mut cfg = parse_config_str(&text)?;
    cfg.anchor_inputs(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

/// Applies `section.key=value` overrides, as given on the command line.
pub fn apply_overrides(cfg: &mut RunConfig, overrides: &[String]) -> Result<(), ConfigError> {
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: o.clone() })?;
        let k = k.trim();
        cfg.set(k, v).map_err(|e| e.at("override".into(), k))?;
    }
    Ok(())
}
