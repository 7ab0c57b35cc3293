//! Request traces: open-loop generation and the text file format.
//!
//! File format, one record per line:
//!
//! ```text
//! # comment
//! time_us,client_id,object_id
//! update,time_us,object_id
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Exp};
use sha2::{Digest, Sha256};

use super::catalog::Catalog;
use super::zipf::{ZipfParams, ZipfSampler};
use crate::error::{Error, Result};
use crate::rng;
use crate::types::{ClientId, Micros, ObjectId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Request {
    pub time_us: Micros,
    pub client: ClientId,
    pub object: ObjectId,
}

impl Request {
    pub fn new(time_us: Micros, client: u32, object: u32) -> Self {
        Request { time_us, client: ClientId(client), object: ObjectId(object) }
    }
}

/// Scripted modification of an object at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OriginUpdate {
    pub time_us: Micros,
    pub object: ObjectId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub requests: Vec<Request>,
    pub updates: Vec<OriginUpdate>,
}

impl Trace {
    pub fn new(requests: Vec<Request>) -> Self {
        Trace { requests, updates: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# time_us,client_id,object_id\n");
        for r in &self.requests {
            let _ = writeln!(out, "{},{},{}", r.time_us, r.client, r.object);
        }
        for u in &self.updates {
            let _ = writeln!(out, "update,{},{}", u.time_us, u.object);
        }
        out
    }

    /// Parses the text format. `origin` only labels error messages.
    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut trace = Trace::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::TraceParse { path: origin.to_path_buf(), line: idx + 1, msg };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let int = |s: &str, what: &str| {
                s.parse::<u64>().map_err(|_| bad(format!("{what} `{s}` is not a non-negative integer")))
            };
            let id = |s: &str, what: &str| {
                int(s, what).and_then(|v| u32::try_from(v).map_err(|_| bad(format!("{what} {v} out of range"))))
            };
            if fields[0] == "update" {
                if fields.len() != 3 {
                    return Err(bad(format!("update line needs 3 fields, found {}", fields.len())));
                }
                let u =
                    OriginUpdate { time_us: int(fields[1], "time")?, object: ObjectId(id(fields[2], "object id")?) };
                if trace.updates.last().is_some_and(|prev| prev.time_us > u.time_us) {
                    return Err(bad("update timestamps decrease".into()));
                }
                trace.updates.push(u);
            } else {
                if fields.len() != 3 {
                    return Err(bad(format!("request line needs 3 fields, found {}", fields.len())));
                }
                let r = Request {
                    time_us: int(fields[0], "time")?,
                    client: ClientId(id(fields[1], "client id")?),
                    object: ObjectId(id(fields[2], "object id")?),
                };
                if trace.requests.last().is_some_and(|prev| prev.time_us > r.time_us) {
                    return Err(bad("request timestamps decrease".into()));
                }
                trace.requests.push(r);
            }
        }
        Ok(trace)
    }

    /// Stable 64-bit digest of the serialized trace.
    pub fn checksum(&self) -> u64 {
        let digest = Sha256::digest(self.to_text().as_bytes());
        u64::from_be_bytes(digest[..8].try_into().expect("32-byte digest"))
    }
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Trace::from_text(&text, path)
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    fs::write(path, trace.to_text()).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub clients: u32,
    /// Per-client arrival rate, requests per second.
    pub rate_per_sec: f64,
    pub duration_us: Micros,
    pub zipf_alpha: f64,
    /// Remap popularity ranks through a per-client seeded permutation.
    pub per_client_permutation: bool,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            clients: 4,
            rate_per_sec: 1.0,
            duration_us: 600_000_000,
            zipf_alpha: 0.8,
            per_client_permutation: false,
        }
    }
}

/// Open-loop Poisson arrivals per client, Zipf object choice, merged by
/// `(time, client)`.
pub fn generate_trace(spec: &WorkloadSpec, catalog: &Catalog, seed: u64) -> Result<Trace> {
    if !(spec.rate_per_sec.is_finite() && spec.rate_per_sec > 0.0) {
        return Err(Error::Workload(format!("arrival rate must be positive, got {}", spec.rate_per_sec)));
    }
    if spec.duration_us == 0 || spec.clients == 0 {
        return Ok(Trace::default());
    }
    let objects = catalog.requestable();
    let n = u32::try_from(objects.len()).map_err(|_| Error::Workload("catalog too large".into()))?;
    let sampler = ZipfSampler::new(ZipfParams::new(n, spec.zipf_alpha)?)?;
    let gaps = Exp::new(spec.rate_per_sec).map_err(|e| Error::Workload(e.to_string()))?;

    let mut requests = Vec::new();
    for client in 0..spec.clients {
        let order = if spec.per_client_permutation {
            let mut perm = objects.clone();
            perm.shuffle(&mut rng::permutation_stream(seed, client));
            perm
        } else {
            objects.clone()
        };
        let mut rng = rng::client_stream(seed, client);
        let mut t: Micros = 0;
        loop {
            let gap_s: f64 = gaps.sample(&mut rng);
            t = t.saturating_add((gap_s * 1e6).round() as Micros);
            if t >= spec.duration_us {
                break;
            }
            let rank = sampler.sample(&mut rng);
            requests.push(Request { time_us: t, client: ClientId(client), object: order[rank as usize - 1] });
        }
    }
    requests.sort_by_key(|r| (r.time_us, r.client));
    Ok(Trace::new(requests))
}
