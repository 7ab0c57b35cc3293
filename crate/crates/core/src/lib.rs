//! Deterministic trace-driven simulator of cooperative caching inside a
//! cloudlet.
//!
//! A request travels the resolution path local cache, cooperative peers,
//! base-VM synthesis and finally the distant cloud. Every stage charges
//! integer-microsecond latency and byte counts per link class, so runs are
//! reproducible bit for bit.
//!
//! The crate is organised by subsystem:
//!
//! - [`workload`]: object catalog, Zipf sampling, trace generation and I/O.
//! - [`net`]: links, topology and transfer-time model.
//! - [`store`]: capacity-bounded per-node cache with replacement policies.
//! - [`coop`]: discovery, supplier selection, dissemination and the directory.
//! - [`consistency`]: origin versions and freshness checks.
//! - [`engine`]: the event loop and request resolution.
//! - [`metrics`], [`config`], [`report`], [`sweep`]: experiment harness.

pub mod config;
pub mod consistency;
pub mod coop;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod net;
pub mod report;
pub mod rng;
pub mod store;
pub mod sweep;
pub mod types;
pub mod workload;

pub use config::RunConfig;
pub use consistency::{ConsistencyMode, OriginState};
pub use coop::{DiscoveryMode, DisseminationMode, Placement};
pub use engine::{Breakdown, ByteCounts, Engine, RequestOutcome, RunOutput, ServedCopy, SimConfig, Tier};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use net::{Link, Topology};
pub use store::{CacheEntry, CacheState, PolicyKind};
pub use types::{ClientId, Micros, NodeId, ObjectId};
pub use workload::{Catalog, CatalogObject, ObjectKind, Request, Trace};
