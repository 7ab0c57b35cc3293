//! Freshness of cached copies relative to the origin.
//!
//! Invalidation is lazy: origin updates only bump a version counter, and a
//! stale copy is noticed when a request touches it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::store::CacheEntry;
use crate::types::{Micros, ObjectId};
use crate::workload::Catalog;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConsistencyMode {
    /// Copies never go stale.
    #[default]
    Off,
    /// A copy is fresh until its `expires_at`.
    Ttl,
    /// Every use compares versions with the origin, at one WAN round trip.
    ValidateOnHit,
}

impl ConsistencyMode {
    pub const NAMES: &'static str = "off|ttl|validate";

    pub fn as_str(self) -> &'static str {
        match self {
            ConsistencyMode::Off => "off",
            ConsistencyMode::Ttl => "ttl",
            ConsistencyMode::ValidateOnHit => "validate",
        }
    }

    /// Whether a freshness check costs an origin round trip.
    pub fn validates(self) -> bool {
        self == ConsistencyMode::ValidateOnHit
    }
}

impl fmt::Display for ConsistencyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConsistencyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "off" => Ok(ConsistencyMode::Off),
            "ttl" => Ok(ConsistencyMode::Ttl),
            "validate" => Ok(ConsistencyMode::ValidateOnHit),
            _ => Err(format!("expected one of {}, got `{s}`", Self::NAMES)),
        }
    }
}

/// Current version of every object at the distant cloud.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OriginState {
    versions: Vec<u64>,
}

impl OriginState {
    pub fn new(catalog: &Catalog) -> Self {
        OriginState { versions: catalog.objects().iter().map(|o| o.version).collect() }
    }

    pub fn version(&self, id: ObjectId) -> Option<u64> {
        self.versions.get(id.index()).copied()
    }

    /// Bumps the origin version of `id`.
    pub fn apply_update(&mut self, id: ObjectId) -> Result<u64> {
        let v = self
            .versions
            .get_mut(id.index())
            .ok_or_else(|| Error::Workload(format!("origin update for unknown object {id}")))?;
        *v += 1;
        Ok(*v)
    }
}

pub fn is_fresh(entry: &CacheEntry, now: Micros, mode: ConsistencyMode, origin: &OriginState) -> bool {
    match mode {
        ConsistencyMode::Off => true,
        ConsistencyMode::Ttl => entry.expires_at.is_none_or(|exp| now < exp),
        ConsistencyMode::ValidateOnHit => origin.version(entry.object_id) == Some(entry.version),
    }
}

/// Freshness context handed to cache lookups.
#[derive(Clone, Copy, Debug)]
pub struct Freshness<'a> {
    pub mode: ConsistencyMode,
    pub origin: &'a OriginState,
}

impl Freshness<'_> {
    pub fn check(&self, entry: &CacheEntry, now: Micros) -> bool {
        is_fresh(entry, now, self.mode, self.origin)
    }
}
