//! Cartesian-product experiments over a fixed trace.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::engine;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::report::prepare;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    Policy,
    Discovery,
    Dissemination,
    Consistency,
    Capacity,
    Cooperation,
}

impl Axis {
    pub const NAMES: &'static str = "policy|discovery|dissemination|consistency|capacity|cooperation";

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Policy => "policy",
            Axis::Discovery => "discovery",
            Axis::Dissemination => "dissemination",
            Axis::Consistency => "consistency",
            Axis::Capacity => "capacity",
            Axis::Cooperation => "cooperation",
        }
    }

    /// Config key the axis assigns.
    pub fn key(self) -> &'static str {
        match self {
            Axis::Policy => "cache.policy",
            Axis::Discovery => "coop.discovery",
            Axis::Dissemination => "coop.dissemination",
            Axis::Consistency => "consistency.mode",
            Axis::Capacity => "cache.capacity",
            Axis::Cooperation => "coop.cooperation",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Axis::Policy, Axis::Discovery, Axis::Dissemination, Axis::Consistency, Axis::Capacity, Axis::Cooperation]
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown sweep axis `{s}`; expected one of {}", Self::NAMES))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepAxis {
    pub axis: Axis,
    pub values: Vec<String>,
}

impl FromStr for SweepAxis {
    type Err = String;

    /// `axis=v1,v2,...`
    fn from_str(s: &str) -> Result<Self, String> {
        let (name, values) = s.split_once('=').ok_or_else(|| format!("expected `axis=v1,v2`, got `{s}`"))?;
        let axis = name.trim().parse()?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(format!("axis `{axis}` has no values"));
        }
        Ok(SweepAxis { axis, values })
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub settings: Vec<(Axis, String)>,
    pub trace_checksum: u64,
    pub metrics: MetricsReport,
}

fn combinations(axes: &[SweepAxis]) -> Vec<Vec<(Axis, String)>> {
    axes.iter().fold(vec![Vec::new()], |acc, ax| {
        acc.into_iter()
            .flat_map(|prefix| {
                ax.values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((ax.axis, v.clone()));
                    next
                })
            })
            .collect()
    })
}

/// One run per combination of axis values, all on the same catalog and
/// trace. Rows come back in lexicographic axis order; runs execute in
/// parallel.
pub fn run_sweep(base: &RunConfig, axes: &[SweepAxis]) -> Result<Vec<SweepRow>> {
    for (i, ax) in axes.iter().enumerate() {
        if ax.values.is_empty() {
            return Err(Error::Sweep(format!("axis `{}` has no values", ax.axis)));
        }
        if axes[..i].iter().any(|a| a.axis == ax.axis) {
            return Err(Error::Sweep(format!("axis `{}` given twice", ax.axis)));
        }
    }
    let prep = prepare(base)?;
    let checksum = prep.trace.checksum();

    let mut configs = Vec::new();
    for combo in combinations(axes) {
        let mut cfg = base.clone();
        for (axis, value) in &combo {
            cfg.set(axis.key(), value).map_err(|e| Error::Sweep(format!("{axis} = {value}: {e:?}")))?;
        }
        cfg.validate()?;
        configs.push((combo, cfg.sim_config(prep.catalog.total_bytes())));
    }

    configs
        .into_par_iter()
        .map(|(settings, sim)| {
            let out = engine::run(&prep.catalog, &prep.topology, sim, &prep.trace)?;
            Ok(SweepRow { settings, trace_checksum: checksum, metrics: out.metrics })
        })
        .collect()
}

pub fn sweep_csv(axes: &[SweepAxis], rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = axes.iter().map(|a| a.axis.to_string()).collect();
    header.push("trace_checksum".into());
    if let Some(first) = rows.first() {
        header.extend(first.metrics.fields().into_iter().map(|(k, _)| k));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        let mut cells: Vec<String> = r.settings.iter().map(|(_, v)| v.clone()).collect();
        cells.push(r.trace_checksum.to_string());
        cells.extend(r.metrics.fields().into_iter().map(|(_, v)| v));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a: SweepAxis = "policy=lru,lfu".parse().unwrap();
        assert_eq!(a, SweepAxis { axis: Axis::Policy, values: vec!["lru".into(), "lfu".into()] });
        assert!("policy=".parse::<SweepAxis>().is_err());
        assert!("colour=red".parse::<SweepAxis>().is_err());
        assert!("policy".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn product_size() {
        let axes = vec!["policy=lru,gds".parse().unwrap(), "cooperation=on,off".parse().unwrap()];
        let combos = combinations(&axes);
        assert_eq!(combos.len(), 4);
        assert_eq!(combos[1], vec![(Axis::Policy, "lru".to_string()), (Axis::Cooperation, "off".to_string())]);
        assert_eq!(combinations(&[]).len(), 1);
    }
}
