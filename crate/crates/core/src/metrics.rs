//! Aggregate statistics over a run's outcome log.

use crate::engine::{RequestOutcome, Tier};
use crate::types::Micros;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub requests: u64,
    /// Indexed like [`Tier::ALL`].
    pub tier_counts: [u64; 5],
    pub tier_mean_latency_us: [f64; 5],
    pub hit_ratio_local: f64,
    pub hit_ratio_coop: f64,
    /// Fraction served without contacting the distant cloud.
    pub overall_cloudlet_hit_ratio: f64,
    pub latency_mean_us: f64,
    pub latency_p50_us: Micros,
    pub latency_p95_us: Micros,
    pub latency_p99_us: Micros,
    pub bytes_wlan: u64,
    pub bytes_lan: u64,
    pub bytes_wan: u64,
    /// Energy proxy: wireless bytes per request.
    pub wlan_bytes_per_request: f64,
    pub evictions_per_node: Vec<u64>,
    pub discovery_overhead_us: u64,
    pub validation_overhead_us: u64,
}

fn ratio(num: f64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

/// Nearest-rank percentile of an ascending slice; 0 when empty.
pub fn percentile(sorted: &[Micros], p: f64) -> Micros {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn tier_index(t: Tier) -> usize {
    Tier::ALL.iter().position(|&x| x == t).expect("listed tier")
}

impl MetricsReport {
    pub fn from_outcomes(outcomes: &[RequestOutcome], evictions_per_node: Vec<u64>) -> Self {
        let n = outcomes.len() as u64;
        let mut tier_counts = [0u64; 5];
        let mut tier_latency = [0u128; 5];
        let mut latencies: Vec<Micros> = Vec::with_capacity(outcomes.len());
        let (mut wlan, mut lan, mut wan, mut disc, mut valid) = (0, 0, 0, 0, 0);
        for o in outcomes {
            let t = tier_index(o.tier);
            tier_counts[t] += 1;
            tier_latency[t] += o.latency_total as u128;
            latencies.push(o.latency_total);
            wlan += o.bytes.wlan;
            lan += o.bytes.lan;
            wan += o.bytes.wan;
            disc += o.breakdown.discovery;
            valid += o.breakdown.validation;
        }
        latencies.sort_unstable();
        let total_latency: u128 = latencies.iter().map(|&l| l as u128).sum();
        let mut tier_mean_latency_us = [0.0; 5];
        for i in 0..5 {
            tier_mean_latency_us[i] = ratio(tier_latency[i] as f64, tier_counts[i]);
        }
        let local = tier_counts[tier_index(Tier::LocalHit)];
        let coop = tier_counts[tier_index(Tier::CoopHit)];
        let synth = tier_counts[tier_index(Tier::BaseSynthesis)];
        MetricsReport {
            requests: n,
            tier_counts,
            tier_mean_latency_us,
            hit_ratio_local: ratio(local as f64, n),
            hit_ratio_coop: ratio(coop as f64, n),
            overall_cloudlet_hit_ratio: ratio((local + coop + synth) as f64, n),
            latency_mean_us: ratio(total_latency as f64, n),
            latency_p50_us: percentile(&latencies, 50.0),
            latency_p95_us: percentile(&latencies, 95.0),
            latency_p99_us: percentile(&latencies, 99.0),
            bytes_wlan: wlan,
            bytes_lan: lan,
            bytes_wan: wan,
            wlan_bytes_per_request: ratio(wlan as f64, n),
            evictions_per_node,
            discovery_overhead_us: disc,
            validation_overhead_us: valid,
        }
    }

    pub fn tier_count(&self, t: Tier) -> u64 {
        self.tier_counts[tier_index(t)]
    }

    pub fn tier_mean_latency(&self, t: Tier) -> f64 {
        self.tier_mean_latency_us[tier_index(t)]
    }

    /// Requests that went to the distant cloud.
    pub fn wan_fetches(&self) -> u64 {
        self.tier_count(Tier::CloudFetch) + self.tier_count(Tier::CloudFetchWithSynthesis)
    }

    /// Flat `(column, value)` pairs, the layout of `metrics.csv`.
    pub fn fields(&self) -> Vec<(String, String)> {
        fn int(f: &mut Vec<(String, String)>, k: impl Into<String>, v: u64) {
            f.push((k.into(), v.to_string()));
        }
        fn frac(f: &mut Vec<(String, String)>, k: impl Into<String>, v: f64) {
            f.push((k.into(), format!("{v:.6}")));
        }
        let mut f = Vec::new();
        int(&mut f, "requests", self.requests);
        for (t, c) in Tier::ALL.iter().zip(self.tier_counts) {
            int(&mut f, format!("count_{t}"), c);
        }
        int(&mut f, "wan_fetches", self.wan_fetches());
        frac(&mut f, "hit_ratio_local", self.hit_ratio_local);
        frac(&mut f, "hit_ratio_coop", self.hit_ratio_coop);
        frac(&mut f, "overall_cloudlet_hit_ratio", self.overall_cloudlet_hit_ratio);
        frac(&mut f, "latency_mean_us", self.latency_mean_us);
        for (t, m) in Tier::ALL.iter().zip(self.tier_mean_latency_us) {
            frac(&mut f, format!("latency_mean_{t}_us"), m);
        }
        int(&mut f, "latency_p50_us", self.latency_p50_us);
        int(&mut f, "latency_p95_us", self.latency_p95_us);
        int(&mut f, "latency_p99_us", self.latency_p99_us);
        int(&mut f, "bytes_wlan", self.bytes_wlan);
        int(&mut f, "bytes_lan", self.bytes_lan);
        int(&mut f, "bytes_wan", self.bytes_wan);
        frac(&mut f, "wlan_bytes_per_request", self.wlan_bytes_per_request);
        int(&mut f, "discovery_overhead_us", self.discovery_overhead_us);
        int(&mut f, "validation_overhead_us", self.validation_overhead_us);
        int(&mut f, "evictions_total", self.evictions_per_node.iter().sum());
        for (i, &e) in self.evictions_per_node.iter().enumerate() {
            int(&mut f, format!("evictions_node{i}"), e);
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<Micros> = (1..=100).collect();
        assert_eq!(percentile(&v, 50.0), 50);
        assert_eq!(percentile(&v, 95.0), 95);
        assert_eq!(percentile(&v, 99.0), 99);
        assert_eq!(percentile(&[7], 99.0), 7);
        assert_eq!(percentile(&[], 50.0), 0);
    }

    #[test]
    fn empty_run_reports_zeros() {
        let m = MetricsReport::from_outcomes(&[], vec![0, 0]);
        assert_eq!(m.requests, 0);
        assert_eq!(m.hit_ratio_local, 0.0);
        assert_eq!(m.latency_mean_us, 0.0);
        assert!(m.fields().iter().all(|(_, v)| !v.contains("NaN")));
    }
}
