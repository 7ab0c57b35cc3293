//! Property tests over randomized cloudlet scenarios.

mod common;

use std::path::Path;

use common::scenario::scenario;
use coopcache::coop::DisseminationMode;
use coopcache::{engine, ConsistencyMode, SimConfig, Tier, Trace};
use proptest::prelude::*;

fn infinite(sim: &SimConfig) -> SimConfig {
    SimConfig { capacity: u64::MAX, dissemination: DisseminationMode::ClientInitiated, ..sim.clone() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cooperation_never_adds_wan_fetches(seed in any::<u64>(), index in 0usize..1_000) {
        let s = scenario(seed, index);
        let sim = SimConfig { consistency: ConsistencyMode::Off, ..infinite(&s.sim) };
        let wan = |cooperation| {
            let out = engine::run(&s.catalog, &s.topo, SimConfig { cooperation, ..sim.clone() }, &s.trace).unwrap();
            out.outcomes.iter().filter(|o| o.tier.uses_wan()).count()
        };
        prop_assert!(wan(true) <= wan(false));
    }

    #[test]
    fn validation_never_raises_hit_ratio(seed in any::<u64>(), index in 0usize..1_000) {
        let s = scenario(seed, index);
        let hits = |consistency| {
            let sim = SimConfig { consistency, ..infinite(&s.sim) };
            engine::run(&s.catalog, &s.topo, sim, &s.trace).unwrap().metrics.overall_cloudlet_hit_ratio
        };
        prop_assert!(hits(ConsistencyMode::Off) >= hits(ConsistencyMode::ValidateOnHit));
    }

    #[test]
    fn replay_through_text_is_identical(seed in any::<u64>(), index in 0usize..1_000) {
        let s = scenario(seed, index);
        let text = s.trace.to_text();
        let replayed = Trace::from_text(&text, Path::new("replay.trace")).unwrap();
        prop_assert_eq!(replayed.checksum(), s.trace.checksum());
        let a = engine::run(&s.catalog, &s.topo, s.sim.clone(), &s.trace).unwrap();
        let b = engine::run(&s.catalog, &s.topo, s.sim.clone(), &replayed).unwrap();
        prop_assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn outcomes_are_self_consistent(seed in any::<u64>(), index in 0usize..1_000) {
        let s = scenario(seed, index);
        let out = engine::run(&s.catalog, &s.topo, s.sim.clone(), &s.trace).unwrap();
        prop_assert_eq!(out.metrics.tier_counts.iter().sum::<u64>(), s.trace.requests.len() as u64);
        for o in &out.outcomes {
            prop_assert_eq!(o.latency_total, o.breakdown.total());
            prop_assert_eq!(o.tier.uses_wan(), o.bytes.wan > 0);
            prop_assert_eq!(o.bytes.lan > 0, o.breakdown.lan > 0);
            match o.tier {
                Tier::LocalHit => prop_assert!(o.bytes.lan == 0 && o.breakdown.synthesis == 0),
                Tier::CoopHit => prop_assert!(o.bytes.lan > 0 && o.breakdown.synthesis == 0),
                Tier::BaseSynthesis | Tier::CloudFetchWithSynthesis => prop_assert!(o.breakdown.synthesis > 0),
                Tier::CloudFetch => prop_assert!(o.breakdown.synthesis == 0 && o.served.is_none()),
            }
            if !s.sim.cooperation {
                prop_assert_eq!(o.breakdown.discovery, 0);
            }
        }
    }
}
