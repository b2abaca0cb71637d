mod common;

use proptest::prelude::*;
use serde_json::{json, Value};

use arena_core::aal::{AccessPolicy, Session, TimeMode};
use arena_core::eval::{grade_localization, nearest_rank, Confusion, Submission};
use arena_core::glob::matches;
use arena_core::incident::{expand_template, load_spec, shipped, Bindings, GroundTruth};
use arena_core::sim::NetworkState;
use arena_core::topology::{build_scenario, Scenario, Size};

fn regex_glob(p: &str, t: &str) -> bool {
    let mut re = String::from("^");
    for c in p.chars() {
        match c {
            '*' => re.push_str("(?s:.*)"),
            '?' => re.push_str("(?s:.)"),
            c => re.push_str(&regex::escape(&c.to_string())),
        }
    }
    re.push('$');
    regex::Regex::new(&re).unwrap().is_match(t)
}

proptest! {
    #[test]
    fn glob_agrees_with_regex(p in "[ab.*?]{0,8}", t in "[ab.]{0,10}") {
        prop_assert_eq!(matches(&p, &t), regex_glob(&p, &t));
    }

    #[test]
    fn confusion_partitions_universe(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 0..300)) {
        let (pred, gt): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let c = Confusion::from_masks(&pred, &gt);
        prop_assert_eq!(c.total() as usize, pred.len());
        prop_assert_eq!(c.fp == 0 && c.fn_ == 0, pred == gt);
    }

    #[test]
    fn localization_confusion_covers_universe(picks in prop::collection::vec(any::<prop::sample::Index>(), 0..6)) {
        let spec = shipped::incident("link_down_datacenter").unwrap().unwrap();
        let topo = spec.topology();
        let universe = topo.entity_universe();
        let truth = GroundTruth::derive(&spec, &topo);
        let sub = Submission {
            detected: true,
            localization: picks.iter().map(|i| universe[i.index(universe.len())].clone()).collect(),
            ..Default::default()
        };
        let r = grade_localization(&sub, &truth, &universe);
        let c = r.confusion;
        prop_assert_eq!(c.tp + c.fp + c.fn_ + c.tn, universe.len() as u64);
        prop_assert_eq!(r.exact_match, sub.localization.iter().cloned().collect::<Vec<_>>() == truth.entities);
    }

    #[test]
    fn nearest_rank_is_a_sample(mut xs in prop::collection::vec(0.0f64..1e6, 1..100), pct in 0.0f64..100.0) {
        let v = nearest_rank(&mut xs.clone(), pct).unwrap();
        prop_assert!(xs.contains(&v));
        xs.sort_by(f64::total_cmp);
        let below = xs.iter().filter(|&&x| x <= v).count() as f64;
        prop_assert!(below / xs.len() as f64 >= pct / 100.0 - 1e-9);
    }

    #[test]
    fn flows_conserve_bytes(demands in prop::collection::vec(0.5f64..150.0, 1..6), ticks in 1usize..150) {
        let mut s = NetworkState::new(common::star(demands.len() + 1), 0);
        for (i, d) in demands.iter().enumerate() {
            s.add_flow(common::udp(&format!("h{}", i + 1), "h0", *d));
        }
        for _ in 0..ticks {
            s.step();
            for l in s.last_tick_ledger() {
                prop_assert_eq!(
                    l.delivered as i128 + l.queued_after as i128 - l.queued_before as i128 + l.dropped as i128,
                    l.offered as i128
                );
                prop_assert!(l.delivered <= l.capacity);
            }
        }
    }

    #[test]
    fn seeded_templates_expand_to_valid_specs(seed in any::<u64>(), which in any::<prop::sample::Index>()) {
        let (name, _) = shipped::TEMPLATES[which.index(shipped::TEMPLATES.len())];
        let t = shipped::template(name).unwrap();
        let spec = expand_template(&t, &Bindings::Seed(seed)).unwrap();
        prop_assert_eq!(load_spec(&spec.to_json()).unwrap(), spec);
    }
}

fn random_call(i: usize, k: u8) -> (&'static str, Value) {
    match k % 9 {
        0 => (
            "ping",
            json!({"src": "pod0.h0", "dst": "pod1.h1", "count": (i % 4) + 1}),
        ),
        1 => ("traceroute", json!({"src": "pod0.h1", "dst": "pod1.h0"})),
        2 => ("wait", json!({"ms": (i * 37) % 900})),
        3 => ("get_logs", json!({"node": "spine0"})),
        4 => ("queue_stats", json!({"node": "pod0.leaf0", "intf": "eth2"})),
        5 => (
            "tcp_connect",
            json!({"src": "pod0.h0", "dst": "pod1.h1", "port": 22}),
        ),
        6 => ("ping", json!({"src": "pod0.h0", "dst": "ghost"})),
        7 => ("nonexistent", json!({})),
        _ => ("get_reachability", json!({})),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn records_complete_and_time_accounted(calls in prop::collection::vec(any::<u8>(), 0..25)) {
        let t = build_scenario(Scenario::DatacenterClos, Size::S, 0);
        let mut s = Session::new(NetworkState::new(t, 0), AccessPolicy::permissive(), 600_000, TimeMode::Stepped);
        let t0 = s.state().now();
        for (i, k) in calls.iter().enumerate() {
            let (name, args) = random_call(i, *k);
            let _ = s.call(name, &args, false);
        }
        prop_assert_eq!(s.records().len(), calls.len());
        for (i, r) in s.records().iter().enumerate() {
            prop_assert_eq!(r.seq, i as u64);
        }
        let charged: u64 = s.records().iter().map(|r| r.charged_ms).sum();
        prop_assert_eq!(charged, s.state().now() - t0);
    }
}

#[test]
fn shipped_specs_round_trip() {
    for spec in shipped::all_incidents() {
        assert_eq!(load_spec(&spec.to_json()).unwrap(), spec, "{}", spec.name);
    }
}
