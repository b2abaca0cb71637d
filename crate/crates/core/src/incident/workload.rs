//! Background traffic generators.

use super::spec::RegularWorkload;
use crate::sim::{FlowKind, FlowSpec};
use crate::topology::Topology;

pub const BACKGROUND_PORT: u16 = 5201;
pub const BACKGROUND_TAG: &str = "background";

/// Smallest link capacity in the network, Mb/s.
pub fn bottleneck_mbps(topo: &Topology) -> f64 {
    topo.links
        .iter()
        .map(|l| l.capacity_mbps)
        .fold(f64::INFINITY, f64::min)
}

/// One constant-rate flow per ordered host pair, totalling `rho` of the bottleneck.
pub fn regular_flows(w: &RegularWorkload, topo: &Topology, start: u64) -> Vec<FlowSpec> {
    let hosts = topo.host_ids();
    let pairs = hosts.len() * hosts.len().saturating_sub(1);
    if w.rho <= 0.0 || pairs == 0 {
        return Vec::new();
    }
    let each = w.rho * bottleneck_mbps(topo) / pairs as f64;
    let mut out = Vec::with_capacity(pairs);
    for s in &hosts {
        for d in &hosts {
            if s == d {
                continue;
            }
            out.push(FlowSpec {
                src: s.clone(),
                dst: d.clone(),
                kind: FlowKind::TcpBulk,
                demand_mbps: each,
                packet_size: 1500,
                dst_port: BACKGROUND_PORT,
                start,
                end: None,
                elastic: false,
                monitored: true,
                tag: BACKGROUND_TAG.into(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_scenario, Scenario, Size};

    #[test]
    fn totals_rho_of_bottleneck() {
        let t = build_scenario(Scenario::DatacenterClos, Size::S, 0);
        let w = RegularWorkload {
            pattern: "uniform_all_pairs".into(),
            rho: 0.4,
        };
        let f = regular_flows(&w, &t, 0);
        assert_eq!(f.len(), 8 * 7);
        let total: f64 = f.iter().map(|x| x.demand_mbps).sum();
        assert!((total - 0.4 * bottleneck_mbps(&t)).abs() < 1e-9);
    }

    #[test]
    fn zero_load_is_empty() {
        let t = build_scenario(Scenario::DatacenterClos, Size::S, 0);
        let w = RegularWorkload {
            pattern: "uniform_all_pairs".into(),
            rho: 0.0,
        };
        assert!(regular_flows(&w, &t, 0).is_empty());
    }
}
