//! Incident files compiled into the binary.

use serde_json::Value;

use super::spec::{load_spec, IncidentSpec, SpecError};

/// `(name, document)` for every shipped concrete incident.
pub const INCIDENTS: &[(&str, &str)] = &[
    (
        "composite_link_down_icmp_acl_datacenter",
        include_str!("../../../../benchmark/composite_link_down_icmp_acl_datacenter.json"),
    ),
    (
        "dos_flood_campus",
        include_str!("../../../../benchmark/dos_flood_campus.json"),
    ),
    (
        "faulty_cable_datacenter",
        include_str!("../../../../benchmark/faulty_cable_datacenter.json"),
    ),
    (
        "forwarding_loop_datacenter",
        include_str!("../../../../benchmark/forwarding_loop_datacenter.json"),
    ),
    (
        "fwd_entry_misconfig_datacenter",
        include_str!("../../../../benchmark/fwd_entry_misconfig_datacenter.json"),
    ),
    (
        "healthy_datacenter",
        include_str!("../../../../benchmark/healthy_datacenter.json"),
    ),
    (
        "healthy_isp",
        include_str!("../../../../benchmark/healthy_isp.json"),
    ),
    (
        "host_crash_isp",
        include_str!("../../../../benchmark/host_crash_isp.json"),
    ),
    (
        "host_ip_misconfig_campus",
        include_str!("../../../../benchmark/host_ip_misconfig_campus.json"),
    ),
    (
        "http_acl_block_datacenter",
        include_str!("../../../../benchmark/http_acl_block_datacenter.json"),
    ),
    (
        "icmp_acl_block_cloud",
        include_str!("../../../../benchmark/icmp_acl_block_cloud.json"),
    ),
    (
        "incorrect_netmask_datacenter",
        include_str!("../../../../benchmark/incorrect_netmask_datacenter.json"),
    ),
    (
        "link_detached_campus",
        include_str!("../../../../benchmark/link_detached_campus.json"),
    ),
    (
        "link_down_datacenter",
        include_str!("../../../../benchmark/link_down_datacenter.json"),
    ),
    (
        "link_flap_isp",
        include_str!("../../../../benchmark/link_flap_isp.json"),
    ),
    (
        "microburst_cloud",
        include_str!("../../../../benchmark/microburst_cloud.json"),
    ),
    (
        "mtu_fragmentation_disabled_cloud",
        include_str!("../../../../benchmark/mtu_fragmentation_disabled_cloud.json"),
    ),
    (
        "ospf_area_mismatch_isp",
        include_str!("../../../../benchmark/ospf_area_mismatch_isp.json"),
    ),
    (
        "single_link_datacenter_incast",
        include_str!("../../../../benchmark/single_link_datacenter_incast.json"),
    ),
    (
        "static_blackhole_campus",
        include_str!("../../../../benchmark/static_blackhole_campus.json"),
    ),
    (
        "switch_crash_datacenter",
        include_str!("../../../../benchmark/switch_crash_datacenter.json"),
    ),
];

/// `(name, document)` for every shipped template.
pub const TEMPLATES: &[(&str, &str)] = &[
    (
        "dos_flood_template",
        include_str!("../../../../benchmark/templates/dos_flood.json"),
    ),
    (
        "faulty_cable_template",
        include_str!("../../../../benchmark/templates/faulty_cable.json"),
    ),
    (
        "forwarding_loop_template",
        include_str!("../../../../benchmark/templates/forwarding_loop.json"),
    ),
    (
        "fwd_entry_misconfig_template",
        include_str!("../../../../benchmark/templates/fwd_entry_misconfig.json"),
    ),
    (
        "host_crash_template",
        include_str!("../../../../benchmark/templates/host_crash.json"),
    ),
    (
        "host_ip_misconfig_template",
        include_str!("../../../../benchmark/templates/host_ip_misconfig.json"),
    ),
    (
        "http_acl_block_template",
        include_str!("../../../../benchmark/templates/http_acl_block.json"),
    ),
    (
        "icmp_acl_block_template",
        include_str!("../../../../benchmark/templates/icmp_acl_block.json"),
    ),
    (
        "incast_traffic_template",
        include_str!("../../../../benchmark/templates/incast_traffic.json"),
    ),
    (
        "incorrect_netmask_template",
        include_str!("../../../../benchmark/templates/incorrect_netmask.json"),
    ),
    (
        "link_detached_template",
        include_str!("../../../../benchmark/templates/link_detached.json"),
    ),
    (
        "link_down_template",
        include_str!("../../../../benchmark/templates/link_down.json"),
    ),
    (
        "link_flap_template",
        include_str!("../../../../benchmark/templates/link_flap.json"),
    ),
    (
        "microburst_template",
        include_str!("../../../../benchmark/templates/microburst.json"),
    ),
    (
        "mtu_fragmentation_disabled_template",
        include_str!("../../../../benchmark/templates/mtu_fragmentation_disabled.json"),
    ),
    (
        "ospf_area_mismatch_template",
        include_str!("../../../../benchmark/templates/ospf_area_mismatch.json"),
    ),
    (
        "static_blackhole_template",
        include_str!("../../../../benchmark/templates/static_blackhole.json"),
    ),
    (
        "switch_crash_template",
        include_str!("../../../../benchmark/templates/switch_crash.json"),
    ),
];
/// Load a shipped incident by name.
pub fn incident(name: &str) -> Option<Result<IncidentSpec, SpecError>> {
    INCIDENTS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| load_spec(d))
}

/// A shipped template document by name.
pub fn template(name: &str) -> Option<Value> {
    TEMPLATES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| serde_json::from_str(d).expect("shipped template is JSON"))
}

/// Every shipped concrete incident, in name order.
pub fn all_incidents() -> Vec<IncidentSpec> {
    INCIDENTS
        .iter()
        .map(|(n, d)| load_spec(d).unwrap_or_else(|e| panic!("shipped incident {n}: {e}")))
        .collect()
}
