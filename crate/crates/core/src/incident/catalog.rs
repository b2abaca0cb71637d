//! The closed root-cause catalog.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RootCause {
    LinkDown,
    LinkDetached,
    LinkFlap,
    FaultyCable,
    MtuFragmentationDisabled,
    HostCrash,
    SwitchCrash,
    HostIpMisconfig,
    IncorrectNetmask,
    OspfAreaMismatch,
    StaticBlackhole,
    FwdEntryMisconfig,
    ForwardingLoop,
    IcmpAclBlock,
    HttpAclBlock,
    IncastTraffic,
    Microburst,
    DosFlood,
}

/// Fault family, used for grouping in listings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    LinkFailure,
    EndHostFailure,
    Misconfiguration,
    NetworkNodeError,
    ResourceContention,
    Performance,
}

/// What a cause's `(dev, comp)` must look like.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// Interface of a switch or router with a link attached.
    FabricInterface,
    HostSystem,
    ForwarderSystem,
    HostInterface,
    /// Interface on a router-router link.
    RouterPeerInterface,
    ForwarderRouting,
    ForwarderAcl,
    /// Switch or router interface facing a host.
    VictimPort,
    HostService,
}

impl RootCause {
    pub const ALL: [RootCause; 18] = [
        RootCause::LinkDown,
        RootCause::LinkDetached,
        RootCause::LinkFlap,
        RootCause::FaultyCable,
        RootCause::MtuFragmentationDisabled,
        RootCause::HostCrash,
        RootCause::SwitchCrash,
        RootCause::HostIpMisconfig,
        RootCause::IncorrectNetmask,
        RootCause::OspfAreaMismatch,
        RootCause::StaticBlackhole,
        RootCause::FwdEntryMisconfig,
        RootCause::ForwardingLoop,
        RootCause::IcmpAclBlock,
        RootCause::HttpAclBlock,
        RootCause::IncastTraffic,
        RootCause::Microburst,
        RootCause::DosFlood,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RootCause::LinkDown => "link_down",
            RootCause::LinkDetached => "link_detached",
            RootCause::LinkFlap => "link_flap",
            RootCause::FaultyCable => "faulty_cable",
            RootCause::MtuFragmentationDisabled => "mtu_fragmentation_disabled",
            RootCause::HostCrash => "host_crash",
            RootCause::SwitchCrash => "switch_crash",
            RootCause::HostIpMisconfig => "host_ip_misconfig",
            RootCause::IncorrectNetmask => "incorrect_netmask",
            RootCause::OspfAreaMismatch => "ospf_area_mismatch",
            RootCause::StaticBlackhole => "static_blackhole",
            RootCause::FwdEntryMisconfig => "fwd_entry_misconfig",
            RootCause::ForwardingLoop => "forwarding_loop",
            RootCause::IcmpAclBlock => "icmp_acl_block",
            RootCause::HttpAclBlock => "http_acl_block",
            RootCause::IncastTraffic => "incast_traffic",
            RootCause::Microburst => "microburst",
            RootCause::DosFlood => "dos_flood",
        }
    }

    /// Position in [`RootCause::ALL`], the RCA mask order.
    pub fn index(self) -> usize {
        RootCause::ALL
            .iter()
            .position(|&c| c == self)
            .expect("member of ALL")
    }

    pub fn category(self) -> Category {
        use RootCause::*;
        match self {
            LinkDown | LinkDetached | LinkFlap | FaultyCable => Category::LinkFailure,
            HostCrash | HostIpMisconfig | IncorrectNetmask => Category::EndHostFailure,
            MtuFragmentationDisabled
            | OspfAreaMismatch
            | StaticBlackhole
            | FwdEntryMisconfig
            | IcmpAclBlock
            | HttpAclBlock => Category::Misconfiguration,
            SwitchCrash | ForwardingLoop => Category::NetworkNodeError,
            IncastTraffic | Microburst => Category::ResourceContention,
            DosFlood => Category::Performance,
        }
    }

    pub fn target(self) -> Target {
        use RootCause::*;
        match self {
            LinkDown | LinkDetached | LinkFlap | FaultyCable | MtuFragmentationDisabled => {
                Target::FabricInterface
            }
            HostCrash => Target::HostSystem,
            SwitchCrash => Target::ForwarderSystem,
            HostIpMisconfig | IncorrectNetmask => Target::HostInterface,
            OspfAreaMismatch => Target::RouterPeerInterface,
            StaticBlackhole | FwdEntryMisconfig | ForwardingLoop => Target::ForwarderRouting,
            IcmpAclBlock | HttpAclBlock => Target::ForwarderAcl,
            IncastTraffic | Microburst => Target::VictimPort,
            DosFlood => Target::HostService,
        }
    }

    /// Whether the cause is induced by traffic rather than a state change.
    pub fn is_traffic(self) -> bool {
        matches!(
            self,
            RootCause::IncastTraffic | RootCause::Microburst | RootCause::DosFlood
        )
    }

    /// Canonical log line; `{...}` marks a substituted field.
    pub fn log_template(self) -> &'static str {
        use RootCause::*;
        match self {
            LinkDown => "LINK_DOWN {intf}: Interface state down",
            LinkDetached => "LINK_DETACHED {intf}: Physical link not detected; PHY down",
            LinkFlap => "LINK_FLAP {intf} {state}",
            FaultyCable => "CRC_ERROR {intf}: corrupted frames received",
            MtuFragmentationDisabled => {
                "MTU_DROP {intf}: large packet dropped, fragmentation disabled"
            }
            HostCrash => "HOST_UNRESPONSIVE {intf}: no heartbeat from {node}",
            SwitchCrash => "NEIGHBOR_DOWN {intf}: lost contact with {node}",
            HostIpMisconfig => "ADDR_CHANGE {intf}: address set to {addr}",
            IncorrectNetmask => "MASK_CHANGE {intf}: netmask set to /{len}",
            OspfAreaMismatch => "OSPF adjacency failure: area mismatch on {intf}",
            StaticBlackhole => "STATIC_ROUTE {prefix} via Null0 installed",
            FwdEntryMisconfig => "FIB_OVERRIDE {prefix} -> {intf}",
            ForwardingLoop => "TTL_EXPIRED {dst}: traffic loop observed",
            IcmpAclBlock => "ACL_UPDATE: deny icmp any any",
            HttpAclBlock => "ACL_UPDATE: deny tcp any any eq 80,443",
            IncastTraffic | Microburst => "QUEUE_DROP {intf}: egress buffer full",
            DosFlood => "SERVICE_OVERLOAD {service}: request rate exceeds capacity",
        }
    }

    /// Whether `line` is an instance of this cause's log template.
    pub fn matches_log(self, line: &str) -> bool {
        let mut pat = String::new();
        let mut in_slot = false;
        for ch in self.log_template().chars() {
            match ch {
                '{' => {
                    in_slot = true;
                    pat.push('*');
                }
                '}' => in_slot = false,
                c if !in_slot => {
                    if c == '*' || c == '?' {
                        pat.push('?');
                    } else {
                        pat.push(c);
                    }
                }
                _ => {}
            }
        }
        crate::glob::matches(&pat, line)
    }
}

impl fmt::Display for RootCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("out-of-scope root cause: {0}")]
pub struct UnknownCause(pub String);

impl FromStr for RootCause {
    type Err = UnknownCause;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RootCause::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownCause(s.to_string()))
    }
}

impl Serialize for RootCause {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RootCause {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        assert_eq!(RootCause::ALL.len(), 18);
        for c in RootCause::ALL {
            assert_eq!(c.as_str().parse::<RootCause>().unwrap(), c);
            assert_eq!(RootCause::ALL[c.index()], c);
        }
        let e = "bgp_asn_mismatch".parse::<RootCause>().unwrap_err();
        assert_eq!(e.to_string(), "out-of-scope root cause: bgp_asn_mismatch");
    }

    #[test]
    fn templates_match_sim_text() {
        assert!(RootCause::LinkDown.matches_log("LINK_DOWN eth0: Interface state down"));
        assert!(!RootCause::LinkDown
            .matches_log("LINK_DETACHED eth0: Physical link not detected; PHY down"));
        assert!(RootCause::LinkFlap.matches_log("LINK_FLAP eth1 down"));
        assert!(RootCause::OspfAreaMismatch
            .matches_log("OSPF adjacency failure: area mismatch on eth2"));
        assert!(RootCause::HttpAclBlock.matches_log("ACL_UPDATE: deny tcp any any eq 80,443"));
        assert!(!RootCause::IcmpAclBlock.matches_log("ACL_UPDATE: deny tcp any any eq 80,443"));
    }

    #[test]
    fn every_category_is_covered() {
        use std::collections::BTreeSet;
        let cats: BTreeSet<String> = RootCause::ALL
            .iter()
            .map(|c| format!("{:?}", c.category()))
            .collect();
        assert_eq!(cats.len(), 6);
    }
}
