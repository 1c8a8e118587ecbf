//! Ground-truth labelled traffic: the eleven malicious packet classes plus
//! benign request/reply traffic, and the scenario file that pins a run.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{Binding, Knobs};
use crate::packet::{
    is_cross_layer_consistent, ArpMessage, Frame, Ipv4Address, MacAddress, Opcode,
};
use crate::sim::Event;
use crate::time::VirtualTime;

/// Name of the pseudo-random stream embedded in every report.
pub const GENERATOR_NAME: &str = "chacha8 (rand_chacha 0.9, SeedableRng::seed_from_u64)";

pub const ROUTER_ID: &str = "router";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttackClass {
    Normal,
    /// Request carrying a valid MAC with an unassigned sender IP.
    #[serde(rename = "PKT1")]
    Pkt1,
    /// Request whose ARP sender MAC differs from the Ethernet source.
    #[serde(rename = "PKT2")]
    Pkt2,
    /// Request binding the victim's own MAC to a foreign IP.
    #[serde(rename = "PKT3")]
    Pkt3,
    /// Reply whose ARP sender MAC differs from the Ethernet source.
    #[serde(rename = "PKT4")]
    Pkt4,
    /// Reply claiming the gateway's IP for the attacker's MAC.
    #[serde(rename = "PKT5")]
    Pkt5,
    /// Reply unicast to the victim naming an IP the victim does not own.
    #[serde(rename = "PKT6")]
    Pkt6,
    /// Broadcast alert from an Ethernet source outside the LAN.
    #[serde(rename = "PKT7")]
    Pkt7,
    /// Broadcast alert naming the null MAC.
    #[serde(rename = "PKT8")]
    Pkt8,
    /// Unicast alert whose ARP sender MAC differs from the Ethernet source.
    #[serde(rename = "PKT9")]
    Pkt9,
    /// Unicast alert addressed to the wrong router IP.
    #[serde(rename = "PKT10")]
    Pkt10,
    /// Unicast alert from a binding the router does not hold.
    #[serde(rename = "PKT11")]
    Pkt11,
}

impl AttackClass {
    pub const ALL: [AttackClass; 12] = [
        AttackClass::Normal,
        AttackClass::Pkt1,
        AttackClass::Pkt2,
        AttackClass::Pkt3,
        AttackClass::Pkt4,
        AttackClass::Pkt5,
        AttackClass::Pkt6,
        AttackClass::Pkt7,
        AttackClass::Pkt8,
        AttackClass::Pkt9,
        AttackClass::Pkt10,
        AttackClass::Pkt11,
    ];

    pub const ABNORMAL: [AttackClass; 11] = [
        AttackClass::Pkt1,
        AttackClass::Pkt2,
        AttackClass::Pkt3,
        AttackClass::Pkt4,
        AttackClass::Pkt5,
        AttackClass::Pkt6,
        AttackClass::Pkt7,
        AttackClass::Pkt8,
        AttackClass::Pkt9,
        AttackClass::Pkt10,
        AttackClass::Pkt11,
    ];

    pub fn is_abnormal(self) -> bool {
        self != AttackClass::Normal
    }

    pub fn label(self) -> &'static str {
        match self {
            AttackClass::Normal => "Normal",
            AttackClass::Pkt1 => "PKT1",
            AttackClass::Pkt2 => "PKT2",
            AttackClass::Pkt3 => "PKT3",
            AttackClass::Pkt4 => "PKT4",
            AttackClass::Pkt5 => "PKT5",
            AttackClass::Pkt6 => "PKT6",
            AttackClass::Pkt7 => "PKT7",
            AttackClass::Pkt8 => "PKT8",
            AttackClass::Pkt9 => "PKT9",
            AttackClass::Pkt10 => "PKT10",
            AttackClass::Pkt11 => "PKT11",
        }
    }

    /// Whether the router (rather than a host) is the party under attack.
    pub fn targets_router(self) -> bool {
        matches!(
            self,
            AttackClass::Pkt9 | AttackClass::Pkt10 | AttackClass::Pkt11
        )
    }
}

impl fmt::Display for AttackClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AttackClass {
    type Err = ScenarioError;

    /// Accepts `PKT2`, `pkt2`, `PKT#2` and `Normal`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('#', "").to_ascii_uppercase();
        AttackClass::ALL
            .into_iter()
            .find(|c| c.label().to_ascii_uppercase() == norm)
            .ok_or_else(|| ScenarioError::UnknownClass(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown attack class {0:?}")]
    UnknownClass(String),
    #[error("scenario mix is empty")]
    EmptyMix,
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scenario file: {0}")]
    Write(#[from] toml::ser::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostSpec {
    pub id: String,
    pub ip: Ipv4Address,
    pub mac: MacAddress,
    #[serde(default)]
    pub static_entries: Vec<Binding>,
}

impl HostSpec {
    pub fn binding(&self) -> Binding {
        Binding::new(self.ip, self.mac)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub attacker: String,
    pub router: Binding,
    pub hosts: Vec<HostSpec>,
}

impl Topology {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::InvalidTopology(m));
        let mut ips = vec![self.router.ip];
        let mut macs = vec![self.router.mac];
        let mut ids: Vec<&str> = vec![ROUTER_ID];
        for h in &self.hosts {
            if ips.contains(&h.ip) {
                return bad(format!("duplicate ip {}", h.ip));
            }
            if macs.contains(&h.mac) {
                return bad(format!("duplicate mac {}", h.mac));
            }
            if ids.contains(&h.id.as_str()) || h.id == "none" {
                return bad(format!("duplicate or reserved host id {:?}", h.id));
            }
            if h.mac.is_null() || h.mac.is_broadcast() {
                return bad(format!("host {} has a reserved mac", h.id));
            }
            ips.push(h.ip);
            macs.push(h.mac);
            ids.push(&h.id);
        }
        if !self.hosts.iter().any(|h| h.id == self.attacker) {
            return bad(format!("attacker {:?} is not a host", self.attacker));
        }
        if self.victims().len() < 2 {
            return bad("need at least two hosts besides the attacker".into());
        }
        Ok(())
    }

    pub fn host(&self, id: &str) -> Option<&HostSpec> {
        self.hosts.iter().find(|h| h.id == id)
    }

    pub fn attacker_host(&self) -> &HostSpec {
        self.host(&self.attacker).expect("validated topology")
    }

    /// Hosts other than the attacker.
    pub fn victims(&self) -> Vec<&HostSpec> {
        self.hosts
            .iter()
            .filter(|h| h.id != self.attacker)
            .collect()
    }

    /// All true bindings: every host plus the router.
    pub fn bindings(&self) -> Vec<Binding> {
        self.hosts
            .iter()
            .map(HostSpec::binding)
            .chain(std::iter::once(self.router))
            .collect()
    }

    pub fn is_bound_ip(&self, ip: Ipv4Address) -> bool {
        self.bindings().iter().any(|b| b.ip == ip)
    }

    pub fn is_bound_mac(&self, mac: MacAddress) -> bool {
        self.bindings().iter().any(|b| b.mac == mac)
    }
}

pub const ROUTER_MAC: MacAddress = MacAddress([0x00, 0x05, 0x79, 0x66, 0x10, 0xfe]);

/// Three hosts A, B, C on 192.169.1.0/24 with the gateway at 10.10.1.0.
/// C is the attacker.
pub fn paper_topology() -> Topology {
    let host = |id: &str, last: u8, m: u8| HostSpec {
        id: id.to_string(),
        ip: Ipv4Address::new(192, 169, 1, last),
        mac: MacAddress([0x00, 0x05, 0x79, 0x66, 0x68, m]),
        static_entries: Vec::new(),
    };
    Topology {
        attacker: "C".to_string(),
        router: Binding::new(Ipv4Address::new(10, 10, 1, 0), ROUTER_MAC),
        hosts: vec![
            host("A", 10, 0x01),
            host("B", 11, 0x02),
            host("C", 12, 0x03),
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Registry name of the detector strategy.
    #[serde(default = "default_detector")]
    pub kind: String,
    #[serde(default = "default_clear_interval")]
    pub clear_interval_secs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fake_list_ttl_secs: Option<u64>,
    /// Static entries installed on every host.
    #[serde(default)]
    pub static_entries: Vec<Binding>,
    /// Also install every topology binding as a static entry on each host.
    #[serde(default)]
    pub static_from_topology: bool,
}

fn default_detector() -> String {
    "clcc".to_string()
}

fn default_clear_interval() -> u64 {
    600
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            kind: default_detector(),
            clear_interval_secs: default_clear_interval(),
            fake_list_ttl_secs: None,
            static_entries: Vec::new(),
            static_from_topology: false,
        }
    }
}

impl DetectorConfig {
    pub fn knobs(&self) -> Knobs {
        Knobs {
            clear_interval: VirtualTime::from_secs(self.clear_interval_secs),
            fake_list_ttl: self.fake_list_ttl_secs.map(VirtualTime::from_secs),
        }
    }

    /// Static entries for one host: configured list, topology seeding, and
    /// the host's own list. Later sources win on duplicate IPs.
    pub fn static_entries_for(&self, topo: &Topology, host: &HostSpec) -> Vec<Binding> {
        let mut out: Vec<Binding> = Vec::new();
        let mut push = |b: Binding| {
            out.retain(|e| e.ip != b.ip);
            out.push(b);
        };
        if self.static_from_topology {
            topo.hosts.iter().map(HostSpec::binding).for_each(&mut push);
        }
        self.static_entries.iter().copied().for_each(&mut push);
        host.static_entries.iter().copied().for_each(&mut push);
        out.retain(|b| b.ip != host.ip);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    /// Virtual seconds between injected frames.
    #[serde(default = "default_gap")]
    pub gap_secs: f64,
    #[serde(default = "default_link_delay")]
    pub link_delay_ms: u64,
}

fn default_gap() -> f64 {
    0.5
}

fn default_link_delay() -> u64 {
    1
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            gap_secs: default_gap(),
            link_delay_ms: default_link_delay(),
        }
    }
}

impl Schedule {
    pub fn gap(&self) -> VirtualTime {
        VirtualTime::from_secs_f64(self.gap_secs)
    }

    pub fn link_delay(&self) -> VirtualTime {
        VirtualTime::from_millis(self.link_delay_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    pub seed: SeedSection,
    pub topology: Topology,
    pub mix: BTreeMap<AttackClass, u32>,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub schedule: Schedule,
}

/// Frames per abnormal class in the canonical mix: 11 x 105 = 1155.
pub const PAPER_MIX_PER_CLASS: u32 = 105;
pub const PAPER_MIX_NORMAL: u32 = 100;

impl Scenario {
    /// 100 benign frames and 105 of each abnormal class on the three-node
    /// topology, CLCC with default knobs.
    pub fn paper_mix(seed: u64) -> Self {
        let mut mix = BTreeMap::new();
        mix.insert(AttackClass::Normal, PAPER_MIX_NORMAL);
        for c in AttackClass::ABNORMAL {
            mix.insert(c, PAPER_MIX_PER_CLASS);
        }
        Scenario {
            label: "paper-mix".to_string(),
            seed: SeedSection { value: seed },
            topology: paper_topology(),
            mix,
            detector: DetectorConfig::default(),
            schedule: Schedule::default(),
        }
    }

    pub fn total_frames(&self) -> u64 {
        self.mix.values().map(|&n| n as u64).sum()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.topology.validate()?;
        if self.total_frames() == 0 {
            return Err(ScenarioError::EmptyMix);
        }
        if self.detector.clear_interval_secs == 0 {
            return Err(ScenarioError::Invalid(
                "clear_interval_secs must be positive".into(),
            ));
        }
        if !(self.schedule.gap_secs.is_finite() && self.schedule.gap_secs >= 0.0) {
            return Err(ScenarioError::Invalid(
                "gap_secs must be a non-negative number".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string(self)?)
    }
}

/// Seeded stream used for all generation. Only `next_u64` of the
/// underlying generator is consumed; bounded draws use rejection sampling
/// so the sequence is reproducible from the generator alone.
pub struct ScenarioRng {
    inner: ChaCha8Rng,
}

impl ScenarioRng {
    pub fn new(seed: u64) -> Self {
        ScenarioRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Fisher-Yates, last index first.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// One generated frame with its ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub class: AttackClass,
    pub frame: Frame,
    /// Node the frame is sent from.
    pub origin: String,
    /// Node whose verdict counts for this frame.
    pub victim: String,
}

fn arp_frame(
    op: Opcode,
    eth_dst: MacAddress,
    eth_src: MacAddress,
    sender: Binding,
    target: Binding,
) -> Frame {
    Frame::new(
        eth_dst,
        eth_src,
        ArpMessage {
            opcode: op,
            sender_mac: sender.mac,
            sender_ip: sender.ip,
            target_mac: target.mac,
            target_ip: target.ip,
        },
        0,
    )
}

/// An address in the victim's /24 that no node owns.
fn unbound_ip(topo: &Topology, near: Ipv4Address, rng: &mut ScenarioRng) -> Ipv4Address {
    let [a, b, c, _] = near.octets();
    loop {
        let ip = Ipv4Address::new(a, b, c, 1 + rng.below(254) as u8);
        if !topo.is_bound_ip(ip) {
            return ip;
        }
    }
}

/// An address two /24s above the victim's, as in 192.169.1.x -> 192.169.3.x.
fn foreign_ip(near: Ipv4Address, rng: &mut ScenarioRng) -> Ipv4Address {
    let [a, b, c, _] = near.octets();
    Ipv4Address::new(a, b, c.wrapping_add(2), 1 + rng.below(254) as u8)
}

/// A unicast MAC no node owns, different from `avoid`.
fn unbound_mac(topo: &Topology, avoid: MacAddress, rng: &mut ScenarioRng) -> MacAddress {
    loop {
        let r = rng.next_u64().to_be_bytes();
        // Keep the vendor prefix of the LAN and clear the multicast bit.
        let mac = MacAddress([0x00, 0x05, 0x79, r[0], r[1], r[2]]);
        if !topo.is_bound_mac(mac) && mac != avoid && !mac.is_null() {
            return mac;
        }
    }
}

/// Builds one frame of the given class against the topology. Attack frames
/// originate at the attacker; benign frames at a victim host.
pub fn generate_class(
    class: AttackClass,
    topo: &Topology,
    rng: &mut ScenarioRng,
) -> Result<Injection, ScenarioError> {
    topo.validate()?;
    let victims = topo.victims();
    let attacker = topo.attacker_host().binding();
    let router = topo.router;
    let victim = (*rng.pick(&victims)).clone();
    let v = victim.binding();
    let others: Vec<&HostSpec> = victims
        .iter()
        .copied()
        .filter(|h| h.id != victim.id)
        .collect();
    let peer = rng.pick(&others).binding();
    let unicast_to_v = Binding::new(v.ip, v.mac);
    let no_target = Binding::new(Ipv4Address::UNSPECIFIED, MacAddress::NULL);
    let router_target = Binding::new(router.ip, router.mac);
    let attack = |frame: Frame, victim: &str| Injection {
        class,
        frame,
        origin: topo.attacker.clone(),
        victim: victim.to_string(),
    };
    let target_v = Binding::new(v.ip, MacAddress::NULL);

    let inj = match class {
        AttackClass::Normal => {
            // Between two non-attacker hosts; victim is the receiver.
            let sender = victim.clone();
            let receiver = others
                .iter()
                .find(|h| h.binding() == peer)
                .expect("peer drawn from others");
            let (s, r) = (sender.binding(), receiver.binding());
            let frame = if rng.coin() {
                arp_frame(
                    Opcode::Request,
                    MacAddress::BROADCAST,
                    s.mac,
                    s,
                    Binding::new(r.ip, MacAddress::NULL),
                )
            } else {
                arp_frame(Opcode::Reply, r.mac, s.mac, s, r)
            };
            Injection {
                class,
                frame,
                origin: sender.id.clone(),
                victim: receiver.id.clone(),
            }
        }
        AttackClass::Pkt1 => {
            let hosts: Vec<MacAddress> = topo
                .hosts
                .iter()
                .map(|h| h.mac)
                .filter(|m| *m != v.mac)
                .collect();
            let claimed = Binding::new(unbound_ip(topo, v.ip, rng), *rng.pick(&hosts));
            attack(
                arp_frame(
                    Opcode::Request,
                    MacAddress::BROADCAST,
                    claimed.mac,
                    claimed,
                    target_v,
                ),
                &victim.id,
            )
        }
        AttackClass::Pkt2 => {
            let forged = Binding::new(peer.ip, unbound_mac(topo, attacker.mac, rng));
            attack(
                arp_frame(
                    Opcode::Request,
                    MacAddress::BROADCAST,
                    attacker.mac,
                    forged,
                    target_v,
                ),
                &victim.id,
            )
        }
        AttackClass::Pkt3 => {
            let claim = Binding::new(foreign_ip(v.ip, rng), v.mac);
            attack(
                arp_frame(
                    Opcode::Request,
                    MacAddress::BROADCAST,
                    v.mac,
                    claim,
                    Binding::new(peer.ip, MacAddress::NULL),
                ),
                &victim.id,
            )
        }
        AttackClass::Pkt4 => {
            let forged = Binding::new(peer.ip, unbound_mac(topo, attacker.mac, rng));
            attack(
                arp_frame(Opcode::Reply, v.mac, attacker.mac, forged, unicast_to_v),
                &victim.id,
            )
        }
        AttackClass::Pkt5 => {
            let spoof = Binding::new(router.ip, attacker.mac);
            attack(
                arp_frame(Opcode::Reply, v.mac, attacker.mac, spoof, unicast_to_v),
                &victim.id,
            )
        }
        AttackClass::Pkt6 => {
            let wrong = Binding::new(unbound_ip(topo, v.ip, rng), v.mac);
            attack(
                arp_frame(Opcode::Reply, v.mac, attacker.mac, attacker, wrong),
                &victim.id,
            )
        }
        AttackClass::Pkt7 => {
            let eth_src = unbound_mac(topo, attacker.mac, rng);
            let named = Binding::new(peer.ip, unbound_mac(topo, eth_src, rng));
            attack(
                arp_frame(
                    Opcode::BroadcastAlert,
                    MacAddress::BROADCAST,
                    eth_src,
                    named,
                    no_target,
                ),
                &victim.id,
            )
        }
        AttackClass::Pkt8 => {
            let named = Binding::new(peer.ip, MacAddress::NULL);
            attack(
                arp_frame(
                    Opcode::BroadcastAlert,
                    MacAddress::BROADCAST,
                    attacker.mac,
                    named,
                    no_target,
                ),
                &victim.id,
            )
        }
        AttackClass::Pkt9 => {
            let forged = Binding::new(peer.ip, unbound_mac(topo, attacker.mac, rng));
            attack(
                arp_frame(
                    Opcode::UnicastAlert,
                    router.mac,
                    attacker.mac,
                    forged,
                    router_target,
                ),
                ROUTER_ID,
            )
        }
        AttackClass::Pkt10 => {
            let [a, b, c, d] = router.ip.octets();
            let wrong = Binding::new(Ipv4Address::new(a, b, c, d.wrapping_add(1)), router.mac);
            attack(
                arp_frame(
                    Opcode::UnicastAlert,
                    router.mac,
                    attacker.mac,
                    attacker,
                    wrong,
                ),
                ROUTER_ID,
            )
        }
        AttackClass::Pkt11 => {
            let spoof = Binding::new(unbound_ip(topo, v.ip, rng), peer.mac);
            attack(
                arp_frame(
                    Opcode::UnicastAlert,
                    router.mac,
                    peer.mac,
                    spoof,
                    router_target,
                ),
                ROUTER_ID,
            )
        }
    };
    Ok(inj)
}

/// The defining property of each abnormal class, checked against the
/// topology and the designated victim. Benign frames satisfy none of these.
pub fn exhibits(class: AttackClass, f: &Frame, topo: &Topology, victim: &str) -> bool {
    let a = &f.arp;
    let sender = Binding::sender_of(a);
    let truth = topo.bindings();
    let victim_binding = topo.host(victim).map(HostSpec::binding);
    let router = topo.router;
    match class {
        AttackClass::Normal => {
            matches!(a.opcode, Opcode::Request | Opcode::Reply)
                && is_cross_layer_consistent(f)
                && truth.contains(&sender)
                && truth.iter().any(|b| b.ip == a.target_ip)
                && AttackClass::ABNORMAL
                    .iter()
                    .all(|&c| !exhibits(c, f, topo, victim))
        }
        AttackClass::Pkt1 => {
            a.opcode == Opcode::Request
                && is_cross_layer_consistent(f)
                && !topo.is_bound_ip(a.sender_ip)
                && topo.hosts.iter().any(|h| h.mac == a.sender_mac)
        }
        AttackClass::Pkt2 => a.opcode == Opcode::Request && !is_cross_layer_consistent(f),
        AttackClass::Pkt3 => {
            a.opcode == Opcode::Request
                && victim_binding.is_some_and(|v| a.sender_mac == v.mac && a.sender_ip != v.ip)
        }
        AttackClass::Pkt4 => a.opcode == Opcode::Reply && !is_cross_layer_consistent(f),
        AttackClass::Pkt5 => {
            a.opcode == Opcode::Reply && a.sender_ip == router.ip && a.sender_mac != router.mac
        }
        AttackClass::Pkt6 => {
            a.opcode == Opcode::Reply
                && victim_binding.is_some_and(|v| f.eth.dst == v.mac && a.target_ip != v.ip)
        }
        AttackClass::Pkt7 => {
            a.opcode == Opcode::BroadcastAlert
                && !a.sender_mac.is_null()
                && !topo.is_bound_mac(f.eth.src)
        }
        AttackClass::Pkt8 => a.opcode == Opcode::BroadcastAlert && a.sender_mac.is_null(),
        AttackClass::Pkt9 => a.opcode == Opcode::UnicastAlert && !is_cross_layer_consistent(f),
        AttackClass::Pkt10 => a.opcode == Opcode::UnicastAlert && a.target_ip != router.ip,
        AttackClass::Pkt11 => {
            a.opcode == Opcode::UnicastAlert
                && is_cross_layer_consistent(f)
                && a.target_ip == router.ip
                && !truth.contains(&sender)
        }
    }
}

/// Expands the mix into injection events: classes in canonical order,
/// shuffled with the scenario seed, then generated and spaced by the gap.
pub fn generate_mix(s: &Scenario) -> Result<Vec<Event>, ScenarioError> {
    s.validate()?;
    let mut classes: Vec<AttackClass> = AttackClass::ALL
        .iter()
        .flat_map(|c| std::iter::repeat_n(*c, s.mix.get(c).copied().unwrap_or(0) as usize))
        .collect();
    let mut rng = ScenarioRng::new(s.seed.value);
    rng.shuffle(&mut classes);
    let gap = s.schedule.gap();
    classes
        .into_iter()
        .enumerate()
        .map(|(i, class)| {
            let mut inj = generate_class(class, &s.topology, &mut rng)?;
            inj.frame.frame_id = i as u64;
            let at = VirtualTime(gap.as_nanos() * i as u64);
            Ok(Event::injected(
                at, i as u64, inj.frame, inj.origin, class, inj.victim,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mac(s: &str) -> MacAddress {
        s.parse().unwrap()
    }

    #[test]
    fn paper_topology_values() {
        let t = paper_topology();
        t.validate().unwrap();
        assert_eq!(t.hosts[0].ip.to_string(), "192.169.1.10");
        assert_eq!(t.hosts[0].mac, mac("00:5:79:66:68:01"));
        assert_eq!(t.hosts[1].ip.to_string(), "192.169.1.11");
        assert_eq!(t.hosts[2].mac, mac("00:05:79:66:68:03"));
        assert_eq!(t.router.ip.to_string(), "10.10.1.0");
        assert_eq!(t.attacker, "C");
    }

    #[test]
    fn topology_rejects_duplicates() {
        let mut t = paper_topology();
        t.hosts[1].mac = t.hosts[0].mac;
        assert!(t.validate().is_err());
        let mut t = paper_topology();
        t.attacker = "Z".into();
        assert!(t.validate().is_err());
        let mut t = paper_topology();
        t.hosts.truncate(2);
        assert!(t.validate().is_err());
    }

    #[test]
    fn class_names() {
        assert_eq!("PKT#2".parse::<AttackClass>().unwrap(), AttackClass::Pkt2);
        assert_eq!("pkt11".parse::<AttackClass>().unwrap(), AttackClass::Pkt11);
        assert_eq!(
            "normal".parse::<AttackClass>().unwrap(),
            AttackClass::Normal
        );
        assert!("PKT12".parse::<AttackClass>().is_err());
    }

    #[test]
    fn bounded_draws_stay_in_range() {
        let mut rng = ScenarioRng::new(7);
        let mut seen = [0u32; 5];
        for _ in 0..5000 {
            seen[rng.below(5) as usize] += 1;
        }
        assert!(seen.iter().all(|&n| n > 800));
    }

    #[test]
    fn every_class_exhibits_its_predicate() {
        let t = paper_topology();
        let mut rng = ScenarioRng::new(3);
        for class in AttackClass::ALL {
            for _ in 0..50 {
                let inj = generate_class(class, &t, &mut rng).unwrap();
                assert!(
                    exhibits(class, &inj.frame, &t, &inj.victim),
                    "{class}: {:?}",
                    inj.frame
                );
            }
        }
    }

    #[test]
    fn table_samples() {
        let t = paper_topology();
        let mut rng = ScenarioRng::new(11);
        let p2 = generate_class(AttackClass::Pkt2, &t, &mut rng).unwrap();
        assert_eq!(p2.frame.arp.opcode, Opcode::Request);
        assert!(!is_cross_layer_consistent(&p2.frame));
        let p8 = generate_class(AttackClass::Pkt8, &t, &mut rng).unwrap();
        assert_eq!(p8.frame.arp.opcode, Opcode::BroadcastAlert);
        assert!(p8.frame.arp.sender_mac.is_null());
        let p10 = generate_class(AttackClass::Pkt10, &t, &mut rng).unwrap();
        assert_eq!(p10.frame.arp.opcode, Opcode::UnicastAlert);
        assert_eq!(p10.frame.arp.target_ip.to_string(), "10.10.1.1");
        assert_eq!(p10.victim, ROUTER_ID);
    }

    #[test]
    fn mix_sizes_and_determinism() {
        let s = Scenario::paper_mix(42);
        let ev = generate_mix(&s).unwrap();
        assert_eq!(ev.len(), 1255);
        assert_eq!(
            ev.iter()
                .filter(|e| e.class.is_some_and(AttackClass::is_abnormal))
                .count(),
            1155
        );
        assert_eq!(ev.last().unwrap().at, VirtualTime::from_secs_f64(627.0));
        assert_eq!(ev, generate_mix(&s).unwrap());
        assert_ne!(ev, generate_mix(&Scenario::paper_mix(43)).unwrap());

        let mut one = s.clone();
        one.mix = [(AttackClass::Normal, 1)].into_iter().collect();
        assert_eq!(generate_mix(&one).unwrap().len(), 1);

        let mut empty = s.clone();
        empty.mix.clear();
        assert!(matches!(generate_mix(&empty), Err(ScenarioError::EmptyMix)));
    }

    #[test]
    fn scenario_file_round_trip() {
        let mut s = Scenario::paper_mix(5);
        s.detector.fake_list_ttl_secs = Some(3600);
        s.topology.hosts[0].static_entries.push(s.topology.router);
        let text = s.to_toml().unwrap();
        for section in ["[seed]", "[topology]", "[mix]", "[detector]", "[schedule]"] {
            assert!(text.contains(section), "missing {section} in\n{text}");
        }
        assert_eq!(Scenario::from_toml(&text).unwrap(), s);
    }

    #[test]
    fn static_entry_sources() {
        let t = paper_topology();
        let mut cfg = DetectorConfig::default();
        assert!(cfg.static_entries_for(&t, &t.hosts[1]).is_empty());
        cfg.static_from_topology = true;
        let s = cfg.static_entries_for(&t, &t.hosts[1]);
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|b| b.ip != t.hosts[1].ip));
    }
}
