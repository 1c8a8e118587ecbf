//! ARP detectors as state machines over (state, frame, virtual time).
//!
//! Two strategies ship: the cross-layer consistency checker (`clcc`) and a
//! trusting RFC 826 stack (`baseline`). Both are reachable through
//! [`DetectorRegistry`] by name.

mod baseline;
mod clcc;
mod registry;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::packet::{ArpMessage, Frame, Ipv4Address, MacAddress, Opcode};
use crate::scenario::AttackClass;
use crate::time::VirtualTime;

pub use baseline::{baseline_on_frame, Baseline};
pub use clcc::{clcc_host_on_frame, clcc_router_on_frame, Clcc};
pub use registry::{ArpAgent, DetectorRegistry, DetectorStrategy};

/// Default cache clearing period: ten minutes of virtual time.
pub const DEFAULT_CLEAR_INTERVAL: VirtualTime = VirtualTime::from_secs(600);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Binding {
    pub ip: Ipv4Address,
    pub mac: MacAddress,
}

impl Binding {
    pub fn new(ip: Ipv4Address, mac: MacAddress) -> Self {
        Binding { ip, mac }
    }

    pub fn sender_of(arp: &ArpMessage) -> Self {
        Binding::new(arp.sender_ip, arp.sender_mac)
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.ip, self.mac)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArpCacheEntry {
    pub ip: Ipv4Address,
    pub mac: MacAddress,
    pub inserted_at: VirtualTime,
    pub static_entry: bool,
}

/// Sequentially scanned ARP table, at most one entry per IP.
///
/// Every entry visited bumps the caller's operation counter so per-frame
/// work can be measured.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArpCache {
    entries: Vec<ArpCacheEntry>,
}

impl ArpCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_static(bindings: impl IntoIterator<Item = Binding>) -> Self {
        let mut c = Self::new();
        for b in bindings {
            c.insert_static(b);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ArpCacheEntry] {
        &self.entries
    }

    pub fn has_static(&self) -> bool {
        self.entries.iter().any(|e| e.static_entry)
    }

    pub fn lookup(&self, ip: Ipv4Address) -> Option<&ArpCacheEntry> {
        self.entries.iter().find(|e| e.ip == ip)
    }

    pub fn insert_static(&mut self, b: Binding) {
        self.entries.retain(|e| e.ip != b.ip);
        self.entries.push(ArpCacheEntry {
            ip: b.ip,
            mac: b.mac,
            inserted_at: VirtualTime::ZERO,
            static_entry: true,
        });
    }

    /// Inserts or refreshes a dynamic entry. Static entries are never
    /// overwritten; returns false in that case.
    pub fn learn(&mut self, b: Binding, now: VirtualTime, ops: &mut u64) -> bool {
        for e in self.entries.iter_mut() {
            *ops += 1;
            if e.ip == b.ip {
                if e.static_entry {
                    return false;
                }
                e.mac = b.mac;
                e.inserted_at = now;
                return true;
            }
        }
        self.entries.push(ArpCacheEntry {
            ip: b.ip,
            mac: b.mac,
            inserted_at: now,
            static_entry: false,
        });
        true
    }

    /// Conflict against the table: an entry for the same IP with another
    /// MAC, or a static entry pinning the same MAC to another IP.
    pub fn conflicts_with(&self, b: Binding, ops: &mut u64) -> bool {
        self.entries.iter().any(|e| {
            *ops += 1;
            (e.ip == b.ip && e.mac != b.mac) || (e.static_entry && e.mac == b.mac && e.ip != b.ip)
        })
    }

    pub fn contains_exact(&self, b: Binding, ops: &mut u64) -> bool {
        self.entries.iter().any(|e| {
            *ops += 1;
            e.ip == b.ip && e.mac == b.mac
        })
    }

    pub fn knows_mac(&self, mac: MacAddress, ops: &mut u64) -> bool {
        self.entries.iter().any(|e| {
            *ops += 1;
            e.mac == mac
        })
    }

    /// Drops dynamic entries matching the binding; returns how many.
    pub fn evict(&mut self, b: Binding) -> usize {
        let before = self.entries.len();
        self.entries
            .retain(|e| e.static_entry || !(e.ip == b.ip && e.mac == b.mac));
        before - self.entries.len()
    }

    pub fn clear_dynamic(&mut self) {
        self.entries.retain(|e| e.static_entry);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FakeListEntry {
    pub ip: Ipv4Address,
    pub mac: MacAddress,
    pub first_seen: VirtualTime,
    pub hit_count: u32,
}

/// Bindings judged forged. Never shrinks unless a TTL is configured.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FakeList {
    entries: Vec<FakeListEntry>,
}

impl FakeList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[FakeListEntry] {
        &self.entries
    }

    pub fn contains(&self, b: Binding, ops: &mut u64) -> bool {
        self.entries.iter().any(|e| {
            *ops += 1;
            e.ip == b.ip && e.mac == b.mac
        })
    }

    /// Records an observation of a forged binding: bumps the hit count if
    /// present, inserts otherwise. Returns whether it was already listed.
    pub fn observe(&mut self, b: Binding, now: VirtualTime, ops: &mut u64) -> bool {
        for e in self.entries.iter_mut() {
            *ops += 1;
            if e.ip == b.ip && e.mac == b.mac {
                e.hit_count += 1;
                return true;
            }
        }
        self.entries.push(FakeListEntry {
            ip: b.ip,
            mac: b.mac,
            first_seen: now,
            hit_count: 1,
        });
        false
    }

    pub fn expire(&mut self, now: VirtualTime, ttl: VirtualTime) {
        self.entries
            .retain(|e| now.saturating_sub(e.first_seen) < ttl);
    }
}

/// Tunables shared by every detector node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Knobs {
    pub clear_interval: VirtualTime,
    /// `None` keeps fake-list entries forever.
    pub fake_list_ttl: Option<VirtualTime>,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs {
            clear_interval: DEFAULT_CLEAR_INTERVAL,
            fake_list_ttl: None,
        }
    }
}

/// The mutable part of any detector node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tables {
    pub cache: ArpCache,
    pub fake_list: FakeList,
    pub last_clear: VirtualTime,
    pub knobs: Knobs,
    /// Cache and fake-list entries inspected plus one per rule evaluated.
    pub ops: u64,
}

impl Tables {
    pub fn new(cache: ArpCache, knobs: Knobs) -> Self {
        Tables {
            cache,
            knobs,
            ..Default::default()
        }
    }
}

/// Clears dynamic cache entries once the clear interval has elapsed since
/// the last clear. Static entries survive.
pub fn maybe_clear_cache(tables: &mut Tables, now: VirtualTime) -> bool {
    if now.saturating_sub(tables.last_clear) < tables.knobs.clear_interval {
        return false;
    }
    tables.cache.clear_dynamic();
    if let Some(ttl) = tables.knobs.fake_list_ttl {
        tables.fake_list.expire(now, ttl);
    }
    tables.last_clear = now;
    true
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostState {
    pub own: Binding,
    pub router: Binding,
    pub tables: Tables,
}

impl HostState {
    pub fn new(own: Binding, router: Binding, static_entries: &[Binding], knobs: Knobs) -> Self {
        let statics = static_entries.iter().copied().filter(|b| b.ip != own.ip);
        HostState {
            own,
            router,
            tables: Tables::new(ArpCache::with_static(statics), knobs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouterState {
    pub own: Binding,
    pub tables: Tables,
}

impl RouterState {
    /// The router's cache is authoritative: seeded with the real topology
    /// as static entries.
    pub fn new(own: Binding, topology: &[Binding], knobs: Knobs) -> Self {
        let statics = topology.iter().copied().filter(|b| b.ip != own.ip);
        RouterState {
            own,
            tables: Tables::new(ArpCache::with_static(statics), knobs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerdictKind {
    Accepted,
    Detected,
    Ignored,
}

/// Which detection rule fired. Listed in precedence order: when several
/// rules match a frame, the earliest wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reason {
    NullMac,
    CrossLayerMismatch,
    RouterIpMismatch,
    RouterCacheMismatch,
    FakeListHit,
    CacheConflict,
    SelfIpConflict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub reason: Option<Reason>,
    /// Frames to transmit in response. `frame_id` is assigned by the
    /// network on injection.
    pub emitted: Vec<Frame>,
}

impl Verdict {
    pub fn accepted() -> Self {
        Verdict {
            kind: VerdictKind::Accepted,
            reason: None,
            emitted: Vec::new(),
        }
    }

    pub fn ignored() -> Self {
        Verdict {
            kind: VerdictKind::Ignored,
            reason: None,
            emitted: Vec::new(),
        }
    }

    pub fn detected(reason: Reason) -> Self {
        Verdict {
            kind: VerdictKind::Detected,
            reason: Some(reason),
            emitted: Vec::new(),
        }
    }

    pub fn with_emitted(mut self, frames: Vec<Frame>) -> Self {
        self.emitted = frames;
        self
    }

    pub fn is_detected(&self) -> bool {
        self.kind == VerdictKind::Detected
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    TruePositive,
    FalseNegative,
    FalsePositive,
    TrueNegative,
}

pub fn classify_detection(ground_truth: AttackClass, verdict: VerdictKind) -> Outcome {
    match (ground_truth.is_abnormal(), verdict == VerdictKind::Detected) {
        (true, true) => Outcome::TruePositive,
        (true, false) => Outcome::FalseNegative,
        (false, true) => Outcome::FalsePositive,
        (false, false) => Outcome::TrueNegative,
    }
}

pub(crate) fn reply_frame(own: Binding, to: Binding) -> Frame {
    Frame::new(
        to.mac,
        own.mac,
        ArpMessage {
            opcode: Opcode::Reply,
            sender_mac: own.mac,
            sender_ip: own.ip,
            target_mac: to.mac,
            target_ip: to.ip,
        },
        0,
    )
}

/// Unicast alert (opcode 26): the reporter's own binding in the sender
/// fields, the router as target.
pub(crate) fn unicast_alert(own: Binding, router: Binding) -> Frame {
    Frame::new(
        router.mac,
        own.mac,
        ArpMessage {
            opcode: Opcode::UnicastAlert,
            sender_mac: own.mac,
            sender_ip: own.ip,
            target_mac: router.mac,
            target_ip: router.ip,
        },
        0,
    )
}

/// Broadcast alert (opcode 25): the forged binding in the sender fields;
/// the Ethernet source identifies the alerting host.
pub(crate) fn broadcast_alert(own: Binding, forged: Binding) -> Frame {
    Frame::new(
        MacAddress::BROADCAST,
        own.mac,
        ArpMessage {
            opcode: Opcode::BroadcastAlert,
            sender_mac: forged.mac,
            sender_ip: forged.ip,
            target_mac: MacAddress::NULL,
            target_ip: Ipv4Address::UNSPECIFIED,
        },
        0,
    )
}
