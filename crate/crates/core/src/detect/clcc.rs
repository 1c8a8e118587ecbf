//! Cross-layer consistency checking.
//!
//! Requests and replies go through, in order: the null-MAC rule, the
//! ARP-vs-Ethernet sender check, the fake list, cache and pinned-binding
//! conflicts, and the host's own identity. The first rule that matches
//! decides the verdict. Forged bindings are fake-listed and reported to the
//! router with a unicast alert; a binding seen forged twice also triggers a
//! broadcast alert to every host.

use super::registry::{ArpAgent, DetectorStrategy};
use super::{
    broadcast_alert, reply_frame, unicast_alert, Binding, HostState, Reason, RouterState, Tables,
    Verdict,
};
use crate::packet::{is_cross_layer_consistent, Frame, Opcode};
use crate::time::VirtualTime;

pub fn clcc_host_on_frame(state: &mut HostState, f: &Frame, now: VirtualTime) -> Verdict {
    let HostState {
        own,
        router,
        tables,
    } = state;
    match f.arp.opcode {
        Opcode::Request | Opcode::Reply => request_or_reply(*own, Some(*router), tables, f, now),
        Opcode::BroadcastAlert => broadcast_alert_received(Some(*router), tables, f, now),
        Opcode::UnicastAlert => {
            tables.ops += 1;
            Verdict::ignored()
        }
    }
}

pub fn clcc_router_on_frame(state: &mut RouterState, f: &Frame, now: VirtualTime) -> Verdict {
    let RouterState { own, tables } = state;
    match f.arp.opcode {
        Opcode::Request | Opcode::Reply => request_or_reply(*own, None, tables, f, now),
        Opcode::BroadcastAlert => broadcast_alert_received(None, tables, f, now),
        Opcode::UnicastAlert => unicast_alert_received(*own, tables, f, now),
    }
}

fn request_or_reply(
    own: Binding,
    gateway: Option<Binding>,
    t: &mut Tables,
    f: &Frame,
    now: VirtualTime,
) -> Verdict {
    let arp = &f.arp;
    let sender = Binding::sender_of(arp);

    t.ops += 1;
    if sender.mac.is_null() {
        return forged(own, gateway, t, sender, now, Reason::NullMac);
    }
    t.ops += 1;
    if !is_cross_layer_consistent(f) {
        return forged(own, gateway, t, sender, now, Reason::CrossLayerMismatch);
    }
    if t.fake_list.contains(sender, &mut t.ops) {
        return forged(own, gateway, t, sender, now, Reason::FakeListHit);
    }
    if t.cache.conflicts_with(sender, &mut t.ops) || pinned_conflict(gateway, sender, &mut t.ops) {
        return forged(own, gateway, t, sender, now, Reason::CacheConflict);
    }
    t.ops += 1;
    if contradicts_identity(own, f) {
        return Verdict::detected(Reason::SelfIpConflict);
    }

    if arp.target_ip != own.ip {
        // Overheard traffic is checked but never learned from.
        return Verdict::ignored();
    }
    t.cache.learn(sender, now, &mut t.ops);
    match arp.opcode {
        Opcode::Request => Verdict::accepted().with_emitted(vec![reply_frame(own, sender)]),
        _ => Verdict::accepted(),
    }
}

fn pinned_conflict(gateway: Option<Binding>, b: Binding, ops: &mut u64) -> bool {
    *ops += 1;
    gateway.is_some_and(|g| (g.ip == b.ip && g.mac != b.mac) || (g.mac == b.mac && g.ip != b.ip))
}

/// A frame claims this host's IP under another MAC, this host's MAC under
/// another IP, or is unicast to this host for an IP it does not own.
pub(crate) fn contradicts_identity(own: Binding, f: &Frame) -> bool {
    let a = &f.arp;
    (a.sender_ip == own.ip && a.sender_mac != own.mac)
        || (a.sender_mac == own.mac && a.sender_ip != own.ip)
        || (f.eth.dst == own.mac && a.target_ip != own.ip)
}

fn forged(
    own: Binding,
    gateway: Option<Binding>,
    t: &mut Tables,
    forged: Binding,
    now: VirtualTime,
    reason: Reason,
) -> Verdict {
    let already_listed = t.fake_list.observe(forged, now, &mut t.ops);
    let mut out = Vec::new();
    if let Some(router) = gateway {
        out.push(unicast_alert(own, router));
    }
    if already_listed {
        out.push(broadcast_alert(own, forged));
    }
    Verdict::detected(reason).with_emitted(out)
}

/// Adopts a peer's broadcast alert: evicts the named binding and fake-lists
/// it. Nodes with static entries only trust alerts whose Ethernet source is
/// a statically known MAC.
fn broadcast_alert_received(
    gateway: Option<Binding>,
    t: &mut Tables,
    f: &Frame,
    now: VirtualTime,
) -> Verdict {
    let named = Binding::sender_of(&f.arp);
    t.ops += 1;
    if named.mac.is_null() {
        return Verdict::detected(Reason::NullMac);
    }
    if t.cache.has_static() {
        let known =
            t.cache.knows_mac(f.eth.src, &mut t.ops) || gateway.is_some_and(|g| g.mac == f.eth.src);
        if !known {
            return Verdict::detected(Reason::CrossLayerMismatch);
        }
    }
    t.cache.evict(named);
    t.fake_list.observe(named, now, &mut t.ops);
    Verdict::accepted()
}

fn unicast_alert_received(own: Binding, t: &mut Tables, f: &Frame, now: VirtualTime) -> Verdict {
    let reporter = Binding::sender_of(&f.arp);
    t.ops += 1;
    if reporter.mac.is_null() {
        t.fake_list.observe(reporter, now, &mut t.ops);
        return Verdict::detected(Reason::NullMac);
    }
    t.ops += 1;
    if !is_cross_layer_consistent(f) {
        t.fake_list.observe(reporter, now, &mut t.ops);
        return Verdict::detected(Reason::CrossLayerMismatch);
    }
    t.ops += 1;
    if f.arp.target_ip != own.ip {
        return Verdict::detected(Reason::RouterIpMismatch);
    }
    if t.cache.contains_exact(reporter, &mut t.ops) {
        return Verdict::accepted();
    }
    t.fake_list.observe(reporter, now, &mut t.ops);
    Verdict::detected(Reason::RouterCacheMismatch)
}

/// Registry entry for the cross-layer checker.
#[derive(Debug, Default, Clone, Copy)]
pub struct Clcc;

impl DetectorStrategy for Clcc {
    fn name(&self) -> &'static str {
        "clcc"
    }

    fn description(&self) -> &'static str {
        "cross-layer consistency checking with fake list and alerts"
    }

    fn host_agent(&self, state: HostState) -> Box<dyn ArpAgent> {
        Box::new(ClccHost(state))
    }

    fn router_agent(&self, state: RouterState) -> Box<dyn ArpAgent> {
        Box::new(ClccRouter(state))
    }
}

struct ClccHost(HostState);

impl ArpAgent for ClccHost {
    fn on_frame(&mut self, f: &Frame, now: VirtualTime) -> Verdict {
        clcc_host_on_frame(&mut self.0, f, now)
    }

    fn tables(&self) -> &Tables {
        &self.0.tables
    }

    fn tables_mut(&mut self) -> &mut Tables {
        &mut self.0.tables
    }
}

struct ClccRouter(RouterState);

impl ArpAgent for ClccRouter {
    fn on_frame(&mut self, f: &Frame, now: VirtualTime) -> Verdict {
        clcc_router_on_frame(&mut self.0, f, now)
    }

    fn tables(&self) -> &Tables {
        &self.0.tables
    }

    fn tables_mut(&mut self) -> &mut Tables {
        &mut self.0.tables
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{Knobs, VerdictKind};
    use crate::packet::{ArpMessage, Ipv4Address, MacAddress};

    fn mac(s: &str) -> MacAddress {
        s.parse().unwrap()
    }

    fn ip(s: &str) -> Ipv4Address {
        s.parse().unwrap()
    }

    fn a() -> Binding {
        Binding::new(ip("192.169.1.10"), mac("00:05:79:66:68:01"))
    }

    fn b() -> Binding {
        Binding::new(ip("192.169.1.11"), mac("00:05:79:66:68:02"))
    }

    fn router() -> Binding {
        Binding::new(ip("10.10.1.0"), mac("00:05:79:66:6f:fe"))
    }

    fn host_b() -> HostState {
        HostState::new(b(), router(), &[], Knobs::default())
    }

    fn router_state() -> RouterState {
        RouterState::new(router(), &[a(), b()], Knobs::default())
    }

    fn arp(
        op: Opcode,
        eth_src: MacAddress,
        eth_dst: MacAddress,
        sender: Binding,
        target_ip: Ipv4Address,
    ) -> Frame {
        Frame::new(
            eth_dst,
            eth_src,
            ArpMessage {
                opcode: op,
                sender_mac: sender.mac,
                sender_ip: sender.ip,
                target_mac: MacAddress::NULL,
                target_ip,
            },
            0,
        )
    }

    fn request(sender: Binding, target_ip: Ipv4Address) -> Frame {
        arp(
            Opcode::Request,
            sender.mac,
            MacAddress::BROADCAST,
            sender,
            target_ip,
        )
    }

    const T0: VirtualTime = VirtualTime(0);

    #[test]
    fn cross_layer_mismatch_alerts_router() {
        let mut s = host_b();
        let forged = Binding::new(a().ip, mac("00:5:79:66:68:12"));
        let f = arp(
            Opcode::Request,
            mac("00:5:79:66:63:01"),
            MacAddress::BROADCAST,
            forged,
            b().ip,
        );
        let v = clcc_host_on_frame(&mut s, &f, T0);
        assert_eq!(v.kind, VerdictKind::Detected);
        assert_eq!(v.reason, Some(Reason::CrossLayerMismatch));
        assert_eq!(v.emitted.len(), 1);
        assert_eq!(v.emitted[0].arp.opcode, Opcode::UnicastAlert);
        assert_eq!(v.emitted[0].eth.dst, router().mac);
        assert_eq!(v.emitted[0].arp.target_ip, router().ip);
        assert_eq!(s.tables.fake_list.len(), 1);
        assert!(s.tables.cache.is_empty());

        // Second sighting: already fake-listed, so a broadcast alert follows.
        let v = clcc_host_on_frame(&mut s, &f, T0);
        assert_eq!(v.reason, Some(Reason::CrossLayerMismatch));
        let ops: Vec<_> = v.emitted.iter().map(|e| e.arp.opcode).collect();
        assert_eq!(ops, vec![Opcode::UnicastAlert, Opcode::BroadcastAlert]);
        assert_eq!(v.emitted[1].arp.sender_mac, forged.mac);
        assert_eq!(s.tables.fake_list.entries()[0].hit_count, 2);
    }

    #[test]
    fn benign_request_is_answered() {
        let mut s = host_b();
        let v = clcc_host_on_frame(&mut s, &request(a(), b().ip), T0);
        assert_eq!(
            v,
            Verdict::accepted().with_emitted(vec![reply_frame(b(), a())])
        );
        assert_eq!(s.tables.cache.lookup(a().ip).unwrap().mac, a().mac);
    }

    #[test]
    fn overheard_request_is_not_learned() {
        let mut s = host_b();
        let v = clcc_host_on_frame(&mut s, &request(a(), ip("192.169.1.12")), T0);
        assert_eq!(v.kind, VerdictKind::Ignored);
        assert!(s.tables.cache.is_empty());
    }

    #[test]
    fn fake_listed_reply_triggers_broadcast() {
        let mut s = host_b();
        let forged = Binding::new(a().ip, mac("00:05:79:66:63:01"));
        s.tables.fake_list.observe(forged, T0, &mut 0);
        let f = arp(Opcode::Reply, forged.mac, b().mac, forged, b().ip);
        let v = clcc_host_on_frame(&mut s, &f, T0);
        assert_eq!(v.reason, Some(Reason::FakeListHit));
        assert!(v
            .emitted
            .iter()
            .any(|e| e.arp.opcode == Opcode::BroadcastAlert));
    }

    #[test]
    fn wrong_target_ip_is_self_conflict() {
        let mut s = host_b();
        let attacker = Binding::new(ip("192.169.1.12"), mac("00:05:79:66:68:03"));
        let f = arp(
            Opcode::Reply,
            attacker.mac,
            b().mac,
            attacker,
            ip("192.169.1.18"),
        );
        let v = clcc_host_on_frame(&mut s, &f, T0);
        assert_eq!(v.reason, Some(Reason::SelfIpConflict));
        assert!(v.emitted.is_empty());
        assert!(s.tables.fake_list.is_empty());
    }

    #[test]
    fn claiming_own_ip_or_mac_is_self_conflict() {
        let mut s = host_b();
        let attacker_mac = mac("00:05:79:66:68:03");
        let steal_ip = Binding::new(b().ip, attacker_mac);
        let v = clcc_host_on_frame(&mut s, &request(steal_ip, a().ip), T0);
        assert_eq!(v.reason, Some(Reason::SelfIpConflict));
        let steal_mac = Binding::new(ip("192.169.3.23"), b().mac);
        let v = clcc_host_on_frame(&mut s, &request(steal_mac, a().ip), T0);
        assert_eq!(v.reason, Some(Reason::SelfIpConflict));
    }

    #[test]
    fn gateway_spoof_is_cache_conflict() {
        let mut s = host_b();
        let spoof = Binding::new(router().ip, mac("00:05:79:66:68:03"));
        let f = arp(Opcode::Reply, spoof.mac, b().mac, spoof, b().ip);
        let v = clcc_host_on_frame(&mut s, &f, T0);
        assert_eq!(v.reason, Some(Reason::CacheConflict));
    }

    #[test]
    fn prior_binding_for_ip_is_cache_conflict() {
        let mut s = host_b();
        let first = Binding::new(ip("192.169.1.17"), a().mac);
        assert_eq!(
            clcc_host_on_frame(&mut s, &request(first, b().ip), T0).kind,
            VerdictKind::Accepted
        );
        let second = Binding::new(first.ip, mac("00:05:79:66:68:03"));
        let v = clcc_host_on_frame(&mut s, &request(second, b().ip), T0);
        assert_eq!(v.reason, Some(Reason::CacheConflict));
    }

    #[test]
    fn null_mac_wins_precedence() {
        let mut s = host_b();
        let null = Binding::new(a().ip, MacAddress::NULL);
        let f = arp(
            Opcode::Request,
            mac("00:5:79:66:63:01"),
            MacAddress::BROADCAST,
            null,
            b().ip,
        );
        assert_eq!(
            clcc_host_on_frame(&mut s, &f, T0).reason,
            Some(Reason::NullMac)
        );
        let f = arp(
            Opcode::BroadcastAlert,
            mac("00:5:79:66:63:01"),
            MacAddress::BROADCAST,
            null,
            Ipv4Address::UNSPECIFIED,
        );
        assert_eq!(
            clcc_host_on_frame(&mut s, &f, T0).reason,
            Some(Reason::NullMac)
        );
    }

    #[test]
    fn broadcast_alert_adoption_and_static_gate() {
        let named = Binding::new(a().ip, mac("00:05:79:66:68:af"));
        let spoofed_src = mac("00:05:79:66:63:01");
        let f = arp(
            Opcode::BroadcastAlert,
            spoofed_src,
            MacAddress::BROADCAST,
            named,
            Ipv4Address::UNSPECIFIED,
        );

        let mut s = host_b();
        s.tables.cache.learn(named, T0, &mut 0);
        let v = clcc_host_on_frame(&mut s, &f, T0);
        assert_eq!(v.kind, VerdictKind::Accepted);
        assert!(s.tables.cache.is_empty());
        assert_eq!(s.tables.fake_list.len(), 1);

        let mut s = HostState::new(b(), router(), &[a()], Knobs::default());
        let v = clcc_host_on_frame(&mut s, &f, T0);
        assert_eq!(v.reason, Some(Reason::CrossLayerMismatch));
        assert!(s.tables.fake_list.is_empty());

        // Alerts from a statically known host are still adopted.
        let from_a = arp(
            Opcode::BroadcastAlert,
            a().mac,
            MacAddress::BROADCAST,
            named,
            Ipv4Address::UNSPECIFIED,
        );
        assert_eq!(
            clcc_host_on_frame(&mut s, &from_a, T0).kind,
            VerdictKind::Accepted
        );
    }

    #[test]
    fn unicast_alert_ignored_at_host() {
        let mut s = host_b();
        let f = unicast_alert(a(), router());
        assert_eq!(
            clcc_host_on_frame(&mut s, &f, T0).kind,
            VerdictKind::Ignored
        );
    }

    #[test]
    fn router_alert_procedure() {
        let mut r = router_state();
        assert_eq!(
            clcc_router_on_frame(&mut r, &unicast_alert(a(), router()), T0),
            Verdict::accepted()
        );

        let mut wrong_ip = unicast_alert(a(), router());
        wrong_ip.arp.target_ip = ip("10.10.1.1");
        assert_eq!(
            clcc_router_on_frame(&mut r, &wrong_ip, T0).reason,
            Some(Reason::RouterIpMismatch)
        );
        assert!(r.tables.fake_list.is_empty());

        let mut spoofed = unicast_alert(a(), router());
        spoofed.arp.sender_ip = ip("192.169.1.17");
        assert_eq!(
            clcc_router_on_frame(&mut r, &spoofed, T0).reason,
            Some(Reason::RouterCacheMismatch)
        );
        assert_eq!(r.tables.fake_list.len(), 1);

        let mut inconsistent = unicast_alert(a(), router());
        inconsistent.arp.sender_mac = mac("00:06:80:99:80:00");
        inconsistent.eth.src = mac("00:5:79:66:63:01");
        assert_eq!(
            clcc_router_on_frame(&mut r, &inconsistent, T0).reason,
            Some(Reason::CrossLayerMismatch)
        );
        assert_eq!(r.tables.fake_list.len(), 2);
    }

    #[test]
    fn router_answers_requests_without_alerting_itself() {
        let mut r = router_state();
        let v = clcc_router_on_frame(&mut r, &request(a(), router().ip), T0);
        assert_eq!(v.kind, VerdictKind::Accepted);
        assert_eq!(v.emitted[0].arp.opcode, Opcode::Reply);
        let forged = Binding::new(a().ip, mac("00:05:79:66:68:12"));
        let v = clcc_router_on_frame(&mut r, &request(forged, router().ip), T0);
        assert_eq!(v.reason, Some(Reason::CacheConflict));
        assert!(v.emitted.is_empty());
    }

    #[test]
    fn repeated_calls_agree() {
        let forged = Binding::new(a().ip, mac("00:5:79:66:68:12"));
        let frames = [
            request(a(), b().ip),
            arp(
                Opcode::Request,
                mac("00:5:79:66:63:01"),
                MacAddress::BROADCAST,
                forged,
                b().ip,
            ),
            unicast_alert(a(), router()),
        ];
        let base = host_b();
        for f in &frames {
            let mut s1 = base.clone();
            let mut s2 = base.clone();
            let v1 = clcc_host_on_frame(&mut s1, f, T0);
            let v2 = clcc_host_on_frame(&mut s2, f, T0);
            assert_eq!(v1, v2);
            assert_eq!(s1, s2);
        }
    }
}
