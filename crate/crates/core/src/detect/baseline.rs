//! Plain RFC 826 behaviour: trust every sender binding, answer requests for
//! our own address, and flag only frames that contradict our own identity.

use super::registry::{ArpAgent, DetectorStrategy};
use super::{reply_frame, Binding, HostState, Reason, RouterState, Tables, Verdict};
use crate::packet::{Frame, Opcode};
use crate::time::VirtualTime;

pub fn baseline_on_frame(state: &mut HostState, f: &Frame, now: VirtualTime) -> Verdict {
    let HostState { own, tables, .. } = state;
    trusting_stack(*own, tables, f, now)
}

fn trusting_stack(own: Binding, t: &mut Tables, f: &Frame, now: VirtualTime) -> Verdict {
    let arp = &f.arp;
    if !matches!(arp.opcode, Opcode::Request | Opcode::Reply) {
        return Verdict::ignored();
    }
    let sender = Binding::sender_of(arp);
    if (arp.sender_ip == own.ip && arp.sender_mac != own.mac)
        || (arp.sender_mac == own.mac && arp.sender_ip != own.ip)
    {
        return Verdict::detected(Reason::SelfIpConflict);
    }
    if arp.target_ip != own.ip {
        // Merge step: refresh a binding we already hold, then stop.
        if t.cache.lookup(sender.ip).is_some() && t.cache.learn(sender, now, &mut t.ops) {
            return Verdict::accepted();
        }
        return Verdict::ignored();
    }
    t.cache.learn(sender, now, &mut t.ops);
    match arp.opcode {
        Opcode::Request => Verdict::accepted().with_emitted(vec![reply_frame(own, sender)]),
        _ => Verdict::accepted(),
    }
}

/// Registry entry for the trusting RFC 826 stack.
#[derive(Debug, Default, Clone, Copy)]
pub struct Baseline;

impl DetectorStrategy for Baseline {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn description(&self) -> &'static str {
        "stateless RFC 826 resolution without cross-checking"
    }

    fn host_agent(&self, state: HostState) -> Box<dyn ArpAgent> {
        Box::new(BaselineNode {
            own: state.own,
            tables: state.tables,
        })
    }

    fn router_agent(&self, state: RouterState) -> Box<dyn ArpAgent> {
        Box::new(BaselineNode {
            own: state.own,
            tables: state.tables,
        })
    }
}

struct BaselineNode {
    own: Binding,
    tables: Tables,
}

impl ArpAgent for BaselineNode {
    fn on_frame(&mut self, f: &Frame, now: VirtualTime) -> Verdict {
        trusting_stack(self.own, &mut self.tables, f, now)
    }

    fn tables(&self) -> &Tables {
        &self.tables
    }

    fn tables_mut(&mut self) -> &mut Tables {
        &mut self.tables
    }
}
