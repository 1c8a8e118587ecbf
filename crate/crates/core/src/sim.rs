//! Single-segment LAN as a discrete-event simulation on a virtual clock.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{
    ArpAgent, Binding, DetectorRegistry, HostState, Reason, RouterState, VerdictKind,
};
use crate::packet::{encode_trace_record, Frame, MacAddress};
use crate::scenario::{generate_mix, AttackClass, Scenario, ScenarioError, ROUTER_ID};
use crate::time::VirtualTime;

/// Observer recorded for unicast frames whose destination no node owns.
pub const NO_OBSERVER: &str = "none";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub at: VirtualTime,
    pub sequence: u64,
    pub frame: Frame,
    pub origin: String,
    /// Ground truth; `None` for frames emitted by detectors.
    pub class: Option<AttackClass>,
    /// Class of the injected frame this one descends from.
    pub cause: Option<AttackClass>,
    /// Node whose verdict counts for an injected frame.
    pub victim: Option<String>,
}

impl Event {
    pub fn injected(
        at: VirtualTime,
        sequence: u64,
        frame: Frame,
        origin: impl Into<String>,
        class: AttackClass,
        victim: impl Into<String>,
    ) -> Self {
        Event {
            at,
            sequence,
            frame,
            origin: origin.into(),
            class: Some(class),
            cause: Some(class),
            victim: Some(victim.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub frame_id: u64,
    pub injected_class: Option<AttackClass>,
    /// For emitted frames, the class of the injection that triggered them.
    pub cause: Option<AttackClass>,
    pub observer: String,
    /// True when `observer` is the victim designated for an injected frame.
    pub designated: bool,
    pub verdict: VerdictKind,
    pub reason: Option<Reason>,
    pub at: VirtualTime,
    pub sequence: u64,
}

impl DetectionRecord {
    pub fn emitted(&self) -> bool {
        self.injected_class.is_none()
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("clock cannot move backwards from {now} to {to}")]
    ClockRegression { now: VirtualTime, to: VirtualTime },
    #[error("unknown detector {0:?}")]
    UnknownDetector(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

struct Node {
    id: String,
    mac: MacAddress,
    is_router: bool,
    /// `None` for the attacker, whose own stack is bypassed.
    agent: Option<Box<dyn ArpAgent>>,
}

/// Counters kept alongside the record list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub injected: u64,
    pub emitted: u64,
    pub unroutable: u64,
    pub cache_clears: u64,
}

pub struct Network {
    nodes: Vec<Node>,
    queue: BTreeMap<(VirtualTime, u64), Event>,
    now: VirtualTime,
    clear_interval: VirtualTime,
    next_clear: VirtualTime,
    link_delay: VirtualTime,
    next_sequence: u64,
    next_frame_id: u64,
    records: Vec<DetectionRecord>,
    trace: Option<Vec<u8>>,
    stats: RunStats,
}

impl Network {
    /// Builds one agent per host (except the attacker) and one for the router
    /// using the strategy named in the scenario.
    pub fn new(s: &Scenario, registry: &DetectorRegistry) -> Result<Self, SimError> {
        s.validate()?;
        let strategy = registry
            .get(&s.detector.kind)
            .ok_or_else(|| SimError::UnknownDetector(s.detector.kind.clone()))?;
        let topo = &s.topology;
        let knobs = s.detector.knobs();
        let mut nodes: Vec<Node> = topo
            .hosts
            .iter()
            .map(|h| {
                let agent = (h.id != topo.attacker).then(|| {
                    let statics = s.detector.static_entries_for(topo, h);
                    strategy.host_agent(HostState::new(h.binding(), topo.router, &statics, knobs))
                });
                Node {
                    id: h.id.clone(),
                    mac: h.mac,
                    is_router: false,
                    agent,
                }
            })
            .collect();
        let truth: Vec<Binding> = topo.bindings();
        nodes.push(Node {
            id: ROUTER_ID.to_string(),
            mac: topo.router.mac,
            is_router: true,
            agent: Some(strategy.router_agent(RouterState::new(topo.router, &truth, knobs))),
        });
        Ok(Network {
            nodes,
            queue: BTreeMap::new(),
            now: VirtualTime::ZERO,
            clear_interval: knobs.clear_interval,
            next_clear: knobs.clear_interval,
            link_delay: s.schedule.link_delay(),
            next_sequence: 0,
            next_frame_id: 0,
            records: Vec::new(),
            trace: None,
            stats: RunStats::default(),
        })
    }

    /// Keep every delivered frame in the timestamped trace format.
    pub fn capture_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn now(&self) -> VirtualTime {
        self.now
    }

    pub fn stats(&self) -> RunStats {
        self.stats
    }

    pub fn records(&self) -> &[DetectionRecord] {
        &self.records
    }

    pub fn trace(&self) -> Option<&[u8]> {
        self.trace.as_deref()
    }

    pub fn agent(&self, id: &str) -> Option<&dyn ArpAgent> {
        self.nodes.iter().find(|n| n.id == id)?.agent.as_deref()
    }

    pub fn agent_mut(&mut self, id: &str) -> Option<&mut (dyn ArpAgent + 'static)> {
        self.nodes
            .iter_mut()
            .find(|n| n.id == id)?
            .agent
            .as_deref_mut()
    }

    pub fn inject(&mut self, ev: Event) {
        self.next_sequence = self.next_sequence.max(ev.sequence + 1);
        self.next_frame_id = self.next_frame_id.max(ev.frame.frame_id + 1);
        self.stats.injected += 1;
        self.queue.insert((ev.at, ev.sequence), ev);
    }

    /// Moves the clock to `to`, giving every node a cache-clear check at
    /// each interval boundary crossed. Returns the number of boundaries.
    pub fn advance_clock(&mut self, to: VirtualTime) -> Result<u64, SimError> {
        if to < self.now {
            return Err(SimError::ClockRegression { now: self.now, to });
        }
        let mut fired = 0;
        while self.next_clear <= to {
            let at = self.next_clear;
            for agent in self.nodes.iter_mut().filter_map(|n| n.agent.as_mut()) {
                if agent.maybe_clear_cache(at) {
                    self.stats.cache_clears += 1;
                }
            }
            fired += 1;
            self.next_clear = at + self.clear_interval;
        }
        self.now = to;
        Ok(fired)
    }

    /// Processes one event. Returns false once the queue is empty.
    pub fn step(&mut self) -> Result<bool, SimError> {
        let Some((_, ev)) = self.queue.pop_first() else {
            return Ok(false);
        };
        self.advance_clock(ev.at)?;
        if let Some(t) = self.trace.as_mut() {
            t.extend_from_slice(&encode_trace_record(ev.at.as_nanos(), &ev.frame));
        }
        let dst = ev.frame.eth.dst;
        let recipients: Vec<usize> = if dst.is_broadcast() {
            // Broadcasts reach every host on the segment but the sender.
            (0..self.nodes.len())
                .filter(|&i| !self.nodes[i].is_router && self.nodes[i].id != ev.origin)
                .collect()
        } else {
            self.nodes
                .iter()
                .position(|n| n.mac == dst)
                .into_iter()
                .collect()
        };
        if recipients.is_empty() {
            self.stats.unroutable += 1;
            self.push_record(&ev, NO_OBSERVER.to_string(), VerdictKind::Ignored, None);
            return Ok(true);
        }
        for i in recipients {
            let node = &mut self.nodes[i];
            let observer = node.id.clone();
            let Some(agent) = node.agent.as_mut() else {
                self.push_record(&ev, observer, VerdictKind::Ignored, None);
                continue;
            };
            let verdict = agent.on_frame(&ev.frame, ev.at);
            self.push_record(&ev, observer.clone(), verdict.kind, verdict.reason);
            for mut frame in verdict.emitted {
                frame.frame_id = self.next_frame_id;
                self.next_frame_id += 1;
                let sequence = self.next_sequence;
                self.next_sequence += 1;
                self.stats.emitted += 1;
                let at = ev.at + self.link_delay;
                self.queue.insert(
                    (at, sequence),
                    Event {
                        at,
                        sequence,
                        frame,
                        origin: observer.clone(),
                        class: None,
                        cause: ev.cause,
                        victim: None,
                    },
                );
            }
        }
        Ok(true)
    }

    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        while self.step()? {}
        Ok(())
    }

    pub fn into_records(self) -> Vec<DetectionRecord> {
        self.records
    }

    fn push_record(
        &mut self,
        ev: &Event,
        observer: String,
        verdict: VerdictKind,
        reason: Option<Reason>,
    ) {
        let designated = ev.victim.as_deref() == Some(observer.as_str());
        self.records.push(DetectionRecord {
            frame_id: ev.frame.frame_id,
            injected_class: ev.class,
            cause: ev.cause,
            observer,
            designated,
            verdict,
            reason,
            at: ev.at,
            sequence: ev.sequence,
        });
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DetectionRecord>,
    pub stats: RunStats,
    pub trace: Option<Vec<u8>>,
}

/// Generates the scenario's mix and drives it to exhaustion.
pub fn run_scenario(
    s: &Scenario,
    registry: &DetectorRegistry,
    capture_trace: bool,
) -> Result<RunOutput, SimError> {
    let mut net = Network::new(s, registry)?;
    if capture_trace {
        net.capture_trace();
    }
    for ev in generate_mix(s)? {
        net.inject(ev);
    }
    net.run_to_end()?;
    Ok(RunOutput {
        stats: net.stats,
        trace: net.trace.take(),
        records: net.records,
    })
}

/// Record list only.
pub fn run(s: &Scenario, registry: &DetectorRegistry) -> Result<Vec<DetectionRecord>, SimError> {
    Ok(run_scenario(s, registry, false)?.records)
}
