use std::fmt;

use super::{maybe_clear_cache, HostState, RouterState, Tables, Verdict};
use crate::packet::Frame;
use crate::time::VirtualTime;

/// One node's detector instance, driven frame by frame by the network.
pub trait ArpAgent: Send {
    fn on_frame(&mut self, f: &Frame, now: VirtualTime) -> Verdict;

    fn tables(&self) -> &Tables;

    fn tables_mut(&mut self) -> &mut Tables;

    fn maybe_clear_cache(&mut self, now: VirtualTime) -> bool {
        maybe_clear_cache(self.tables_mut(), now)
    }
}

/// A detection algorithm that can be instantiated on hosts and the router.
pub trait DetectorStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn host_agent(&self, state: HostState) -> Box<dyn ArpAgent>;

    fn router_agent(&self, state: RouterState) -> Box<dyn ArpAgent>;
}

/// Detector strategies by name.
pub struct DetectorRegistry {
    strategies: Vec<Box<dyn DetectorStrategy>>,
}

impl DetectorRegistry {
    pub fn empty() -> Self {
        DetectorRegistry {
            strategies: Vec::new(),
        }
    }

    /// `clcc` and `baseline`.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(super::Clcc));
        r.register(Box::new(super::Baseline));
        r
    }

    /// Later registrations replace earlier ones with the same name.
    pub fn register(&mut self, strategy: Box<dyn DetectorStrategy>) {
        self.strategies.retain(|s| s.name() != strategy.name());
        self.strategies.push(strategy);
    }

    pub fn get(&self, name: &str) -> Option<&dyn DetectorStrategy> {
        self.strategies
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.iter().map(|s| s.name()).collect()
    }
}

impl Default for DetectorRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl fmt::Debug for DetectorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_name() {
        let r = DetectorRegistry::with_defaults();
        assert_eq!(r.names(), vec!["clcc", "baseline"]);
        assert_eq!(r.get("clcc").unwrap().name(), "clcc");
        assert!(r.get("sarp").is_none());
    }

    #[test]
    fn re_registering_replaces() {
        let mut r = DetectorRegistry::with_defaults();
        r.register(Box::new(super::super::Clcc));
        assert_eq!(r.names(), vec!["baseline", "clcc"]);
    }
}
