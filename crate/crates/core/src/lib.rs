//! ARP spoofing detection testbed: frame codec, attack lattice, detectors,
//! traffic generation, a deterministic LAN simulator and reporting.

pub mod detect;
pub mod lattice;
pub mod packet;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod time;
