//! Deterministic discrete-event model of a high-layer (PDCP-RLC) split RAN
//! transport chain: EPC traffic source, CU with PDCP encapsulation, an
//! impaired aggregation network, a 10 GbE access switch with overload
//! traffic, a PAM4 optical link and the DU reordering receiver.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel sweeps live in the `splitsim` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod access;
pub mod engine;
pub mod error;
pub mod impair;
pub mod math;
pub mod metrics;
pub mod pam4;
pub mod rng;
pub mod scenario;
pub mod stack;
pub mod time;

pub use engine::{Engine, EngineStats, EventHandle};
pub use error::SimError;
pub use metrics::{DropCounts, DropReason, MetricsReport};
pub use rng::{RngStream, StreamId};
pub use scenario::{run_scenario, simulate, PhyConfig, ScenarioConfig, ScenarioOutput};
pub use time::SimTime;
