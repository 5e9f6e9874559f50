//! Consensus clock synchronization over interference graphs, followed by a
//! NOMA-assisted information exchange scheduled by stable and swap matching.
//!
//! The pipeline per network draw is: [`topology::place_nodes`], then
//! [`consensus::run_sync`] for the algorithmic time, then
//! [`scheduler::schedule_exchange`] for the NOMA and OMA exchange delays.
//! [`harness`] sweeps parameters over seeded replications.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod consensus;
pub mod error;
pub mod graph;
pub mod harness;
pub mod noma;
pub mod scheduler;
pub mod topology;

pub use channel::{GainSampler, LinkGains};
pub use config::{Fading, OmaPower, SimConfig, UpdateRule};
pub use consensus::{run_sync, ClockState, SyncTrace};
pub use error::{Error, Result};
pub use graph::InterferenceGraph;
pub use harness::{run_experiment, ExperimentSpec, Preset, ResultRow, SweepParam};
pub use noma::{PairLink, PairTimes};
pub use scheduler::{schedule_exchange, Assignment, ExchangeComparison, ScheduleOutcome, Scheme};
pub use topology::{place_nodes, Topology, Triplet};
