//! Discrete-event substrate: clocks, network, synthetic collectives and the
//! single-threaded executor that runs one async program per rank.

mod clock;
pub mod comm;
mod collective;
mod config;
mod dist;
mod engine;
mod network;
mod trace;

pub use clock::LocalClock;
pub use collective::{CollectiveModel, CollectiveOutcome, ExitSkew, Rounds};
pub use config::{BetweenRunConfig, ClockConfig, ClockParams, InstanceConfig, NetworkConfig};
pub use dist::{Component, Jitter, Noise};
pub use engine::{
    run_programs, CollectiveRecord, Program, Rank, SimInstance, SimOutput, SimStats, WaitOutcome,
};
pub use network::{LinkOverride, NetworkModel};
pub use trace::{write_trace_csv, TraceEvent, TraceKind};
