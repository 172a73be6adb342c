//! A deterministic simulated cluster for studying MPI benchmarking methodology.
//!
//! Every process owns a drifting, noisy, quantized [`sim::LocalClock`]; messages
//! travel through a latency-sampled [`sim::NetworkModel`]; collectives are
//! synthetic models whose exact duration is always known. On top of that
//! substrate the crate implements the clock-synchronization algorithms used by
//! MPI benchmarks ([`clocksync`]), the measurement schemes and window-based
//! process synchronization ([`bench`]), the data-reduction schemes
//! ([`dataproc`]), nonparametric testing ([`stats`]) and the multi-`mpirun`
//! experimental protocol ([`experiment`]).
//!
//! Because the simulator records ground truth, every measurement can be
//! checked against the value it was supposed to estimate.

pub mod bench;
pub mod clocksync;
pub mod dataproc;
pub mod error;
pub mod experiment;
pub mod output;
pub mod par;
pub mod seed;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
