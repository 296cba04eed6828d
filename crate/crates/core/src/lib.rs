//! Round-based simulator of temperature-aware transmission power control in
//! wireless sensor networks.
//!
//! The EAST controller combines open-loop compensation from each node's
//! temperature sensor with region-scoped beacon/ACK feedback. A classical
//! single-region controller that always applies the worst-case compensation
//! level is provided as the baseline.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod output;
pub mod protocol;
pub mod radio;
pub mod topology;

pub use config::SimConfig;
pub use engine::{run_simulation, RoundRecord, SimOutput, Simulation};
pub use error::{Error, Result};
pub use protocol::{ControllerKind, RegionId};
