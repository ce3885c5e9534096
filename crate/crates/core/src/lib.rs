//! Deterministic discrete-event simulator for comparing DSDV and AODV
//! routing in mobile ad hoc networks.

pub mod aodv;
pub mod channel;
pub mod config;
pub mod dsdv;
pub mod engine;
pub mod metrics;
pub mod mobility;
pub mod packet;
pub mod routing;
pub mod runner;
pub mod sim;
pub mod traffic;
pub mod trace;

pub use config::{ConfigError, Protocol, ScenarioConfig};
pub use engine::SimTime;
pub use metrics::MetricsReport;
pub use packet::{DropReason, NodeId};
