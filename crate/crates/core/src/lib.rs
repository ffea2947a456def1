//! Cell-level simulation of TCP traffic crossing ATM UBR switches with
//! packet-aware drop policies.
//!
//! The simulator is fully deterministic: the same [`scenario::Scenario`]
//! always produces the same [`metrics::RunResult`].

pub mod aal5;
pub mod config;
pub mod error;
pub mod event;
pub mod link;
pub mod metrics;
pub mod network;
pub mod output;
pub mod scenario;
pub mod sweep;
pub mod switch;
pub mod tcp;

pub use error::{ConfigError, Error, Result, SimError};
pub use event::SimTime;
pub use metrics::{RunResult, SwitchReport};
pub use network::{run_scenario, simulate};
pub use output::{emit_results, Format, ResultRow};
pub use scenario::{build_scenario, BufferSize, ConfigClass, Scenario, ScenarioParams};
pub use sweep::{run_sweep, SweepSpec};
pub use switch::{PolicyConfig, PolicyKind, ScaleFactor};

/// Metrics in double precision, the default for reports.
pub type Metrics = metrics::RunMetrics<f64>;
/// Metrics in single precision.
pub type Metrics32 = metrics::RunMetrics<f32>;
