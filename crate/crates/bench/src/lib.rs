//! Scenario runner, metric extraction, statistics and reports.

pub mod compare;
pub mod config;
pub mod metrics;
pub mod report;
pub mod scenario;
pub mod stats;

pub use config::{load_config, parse_config, ConfigError, ScenarioConfig};
pub use metrics::{extract_phases, xapp_delay, PhaseBreakdown};
pub use scenario::{run_scenario, ScenarioError, ScenarioReport};
pub use stats::{summarize, LatencyStats};
