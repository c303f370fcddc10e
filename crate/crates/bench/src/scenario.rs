//! Scenario execution: a fresh testbed per workload and iteration.

use std::time::Duration;

use pqe2::esp::{ESP_OVERHEAD, StartAction};
use pqe2::rng::derive_seed;
use pqe2::testbed::{self, RunResult, Security, TestbedConfig, TestbedError, Workload};

use crate::config::ScenarioConfig;
use crate::metrics::{self, MetricError, PhaseBreakdown};
use crate::stats::{summarize, LatencyStats, StatsError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("iteration {index} ({workload}): {source}")]
    Protocol { index: usize, workload: &'static str, source: TestbedError },
    #[error("iteration {index}: {source}")]
    Metric { index: usize, source: MetricError },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PingPongResult {
    /// One-way latency samples, nanoseconds.
    pub one_way_ns: Vec<u64>,
    pub timeouts: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StreamResult {
    pub indications: usize,
    pub expected: usize,
    pub max_gap: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    pub iteration: usize,
    pub seed: [u8; 32],
    pub phases: Option<PhaseBreakdown>,
    pub sa_init_request_bytes: Option<usize>,
    pub pingpong: Option<PingPongResult>,
    pub xapp_delay: Option<Duration>,
    pub stream: Option<StreamResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub iterations: Vec<IterationResult>,
    /// Per-packet ESP expansion (header + ICV).
    pub wire_overhead_bytes: usize,
}

pub fn iteration_seed(base: &[u8; 32], i: usize) -> [u8; 32] {
    derive_seed(base, format!("iteration {i}").as_bytes())
}

/// Testbed settings for one run of `workload` under `cfg`.
pub fn testbed_config(cfg: &ScenarioConfig, workload: Workload, seed: [u8; 32]) -> TestbedConfig {
    let mut t = TestbedConfig::new(workload);
    t.security = cfg.security;
    t.proposal = cfg.proposal;
    t.esp_proposal = cfg.esp_proposal;
    t.start_action = cfg.start_action;
    t.link = cfg.link;
    t.seed = seed;
    t.e2.period = cfg.e2.period;
    t.e2.metrics = cfg.e2.metrics.clone();
    (t.e2.ric_port, t.e2.xapp_port) = cfg.e2.ports;
    t
}

fn checked(index: usize, workload: &'static str, t: &TestbedConfig) -> Result<RunResult, ScenarioError> {
    testbed::run_checked(t).map_err(|source| ScenarioError::Protocol { index, workload, source })
}

/// Brings up one tunnel and returns its phase timings and the run.
pub fn handshake(cfg: &ScenarioConfig, seed: [u8; 32], index: usize) -> Result<(PhaseBreakdown, usize, RunResult), ScenarioError> {
    let mut t = testbed_config(cfg, Workload::Handshake, seed);
    t.security = Security::Ipsec;
    let r = checked(index, "handshake", &t)?;
    let m = |source| ScenarioError::Metric { index, source };
    let phases = metrics::extract_phases(&r.capture).map_err(m)?;
    let bytes = metrics::sa_init_request_bytes(&r.capture).map_err(m)?;
    Ok((phases, bytes, r))
}

/// Ping-pong over the configured path; with IPsec the tunnel is brought up
/// first so every timed message is sealed.
pub fn pingpong(cfg: &ScenarioConfig, seed: [u8; 32], index: usize) -> Result<PingPongResult, ScenarioError> {
    let w = Workload::PingPong { messages: cfg.traffic.pingpong_messages, payload: cfg.traffic.payload };
    let mut t = testbed_config(cfg, w, seed);
    t.start_action = StartAction::Start;
    let r = checked(index, "pingpong", &t)?;
    Ok(PingPongResult { one_way_ns: metrics::one_way(&r.rtts_ns), timeouts: r.ping_timeouts })
}

pub fn xapp_launch(cfg: &ScenarioConfig, seed: [u8; 32], index: usize) -> Result<(Duration, RunResult), ScenarioError> {
    let t = testbed_config(cfg, Workload::XappLaunch { startup: cfg.e2.xapp_startup }, seed);
    let r = checked(index, "xapp", &t)?;
    let rec = r.xapp.ok_or(ScenarioError::Metric { index, source: MetricError::IncompleteRecord })?;
    let d = metrics::xapp_delay(&rec).map_err(|source| ScenarioError::Metric { index, source })?;
    Ok((d, r))
}

pub fn e2_stream(cfg: &ScenarioConfig, seed: [u8; 32], index: usize) -> Result<StreamResult, ScenarioError> {
    let w = Workload::E2Stream { duration: cfg.e2.stream_duration, tunnel_at: cfg.e2.tunnel_at };
    let r = checked(index, "e2 stream", &testbed_config(cfg, w, seed))?;
    let from = r.subscribed_ns.ok_or(ScenarioError::Protocol {
        index,
        workload: "e2 stream",
        source: TestbedError::Incomplete("no subscription".into()),
    })?;
    let arrivals = testbed::indications_in(&r, from, cfg.e2.stream_duration);
    Ok(StreamResult {
        indications: arrivals.len(),
        expected: (cfg.e2.stream_duration.as_nanos() / cfg.e2.period.as_nanos()) as usize,
        max_gap: arrivals.windows(2).map(|w| Duration::from_nanos(w[1] - w[0])).max(),
    })
}

pub fn run_iteration(cfg: &ScenarioConfig, index: usize) -> Result<IterationResult, ScenarioError> {
    let seed = iteration_seed(&cfg.seed, index);
    let (phases, sa_init_request_bytes) = match cfg.security {
        Security::Ipsec => {
            let (p, b, _) = handshake(cfg, seed, index)?;
            (Some(p), Some(b))
        }
        Security::None => (None, None),
    };
    let pingpong = (cfg.traffic.pingpong_messages > 0).then(|| pingpong(cfg, seed, index)).transpose()?;
    let (xapp_delay, _) = xapp_launch(cfg, seed, index)?;
    let stream = (!cfg.e2.stream_duration.is_zero()).then(|| e2_stream(cfg, seed, index)).transpose()?;
    Ok(IterationResult {
        iteration: index,
        seed,
        phases,
        sa_init_request_bytes,
        pingpong,
        xapp_delay: Some(xapp_delay),
        stream,
    })
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let iterations = (0..cfg.iterations).map(|i| run_iteration(cfg, i)).collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioReport { config: cfg.clone(), iterations, wire_overhead_bytes: ESP_OVERHEAD })
}

fn ns(d: Duration) -> u64 {
    d.as_nanos() as u64
}

impl ScenarioReport {
    /// Nanosecond samples of one phase across iterations.
    pub fn phase_samples(&self, name: &str) -> Vec<u64> {
        self.iterations.iter().filter_map(|i| i.phases.and_then(|p| p.get(name))).map(ns).collect()
    }

    pub fn phase_stats(&self, name: &str) -> Option<LatencyStats<u64>> {
        summarize(&self.phase_samples(name)).ok()
    }

    pub fn pingpong_samples(&self) -> Vec<u64> {
        self.iterations.iter().filter_map(|i| i.pingpong.as_ref()).flat_map(|p| p.one_way_ns.iter().copied()).collect()
    }

    pub fn pingpong_stats(&self) -> Option<LatencyStats<u64>> {
        summarize(&self.pingpong_samples()).ok()
    }

    pub fn xapp_samples(&self) -> Vec<u64> {
        self.iterations.iter().filter_map(|i| i.xapp_delay).map(ns).collect()
    }

    pub fn xapp_stats(&self) -> Option<LatencyStats<u64>> {
        summarize(&self.xapp_samples()).ok()
    }
}
