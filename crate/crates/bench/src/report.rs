//! Report files.
//!
//! - `<name>_phases.csv`: `scenario,iteration,phase,duration_us`
//! - `<name>_pingpong.csv`: `scenario,iteration,sample,one_way_us`
//! - `<name>_summary.json`: per-metric statistics plus a config echo
//!
//! Durations are written as integer microseconds.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::metrics::PhaseBreakdown;
use crate::scenario::ScenarioReport;
use crate::stats::LatencyStats;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsUs {
    pub n: usize,
    pub mean_us: f64,
    pub median_us: u64,
    pub p95_us: u64,
    pub min_us: u64,
    pub max_us: u64,
}

impl StatsUs {
    pub fn from_ns(s: &LatencyStats<u64>) -> Self {
        let us = s.map(|v| v / 1000, |m| m / 1000.0);
        Self { n: us.n, mean_us: us.mean, median_us: us.median, p95_us: us.p95, min_us: us.min, max_us: us.max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEcho {
    pub latency_ns: u64,
    pub jitter_ns: u64,
    pub mtu: usize,
    pub loss_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficEcho {
    pub pingpong_messages: usize,
    pub payload: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub security: String,
    pub proposal: String,
    pub esp_proposal: String,
    pub start_action: String,
    pub iterations: usize,
    pub seed: String,
    pub link: LinkEcho,
    pub traffic: TrafficEcho,
    pub e2_period_us: u64,
    pub e2_metrics: Vec<String>,
    pub e2_ports: [u16; 2],
}

impl ConfigEcho {
    pub fn new(c: &ScenarioConfig) -> Self {
        Self {
            security: c.security.to_string(),
            proposal: c.proposal.to_string(),
            esp_proposal: c.esp_proposal.to_string(),
            start_action: c.start_action.to_string(),
            iterations: c.iterations,
            seed: hex::encode(c.seed),
            link: LinkEcho {
                latency_ns: c.link.latency.as_nanos() as u64,
                jitter_ns: c.link.jitter.as_nanos() as u64,
                mtu: c.link.mtu,
                loss_rate: c.link.loss_rate,
            },
            traffic: TrafficEcho { pingpong_messages: c.traffic.pingpong_messages, payload: c.traffic.payload },
            e2_period_us: c.e2.period.as_micros() as u64,
            e2_metrics: c.e2.metrics.clone(),
            e2_ports: [c.e2.ports.0, c.e2.ports.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub ike_init: StatsUs,
    pub ike_auth: StatsUs,
    pub child_sa: StatsUs,
}

impl PhaseStats {
    pub fn get(&self, name: &str) -> Option<&StatsUs> {
        match name {
            "ike_init" => Some(&self.ike_init),
            "ike_auth" => Some(&self.ike_auth),
            "child_sa" => Some(&self.child_sa),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub min_indications: usize,
    pub max_indications: usize,
    pub expected: usize,
    pub max_gap_us: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub config: ConfigEcho,
    pub phases: Option<PhaseStats>,
    pub pingpong: Option<StatsUs>,
    pub pingpong_timeouts: usize,
    pub xapp_delay: Option<StatsUs>,
    pub sa_init_request_bytes: Option<usize>,
    pub e2_stream: Option<StreamSummary>,
    pub wire_overhead_bytes: usize,
}

impl Summary {
    pub fn new(r: &ScenarioReport) -> Self {
        let stat = |name| r.phase_stats(name).map(|s| StatsUs::from_ns(&s));
        let phases = match (stat("ike_init"), stat("ike_auth"), stat("child_sa")) {
            (Some(ike_init), Some(ike_auth), Some(child_sa)) => Some(PhaseStats { ike_init, ike_auth, child_sa }),
            _ => None,
        };
        let streams: Vec<_> = r.iterations.iter().filter_map(|i| i.stream.as_ref()).collect();
        let e2_stream = (!streams.is_empty()).then(|| StreamSummary {
            min_indications: streams.iter().map(|s| s.indications).min().unwrap_or(0),
            max_indications: streams.iter().map(|s| s.indications).max().unwrap_or(0),
            expected: streams[0].expected,
            max_gap_us: streams.iter().filter_map(|s| s.max_gap).max().map(|d| d.as_micros() as u64),
        });
        Self {
            scenario: r.config.name.clone(),
            config: ConfigEcho::new(&r.config),
            phases,
            pingpong: r.pingpong_stats().map(|s| StatsUs::from_ns(&s)),
            pingpong_timeouts: r.iterations.iter().filter_map(|i| i.pingpong.as_ref()).map(|p| p.timeouts).sum(),
            xapp_delay: r.xapp_stats().map(|s| StatsUs::from_ns(&s)),
            sa_init_request_bytes: r.iterations.iter().find_map(|i| i.sa_init_request_bytes),
            e2_stream,
            wire_overhead_bytes: r.wire_overhead_bytes,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub scenario: String,
    pub iteration: usize,
    pub phase: String,
    pub duration_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PingPongRow {
    pub scenario: String,
    pub iteration: usize,
    pub sample: usize,
    pub one_way_us: u64,
}

pub fn phase_rows(r: &ScenarioReport) -> Vec<PhaseRow> {
    let mut rows = Vec::new();
    for it in &r.iterations {
        let Some(p) = it.phases else { continue };
        for (name, d) in PhaseBreakdown::NAMES.iter().zip(p.values()) {
            rows.push(PhaseRow {
                scenario: r.config.name.clone(),
                iteration: it.iteration,
                phase: name.to_string(),
                duration_us: d.as_micros() as u64,
            });
        }
    }
    rows
}

pub fn pingpong_rows(r: &ScenarioReport) -> Vec<PingPongRow> {
    let mut rows = Vec::new();
    for it in &r.iterations {
        let Some(p) = &it.pingpong else { continue };
        for (sample, ns) in p.one_way_ns.iter().enumerate() {
            rows.push(PingPongRow { scenario: r.config.name.clone(), iteration: it.iteration, sample, one_way_us: ns / 1000 });
        }
    }
    rows
}

pub fn write_csv<T: Serialize, W: io::Write>(rows: &[T], header: &[&str], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(header)?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>, R: io::Read>(r: R) -> Result<Vec<T>, csv::Error> {
    csv::Reader::from_reader(r).deserialize().collect()
}

pub const PHASES_HEADER: [&str; 4] = ["scenario", "iteration", "phase", "duration_us"];
pub const PINGPONG_HEADER: [&str; 4] = ["scenario", "iteration", "sample", "one_way_us"];

fn io_err(path: &Path) -> impl Fn(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.display().to_string(), source }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn csv_bytes<T: Serialize>(rows: &[T], header: &[&str], path: &Path) -> Result<Vec<u8>, ReportError> {
    let mut buf = Vec::new();
    write_csv(rows, header, &mut buf).map_err(|e| ReportError::Format { path: path.display().to_string(), msg: e.to_string() })?;
    Ok(buf)
}

/// Writes the summary JSON, plus both per-iteration CSVs for
/// [`Format::Csv`]. Returns the paths written.
pub fn emit_report(r: &ScenarioReport, format: Format, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = &r.config.name;
    let mut out = Vec::new();
    if format == Format::Csv {
        let p = dir.join(format!("{name}_phases.csv"));
        write_file(&p, &csv_bytes(&phase_rows(r), &PHASES_HEADER, &p)?)?;
        out.push(p);
        let p = dir.join(format!("{name}_pingpong.csv"));
        write_file(&p, &csv_bytes(&pingpong_rows(r), &PINGPONG_HEADER, &p)?)?;
        out.push(p);
    }
    let p = dir.join(format!("{name}_summary.json"));
    write_file(&p, Summary::new(r).to_json().as_bytes())?;
    out.push(p);
    Ok(out)
}

/// Published reference measurements from a VM-based testbed, printed under
/// every text report for context. Absolute values are not expected to match.
pub const REFERENCE_FOOTER: &str = "\
reference (VM testbed): ping-pong one-way 125 us plain / 290 us tunneled; \
ECDH phases 1363 / 2093 / 1658 us (ike_init / ike_auth / child_sa); \
ike_init vs ECDH +3 ms (ML-KEM-768), +4.7 ms (ML-KEM-1024); \
xApp first-packet delay 2.033528 s with and without IPsec";

fn fmt_stats(f: &mut fmt::Formatter<'_>, label: &str, s: &StatsUs) -> fmt::Result {
    writeln!(
        f,
        "  {label:18} n={:<5} mean={:>10.1}us median={:>8}us p95={:>8}us min={:>8}us max={:>8}us",
        s.n, s.mean_us, s.median_us, s.p95_us, s.min_us, s.max_us
    )
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(f, "scenario {} ({}, {}, {}, {} iterations)", self.scenario, c.security, c.proposal, c.start_action, c.iterations)?;
        if let Some(p) = &self.phases {
            fmt_stats(f, "ike_init", &p.ike_init)?;
            fmt_stats(f, "ike_auth", &p.ike_auth)?;
            fmt_stats(f, "child_sa", &p.child_sa)?;
        }
        if let Some(p) = &self.pingpong {
            fmt_stats(f, "pingpong one-way", p)?;
            if self.pingpong_timeouts > 0 {
                writeln!(f, "  pingpong timeouts: {}", self.pingpong_timeouts)?;
            }
        }
        if let Some(x) = &self.xapp_delay {
            fmt_stats(f, "xapp delay", x)?;
        }
        if let Some(b) = self.sa_init_request_bytes {
            writeln!(f, "  sa_init request: {b} bytes")?;
        }
        if let Some(e) = &self.e2_stream {
            writeln!(
                f,
                "  e2 indications: {}..{} of {} expected, max gap {}us",
                e.min_indications,
                e.max_indications,
                e.expected,
                e.max_gap_us.map_or("-".into(), |g| g.to_string())
            )?;
        }
        writeln!(f, "  esp overhead: {} bytes/packet", self.wire_overhead_bytes)
    }
}

pub fn read_summary(path: &Path) -> Result<Summary, ReportError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| ReportError::Format { path: path.display().to_string(), msg: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{IterationResult, PingPongResult};
    use std::time::Duration;

    fn report() -> ScenarioReport {
        let iterations = (0..3)
            .map(|i| IterationResult {
                iteration: i,
                seed: [0; 32],
                phases: Some(PhaseBreakdown {
                    ike_init: Duration::from_nanos(1_363_000 + i as u64 * 1_500),
                    ike_auth: Duration::from_micros(2093),
                    child_sa: Duration::from_micros(1658),
                }),
                sa_init_request_bytes: Some(300),
                pingpong: Some(PingPongResult { one_way_ns: vec![62_500, 63_999], timeouts: 0 }),
                xapp_delay: Some(Duration::from_micros(5)),
                stream: None,
            })
            .collect();
        ScenarioReport { config: ScenarioConfig::default(), iterations, wire_overhead_bytes: 24 }
    }

    #[test]
    fn csv_schema_and_roundtrip() {
        let r = report();
        let mut buf = Vec::new();
        write_csv(&phase_rows(&r), &PHASES_HEADER, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("scenario,iteration,phase,duration_us\n"));
        let back: Vec<PhaseRow> = read_csv(&buf[..]).unwrap();
        assert_eq!(back, phase_rows(&r));
        assert_eq!(back[3].duration_us, 1364);
        let mut buf = Vec::new();
        write_csv(&pingpong_rows(&r), &PINGPONG_HEADER, &mut buf).unwrap();
        assert!(buf.starts_with(b"scenario,iteration,sample,one_way_us\n"));
        let back: Vec<PingPongRow> = read_csv(&buf[..]).unwrap();
        assert_eq!(back[1].one_way_us, 63);
    }

    #[test]
    fn summary_json_roundtrip_and_stable() {
        let s = Summary::new(&report());
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["phases"]["ike_init"]["median_us"], 1364);
        assert_eq!(v["wire_overhead_bytes"], 24);
        let back: Summary = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
        let dir = tempfile::tempdir().unwrap();
        let a = emit_report(&report(), Format::Csv, dir.path()).unwrap();
        let first: Vec<Vec<u8>> = a.iter().map(|p| std::fs::read(p).unwrap()).collect();
        emit_report(&report(), Format::Csv, dir.path()).unwrap();
        let second: Vec<Vec<u8>> = a.iter().map(|p| std::fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
        assert_eq!(read_summary(a.last().unwrap()).unwrap(), s);
    }
}
