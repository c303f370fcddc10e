//! Side-by-side comparison of scenario summaries against a baseline.

use std::fmt;

use serde::Serialize;

use crate::report::{StatsUs, Summary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompareError {
    #[error("baseline `{0}` not among the reports")]
    UnknownBaseline(String),
    #[error("scenario `{scenario}` differs from the baseline in {what}")]
    ConfigMismatch { scenario: String, what: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub metric: String,
    pub mean_us: f64,
    pub median_us: u64,
    /// Mean minus the baseline mean.
    pub delta_us: f64,
    /// Mean over the baseline mean.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub baseline: String,
    pub rows: Vec<Row>,
}

fn metrics_of(s: &Summary) -> Vec<(&'static str, StatsUs)> {
    let mut out = Vec::new();
    if let Some(p) = &s.phases {
        out.push(("ike_init", p.ike_init));
        out.push(("ike_auth", p.ike_auth));
        out.push(("child_sa", p.child_sa));
    }
    if let Some(p) = s.pingpong {
        out.push(("pingpong_one_way", p));
    }
    if let Some(x) = s.xapp_delay {
        out.push(("xapp_delay", x));
    }
    out
}

/// Rows for every metric present in both a scenario and the baseline. Link and
/// traffic settings must match, otherwise the deltas mean nothing.
pub fn compare(summaries: &[Summary], baseline: &str) -> Result<ComparisonTable, CompareError> {
    let base = summaries
        .iter()
        .find(|s| s.scenario == baseline)
        .ok_or_else(|| CompareError::UnknownBaseline(baseline.to_string()))?;
    let base_metrics = metrics_of(base);
    let mut rows = Vec::new();
    for s in summaries {
        let mismatch = |what| CompareError::ConfigMismatch { scenario: s.scenario.clone(), what };
        if s.config.link != base.config.link {
            return Err(mismatch("link"));
        }
        if s.config.traffic != base.config.traffic {
            return Err(mismatch("traffic"));
        }
        for (name, st) in metrics_of(s) {
            let Some((_, b)) = base_metrics.iter().find(|(n, _)| *n == name) else { continue };
            rows.push(Row {
                scenario: s.scenario.clone(),
                metric: name.to_string(),
                mean_us: st.mean_us,
                median_us: st.median_us,
                delta_us: st.mean_us - b.mean_us,
                ratio: if b.mean_us > 0.0 { st.mean_us / b.mean_us } else { f64::NAN },
            });
        }
    }
    Ok(ComparisonTable { baseline: baseline.to_string(), rows })
}

impl ComparisonTable {
    pub fn get(&self, scenario: &str, metric: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.scenario == scenario && r.metric == metric)
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.rows.iter().map(|r| r.scenario.len()).max().unwrap_or(8).max(8);
        writeln!(f, "baseline: {}", self.baseline)?;
        writeln!(f, "{:w$}  {:16}  {:>12}  {:>10}  {:>12}  {:>7}", "scenario", "metric", "mean_us", "median_us", "delta_us", "ratio")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:w$}  {:16}  {:>12.1}  {:>10}  {:>+12.1}  {:>7.3}",
                r.scenario, r.metric, r.mean_us, r.median_us, r.delta_us, r.ratio
            )?;
        }
        Ok(())
    }
}
