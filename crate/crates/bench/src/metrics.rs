//! Metrics extracted from capture logs and run records.

use std::collections::BTreeSet;
use std::time::Duration;

use pqe2::e2::XappRunRecord;
use pqe2::ike::{Exchange, FRAGMENT_OVERHEAD};
use pqe2::netlab::{CaptureEvent, Direction, Proto};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("incomplete handshake: {0}")]
    IncompleteHandshake(String),
    #[error("xApp record has no first packet")]
    IncompleteRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseBreakdown {
    pub ike_init: Duration,
    pub ike_auth: Duration,
    pub child_sa: Duration,
}

impl PhaseBreakdown {
    pub const NAMES: [&'static str; 3] = ["ike_init", "ike_auth", "child_sa"];

    pub fn total(&self) -> Duration {
        self.ike_init + self.ike_auth + self.child_sa
    }

    pub fn get(&self, name: &str) -> Option<Duration> {
        match name {
            "ike_init" => Some(self.ike_init),
            "ike_auth" => Some(self.ike_auth),
            "child_sa" => Some(self.child_sa),
            _ => None,
        }
    }

    pub fn values(&self) -> [Duration; 3] {
        [self.ike_init, self.ike_auth, self.child_sa]
    }
}

/// Splits an IKE capture label such as `AUTH_RESP[2/3]` into
/// `("AUTH_RESP", Some((2, 3)))`.
pub fn parse_ike_label(detail: &str) -> (&str, Option<(u8, u8)>) {
    let Some((base, rest)) = detail.split_once('[') else { return (detail, None) };
    let frag = rest
        .strip_suffix(']')
        .and_then(|r| r.split_once('/'))
        .and_then(|(i, n)| Some((i.parse().ok()?, n.parse().ok()?)));
    (base, frag)
}

fn ike_events<'a>(
    capture: &'a [CaptureEvent],
    endpoint: &'a str,
    dir: Direction,
    label: &'a str,
) -> impl Iterator<Item = (&'a CaptureEvent, Option<(u8, u8)>)> + 'a {
    capture.iter().filter_map(move |e| {
        if e.proto != Proto::Ike || e.endpoint != endpoint || e.direction != dir {
            return None;
        }
        let (base, frag) = parse_ike_label(&e.detail);
        (base == label).then_some((e, frag))
    })
}

/// The endpoint that sent the first IKE_SA_INIT request.
pub fn initiator_of(capture: &[CaptureEvent]) -> Option<&str> {
    capture
        .iter()
        .find(|e| e.proto == Proto::Ike && e.direction == Direction::Send && parse_ike_label(&e.detail).0 == "SA_INIT_REQ")
        .map(|e| e.endpoint.as_str())
}

/// Timestamp at which the initiator holds a complete response: the first
/// RECV for an unfragmented one, otherwise the RECV that completes the set.
fn response_complete(capture: &[CaptureEvent], ep: &str, label: &str) -> Option<u64> {
    let mut seen = BTreeSet::new();
    for (e, frag) in ike_events(capture, ep, Direction::Recv, label) {
        match frag {
            None => return Some(e.ts_ns),
            Some((i, n)) => {
                seen.insert(i);
                if seen.len() == usize::from(n) {
                    return Some(e.ts_ns);
                }
            }
        }
    }
    None
}

/// Each phase is measured at the initiator from the first SEND of its
/// request to the RECV completing its response.
pub fn extract_phases(capture: &[CaptureEvent]) -> Result<PhaseBreakdown, MetricError> {
    let ep = initiator_of(capture).ok_or_else(|| MetricError::IncompleteHandshake("no SA_INIT request".into()))?;
    let phase = |ex: Exchange| -> Result<Duration, MetricError> {
        let req = format!("{}_REQ", ex.label());
        let resp = format!("{}_RESP", ex.label());
        let start = ike_events(capture, ep, Direction::Send, &req)
            .map(|(e, _)| e.ts_ns)
            .next()
            .ok_or_else(|| MetricError::IncompleteHandshake(format!("missing {req}")))?;
        let end = response_complete(capture, ep, &resp)
            .ok_or_else(|| MetricError::IncompleteHandshake(format!("missing {resp}")))?;
        end.checked_sub(start)
            .map(Duration::from_nanos)
            .ok_or_else(|| MetricError::IncompleteHandshake(format!("{resp} precedes {req}")))
    };
    Ok(PhaseBreakdown {
        ike_init: phase(Exchange::SaInit)?,
        ike_auth: phase(Exchange::Auth)?,
        child_sa: phase(Exchange::CreateChild)?,
    })
}

/// Size of the initiator's IKE_SA_INIT request before fragmentation framing,
/// counting each fragment of the first transmission once.
pub fn sa_init_request_bytes(capture: &[CaptureEvent]) -> Result<usize, MetricError> {
    let ep = initiator_of(capture).ok_or_else(|| MetricError::IncompleteHandshake("no SA_INIT request".into()))?;
    let mut seen = BTreeSet::new();
    let mut total = 0;
    for (e, frag) in ike_events(capture, ep, Direction::Send, "SA_INIT_REQ") {
        match frag {
            None => return Ok(e.size),
            Some((i, n)) => {
                if seen.insert(i) {
                    total += e.size - FRAGMENT_OVERHEAD;
                }
                if seen.len() == usize::from(n) {
                    return Ok(total);
                }
            }
        }
    }
    Err(MetricError::IncompleteHandshake("SA_INIT request fragments missing".into()))
}

pub fn xapp_delay(record: &XappRunRecord) -> Result<Duration, MetricError> {
    record.delay().ok_or(MetricError::IncompleteRecord)
}

/// One-way latency under the symmetric-link assumption.
pub fn one_way(rtt_ns: &[u64]) -> Vec<u64> {
    rtt_ns.iter().map(|r| r / 2).collect()
}
