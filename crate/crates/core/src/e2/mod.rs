//! E2 control plane: a gNB-side agent, a Near-RT RIC that relays
//! subscriptions, and a KPM-monitoring xApp.
//!
//! The agents are sans-IO state machines. The host wiring in
//! [`crate::testbed`] moves their messages over the lab and drives their
//! periodic timers.

pub mod agent;
pub mod codec;

use std::time::Duration;

pub use agent::{GnbAgent, GnbReaction, Ric, RicPeer, Xapp, XappEvent};
pub use codec::{E2Kind, E2Message};

pub const RIC_PORT: u16 = 36421;
pub const XAPP_PORT: u16 = 36422;
pub const DEFAULT_PERIOD: Duration = Duration::from_millis(100);
pub const DEFAULT_METRICS: [&str; 2] = ["DRB.UEThpDl", "DRB.UEThpUl"];
/// Metrics the emulated gNB can report.
pub const KNOWN_METRICS: [&str; 5] =
    ["DRB.UEThpDl", "DRB.UEThpUl", "DRB.RlcSduDelayDl", "RRU.PrbTotDl", "RRU.PrbTotUl"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum E2Error {
    #[error("no answer from {peer} within {after:?}")]
    ConnectTimeout { peer: String, after: Duration },
    #[error("E2 setup rejected: {0}")]
    SetupRejected(String),
    #[error("subscription rejected: {0}")]
    SubscriptionRejected(String),
    #[error("unexpected {0} in current state")]
    UnexpectedMessage(E2Kind),
    #[error("malformed E2 message: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subscription {
    pub id: u32,
    pub metrics: Vec<String>,
    pub period: Duration,
}

impl Subscription {
    pub fn new(id: u32, metrics: Vec<String>, period: Duration) -> Result<Self, E2Error> {
        validate_request(&metrics, period)?;
        Ok(Self { id, metrics, period })
    }
}

pub(crate) fn validate_request(metrics: &[String], period: Duration) -> Result<(), E2Error> {
    if metrics.is_empty() {
        return Err(E2Error::SubscriptionRejected("empty metric list".into()));
    }
    if period.is_zero() {
        return Err(E2Error::SubscriptionRejected("period must be positive".into()));
    }
    Ok(())
}

/// Timestamps on the lab clock, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct XappRunRecord {
    /// When the xApp process was launched.
    pub start_ts: u64,
    /// First wire packet carrying the xApp's traffic, IKE included when the
    /// xApp's packet is what triggered the tunnel.
    pub first_packet_ts: Option<u64>,
}

impl XappRunRecord {
    pub fn delay(&self) -> Option<Duration> {
        self.first_packet_ts.map(|t| Duration::from_nanos(t.saturating_sub(self.start_ts)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subscription_invariants() {
        assert!(Subscription::new(1, vec![], DEFAULT_PERIOD).is_err());
        assert!(Subscription::new(1, vec!["x".into()], Duration::ZERO).is_err());
        assert!(Subscription::new(1, vec!["x".into()], DEFAULT_PERIOD).is_ok());
    }

    #[test]
    fn record_delay() {
        let r = XappRunRecord { start_ts: 5, first_packet_ts: Some(5) };
        assert_eq!(r.delay(), Some(Duration::ZERO));
        assert_eq!(XappRunRecord::default().delay(), None);
    }
}
