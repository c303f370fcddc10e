//! Security policies and the trap-triggered outbound path.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::ike::{ChildSaKeys, IkeConfig, TrafficSelectors};

use super::packet::{EspError, EspPacket, EspSa, InnerPacket};

pub const DEFAULT_QUEUE_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartAction {
    /// Establish on the first matching outbound packet.
    Trap,
    /// Establish as soon as the policy is installed.
    Start,
}

impl FromStr for StartAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trap" => Ok(StartAction::Trap),
            "start" => Ok(StartAction::Start),
            _ => Err(format!("unknown start_action `{s}` (expected trap or start)")),
        }
    }
}

impl fmt::Display for StartAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StartAction::Trap => "trap",
            StartAction::Start => "start",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SecurityPolicy {
    pub selectors: TrafficSelectors,
    pub start_action: StartAction,
    pub ike: Arc<IkeConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrapAction {
    /// No selector match: forward the packet unprotected.
    SendPlain(InnerPacket),
    /// Tunnel is up: send this ESP packet.
    Seal(EspPacket),
    /// Held until the tunnel comes up. `trigger_ike` is set on the packet that
    /// should start the IKE initiator.
    Queued { trigger_ike: bool },
}

/// Outbound processing for one policy on one host.
#[derive(Debug)]
pub struct TrapController {
    pub policy: SecurityPolicy,
    /// Whether this host starts IKE on a trap hit; a responder only queues.
    pub initiator: bool,
    sa: Option<EspSa>,
    queue: VecDeque<InnerPacket>,
    limit: usize,
    triggered: bool,
}

impl TrapController {
    pub fn new(policy: SecurityPolicy, initiator: bool) -> Self {
        Self {
            policy,
            initiator,
            sa: None,
            queue: VecDeque::new(),
            limit: DEFAULT_QUEUE_LIMIT,
            triggered: false,
        }
    }

    pub fn with_queue_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn sa(&self) -> Option<&EspSa> {
        self.sa.as_ref()
    }

    pub fn sa_mut(&mut self) -> Option<&mut EspSa> {
        self.sa.as_mut()
    }

    pub fn established(&self) -> bool {
        self.sa.is_some()
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    /// Inner source addresses of the held packets, in queue order.
    pub fn queued_sources(&self) -> Vec<std::net::Ipv4Addr> {
        self.queue.iter().map(|p| p.src).collect()
    }

    /// Marks IKE as already running, e.g. for `start_action = start`.
    pub fn mark_triggered(&mut self) {
        self.triggered = true;
    }

    pub fn trap_intercept(&mut self, pkt: InnerPacket) -> Result<TrapAction, EspError> {
        if !self.policy.selectors.matches(pkt.src, pkt.dst) {
            return Ok(TrapAction::SendPlain(pkt));
        }
        if let Some(sa) = self.sa.as_mut() {
            return sa.seal(&pkt.encode()).map(TrapAction::Seal);
        }
        if self.queue.len() >= self.limit {
            return Err(EspError::QueueOverflow(self.limit));
        }
        self.queue.push_back(pkt);
        let trigger = self.initiator && !self.triggered;
        self.triggered |= trigger;
        Ok(TrapAction::Queued { trigger_ike: trigger })
    }

    /// Installs the child SA and seals everything queued, in arrival order.
    pub fn install(&mut self, keys: ChildSaKeys) -> Result<Vec<EspPacket>, EspError> {
        let mut sa = EspSa::new(keys);
        let out = self
            .queue
            .drain(..)
            .map(|p| sa.seal(&p.encode()))
            .collect::<Result<Vec<_>, _>>()?;
        self.sa = Some(sa);
        Ok(out)
    }

    /// Inbound ESP: opens and checks the inner addresses against the policy.
    pub fn open(&mut self, pkt: &EspPacket) -> Result<InnerPacket, EspError> {
        let sa = self.sa.as_mut().ok_or(EspError::UnknownSpi(pkt.spi))?;
        let inner = InnerPacket::decode(&sa.open(pkt)?)?;
        if !self.policy.selectors.matches_inbound(inner.src, inner.dst) {
            return Err(EspError::Malformed("inner addresses outside policy"));
        }
        Ok(inner)
    }
}
