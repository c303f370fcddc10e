//! Emulated network: endpoints joined by duplex links with latency, jitter,
//! MTU and loss, a shared monotonic clock, and a packet capture.
//!
//! Delivery delays are real: the reactor in [`runtime`] waits on the wall
//! clock until each datagram's arrival time, so protocol compute cost shows
//! up in measured timings.

pub mod capture;
pub mod clock;
pub mod frag;
pub mod lab;
pub mod runtime;

use std::time::Duration;

pub use capture::{Capture, CaptureEvent, Direction, Proto};
pub use clock::Clock;
pub use lab::{make_lab, Delivery, Lab, LabSpec, Transport};
pub use runtime::{Ctx, Node, Runtime};

/// IPv4 + UDP headers, counted against the MTU but not in capture sizes.
pub const DATAGRAM_OVERHEAD: usize = 28;
pub const MIN_MTU: usize = 576;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabError {
    #[error("invalid lab spec: {0}")]
    InvalidSpec(String),
    #[error("{len}-byte datagram exceeds mtu {mtu}")]
    MtuExceeded { len: usize, mtu: usize },
    #[error("no route from {from} to {to}")]
    NoRoute { from: String, to: String },
    #[error("unknown endpoint `{0}`")]
    UnknownEndpoint(String),
    #[error("timed out waiting for a delivery to {0}")]
    Timeout(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    /// One-way delay.
    pub latency: Duration,
    /// Half-width of the uniform delay perturbation.
    pub jitter: Duration,
    pub mtu: usize,
    pub loss_rate: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        Self {
            latency: Duration::from_micros(50),
            jitter: Duration::from_micros(5),
            mtu: 1400,
            loss_rate: 0.0,
        }
    }
}

impl LinkSpec {
    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |m: String| Err(LabError::InvalidSpec(m));
        if self.jitter > self.latency {
            return bad(format!("jitter {:?} exceeds latency {:?}", self.jitter, self.latency));
        }
        if !(0.0..1.0).contains(&self.loss_rate) {
            return bad(format!("loss_rate {} outside [0, 1)", self.loss_rate));
        }
        if self.mtu < MIN_MTU {
            return bad(format!("mtu {} below {MIN_MTU}", self.mtu));
        }
        Ok(())
    }

    /// Largest payload a single datagram can carry.
    pub fn max_payload(&self) -> usize {
        self.mtu - DATAGRAM_OVERHEAD
    }
}
