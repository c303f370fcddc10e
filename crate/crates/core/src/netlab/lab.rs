//! Topology, link delay model and the pending-delivery queue.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::Duration;

use rand::Rng;

use crate::rng::{derive_seed, Drbg};

use super::capture::{Capture, CaptureEvent, Direction, Proto};
use super::clock::Clock;
use super::frag::FragHeader;
use super::{LabError, LinkSpec, DATAGRAM_OVERHEAD};

#[derive(Debug, Clone)]
pub struct LabSpec {
    pub endpoints: Vec<String>,
    pub links: Vec<(String, String, LinkSpec)>,
    /// Seeds the per-link jitter and loss draws.
    pub seed: [u8; 32],
}

impl LabSpec {
    /// Two endpoints joined by one link.
    pub fn pair(a: &str, b: &str, link: LinkSpec, seed: [u8; 32]) -> Self {
        Self {
            endpoints: vec![a.to_string(), b.to_string()],
            links: vec![(a.to_string(), b.to_string(), link)],
            seed,
        }
    }
}

/// Datagrams are subject to MTU and loss; streams model a reliable
/// SCTP-like association and are exempt from both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Datagram,
    Stream,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub at_ns: u64,
    pub from: String,
    pub to: String,
    pub proto: Proto,
    pub detail: String,
    pub bytes: Vec<u8>,
    pub corr_id: u64,
    pub transport: Transport,
    pub frag: Option<FragHeader>,
}

#[derive(Debug)]
struct LinkState {
    spec: LinkSpec,
    a: usize,
    rng: Drbg,
    /// Latest scheduled arrival per direction, for FIFO ordering.
    last_arrival: [u64; 2],
}

#[derive(Debug)]
pub struct Lab {
    clock: Clock,
    endpoints: Vec<String>,
    index: HashMap<String, usize>,
    links: Vec<LinkState>,
    adjacency: HashMap<(usize, usize), usize>,
    pending: BTreeMap<(u64, u64), Delivery>,
    capture: Capture,
    next_corr: u64,
    last_send_ns: Option<u64>,
}

fn link_rng(seed: &[u8; 32], i: usize) -> Drbg {
    Drbg::new(derive_seed(seed, format!("link {i}").as_bytes()))
}

pub fn make_lab(spec: &LabSpec) -> Result<Lab, LabError> {
    let bad = |m: String| Err(LabError::InvalidSpec(m));
    if spec.endpoints.is_empty() {
        return bad("no endpoints".into());
    }
    let mut index = HashMap::new();
    for (i, e) in spec.endpoints.iter().enumerate() {
        if e.is_empty() || index.insert(e.clone(), i).is_some() {
            return bad(format!("duplicate or empty endpoint name `{e}`"));
        }
    }
    let mut links = Vec::new();
    let mut adjacency = HashMap::new();
    for (i, (a, b, l)) in spec.links.iter().enumerate() {
        l.validate()?;
        let (Some(&ia), Some(&ib)) = (index.get(a), index.get(b)) else {
            return bad(format!("link {a}-{b} names an unknown endpoint"));
        };
        if ia == ib {
            return bad(format!("self-link on {a}"));
        }
        if adjacency.insert((ia, ib), i).is_some() || adjacency.insert((ib, ia), i).is_some() {
            return bad(format!("duplicate link {a}-{b}"));
        }
        links.push(LinkState { spec: *l, a: ia, rng: link_rng(&spec.seed, i), last_arrival: [0; 2] });
    }
    // connectivity
    let mut seen = HashSet::from([0usize]);
    let mut stack = vec![0usize];
    while let Some(n) = stack.pop() {
        for &(x, y) in adjacency.keys() {
            if x == n && seen.insert(y) {
                stack.push(y);
            }
        }
    }
    if seen.len() != spec.endpoints.len() {
        return bad("topology is not connected".into());
    }
    Ok(Lab {
        clock: Clock::new(),
        endpoints: spec.endpoints.clone(),
        index,
        links,
        adjacency,
        pending: BTreeMap::new(),
        capture: Capture::new(),
        next_corr: 1,
        last_send_ns: None,
    })
}

impl Lab {
    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn now_ns(&self) -> u64 {
        self.clock.now_ns()
    }

    pub fn endpoints(&self) -> &[String] {
        &self.endpoints
    }

    pub fn link(&self, a: &str, b: &str) -> Result<LinkSpec, LabError> {
        let (_, l, _) = self.route(a, b)?;
        Ok(self.links[l].spec)
    }

    /// Restarts every link's jitter/loss stream from `seed`.
    pub fn reseed_links(&mut self, seed: &[u8; 32]) {
        for (i, l) in self.links.iter_mut().enumerate() {
            l.rng = link_rng(seed, i);
        }
    }

    fn route(&self, from: &str, to: &str) -> Result<(usize, usize, usize), LabError> {
        let f = *self.index.get(from).ok_or_else(|| LabError::UnknownEndpoint(from.into()))?;
        let t = *self.index.get(to).ok_or_else(|| LabError::UnknownEndpoint(to.into()))?;
        let l = *self.adjacency.get(&(f, t)).ok_or_else(|| LabError::NoRoute { from: from.into(), to: to.into() })?;
        let dir = usize::from(self.links[l].a != f);
        Ok((t, l, dir))
    }

    pub fn send(&mut self, from: &str, to: &str, proto: Proto, detail: &str, bytes: Vec<u8>) -> Result<u64, LabError> {
        self.send_with(from, to, proto, detail, bytes, Transport::Datagram, None)
    }

    /// Logs the SEND, then schedules arrival after `latency ± jitter`, never
    /// earlier than the previous arrival in the same direction. Returns the
    /// correlation id shared by the SEND and RECV events.
    #[allow(clippy::too_many_arguments)]
    pub fn send_with(
        &mut self,
        from: &str,
        to: &str,
        proto: Proto,
        detail: &str,
        bytes: Vec<u8>,
        transport: Transport,
        frag: Option<FragHeader>,
    ) -> Result<u64, LabError> {
        let (_, l, dir) = self.route(from, to)?;
        let link = &mut self.links[l];
        let wire = bytes.len() + DATAGRAM_OVERHEAD;
        if transport == Transport::Datagram && wire > link.spec.mtu {
            return Err(LabError::MtuExceeded { len: wire, mtu: link.spec.mtu });
        }
        let now = self.clock.now_ns();
        let corr_id = self.next_corr;
        self.next_corr += 1;
        self.last_send_ns = Some(now);
        self.capture.push(CaptureEvent {
            ts_ns: now,
            endpoint: from.to_string(),
            direction: Direction::Send,
            proto,
            detail: detail.to_string(),
            size: bytes.len(),
            corr_id,
        });
        let jitter = link.spec.jitter.as_nanos() as i64;
        let offset = if jitter > 0 { link.rng.gen_range(-jitter..=jitter) } else { 0 };
        let lost = transport == Transport::Datagram
            && link.spec.loss_rate > 0.0
            && link.rng.gen_bool(link.spec.loss_rate);
        if lost {
            return Ok(corr_id);
        }
        let delay = (link.spec.latency.as_nanos() as i64 + offset).max(0) as u64;
        let at = (now + delay).max(link.last_arrival[dir]);
        link.last_arrival[dir] = at;
        self.pending.insert(
            (at, corr_id),
            Delivery {
                at_ns: at,
                from: from.to_string(),
                to: to.to_string(),
                proto,
                detail: detail.to_string(),
                bytes,
                corr_id,
                transport,
                frag,
            },
        );
        Ok(corr_id)
    }

    /// Timestamp of the most recent SEND event.
    pub fn last_send_ns(&self) -> Option<u64> {
        self.last_send_ns
    }

    pub fn next_delivery_at(&self) -> Option<u64> {
        self.pending.keys().next().map(|k| k.0)
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    fn take(&mut self, key: (u64, u64)) -> Delivery {
        let d = self.pending.remove(&key).expect("key from pending");
        self.capture.push(CaptureEvent {
            ts_ns: d.at_ns,
            endpoint: d.to.clone(),
            direction: Direction::Recv,
            proto: d.proto,
            detail: d.detail.clone(),
            size: d.bytes.len(),
            corr_id: d.corr_id,
        });
        d
    }

    /// Removes the earliest delivery if its arrival time has passed, logging
    /// the RECV at the arrival time.
    pub fn pop_due(&mut self, now_ns: u64) -> Option<Delivery> {
        let key = *self.pending.keys().next()?;
        (key.0 <= now_ns).then(|| self.take(key))
    }

    /// Blocks until the next datagram addressed to `endpoint` arrives.
    /// Deliveries to other endpoints stay queued.
    pub fn recv(&mut self, endpoint: &str, timeout: Duration) -> Result<Delivery, LabError> {
        if !self.index.contains_key(endpoint) {
            return Err(LabError::UnknownEndpoint(endpoint.into()));
        }
        let deadline = self.clock.now_ns() + timeout.as_nanos() as u64;
        let key = self.pending.iter().find(|(_, d)| d.to == endpoint).map(|(k, _)| *k);
        match key {
            Some(k) if k.0 <= deadline => {
                self.clock.wait_until(k.0);
                Ok(self.take(k))
            }
            _ => {
                self.clock.wait_until(deadline);
                Err(LabError::Timeout(endpoint.into()))
            }
        }
    }

    /// Every event so far, sorted by timestamp.
    pub fn capture_log(&self) -> Vec<CaptureEvent> {
        self.capture.sorted()
    }

    pub fn capture(&self) -> &Capture {
        &self.capture
    }

    pub fn clear_capture(&mut self) {
        self.capture.clear();
    }
}
