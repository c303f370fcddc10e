//! Single-threaded reactor driving a set of nodes over a [`Lab`].
//!
//! Events (deliveries and timers) run in timestamp order. The reactor waits
//! on the real clock for each event, so time a handler spends computing
//! delays everything after it, as on a real host.

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use super::capture::Proto;
use super::frag::FragHeader;
use super::lab::{Delivery, Lab, Transport};
use super::LabError;

pub trait Node {
    fn on_start(&mut self, _ctx: &mut Ctx<'_>) {}
    fn on_packet(&mut self, ctx: &mut Ctx<'_>, d: Delivery);
    fn on_timer(&mut self, _ctx: &mut Ctx<'_>, _token: u64) {}
}

pub struct Ctx<'a> {
    lab: &'a mut Lab,
    me: &'a str,
    timers: &'a mut Vec<(u64, u64)>,
    stop: &'a mut bool,
}

impl Ctx<'_> {
    pub fn me(&self) -> &str {
        self.me
    }

    pub fn now_ns(&self) -> u64 {
        self.lab.now_ns()
    }

    pub fn lab(&self) -> &Lab {
        self.lab
    }

    pub fn send(&mut self, to: &str, proto: Proto, detail: &str, bytes: Vec<u8>) -> Result<u64, LabError> {
        self.lab.send_with(self.me, to, proto, detail, bytes, Transport::Datagram, None)
    }

    pub fn send_fragment(
        &mut self,
        to: &str,
        proto: Proto,
        detail: &str,
        bytes: Vec<u8>,
        frag: FragHeader,
    ) -> Result<u64, LabError> {
        self.lab.send_with(self.me, to, proto, detail, bytes, Transport::Datagram, Some(frag))
    }

    pub fn send_stream(&mut self, to: &str, proto: Proto, detail: &str, bytes: Vec<u8>) -> Result<u64, LabError> {
        self.lab.send_with(self.me, to, proto, detail, bytes, Transport::Stream, None)
    }

    /// Fires `on_timer(token)` after `delay`. Timers cannot be cancelled;
    /// nodes ignore tokens they no longer care about.
    pub fn set_timer(&mut self, delay: Duration, token: u64) {
        let at = self.now_ns() + delay.as_nanos() as u64;
        self.timers.push((at, token));
    }

    pub fn set_timer_at(&mut self, at_ns: u64, token: u64) {
        self.timers.push((at_ns, token));
    }

    /// Restarts the links' jitter/loss streams, so two runs can line up
    /// their draws from a chosen point onward.
    pub fn reseed_links(&mut self, seed: &[u8; 32]) {
        self.lab.reseed_links(seed);
    }

    pub fn stop(&mut self) {
        *self.stop = true;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// A node called [`Ctx::stop`].
    Stopped,
    /// Nothing left to do before the deadline.
    Idle,
    Deadline,
}

pub struct Runtime<N> {
    lab: Lab,
    names: Vec<String>,
    nodes: Vec<N>,
    by_name: HashMap<String, usize>,
    timers: BTreeMap<(u64, u64), (usize, u64)>,
    timer_seq: u64,
    started: bool,
    /// Deliveries addressed to endpoints without a node.
    pub dropped: Vec<Delivery>,
}

impl<N: Node> Runtime<N> {
    pub fn new(lab: Lab) -> Self {
        Self {
            lab,
            names: Vec::new(),
            nodes: Vec::new(),
            by_name: HashMap::new(),
            timers: BTreeMap::new(),
            timer_seq: 0,
            started: false,
            dropped: Vec::new(),
        }
    }

    pub fn add_node(&mut self, endpoint: &str, node: N) -> Result<(), LabError> {
        if !self.lab.endpoints().iter().any(|e| e == endpoint) {
            return Err(LabError::UnknownEndpoint(endpoint.into()));
        }
        if self.by_name.contains_key(endpoint) {
            return Err(LabError::InvalidSpec(format!("endpoint `{endpoint}` already has a node")));
        }
        self.by_name.insert(endpoint.into(), self.nodes.len());
        self.names.push(endpoint.into());
        self.nodes.push(node);
        Ok(())
    }

    pub fn lab(&self) -> &Lab {
        &self.lab
    }

    pub fn lab_mut(&mut self) -> &mut Lab {
        &mut self.lab
    }

    pub fn node(&self, endpoint: &str) -> Option<&N> {
        self.by_name.get(endpoint).map(|&i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, endpoint: &str) -> Option<&mut N> {
        self.by_name.get(endpoint).map(|&i| &mut self.nodes[i])
    }

    pub fn into_parts(self) -> (Lab, Vec<(String, N)>) {
        (self.lab, self.names.into_iter().zip(self.nodes).collect())
    }

    fn dispatch(&mut self, i: usize, f: impl FnOnce(&mut N, &mut Ctx<'_>)) -> bool {
        let mut timers = Vec::new();
        let mut stop = false;
        let mut ctx = Ctx { lab: &mut self.lab, me: &self.names[i], timers: &mut timers, stop: &mut stop };
        f(&mut self.nodes[i], &mut ctx);
        for (at, token) in timers {
            self.timers.insert((at, self.timer_seq), (i, token));
            self.timer_seq += 1;
        }
        stop
    }

    /// Runs events until a node stops the run, nothing remains, or the
    /// clock reaches `deadline_ns`.
    pub fn run(&mut self, deadline_ns: u64) -> RunOutcome {
        if !self.started {
            self.started = true;
            for i in 0..self.nodes.len() {
                if self.dispatch(i, |n, c| n.on_start(c)) {
                    return RunOutcome::Stopped;
                }
            }
        }
        loop {
            let next_timer = self.timers.keys().next().map(|k| k.0);
            let next_pkt = self.lab.next_delivery_at();
            let next = match (next_timer, next_pkt) {
                (None, None) => return RunOutcome::Idle,
                (a, b) => a.into_iter().chain(b).min().unwrap(),
            };
            if next > deadline_ns {
                self.lab.clock().wait_until(deadline_ns);
                return RunOutcome::Deadline;
            }
            self.lab.clock().wait_until(next);
            // packets win ties so a reply can cancel a same-instant timeout
            let stop = if next_pkt == Some(next) {
                let d = self.lab.pop_due(next).expect("due delivery");
                match self.by_name.get(&d.to).copied() {
                    Some(i) => self.dispatch(i, |n, c| n.on_packet(c, d)),
                    None => {
                        self.dropped.push(d);
                        false
                    }
                }
            } else {
                let (key, (i, token)) = self.timers.pop_first().expect("due timer");
                debug_assert_eq!(key.0, next);
                self.dispatch(i, |n, c| n.on_timer(c, token))
            };
            if stop {
                return RunOutcome::Stopped;
            }
        }
    }
}
