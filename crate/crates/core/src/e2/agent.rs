use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use rand::Rng;

use crate::rng::Drbg;

use super::codec::{E2Kind, E2Message};
use super::{validate_request, E2Error, Subscription, XappRunRecord, KNOWN_METRICS};

const ACCEPT: &[u8] = b"accept";
const REJECT: &[u8] = b"reject";

fn accepted(m: &E2Message) -> bool {
    m.get("result") == Some(ACCEPT)
}

fn cause(m: &E2Message) -> String {
    m.get_str("cause").unwrap_or("unspecified").to_string()
}

fn request_fields(m: &E2Message) -> Result<(Vec<String>, Duration), E2Error> {
    let metrics = m
        .get_all("metric")
        .map(|v| std::str::from_utf8(v).map(str::to_string))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| E2Error::Malformed("metric name is not utf-8"))?;
    let period = m.get_u64("period_us").ok_or(E2Error::Malformed("missing period_us"))?;
    Ok((metrics, Duration::from_micros(period)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnbState {
    Idle,
    SetupSent,
    Associated,
}

#[derive(Debug)]
struct ActiveSub {
    sub: Subscription,
    values: Drbg,
}

#[derive(Debug, Default, PartialEq)]
pub struct GnbReaction {
    pub replies: Vec<E2Message>,
    /// A subscription the host should start emitting for.
    pub started: Option<Subscription>,
}

/// gNB-side E2 agent.
#[derive(Debug)]
pub struct GnbAgent {
    pub node_id: String,
    state: GnbState,
    txn: u32,
    setup_deadline: Option<u64>,
    subs: BTreeMap<u32, ActiveSub>,
    rng: Drbg,
}

impl GnbAgent {
    pub fn new(node_id: &str, rng: Drbg) -> Self {
        Self { node_id: node_id.into(), state: GnbState::Idle, txn: 0, setup_deadline: None, subs: BTreeMap::new(), rng }
    }

    pub fn state(&self) -> GnbState {
        self.state
    }

    pub fn subscriptions(&self) -> impl Iterator<Item = &Subscription> {
        self.subs.values().map(|s| &s.sub)
    }

    pub fn setup_request(&mut self, now_ns: u64, timeout: Duration) -> E2Message {
        self.txn += 1;
        if self.state == GnbState::Idle {
            self.state = GnbState::SetupSent;
            self.setup_deadline = Some(now_ns + timeout.as_nanos() as u64);
        }
        E2Message::new(E2Kind::SetupReq, self.txn)
            .with("node_id", self.node_id.as_bytes())
            .with("ran_function", "E2SM-KPM")
    }

    pub fn check_deadline(&self, now_ns: u64, timeout: Duration) -> Result<(), E2Error> {
        match (self.state, self.setup_deadline) {
            (GnbState::SetupSent, Some(d)) if now_ns >= d => {
                Err(E2Error::ConnectTimeout { peer: "RIC".into(), after: timeout })
            }
            _ => Ok(()),
        }
    }

    pub fn on_message(&mut self, m: &E2Message) -> Result<GnbReaction, E2Error> {
        match m.kind {
            E2Kind::SetupResp => {
                if !accepted(m) {
                    return Err(E2Error::SetupRejected(cause(m)));
                }
                if self.state != GnbState::SetupSent {
                    return Err(E2Error::UnexpectedMessage(m.kind));
                }
                self.state = GnbState::Associated;
                self.setup_deadline = None;
                Ok(GnbReaction::default())
            }
            E2Kind::SubReq if self.state == GnbState::Associated => {
                let id = m.get_u32("sub_id").ok_or(E2Error::Malformed("missing sub_id"))?;
                let (metrics, period) = request_fields(m)?;
                let resp = E2Message::new(E2Kind::SubResp, m.txn_id).with("sub_id", id.to_be_bytes());
                let verdict = validate_request(&metrics, period).and_then(|_| {
                    match metrics.iter().find(|x| !KNOWN_METRICS.contains(&x.as_str())) {
                        Some(bad) => Err(E2Error::SubscriptionRejected(format!("unknown metric `{bad}`"))),
                        None if self.subs.contains_key(&id) => {
                            Err(E2Error::SubscriptionRejected(format!("duplicate sub_id {id}")))
                        }
                        None => Ok(()),
                    }
                });
                match verdict {
                    Ok(()) => {
                        let sub = Subscription { id, metrics, period };
                        let values = self.rng.fork(&format!("sub {id}"));
                        self.subs.insert(id, ActiveSub { sub: sub.clone(), values });
                        Ok(GnbReaction { replies: vec![resp.with("result", ACCEPT)], started: Some(sub) })
                    }
                    Err(e) => {
                        let why = match e {
                            E2Error::SubscriptionRejected(s) => s,
                            other => other.to_string(),
                        };
                        Ok(GnbReaction {
                            replies: vec![resp.with("result", REJECT).with("cause", why.into_bytes())],
                            started: None,
                        })
                    }
                }
            }
            k => Err(E2Error::UnexpectedMessage(k)),
        }
    }

    /// Next INDICATION for `sub_id`, carrying one value per subscribed metric
    /// and keyed by the subscription id in the txn field.
    pub fn emit_indication(&mut self, sub_id: u32) -> Option<E2Message> {
        let s = self.subs.get_mut(&sub_id)?;
        let mut m = E2Message::new(E2Kind::Indication, sub_id);
        for name in &s.sub.metrics {
            let v: f64 = s.values.gen_range(0.0..1000.0);
            m = m.with(name, v.to_be_bytes());
        }
        Some(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RicPeer {
    Gnb,
    /// Connection handle assigned by the host.
    Xapp(u32),
}

/// Near-RT RIC: terminates the E2 association and relays xApp
/// subscriptions and indications.
#[derive(Debug, Default)]
pub struct Ric {
    gnb: Option<String>,
    xapps: BTreeMap<u32, String>,
    /// RIC-side txn → (xApp connection, xApp txn).
    pending: HashMap<u32, (u32, u32)>,
    routes: HashMap<u32, u32>,
    next_txn: u32,
    next_sub: u32,
}

impl Ric {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn associated_gnb(&self) -> Option<&str> {
        self.gnb.as_deref()
    }

    pub fn xapps(&self) -> usize {
        self.xapps.len()
    }

    pub fn on_gnb(&mut self, m: &E2Message) -> Result<Vec<(RicPeer, E2Message)>, E2Error> {
        match m.kind {
            E2Kind::SetupReq => {
                let resp = E2Message::new(E2Kind::SetupResp, m.txn_id);
                let resp = if self.gnb.is_some() {
                    resp.with("result", REJECT).with("cause", "association already established")
                } else {
                    self.gnb = Some(m.get_str("node_id").unwrap_or("gnb").to_string());
                    resp.with("result", ACCEPT)
                };
                Ok(vec![(RicPeer::Gnb, resp)])
            }
            E2Kind::SubResp => {
                let (conn, xtxn) = self.pending.remove(&m.txn_id).ok_or(E2Error::UnexpectedMessage(m.kind))?;
                if accepted(m) {
                    let id = m.get_u32("sub_id").ok_or(E2Error::Malformed("missing sub_id"))?;
                    self.routes.insert(id, conn);
                }
                let mut fwd = m.clone();
                fwd.txn_id = xtxn;
                Ok(vec![(RicPeer::Xapp(conn), fwd)])
            }
            E2Kind::Indication => Ok(self
                .routes
                .get(&m.txn_id)
                .map(|&c| vec![(RicPeer::Xapp(c), m.clone())])
                .unwrap_or_default()),
            k => Err(E2Error::UnexpectedMessage(k)),
        }
    }

    pub fn on_xapp(&mut self, conn: u32, m: &E2Message) -> Result<Vec<(RicPeer, E2Message)>, E2Error> {
        match m.kind {
            E2Kind::XappConnect => {
                self.xapps.insert(conn, m.get_str("name").unwrap_or("xapp").to_string());
                Ok(vec![(RicPeer::Xapp(conn), E2Message::new(E2Kind::XappConnectAck, m.txn_id))])
            }
            E2Kind::SubReq if self.xapps.contains_key(&conn) => {
                if self.gnb.is_none() {
                    let resp = E2Message::new(E2Kind::SubResp, m.txn_id)
                        .with("result", REJECT)
                        .with("cause", "no E2 node associated");
                    return Ok(vec![(RicPeer::Xapp(conn), resp)]);
                }
                self.next_txn += 1;
                self.next_sub += 1;
                self.pending.insert(self.next_txn, (conn, m.txn_id));
                let mut fwd = E2Message::new(E2Kind::SubReq, self.next_txn).with("sub_id", self.next_sub.to_be_bytes());
                fwd.records.extend(m.records.iter().cloned());
                Ok(vec![(RicPeer::Gnb, fwd)])
            }
            k => Err(E2Error::UnexpectedMessage(k)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XappState {
    Idle,
    Connecting,
    Connected,
}

#[derive(Debug, Clone, PartialEq)]
pub enum XappEvent {
    Connected,
    Subscribed(Subscription),
    Indication { sub_id: u32, values: Vec<(String, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndicationRx {
    pub at_ns: u64,
    pub sub_id: u32,
}

/// KPM-monitoring xApp.
#[derive(Debug)]
pub struct Xapp {
    pub name: String,
    state: XappState,
    pub record: XappRunRecord,
    txn: u32,
    deadline: Option<u64>,
    pending: HashMap<u32, (Vec<String>, Duration)>,
    subs: BTreeMap<u32, Subscription>,
    pub indications: Vec<IndicationRx>,
}

impl Xapp {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            state: XappState::Idle,
            record: XappRunRecord::default(),
            txn: 0,
            deadline: None,
            pending: HashMap::new(),
            subs: BTreeMap::new(),
            indications: Vec::new(),
        }
    }

    pub fn state(&self) -> XappState {
        self.state
    }

    pub fn subscriptions(&self) -> impl Iterator<Item = &Subscription> {
        self.subs.values()
    }

    /// Stamps the run record's start and returns the connect request.
    pub fn connect(&mut self, now_ns: u64, timeout: Duration) -> E2Message {
        self.state = XappState::Connecting;
        self.record = XappRunRecord { start_ts: now_ns, first_packet_ts: None };
        self.deadline = Some(now_ns + timeout.as_nanos() as u64);
        self.txn += 1;
        E2Message::new(E2Kind::XappConnect, self.txn).with("name", self.name.as_bytes())
    }

    pub fn check_deadline(&self, now_ns: u64, timeout: Duration) -> Result<(), E2Error> {
        match (self.state, self.deadline) {
            (XappState::Connecting, Some(d)) if now_ns >= d => {
                Err(E2Error::ConnectTimeout { peer: "RIC".into(), after: timeout })
            }
            _ => Ok(()),
        }
    }

    /// Records the first wire packet; later calls are ignored.
    pub fn note_first_packet(&mut self, ts: u64) {
        if self.record.first_packet_ts.is_none() {
            self.record.first_packet_ts = Some(ts.max(self.record.start_ts));
        }
    }

    pub fn subscribe(&mut self, metrics: &[&str], period: Duration) -> Result<E2Message, E2Error> {
        let metrics: Vec<String> = metrics.iter().map(|s| s.to_string()).collect();
        validate_request(&metrics, period)?;
        if self.state != XappState::Connected {
            return Err(E2Error::UnexpectedMessage(E2Kind::SubReq));
        }
        self.txn += 1;
        let mut m = E2Message::new(E2Kind::SubReq, self.txn).with("period_us", (period.as_micros() as u64).to_be_bytes());
        for x in &metrics {
            m = m.with("metric", x.as_bytes());
        }
        self.pending.insert(self.txn, (metrics, period));
        Ok(m)
    }

    pub fn on_message(&mut self, now_ns: u64, m: &E2Message) -> Result<XappEvent, E2Error> {
        match m.kind {
            E2Kind::XappConnectAck if self.state == XappState::Connecting => {
                self.state = XappState::Connected;
                self.deadline = None;
                Ok(XappEvent::Connected)
            }
            E2Kind::SubResp => {
                let (metrics, period) = self.pending.remove(&m.txn_id).ok_or(E2Error::UnexpectedMessage(m.kind))?;
                if !accepted(m) {
                    return Err(E2Error::SubscriptionRejected(cause(m)));
                }
                let id = m.get_u32("sub_id").ok_or(E2Error::Malformed("missing sub_id"))?;
                let sub = Subscription { id, metrics, period };
                self.subs.insert(id, sub.clone());
                Ok(XappEvent::Subscribed(sub))
            }
            E2Kind::Indication => {
                let sub = self.subs.get(&m.txn_id).ok_or(E2Error::UnexpectedMessage(m.kind))?;
                let values = sub
                    .metrics
                    .iter()
                    .map(|k| {
                        let v = m.get(k).and_then(|b| b.try_into().ok()).map(f64::from_be_bytes);
                        v.map(|v| (k.clone(), v)).ok_or(E2Error::Malformed("indication missing a metric"))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                self.indications.push(IndicationRx { at_ns: now_ns, sub_id: m.txn_id });
                Ok(XappEvent::Indication { sub_id: m.txn_id, values })
            }
            k => Err(E2Error::UnexpectedMessage(k)),
        }
    }
}
