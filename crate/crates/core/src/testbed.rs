//! Two-host O-RAN testbed over a netlab link.
//!
//! Host `ran` (10.0.10.1) carries the gNB E2 agent (172.16.1.10) and the
//! xApp (172.16.1.20) and is the IKE initiator. Host `ric` (10.0.10.2)
//! carries the Near-RT RIC (172.16.2.34). Each host runs an IKE daemon, a
//! trap policy and ESP between its applications and the wire.

use std::collections::HashMap;
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use crate::e2::{self, E2Error, E2Kind, E2Message, GnbAgent, Ric, RicPeer, Xapp, XappEvent, XappRunRecord};
use crate::e2::agent::IndicationRx;
use crate::esp::{EspError, EspPacket, InnerPacket, SecurityPolicy, StartAction, TrapAction, TrapController};
use crate::ike::{
    fragment, IkeConfig, IkeError, IkeEvent, IkeMessage, IkeRole, IkeSaState, Phase, Proposal, Reassembler,
    TrafficSelectors,
};
use crate::netlab::frag::{split, Defragmenter};
use crate::netlab::runtime::RunOutcome;
use crate::netlab::{
    make_lab, CaptureEvent, Ctx, Delivery, LabError, LabSpec, LinkSpec, Node, Proto, Runtime, DATAGRAM_OVERHEAD,
};
use crate::kem::KemParamSet;
use crate::rng::{derive_seed, Drbg};

pub const RAN: &str = "ran";
pub const RIC: &str = "ric";
pub const RAN_HOST_IP: Ipv4Addr = Ipv4Addr::new(10, 0, 10, 1);
pub const RIC_HOST_IP: Ipv4Addr = Ipv4Addr::new(10, 0, 10, 2);
pub const GNB_IP: Ipv4Addr = Ipv4Addr::new(172, 16, 1, 10);
pub const XAPP_IP: Ipv4Addr = Ipv4Addr::new(172, 16, 1, 20);
pub const RIC_IP: Ipv4Addr = Ipv4Addr::new(172, 16, 2, 34);
pub const PINGPONG_PORT: u16 = 11111;
pub const DEFAULT_LOCAL_TS: &str = "10.0.10.1/24, 172.16.1.0/27";
/// The RIC sits at .34, so the remote range is the .32/27 block.
pub const DEFAULT_REMOTE_TS: &str = "10.0.10.2/24, 172.16.2.32/27";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TestbedError {
    #[error("bad testbed config: {0}")]
    Config(String),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("IKE: {0}")]
    Ike(#[from] IkeError),
    #[error("ESP: {0}")]
    Esp(#[from] EspError),
    #[error("E2: {0}")]
    E2(#[from] E2Error),
    #[error("run ended before completion: {0}")]
    Incomplete(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Security {
    None,
    Ipsec,
}

impl FromStr for Security {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Security::None),
            "ipsec" => Ok(Security::Ipsec),
            _ => Err(format!("unknown security `{s}` (expected none or ipsec)")),
        }
    }
}

impl fmt::Display for Security {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Security::None => "none",
            Security::Ipsec => "ipsec",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2Settings {
    pub period: Duration,
    pub metrics: Vec<String>,
    pub ric_port: u16,
    pub xapp_port: u16,
    pub connect_timeout: Duration,
    /// When false the RIC host drops all E2 traffic.
    pub ric_running: bool,
}

impl Default for E2Settings {
    fn default() -> Self {
        Self {
            period: e2::DEFAULT_PERIOD,
            metrics: e2::DEFAULT_METRICS.iter().map(|s| s.to_string()).collect(),
            ric_port: e2::RIC_PORT,
            xapp_port: e2::XAPP_PORT,
            connect_timeout: Duration::from_secs(2),
            ric_running: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    /// Bring up the tunnel and stop.
    Handshake,
    /// One warm-up round trip, then `messages` timed ones.
    PingPong { messages: usize, payload: usize },
    /// Launch the xApp and stop once the RIC acknowledges it. `startup` is
    /// the process start-up time before its first packet.
    XappLaunch { startup: Duration },
    /// E2 setup, xApp subscription, then indications for `duration`. The
    /// policy is installed `tunnel_at` after the run starts.
    E2Stream { duration: Duration, tunnel_at: Duration },
}

#[derive(Debug, Clone)]
pub struct TestbedConfig {
    pub security: Security,
    pub proposal: Proposal,
    pub esp_proposal: Proposal,
    pub start_action: StartAction,
    pub link: LinkSpec,
    pub seed: [u8; 32],
    pub psk: Vec<u8>,
    pub local_ts: String,
    pub remote_ts: String,
    pub e2: E2Settings,
    pub workload: Workload,
    /// Quiet time between the tunnel coming up and a workload that waits
    /// for it.
    pub settle: Duration,
    pub ping_timeout: Duration,
    pub run_timeout: Duration,
}

impl TestbedConfig {
    pub fn new(workload: Workload) -> Self {
        Self {
            security: Security::Ipsec,
            proposal: Proposal::with_kem(KemParamSet::EcdhX25519),
            esp_proposal: Proposal::with_kem(KemParamSet::EcdhX25519),
            start_action: StartAction::Trap,
            link: LinkSpec::default(),
            seed: [0; 32],
            psk: b"pq-oran-testbed".to_vec(),
            local_ts: DEFAULT_LOCAL_TS.into(),
            remote_ts: DEFAULT_REMOTE_TS.into(),
            e2: E2Settings::default(),
            workload,
            settle: Duration::from_millis(1),
            ping_timeout: Duration::from_millis(100),
            run_timeout: Duration::from_secs(30),
        }
    }

    fn ike_configs(&self) -> Result<(Arc<IkeConfig>, Arc<IkeConfig>), TestbedError> {
        let ts = TrafficSelectors::parse(&self.local_ts, &self.remote_ts)
            .map_err(|e| TestbedError::Config(format!("traffic selectors: {e}")))?;
        let mk = |id: &str, ts: TrafficSelectors| {
            let mut c = IkeConfig::new(self.proposal, &self.psk, id, ts);
            c.esp_proposals = vec![self.esp_proposal];
            Arc::new(c)
        };
        Ok((mk(RAN, ts.clone()), mk(RIC, ts.swapped())))
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub capture: Vec<CaptureEvent>,
    pub initiator: Option<IkeSaState>,
    pub responder: Option<IkeSaState>,
    /// IKE datagrams in send order, per side.
    pub initiator_sent: Vec<Vec<u8>>,
    pub responder_sent: Vec<Vec<u8>>,
    /// When the initiator installed the child SA.
    pub child_established_ns: Option<u64>,
    pub policy_installed_ns: Option<u64>,
    pub rtts_ns: Vec<u64>,
    pub ping_timeouts: usize,
    pub xapp: Option<XappRunRecord>,
    pub subscribed_ns: Option<u64>,
    pub indications: Vec<IndicationRx>,
    pub errors: Vec<String>,
}

impl RunResult {
    /// Both sides hold identical IKE key material and mirrored child keys.
    pub fn keys_agree(&self) -> bool {
        match (&self.initiator, &self.responder) {
            (Some(i), Some(r)) => {
                i.phase == Phase::ChildEstablished
                    && r.phase == Phase::ChildEstablished
                    && i.keys.is_some()
                    && i.keys == r.keys
                    && i.child.as_ref().map(|c| c.mirrored()) == r.child
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Ran,
    Ric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Timer {
    IkeRetransmit(u32),
    Policy,
    XappLaunch,
    XappConnect,
    GnbSetup,
    Indication(u32),
    Ping,
    PingTimeout(u32),
    Stop,
    E2Deadline,
}

impl Timer {
    fn token(self) -> u64 {
        let (k, a) = match self {
            Timer::IkeRetransmit(g) => (1, g),
            Timer::Policy => (2, 0),
            Timer::XappLaunch => (3, 0),
            Timer::XappConnect => (4, 0),
            Timer::GnbSetup => (5, 0),
            Timer::Indication(id) => (6, id),
            Timer::Ping => (7, 0),
            Timer::PingTimeout(s) => (8, s),
            Timer::Stop => (9, 0),
            Timer::E2Deadline => (10, 0),
        };
        (k << 32) | u64::from(a)
    }

    fn from_token(t: u64) -> Option<Self> {
        let a = t as u32;
        Some(match t >> 32 {
            1 => Timer::IkeRetransmit(a),
            2 => Timer::Policy,
            3 => Timer::XappLaunch,
            4 => Timer::XappConnect,
            5 => Timer::GnbSetup,
            6 => Timer::Indication(a),
            7 => Timer::Ping,
            8 => Timer::PingTimeout(a),
            9 => Timer::Stop,
            10 => Timer::E2Deadline,
            _ => return None,
        })
    }
}

#[derive(Debug, Default)]
struct PingClient {
    /// Sequence number of the next ping; 0 is the warm-up.
    next: u32,
    outstanding: Option<(u32, u64)>,
    rtts: Vec<u64>,
    timeouts: usize,
}

struct Host {
    side: Side,
    peer: &'static str,
    cfg: Arc<TestbedConfig>,
    ike_cfg: Arc<IkeConfig>,
    ike_rng: Drbg,
    ike: Option<IkeSaState>,
    ike_gen: u32,
    reasm: Reassembler,
    trap: Option<TrapController>,
    frag_id: u32,
    defrag: Defragmenter,
    gnb: Option<GnbAgent>,
    xapp: Option<Xapp>,
    ric: Option<Ric>,
    ric_conns: HashMap<Ipv4Addr, u32>,
    indication_clock: HashMap<u32, (u64, u64)>,
    ping: PingClient,
    ike_sent: Vec<Vec<u8>>,
    first_send: HashMap<Ipv4Addr, u64>,
    child_at: Option<u64>,
    policy_at: Option<u64>,
    subscribed_at: Option<u64>,
    errors: Vec<String>,
}

impl Host {
    fn new(side: Side, cfg: Arc<TestbedConfig>, ike_cfg: Arc<IkeConfig>) -> Self {
        let root = Drbg::new(cfg.seed);
        let (peer, label) = match side {
            Side::Ran => (RIC, "ike ran"),
            Side::Ric => (RAN, "ike ric"),
        };
        let e2_app = matches!(cfg.workload, Workload::XappLaunch { .. } | Workload::E2Stream { .. });
        Self {
            side,
            peer,
            ike_rng: root.fork(label),
            ike_cfg,
            ike: None,
            ike_gen: 0,
            reasm: Reassembler::default(),
            trap: None,
            frag_id: 0,
            defrag: Defragmenter::default(),
            gnb: (side == Side::Ran && matches!(cfg.workload, Workload::E2Stream { .. }))
                .then(|| GnbAgent::new("gnb-1", root.fork("gnb"))),
            xapp: (side == Side::Ran && e2_app).then(|| Xapp::new("kpm-monitor")),
            ric: (side == Side::Ric && e2_app && cfg.e2.ric_running).then(Ric::new),
            ric_conns: HashMap::new(),
            indication_clock: HashMap::new(),
            ping: PingClient::default(),
            ike_sent: Vec::new(),
            first_send: HashMap::new(),
            child_at: None,
            policy_at: None,
            subscribed_at: None,
            errors: Vec::new(),
            cfg,
        }
    }

    fn fail(&mut self, ctx: &mut Ctx<'_>, e: impl Into<TestbedError>) {
        self.errors.push(e.into().to_string());
        ctx.stop();
    }

    fn timer(ctx: &mut Ctx<'_>, delay: Duration, t: Timer) {
        ctx.set_timer(delay, t.token());
    }

    fn install_policy(&mut self, ctx: &mut Ctx<'_>) {
        if self.cfg.security != Security::Ipsec || self.trap.is_some() {
            return;
        }
        let policy = SecurityPolicy {
            selectors: self.ike_cfg.ts.clone(),
            start_action: self.cfg.start_action,
            ike: self.ike_cfg.clone(),
        };
        self.trap = Some(TrapController::new(policy, self.side == Side::Ran));
        self.policy_at = Some(ctx.now_ns());
        if self.side == Side::Ran && self.cfg.start_action == StartAction::Start {
            self.trap.as_mut().unwrap().mark_triggered();
            self.start_ike(ctx);
        }
    }

    // ---- IKE daemon

    fn start_ike(&mut self, ctx: &mut Ctx<'_>) {
        let mut st = IkeSaState::new(IkeRole::Initiator, self.ike_cfg.clone(), self.ike_rng.fork("sa"));
        let r = st.handle(IkeEvent::Start);
        self.ike = Some(st);
        self.after_ike(ctx, r);
    }

    fn after_ike(&mut self, ctx: &mut Ctx<'_>, r: Result<Vec<IkeMessage>, IkeError>) {
        let msgs = match r {
            Ok(m) => m,
            Err(e) => return self.fail(ctx, e),
        };
        for m in msgs {
            if let Err(e) = self.send_ike(ctx, &m) {
                return self.fail(ctx, e);
            }
        }
        let Some(st) = self.ike.as_ref() else { return };
        if st.outstanding().is_some() {
            self.ike_gen += 1;
            let t = st.config().retransmit_timeout;
            Self::timer(ctx, t, Timer::IkeRetransmit(self.ike_gen));
        }
        if st.phase == Phase::ChildEstablished && self.child_at.is_none() {
            let keys = st.child.clone().expect("child keys once established");
            self.child_at = Some(ctx.now_ns());
            self.install_child(ctx, keys);
            if self.side == Side::Ran {
                self.on_tunnel_up(ctx);
            }
        }
    }

    fn send_ike(&mut self, ctx: &mut Ctx<'_>, m: &IkeMessage) -> Result<(), TestbedError> {
        let frags = fragment(m, self.cfg.link.mtu - DATAGRAM_OVERHEAD)
            .map_err(|e| TestbedError::Ike(IkeError::Malformed(e.to_string())))?;
        for f in frags {
            let bytes = f.encode();
            self.ike_sent.push(bytes.clone());
            ctx.send(self.peer, Proto::Ike, &f.label(), bytes)?;
        }
        Ok(())
    }

    fn on_ike(&mut self, ctx: &mut Ctx<'_>, bytes: &[u8]) {
        let msg = match IkeMessage::decode(bytes) {
            Ok(m) => m,
            Err(e) => return self.fail(ctx, IkeError::Malformed(e.to_string())),
        };
        let whole = match self.reasm.push(msg) {
            Ok(Some(m)) => m,
            Ok(None) => return,
            Err(e) => return self.fail(ctx, IkeError::Malformed(e.to_string())),
        };
        if self.ike.is_none() && self.side == Side::Ric {
            self.ike = Some(IkeSaState::new(IkeRole::Responder, self.ike_cfg.clone(), self.ike_rng.fork("sa")));
        }
        let Some(st) = self.ike.as_mut() else {
            return self.fail(ctx, IkeError::Malformed("IKE message with no SA".into()));
        };
        let r = st.handle(IkeEvent::Inbound(whole));
        self.after_ike(ctx, r);
    }

    fn install_child(&mut self, ctx: &mut Ctx<'_>, keys: crate::ike::ChildSaKeys) {
        let Some(trap) = self.trap.as_mut() else { return };
        let sources = trap.queued_sources();
        match trap.install(keys) {
            Ok(pkts) => {
                for (src, p) in sources.into_iter().zip(pkts) {
                    if let Err(e) = self.send_esp(ctx, src, &p) {
                        return self.fail(ctx, e);
                    }
                }
            }
            Err(e) => self.fail(ctx, e),
        }
    }

    // ---- data plane

    fn output(&mut self, ctx: &mut Ctx<'_>, pkt: InnerPacket, detail: &str) {
        let Some(trap) = self.trap.as_mut() else {
            if let Err(e) = self.send_plain(ctx, pkt, detail) {
                self.fail(ctx, e);
            }
            return;
        };
        let src = pkt.src;
        let r = match trap.trap_intercept(pkt) {
            Ok(TrapAction::SendPlain(p)) => self.send_plain(ctx, p, detail),
            Ok(TrapAction::Seal(e)) => self.send_esp(ctx, src, &e),
            Ok(TrapAction::Queued { trigger_ike: true }) => {
                self.start_ike(ctx);
                Ok(())
            }
            Ok(TrapAction::Queued { trigger_ike: false }) => Ok(()),
            Err(e) => Err(e.into()),
        };
        if let Err(e) = r {
            self.fail(ctx, e);
        }
    }

    /// Called right after a packet from `src` went on the wire.
    fn note_send(&mut self, ctx: &Ctx<'_>, src: Ipv4Addr) {
        let now = ctx.lab().last_send_ns().unwrap_or_else(|| ctx.now_ns());
        self.first_send.entry(src).or_insert(now);
        if src == XAPP_IP {
            if let Some(x) = self.xapp.as_mut() {
                x.note_first_packet(now);
            }
        }
    }

    fn send_plain(&mut self, ctx: &mut Ctx<'_>, p: InnerPacket, detail: &str) -> Result<(), TestbedError> {
        let proto = if p.port == PINGPONG_PORT { Proto::Plain } else { Proto::E2 };
        let bytes = p.encode();
        if proto == Proto::E2 {
            ctx.send_stream(self.peer, proto, detail, bytes)?;
        } else {
            self.send_datagram(ctx, proto, detail, bytes)?;
        }
        self.note_send(ctx, p.src);
        Ok(())
    }

    fn send_esp(&mut self, ctx: &mut Ctx<'_>, src: Ipv4Addr, e: &EspPacket) -> Result<(), TestbedError> {
        let detail = format!("{:08x}/{}", e.spi, e.seq);
        self.send_datagram(ctx, Proto::Esp, &detail, e.encode())?;
        self.note_send(ctx, src);
        Ok(())
    }

    fn send_datagram(&mut self, ctx: &mut Ctx<'_>, proto: Proto, detail: &str, bytes: Vec<u8>) -> Result<(), TestbedError> {
        let max = self.cfg.link.mtu - DATAGRAM_OVERHEAD;
        if bytes.len() <= max {
            ctx.send(self.peer, proto, detail, bytes)?;
            return Ok(());
        }
        self.frag_id = self.frag_id.wrapping_add(1);
        let pieces = split(&bytes, max, self.frag_id)
            .ok_or_else(|| TestbedError::Config(format!("{}-byte datagram cannot be fragmented", bytes.len())))?;
        for (h, b) in pieces {
            ctx.send_fragment(self.peer, proto, detail, b, h)?;
        }
        Ok(())
    }

    fn input(&mut self, ctx: &mut Ctx<'_>, d: Delivery) {
        let bytes = match d.frag {
            Some(h) => match self.defrag.push(&d.from, h, d.bytes) {
                Some(b) => b,
                None => return,
            },
            None => d.bytes,
        };
        match d.proto {
            Proto::Ike => self.on_ike(ctx, &bytes),
            Proto::Esp => {
                let r = EspPacket::decode(&bytes).and_then(|p| match self.trap.as_mut() {
                    Some(t) => t.open(&p),
                    None => Err(EspError::UnknownSpi(p.spi)),
                });
                match r {
                    Ok(inner) => self.deliver_local(ctx, inner),
                    Err(e) => self.fail(ctx, e),
                }
            }
            Proto::Plain | Proto::E2 => match InnerPacket::decode(&bytes) {
                Ok(inner) => self.deliver_local(ctx, inner),
                Err(e) => self.fail(ctx, e),
            },
        }
    }

    // ---- applications

    fn e2_out(&mut self, ctx: &mut Ctx<'_>, src: Ipv4Addr, dst: Ipv4Addr, port: u16, m: &E2Message) {
        match m.encode() {
            Ok(b) => self.output(ctx, InnerPacket::new(src, dst, port, b), m.kind.label()),
            Err(e) => self.fail(ctx, e),
        }
    }

    fn deliver_local(&mut self, ctx: &mut Ctx<'_>, p: InnerPacket) {
        let (ric_port, xapp_port) = (self.cfg.e2.ric_port, self.cfg.e2.xapp_port);
        if p.port == PINGPONG_PORT {
            return match self.side {
                Side::Ric if p.dst == RIC_HOST_IP => {
                    let echo = InnerPacket::new(p.dst, p.src, p.port, p.payload);
                    self.output(ctx, echo, "PONG");
                }
                Side::Ran if p.dst == RAN_HOST_IP => self.on_pong(ctx, &p.payload),
                _ => {}
            };
        }
        let msg = match E2Message::decode(&p.payload) {
            Ok(m) => m,
            Err(e) => return self.fail(ctx, e),
        };
        match self.side {
            Side::Ric if p.dst == RIC_IP => {
                let Some(ric) = self.ric.as_mut() else { return };
                let out = if p.port == ric_port {
                    ric.on_gnb(&msg)
                } else if p.port == xapp_port {
                    let n = self.ric_conns.len() as u32 + 1;
                    let conn = *self.ric_conns.entry(p.src).or_insert(n);
                    ric.on_xapp(conn, &msg)
                } else {
                    return;
                };
                match out {
                    Ok(out) => {
                        for (peer, m) in out {
                            let (dst, port) = match peer {
                                RicPeer::Gnb => (GNB_IP, ric_port),
                                RicPeer::Xapp(c) => {
                                    let ip = self.ric_conns.iter().find(|(_, v)| **v == c).map(|(k, _)| *k);
                                    (ip.unwrap_or(XAPP_IP), xapp_port)
                                }
                            };
                            self.e2_out(ctx, RIC_IP, dst, port, &m);
                        }
                    }
                    Err(e) => self.fail(ctx, e),
                }
            }
            Side::Ran if p.dst == GNB_IP && p.port == ric_port => {
                let Some(gnb) = self.gnb.as_mut() else { return };
                match gnb.on_message(&msg) {
                    Ok(r) => {
                        for m in r.replies {
                            self.e2_out(ctx, GNB_IP, RIC_IP, ric_port, &m);
                        }
                        if let Some(sub) = r.started {
                            self.indication_clock.insert(sub.id, (ctx.now_ns(), 0));
                            Self::timer(ctx, sub.period, Timer::Indication(sub.id));
                        }
                    }
                    Err(e) => self.fail(ctx, e),
                }
            }
            Side::Ran if p.dst == XAPP_IP && p.port == xapp_port => {
                let now = ctx.now_ns();
                let Some(x) = self.xapp.as_mut() else { return };
                match x.on_message(now, &msg) {
                    Ok(XappEvent::Connected) => match self.cfg.workload {
                        Workload::XappLaunch { .. } => ctx.stop(),
                        _ => {
                            let metrics: Vec<&str> = self.cfg.e2.metrics.iter().map(String::as_str).collect();
                            match x.subscribe(&metrics, self.cfg.e2.period) {
                                Ok(m) => self.e2_out(ctx, XAPP_IP, RIC_IP, xapp_port, &m),
                                Err(e) => self.fail(ctx, e),
                            }
                        }
                    },
                    Ok(XappEvent::Subscribed(_)) => {
                        if self.subscribed_at.is_none() {
                            self.subscribed_at = Some(now);
                            if let Workload::E2Stream { duration, .. } = self.cfg.workload {
                                Self::timer(ctx, duration + self.cfg.e2.period / 2, Timer::Stop);
                            }
                        }
                    }
                    Ok(XappEvent::Indication { .. }) => {}
                    Err(e) => self.fail(ctx, e),
                }
            }
            _ => {}
        }
    }

    fn send_ping(&mut self, ctx: &mut Ctx<'_>) {
        let Workload::PingPong { payload, .. } = self.cfg.workload else { return };
        let seq = self.ping.next;
        self.ping.next += 1;
        let mut body = vec![0u8; payload.max(4)];
        body[..4].copy_from_slice(&seq.to_be_bytes());
        self.ping.outstanding = Some((seq, ctx.now_ns()));
        Self::timer(ctx, self.cfg.ping_timeout, Timer::PingTimeout(seq));
        self.output(ctx, InnerPacket::new(RAN_HOST_IP, RIC_HOST_IP, PINGPONG_PORT, body), "PING");
    }

    fn on_pong(&mut self, ctx: &mut Ctx<'_>, body: &[u8]) {
        let now = ctx.now_ns();
        let Some(seq) = body.get(..4).map(|b| u32::from_be_bytes(b.try_into().unwrap())) else { return };
        match self.ping.outstanding {
            Some((s, t0)) if s == seq => {
                self.ping.outstanding = None;
                if seq > 0 {
                    self.ping.rtts.push(now - t0);
                }
                self.next_ping(ctx);
            }
            _ => {}
        }
    }

    fn next_ping(&mut self, ctx: &mut Ctx<'_>) {
        let Workload::PingPong { messages, .. } = self.cfg.workload else { return };
        if self.ping.next == 1 {
            ctx.reseed_links(&derive_seed(&self.cfg.seed, b"pingpong"));
        }
        if self.ping.next as usize > messages {
            ctx.stop();
        } else {
            self.send_ping(ctx);
        }
    }

    /// Called on the initiator once its child SA is installed.
    fn on_tunnel_up(&mut self, ctx: &mut Ctx<'_>) {
        match self.cfg.workload {
            Workload::Handshake => ctx.stop(),
            Workload::PingPong { .. } if self.cfg.start_action == StartAction::Start => {
                Self::timer(ctx, self.cfg.settle, Timer::Ping)
            }
            Workload::XappLaunch { .. } if self.cfg.start_action == StartAction::Start => {
                Self::timer(ctx, self.cfg.settle, Timer::XappLaunch)
            }
            _ => {}
        }
    }

    fn launch_xapp(&mut self, ctx: &mut Ctx<'_>) {
        let now = ctx.now_ns();
        let startup = match self.cfg.workload {
            Workload::XappLaunch { startup } => startup,
            _ => Duration::ZERO,
        };
        if let Some(x) = self.xapp.as_mut() {
            x.record = XappRunRecord { start_ts: now, first_packet_ts: None };
        }
        if startup.is_zero() {
            self.xapp_connect(ctx);
        } else {
            Self::timer(ctx, startup, Timer::XappConnect);
        }
    }

    fn xapp_connect(&mut self, ctx: &mut Ctx<'_>) {
        let now = ctx.now_ns();
        let t = self.cfg.e2.connect_timeout;
        let Some(x) = self.xapp.as_mut() else { return };
        let start = x.record.start_ts;
        let m = x.connect(now, t);
        x.record.start_ts = start;
        Self::timer(ctx, t, Timer::E2Deadline);
        self.e2_out(ctx, XAPP_IP, RIC_IP, self.cfg.e2.xapp_port, &m);
    }
}

impl Node for Host {
    fn on_start(&mut self, ctx: &mut Ctx<'_>) {
        let ipsec = self.cfg.security == Security::Ipsec;
        match self.cfg.workload.clone() {
            Workload::E2Stream { tunnel_at, .. } => {
                if ipsec {
                    Self::timer(ctx, tunnel_at, Timer::Policy);
                }
                if self.side == Side::Ran {
                    self.gnb_setup(ctx);
                    self.launch_xapp(ctx);
                }
            }
            w => {
                self.install_policy(ctx);
                if self.side != Side::Ran {
                    return;
                }
                let waits = ipsec && self.cfg.start_action == StartAction::Start;
                match w {
                    Workload::Handshake if !ipsec => {
                        self.fail(ctx, TestbedError::Config("handshake workload needs security = ipsec".into()))
                    }
                    Workload::Handshake if !waits => {
                        self.trap.as_mut().unwrap().mark_triggered();
                        self.start_ike(ctx);
                    }
                    Workload::PingPong { .. } if !waits => Self::timer(ctx, self.cfg.settle, Timer::Ping),
                    Workload::XappLaunch { .. } if !waits => self.launch_xapp(ctx),
                    _ => {}
                }
            }
        }
    }

    fn on_packet(&mut self, ctx: &mut Ctx<'_>, d: Delivery) {
        self.input(ctx, d);
    }

    fn on_timer(&mut self, ctx: &mut Ctx<'_>, token: u64) {
        let Some(t) = Timer::from_token(token) else { return };
        match t {
            Timer::IkeRetransmit(g) if g == self.ike_gen => {
                let Some(st) = self.ike.as_mut() else { return };
                if st.outstanding().is_some() {
                    let r = st.handle(IkeEvent::Timeout);
                    self.after_ike(ctx, r);
                }
            }
            Timer::IkeRetransmit(_) => {}
            Timer::Policy => self.install_policy(ctx),
            Timer::XappLaunch => self.launch_xapp(ctx),
            Timer::XappConnect => self.xapp_connect(ctx),
            Timer::GnbSetup => self.gnb_setup(ctx),
            Timer::Indication(id) => {
                let Some(gnb) = self.gnb.as_mut() else { return };
                let Some(m) = gnb.emit_indication(id) else { return };
                let (start, k) = self.indication_clock.get_mut(&id).map(|e| {
                    e.1 += 1;
                    *e
                }).expect("clock registered with the subscription");
                let period = self.cfg.e2.period.as_nanos() as u64;
                ctx.set_timer_at(start + (k + 1) * period, Timer::Indication(id).token());
                self.e2_out(ctx, GNB_IP, RIC_IP, self.cfg.e2.ric_port, &m);
            }
            Timer::Ping => self.send_ping(ctx),
            Timer::PingTimeout(s) => {
                if matches!(self.ping.outstanding, Some((o, _)) if o == s) {
                    self.ping.outstanding = None;
                    if s > 0 {
                        self.ping.timeouts += 1;
                    }
                    self.next_ping(ctx);
                }
            }
            Timer::Stop => ctx.stop(),
            Timer::E2Deadline => {
                let now = ctx.now_ns();
                let t = self.cfg.e2.connect_timeout;
                let r = self.xapp.as_ref().map_or(Ok(()), |x| x.check_deadline(now, t)).and_then(|_| {
                    self.gnb.as_ref().map_or(Ok(()), |g| g.check_deadline(now, t))
                });
                if let Err(e) = r {
                    self.fail(ctx, e);
                }
            }
        }
    }
}

impl Host {
    fn gnb_setup(&mut self, ctx: &mut Ctx<'_>) {
        let now = ctx.now_ns();
        let t = self.cfg.e2.connect_timeout;
        let Some(g) = self.gnb.as_mut() else { return };
        let m = g.setup_request(now, t);
        Self::timer(ctx, t, Timer::E2Deadline);
        self.e2_out(ctx, GNB_IP, RIC_IP, self.cfg.e2.ric_port, &m);
    }
}

/// Builds a fresh lab, runs one workload to completion and collects what
/// both hosts observed.
pub fn run(cfg: &TestbedConfig) -> Result<RunResult, TestbedError> {
    let (ran_ike, ric_ike) = cfg.ike_configs()?;
    let spec = LabSpec::pair(RAN, RIC, cfg.link, derive_seed(&cfg.seed, b"links"));
    let lab = make_lab(&spec)?;
    let cfg = Arc::new(cfg.clone());
    let mut rt = Runtime::new(lab);
    rt.add_node(RAN, Host::new(Side::Ran, cfg.clone(), ran_ike))?;
    rt.add_node(RIC, Host::new(Side::Ric, cfg.clone(), ric_ike))?;
    let deadline = rt.lab().now_ns() + cfg.run_timeout.as_nanos() as u64;
    let outcome = rt.run(deadline);
    let (lab, mut hosts) = rt.into_parts();
    let (_, ric) = hosts.pop().expect("ric host");
    let (_, ran) = hosts.pop().expect("ran host");
    let mut errors: Vec<String> = ran.errors.iter().map(|e| format!("ran: {e}")).collect();
    errors.extend(ric.errors.iter().map(|e| format!("ric: {e}")));
    Ok(RunResult {
        outcome,
        capture: lab.capture_log(),
        initiator: ran.ike,
        responder: ric.ike,
        initiator_sent: ran.ike_sent,
        responder_sent: ric.ike_sent,
        child_established_ns: ran.child_at,
        policy_installed_ns: ran.policy_at,
        rtts_ns: ran.ping.rtts,
        ping_timeouts: ran.ping.timeouts,
        xapp: ran.xapp.as_ref().map(|x| x.record),
        subscribed_ns: ran.subscribed_at,
        indications: ran.xapp.map(|x| x.indications).unwrap_or_default(),
        errors,
    })
}

/// Like [`run`], but any host error or a run that ran out of time before
/// its workload finished becomes an `Err`.
pub fn run_checked(cfg: &TestbedConfig) -> Result<RunResult, TestbedError> {
    let r = run(cfg)?;
    if let Some(e) = r.errors.first() {
        return Err(TestbedError::Incomplete(e.clone()));
    }
    if r.outcome != RunOutcome::Stopped {
        return Err(TestbedError::Incomplete(format!("workload did not finish ({:?})", r.outcome)));
    }
    Ok(r)
}

/// Indication arrivals that fall in `(from, from + window]`.
pub fn indications_in(r: &RunResult, from: u64, window: Duration) -> Vec<u64> {
    let end = from + window.as_nanos() as u64;
    r.indications.iter().map(|i| i.at_ns).filter(|&t| t > from && t <= end).collect()
}

pub fn e2_kind_of(detail: &str) -> Option<E2Kind> {
    E2Kind::ALL.into_iter().find(|k| k.label() == detail)
}
