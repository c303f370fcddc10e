//! IKE SA state machine.
//!
//! [`step`] consumes an event and returns the next state plus the messages to
//! put on the wire. All randomness comes from the DRBG held in the state, so a
//! given seed pair produces a byte-identical transcript.
//!
//! Initiator: `Idle -> InitSent -> InitDone -> AuthDone -> ChildEstablished`.
//! The responder has no request of its own in flight during IKE_SA_INIT and
//! goes straight from `Idle` to `InitDone` when it answers.

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use crate::crypto::{aead, AeadKey, PrfAlg};
use crate::kem::{self, KemError, KemKeyPair};
use crate::rng::Drbg;

use super::keys::{derive_child_keys, derive_keys, ChildSaKeys, KeyMaterial};
use super::message::{
    decode_payloads, encode_payloads, Exchange, IkeMessage, MsgRole, Payload, PayloadTag, Reader, WireError,
};
use super::proposal::{negotiate, Proposal, ProposalError};
use super::ts::{decode_ts, encode_ts, TrafficSelectors};

pub const NONCE_LEN: usize = 32;
const KEY_PAD: &[u8] = b"Key Pad for IKEv2";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IkeError {
    #[error("unexpected {got} in phase {phase}")]
    UnexpectedMessage { phase: Phase, got: String },
    #[error("peer authentication failed")]
    AuthenticationFailed,
    #[error("negotiation failed: {0}")]
    NegotiationFailed(String),
    #[error(transparent)]
    Proposal(#[from] ProposalError),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error(transparent)]
    Kem(#[from] KemError),
    #[error("{exchange} request timed out after {attempts} transmissions")]
    Timeout { exchange: &'static str, attempts: u32 },
}

impl From<WireError> for IkeError {
    fn from(e: WireError) -> Self {
        IkeError::Malformed(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IkeRole {
    Initiator,
    Responder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    InitSent,
    InitDone,
    AuthDone,
    ChildEstablished,
    Failed,
}

impl Phase {
    /// Position in the success path; `None` for `Failed`.
    pub fn rank(self) -> Option<u8> {
        match self {
            Phase::Idle => Some(0),
            Phase::InitSent => Some(1),
            Phase::InitDone => Some(2),
            Phase::AuthDone => Some(3),
            Phase::ChildEstablished => Some(4),
            Phase::Failed => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Idle => "IDLE",
            Phase::InitSent => "INIT_SENT",
            Phase::InitDone => "INIT_DONE",
            Phase::AuthDone => "AUTH_DONE",
            Phase::ChildEstablished => "CHILD_ESTABLISHED",
            Phase::Failed => "FAILED",
        })
    }
}

#[derive(Debug, Clone)]
pub struct IkeConfig {
    /// IKE SA proposals in preference order. The initiator's KE payload is
    /// computed for the first entry.
    pub proposals: Vec<Proposal>,
    pub esp_proposals: Vec<Proposal>,
    pub psk: Vec<u8>,
    pub local_id: Vec<u8>,
    /// Expected peer identity; any identity is accepted when `None`.
    pub remote_id: Option<Vec<u8>>,
    pub ts: TrafficSelectors,
    pub retransmit_timeout: Duration,
    pub max_retries: u32,
}

impl IkeConfig {
    pub fn new(proposal: Proposal, psk: &[u8], local_id: &str, ts: TrafficSelectors) -> Self {
        Self {
            proposals: vec![proposal],
            esp_proposals: vec![proposal],
            psk: psk.to_vec(),
            local_id: local_id.as_bytes().to_vec(),
            remote_id: None,
            ts,
            retransmit_timeout: Duration::from_millis(500),
            max_retries: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub enum IkeEvent {
    Start,
    Inbound(IkeMessage),
    Timeout,
}

#[derive(Debug, Clone)]
pub struct IkeSaState {
    pub role: IkeRole,
    pub phase: Phase,
    /// Every phase entered, starting with `Idle`.
    pub history: Vec<Phase>,
    pub chosen: Option<Proposal>,
    pub esp_chosen: Option<Proposal>,
    pub ni: Option<[u8; NONCE_LEN]>,
    pub nr: Option<[u8; NONCE_LEN]>,
    pub spi_i: u64,
    pub spi_r: u64,
    pub kem_pair: Option<KemKeyPair>,
    pub keys: Option<KeyMaterial>,
    pub child: Option<ChildSaKeys>,
    pub error: Option<IkeError>,
    config: Arc<IkeConfig>,
    rng: Drbg,
    /// Initiator: id of the next request. Responder: id of the next expected request.
    next_msg_id: u32,
    init_req: Vec<u8>,
    init_resp: Vec<u8>,
    child_nonce: [u8; NONCE_LEN],
    child_spi: u32,
    outstanding: Option<IkeMessage>,
    attempts: u32,
    last_response: Option<IkeMessage>,
}

impl IkeSaState {
    pub fn new(role: IkeRole, config: Arc<IkeConfig>, rng: Drbg) -> Self {
        Self {
            role,
            phase: Phase::Idle,
            history: vec![Phase::Idle],
            chosen: None,
            esp_chosen: None,
            ni: None,
            nr: None,
            spi_i: 0,
            spi_r: 0,
            kem_pair: None,
            keys: None,
            child: None,
            error: None,
            config,
            rng,
            next_msg_id: 0,
            init_req: Vec::new(),
            init_resp: Vec::new(),
            child_nonce: [0; NONCE_LEN],
            child_spi: 0,
            outstanding: None,
            attempts: 0,
            last_response: None,
        }
    }

    pub fn config(&self) -> &IkeConfig {
        &self.config
    }

    /// The request awaiting a response, if any.
    pub fn outstanding(&self) -> Option<&IkeMessage> {
        self.outstanding.as_ref()
    }

    fn enter(&mut self, p: Phase) {
        self.phase = p;
        self.history.push(p);
    }

    fn unexpected(&self, what: String) -> IkeError {
        IkeError::UnexpectedMessage { phase: self.phase, got: what }
    }

    fn nonce(&mut self) -> [u8; NONCE_LEN] {
        self.rng.array()
    }

    fn nonzero_u64(&mut self) -> u64 {
        loop {
            let v = u64::from_be_bytes(self.rng.array());
            if v != 0 {
                return v;
            }
        }
    }

    fn child_spi_avoiding(&mut self, other: u32) -> u32 {
        loop {
            let v = u32::from_be_bytes(self.rng.array());
            if v != 0 && v != other {
                return v;
            }
        }
    }

    fn keys(&self) -> &KeyMaterial {
        self.keys.as_ref().expect("keys exist from INIT_DONE on")
    }

    fn prf(&self) -> PrfAlg {
        self.chosen.expect("chosen with keys").prf
    }

    fn send_key(&self) -> &[u8] {
        match self.role {
            IkeRole::Initiator => &self.keys().sk_ei,
            IkeRole::Responder => &self.keys().sk_er,
        }
    }

    fn recv_key(&self) -> &[u8] {
        match self.role {
            IkeRole::Initiator => &self.keys().sk_er,
            IkeRole::Responder => &self.keys().sk_ei,
        }
    }

    fn seal(&self, exchange: Exchange, role: MsgRole, msg_id: u32, inner: &[Payload]) -> IkeMessage {
        let mut msg = IkeMessage::new(exchange, role, msg_id, Vec::new());
        let mut pt = Vec::new();
        encode_payloads(inner, &mut pt);
        let (key, nonce) = aead_params(self.send_key(), msg_id);
        let ct = key.seal(&nonce, &msg.aad(), &pt);
        msg.payloads.push(Payload::new(PayloadTag::Encrypted, ct));
        msg
    }

    fn open(&self, msg: &IkeMessage) -> Result<Vec<Payload>, IkeError> {
        let ct = msg
            .payload(PayloadTag::Encrypted)
            .ok_or_else(|| IkeError::Malformed("missing ENCRYPTED payload".into()))?;
        let (key, nonce) = aead_params(self.recv_key(), msg.msg_id);
        let pt = key.open(&nonce, &msg.aad(), ct).map_err(|_| IkeError::AuthenticationFailed)?;
        Ok(decode_payloads(&pt)?)
    }

    fn send_request(&mut self, msg: IkeMessage) -> Vec<IkeMessage> {
        self.next_msg_id += 1;
        self.outstanding = Some(msg.clone());
        self.attempts = 1;
        vec![msg]
    }

    fn send_response(&mut self, msg: IkeMessage) -> Vec<IkeMessage> {
        self.next_msg_id += 1;
        self.last_response = Some(msg.clone());
        vec![msg]
    }

    pub fn handle(&mut self, ev: IkeEvent) -> Result<Vec<IkeMessage>, IkeError> {
        if self.phase == Phase::Failed {
            return Err(self.unexpected(describe(&ev)));
        }
        let r = match ev {
            IkeEvent::Start => self.on_start(),
            IkeEvent::Timeout => self.on_timeout(),
            IkeEvent::Inbound(m) => self.on_message(m),
        };
        if let Err(e) = &r {
            self.enter(Phase::Failed);
            self.outstanding = None;
            self.error = Some(e.clone());
        }
        r
    }

    fn on_start(&mut self) -> Result<Vec<IkeMessage>, IkeError> {
        if self.role != IkeRole::Initiator || self.phase != Phase::Idle {
            return Err(self.unexpected("start".into()));
        }
        let first = *self
            .config
            .proposals
            .first()
            .ok_or_else(|| IkeError::NegotiationFailed("no proposals configured".into()))?;
        self.spi_i = self.nonzero_u64();
        let ni = self.nonce();
        self.ni = Some(ni);
        let pair = kem::kem_keygen(first.kem, &mut self.rng);
        let msg = IkeMessage::new(
            Exchange::SaInit,
            MsgRole::Request,
            self.next_msg_id,
            vec![
                Payload::new(PayloadTag::Sa, encode_sa(&self.spi_i.to_be_bytes(), &self.config.proposals)),
                Payload::new(PayloadTag::Ke, pair.ek.clone()),
                Payload::new(PayloadTag::Nonce, ni),
            ],
        );
        self.kem_pair = Some(pair);
        self.init_req = msg.encode();
        self.enter(Phase::InitSent);
        Ok(self.send_request(msg))
    }

    fn on_timeout(&mut self) -> Result<Vec<IkeMessage>, IkeError> {
        let Some(req) = self.outstanding.clone() else {
            return Ok(Vec::new());
        };
        if self.attempts > self.config.max_retries {
            return Err(IkeError::Timeout { exchange: req.exchange.label(), attempts: self.attempts });
        }
        self.attempts += 1;
        Ok(vec![req])
    }

    fn on_message(&mut self, m: IkeMessage) -> Result<Vec<IkeMessage>, IkeError> {
        if m.fragment.is_some() {
            return Err(IkeError::Malformed("fragment passed to state machine".into()));
        }
        match self.role {
            IkeRole::Initiator => self.initiator_inbound(m),
            IkeRole::Responder => self.responder_inbound(m),
        }
    }

    fn initiator_inbound(&mut self, m: IkeMessage) -> Result<Vec<IkeMessage>, IkeError> {
        let expected = self.outstanding.as_ref().map(|o| (o.exchange, o.msg_id));
        let duplicate = m.role == MsgRole::Response
            && m.msg_id < self.next_msg_id
            && expected.map_or(true, |(_, id)| m.msg_id != id);
        if duplicate {
            return Ok(Vec::new());
        }
        if m.role != MsgRole::Response || expected != Some((m.exchange, m.msg_id)) {
            return Err(self.unexpected(m.label()));
        }
        self.outstanding = None;
        match (self.phase, m.exchange) {
            (Phase::InitSent, Exchange::SaInit) => self.initiator_init_response(m),
            (Phase::InitDone, Exchange::Auth) => self.initiator_auth_response(m),
            (Phase::AuthDone, Exchange::CreateChild) => self.initiator_child_response(m),
            _ => Err(self.unexpected(m.label())),
        }
    }

    fn initiator_init_response(&mut self, m: IkeMessage) -> Result<Vec<IkeMessage>, IkeError> {
        let (spi, offered) = decode_sa(required(&m, PayloadTag::Sa)?)?;
        let chosen = match offered.as_slice() {
            [p] if self.config.proposals.contains(p) => *p,
            _ => return Err(IkeError::NegotiationFailed("responder must choose exactly one offered proposal".into())),
        };
        let pair = self.kem_pair.as_ref().expect("generated at start");
        if chosen.kem != pair.params {
            return Err(IkeError::NegotiationFailed(format!(
                "responder chose {} but KE was computed for {}",
                chosen.kem, pair.params
            )));
        }
        let ct = required(&m, PayloadTag::Ke)?;
        if ct.len() != kem::param_profile(chosen.kem).ct_bytes {
            return Err(IkeError::Malformed(format!("KE length {}", ct.len())));
        }
        let nr = nonce_payload(&m)?;
        self.spi_r = spi_u64(&spi)?;
        let ss = kem::kem_decaps(chosen.kem, &pair.dk, ct)?;
        self.chosen = Some(chosen);
        self.nr = Some(nr);
        self.init_resp = m.encode();
        self.keys = Some(derive_keys(chosen.prf, chosen.aead, &ss, &self.ni.unwrap(), &nr, self.spi_i, self.spi_r));
        self.enter(Phase::InitDone);

        let auth = authenticate(self, &self.config.psk)?;
        let msg = self.seal(Exchange::Auth, MsgRole::Request, self.next_msg_id, &[Payload::new(PayloadTag::Auth, auth)]);
        Ok(self.send_request(msg))
    }

    fn initiator_auth_response(&mut self, m: IkeMessage) -> Result<Vec<IkeMessage>, IkeError> {
        let inner = self.open(&m)?;
        let auth = find(&inner, PayloadTag::Auth)?;
        verify_auth(self, &self.config.psk, auth)?;
        self.enter(Phase::AuthDone);

        self.child_nonce = self.nonce();
        self.child_spi = self.child_spi_avoiding(0);
        let ts = &self.config.ts;
        let inner = vec![
            Payload::new(PayloadTag::Sa, encode_sa(&self.child_spi.to_be_bytes(), &self.config.esp_proposals)),
            Payload::new(PayloadTag::Nonce, self.child_nonce),
            Payload::new(PayloadTag::Ts, encode_ts(&ts.local)),
            Payload::new(PayloadTag::Ts, encode_ts(&ts.remote)),
        ];
        let msg = self.seal(Exchange::CreateChild, MsgRole::Request, self.next_msg_id, &inner);
        Ok(self.send_request(msg))
    }

    fn initiator_child_response(&mut self, m: IkeMessage) -> Result<Vec<IkeMessage>, IkeError> {
        let inner = self.open(&m)?;
        let (spi, offered) = decode_sa(find(&inner, PayloadTag::Sa)?)?;
        let chosen = match offered.as_slice() {
            [p] if self.config.esp_proposals.contains(p) => *p,
            _ => return Err(IkeError::NegotiationFailed("child SA proposal not offered".into())),
        };
        let spi_r = spi_u32(&spi)?;
        if spi_r == self.child_spi {
            return Err(IkeError::NegotiationFailed("child SPIs collide".into()));
        }
        let nr2 = nonce_bytes(find(&inner, PayloadTag::Nonce)?)?;
        let prf = self.prf();
        self.child = Some(derive_child_keys(
            prf,
            chosen.aead,
            &self.keys().sk_d,
            &self.child_nonce,
            &nr2,
            self.child_spi,
            spi_r,
            true,
        ));
        self.esp_chosen = Some(chosen);
        self.enter(Phase::ChildEstablished);
        Ok(Vec::new())
    }

    fn responder_inbound(&mut self, m: IkeMessage) -> Result<Vec<IkeMessage>, IkeError> {
        if m.role == MsgRole::Request && self.next_msg_id.checked_sub(1) == Some(m.msg_id) {
            if let Some(last) = &self.last_response {
                if last.exchange == m.exchange {
                    return Ok(vec![last.clone()]);
                }
            }
        }
        if m.role != MsgRole::Request || m.msg_id != self.next_msg_id {
            return Err(self.unexpected(m.label()));
        }
        match (self.phase, m.exchange) {
            (Phase::Idle, Exchange::SaInit) => self.responder_init(m),
            (Phase::InitDone, Exchange::Auth) => self.responder_auth(m),
            (Phase::AuthDone, Exchange::CreateChild) => self.responder_child(m),
            _ => Err(self.unexpected(m.label())),
        }
    }

    fn responder_init(&mut self, m: IkeMessage) -> Result<Vec<IkeMessage>, IkeError> {
        let (spi, offered) = decode_sa(required(&m, PayloadTag::Sa)?)?;
        let guessed = *offered
            .first()
            .ok_or_else(|| IkeError::Malformed("empty SA payload".into()))?;
        let chosen = negotiate(&offered, &self.config.proposals)?;
        if chosen.kem != guessed.kem {
            return Err(IkeError::NegotiationFailed(format!(
                "KE payload is for {} but {} was chosen",
                guessed.kem, chosen.kem
            )));
        }
        let ek = required(&m, PayloadTag::Ke)?;
        let ni = nonce_payload(&m)?;
        self.spi_i = spi_u64(&spi)?;
        let enc = kem::kem_encaps(chosen.kem, ek, &mut self.rng)?;
        self.spi_r = self.nonzero_u64();
        let nr = self.nonce();
        self.chosen = Some(chosen);
        self.ni = Some(ni);
        self.nr = Some(nr);
        self.keys = Some(derive_keys(chosen.prf, chosen.aead, &enc.ss, &ni, &nr, self.spi_i, self.spi_r));
        let resp = IkeMessage::new(
            Exchange::SaInit,
            MsgRole::Response,
            m.msg_id,
            vec![
                Payload::new(PayloadTag::Sa, encode_sa(&self.spi_r.to_be_bytes(), &[chosen])),
                Payload::new(PayloadTag::Ke, enc.ct),
                Payload::new(PayloadTag::Nonce, nr),
            ],
        );
        self.init_req = m.encode();
        self.init_resp = resp.encode();
        self.enter(Phase::InitDone);
        Ok(self.send_response(resp))
    }

    fn responder_auth(&mut self, m: IkeMessage) -> Result<Vec<IkeMessage>, IkeError> {
        let inner = self.open(&m)?;
        verify_auth(self, &self.config.psk, find(&inner, PayloadTag::Auth)?)?;
        let auth = authenticate(self, &self.config.psk)?;
        let resp = self.seal(Exchange::Auth, MsgRole::Response, m.msg_id, &[Payload::new(PayloadTag::Auth, auth)]);
        self.enter(Phase::AuthDone);
        Ok(self.send_response(resp))
    }

    fn responder_child(&mut self, m: IkeMessage) -> Result<Vec<IkeMessage>, IkeError> {
        let inner = self.open(&m)?;
        let (spi, offered) = decode_sa(find(&inner, PayloadTag::Sa)?)?;
        let chosen = negotiate(&offered, &self.config.esp_proposals)?;
        let spi_i = spi_u32(&spi)?;
        let ni2 = nonce_bytes(find(&inner, PayloadTag::Nonce)?)?;
        let ts: Vec<&[u8]> = inner.iter().filter(|p| p.tag == PayloadTag::Ts).map(|p| p.data.as_slice()).collect();
        let [tsi, tsr] = ts.as_slice() else {
            return Err(IkeError::Malformed("expected two TS payloads".into()));
        };
        let (tsi, tsr) = (decode_ts(tsi)?, decode_ts(tsr)?);
        let own = &self.config.ts;
        if tsi != own.remote || tsr != own.local {
            return Err(IkeError::NegotiationFailed("traffic selectors unacceptable".into()));
        }
        let nr2 = self.nonce();
        let spi_r = self.child_spi_avoiding(spi_i);
        let prf = self.prf();
        self.child = Some(derive_child_keys(prf, chosen.aead, &self.keys().sk_d, &ni2, &nr2, spi_i, spi_r, false));
        self.esp_chosen = Some(chosen);
        let inner = vec![
            Payload::new(PayloadTag::Sa, encode_sa(&spi_r.to_be_bytes(), &[chosen])),
            Payload::new(PayloadTag::Nonce, nr2),
            Payload::new(PayloadTag::Ts, encode_ts(&tsi)),
            Payload::new(PayloadTag::Ts, encode_ts(&tsr)),
        ];
        let resp = self.seal(Exchange::CreateChild, MsgRole::Response, m.msg_id, &inner);
        self.enter(Phase::ChildEstablished);
        Ok(self.send_response(resp))
    }
}

/// Pure transition: the input state is consumed and its successor returned.
pub fn step(mut state: IkeSaState, ev: IkeEvent) -> (IkeSaState, Result<Vec<IkeMessage>, IkeError>) {
    let r = state.handle(ev);
    (state, r)
}

fn describe(ev: &IkeEvent) -> String {
    match ev {
        IkeEvent::Start => "start".into(),
        IkeEvent::Timeout => "timeout".into(),
        IkeEvent::Inbound(m) => m.label(),
    }
}

fn aead_params(keymat: &[u8], msg_id: u32) -> (AeadKey, [u8; aead::NONCE_LEN]) {
    let key: &[u8; 32] = keymat[..32].try_into().unwrap();
    let salt: &[u8; aead::SALT_LEN] = keymat[32..36].try_into().unwrap();
    (AeadKey::new(key), aead::nonce(salt, msg_id as u64))
}

fn required(m: &IkeMessage, tag: PayloadTag) -> Result<&[u8], IkeError> {
    m.payload(tag).ok_or_else(|| IkeError::Malformed(format!("{} missing {tag:?} payload", m.label())))
}

fn find(inner: &[Payload], tag: PayloadTag) -> Result<&[u8], IkeError> {
    inner
        .iter()
        .find(|p| p.tag == tag)
        .map(|p| p.data.as_slice())
        .ok_or_else(|| IkeError::Malformed(format!("missing {tag:?} payload")))
}

fn nonce_bytes(b: &[u8]) -> Result<[u8; NONCE_LEN], IkeError> {
    b.try_into().map_err(|_| IkeError::Malformed(format!("nonce of {} bytes", b.len())))
}

fn nonce_payload(m: &IkeMessage) -> Result<[u8; NONCE_LEN], IkeError> {
    nonce_bytes(required(m, PayloadTag::Nonce)?)
}

fn spi_u64(b: &[u8]) -> Result<u64, IkeError> {
    Ok(u64::from_be_bytes(b.try_into().map_err(|_| IkeError::Malformed("IKE SPI length".into()))?))
}

fn spi_u32(b: &[u8]) -> Result<u32, IkeError> {
    Ok(u32::from_be_bytes(b.try_into().map_err(|_| IkeError::Malformed("child SPI length".into()))?))
}

/// SA payload body: `[u8 spi_len][spi][u8 count]` then `count x [u16 aead][u16 prf][u16 kem]`.
/// Every proposal costs six bytes regardless of KEM.
pub fn encode_sa(spi: &[u8], proposals: &[Proposal]) -> Vec<u8> {
    let mut out = vec![spi.len() as u8];
    out.extend_from_slice(spi);
    out.push(proposals.len() as u8);
    for p in proposals {
        for id in p.transform_ids() {
            out.extend_from_slice(&id.to_be_bytes());
        }
    }
    out
}

/// Proposals with transforms this implementation does not know are skipped.
pub fn decode_sa(buf: &[u8]) -> Result<(Vec<u8>, Vec<Proposal>), IkeError> {
    let mut r = Reader::new(buf);
    let spi_len = r.u8()? as usize;
    let spi = r.take(spi_len)?.to_vec();
    let n = r.u8()?;
    let mut props = Vec::new();
    for _ in 0..n {
        let ids = [r.u16()?, r.u16()?, r.u16()?];
        if let Ok(p) = Proposal::from_transform_ids(ids) {
            props.push(p);
        }
    }
    r.finish()?;
    Ok((spi, props))
}

fn auth_octets(st: &IkeSaState, signer: IkeRole, id: &[u8]) -> Vec<u8> {
    let keys = st.keys();
    let prf = st.prf();
    let (msg, nonce, sk_p) = match signer {
        IkeRole::Initiator => (&st.init_req, st.nr.unwrap(), &keys.sk_pi),
        IkeRole::Responder => (&st.init_resp, st.ni.unwrap(), &keys.sk_pr),
    };
    let mac_id = prf.compute(sk_p, id);
    [&msg[..], &nonce[..], &mac_id[..]].concat()
}

/// AUTH payload for the local side: `[u8 id_len][id][mac]` where
/// `mac = prf(prf(psk, "Key Pad for IKEv2"), <SA_INIT message> | <peer nonce> | prf(SK_p, id))`.
pub fn authenticate(st: &IkeSaState, psk: &[u8]) -> Result<Vec<u8>, IkeError> {
    if st.phase != Phase::InitDone || st.keys.is_none() {
        return Err(st.unexpected("authenticate".into()));
    }
    let prf = st.prf();
    let id = &st.config.local_id;
    let octets = auth_octets(st, st.role, id);
    let mac = prf.compute(&prf.compute(psk, KEY_PAD), &octets);
    let mut out = vec![id.len() as u8];
    out.extend_from_slice(id);
    out.extend_from_slice(&mac);
    Ok(out)
}

/// Checks the peer's AUTH payload in constant time.
pub fn verify_auth(st: &IkeSaState, psk: &[u8], payload: &[u8]) -> Result<(), IkeError> {
    let mut r = Reader::new(payload);
    let id_len = r.u8().map_err(|_| IkeError::AuthenticationFailed)? as usize;
    let id = r.take(id_len).map_err(|_| IkeError::AuthenticationFailed)?;
    let mac = r.take(32).map_err(|_| IkeError::AuthenticationFailed)?;
    r.finish().map_err(|_| IkeError::AuthenticationFailed)?;
    if let Some(expected) = &st.config.remote_id {
        if expected.as_slice() != id {
            return Err(IkeError::AuthenticationFailed);
        }
    }
    let peer = match st.role {
        IkeRole::Initiator => IkeRole::Responder,
        IkeRole::Responder => IkeRole::Initiator,
    };
    let prf = st.prf();
    let octets = auth_octets(st, peer, id);
    if prf.verify(&prf.compute(psk, KEY_PAD), &[&octets], mac) {
        Ok(())
    } else {
        Err(IkeError::AuthenticationFailed)
    }
}
