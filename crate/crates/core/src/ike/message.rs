//! IKE message framing.
//!
//! ```text
//! [u8 exchange][u8 role][u32 msg_id][u8 frag index][u8 frag total][u16 count]
//! count x ([u8 tag][u32 len][bytes])
//! ```
//! All integers are big-endian. An unfragmented message has index = total = 0.

use std::fmt;

pub const HEADER_LEN: usize = 10;
pub const PAYLOAD_HEADER_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("truncated message: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("unknown {what} code {code}")]
    UnknownCode { what: &'static str, code: u8 },
    #[error("{0} trailing bytes after last payload")]
    TrailingBytes(usize),
    #[error("invalid fragment info {index}/{total}")]
    BadFragmentInfo { index: u8, total: u8 },
    #[error("malformed {0} payload")]
    MalformedPayload(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exchange {
    SaInit = 34,
    Auth = 35,
    CreateChild = 36,
}

impl Exchange {
    pub const ALL: [Exchange; 3] = [Exchange::SaInit, Exchange::Auth, Exchange::CreateChild];

    pub fn from_code(c: u8) -> Result<Self, WireError> {
        Self::ALL
            .into_iter()
            .find(|e| *e as u8 == c)
            .ok_or(WireError::UnknownCode { what: "exchange", code: c })
    }

    pub fn label(self) -> &'static str {
        match self {
            Exchange::SaInit => "SA_INIT",
            Exchange::Auth => "AUTH",
            Exchange::CreateChild => "CREATE_CHILD",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MsgRole {
    Request = 0,
    Response = 1,
}

impl MsgRole {
    fn from_code(c: u8) -> Result<Self, WireError> {
        match c {
            0 => Ok(MsgRole::Request),
            1 => Ok(MsgRole::Response),
            _ => Err(WireError::UnknownCode { what: "role", code: c }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayloadTag {
    Sa = 1,
    Ke = 2,
    Nonce = 3,
    Auth = 4,
    Ts = 5,
    Encrypted = 6,
}

impl PayloadTag {
    fn from_code(c: u8) -> Result<Self, WireError> {
        use PayloadTag::*;
        [Sa, Ke, Nonce, Auth, Ts, Encrypted]
            .into_iter()
            .find(|t| *t as u8 == c)
            .ok_or(WireError::UnknownCode { what: "payload tag", code: c })
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Payload {
    pub tag: PayloadTag,
    pub data: Vec<u8>,
}

impl fmt::Debug for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({} bytes)", self.tag, self.data.len())
    }
}

impl Payload {
    pub fn new(tag: PayloadTag, data: impl Into<Vec<u8>>) -> Self {
        Self { tag, data: data.into() }
    }
}

/// 1-based fragment position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FragmentInfo {
    pub index: u8,
    pub total: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IkeMessage {
    pub exchange: Exchange,
    pub role: MsgRole,
    pub msg_id: u32,
    pub payloads: Vec<Payload>,
    pub fragment: Option<FragmentInfo>,
}

impl IkeMessage {
    pub fn new(exchange: Exchange, role: MsgRole, msg_id: u32, payloads: Vec<Payload>) -> Self {
        Self { exchange, role, msg_id, payloads, fragment: None }
    }

    pub fn payload(&self, tag: PayloadTag) -> Option<&[u8]> {
        self.payloads.iter().find(|p| p.tag == tag).map(|p| p.data.as_slice())
    }

    pub fn payloads_of(&self, tag: PayloadTag) -> impl Iterator<Item = &[u8]> {
        self.payloads.iter().filter(move |p| p.tag == tag).map(|p| p.data.as_slice())
    }

    pub fn wire_len(&self) -> usize {
        HEADER_LEN + payloads_len(&self.payloads) - 2
    }

    /// Capture label such as `SA_INIT_REQ` or `AUTH_RESP[2/3]`.
    pub fn label(&self) -> String {
        let dir = match self.role {
            MsgRole::Request => "REQ",
            MsgRole::Response => "RESP",
        };
        match self.fragment {
            Some(f) => format!("{}_{}[{}/{}]", self.exchange.label(), dir, f.index, f.total),
            None => format!("{}_{}", self.exchange.label(), dir),
        }
    }

    /// Bytes covered by the encrypted payload's associated data.
    pub fn aad(&self) -> [u8; 6] {
        let mut a = [0u8; 6];
        a[0] = self.exchange as u8;
        a[1] = self.role as u8;
        a[2..].copy_from_slice(&self.msg_id.to_be_bytes());
        a
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.push(self.exchange as u8);
        out.push(self.role as u8);
        out.extend_from_slice(&self.msg_id.to_be_bytes());
        let (i, t) = self.fragment.map(|f| (f.index, f.total)).unwrap_or((0, 0));
        out.push(i);
        out.push(t);
        encode_payloads(&self.payloads, &mut out);
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(buf);
        let exchange = Exchange::from_code(r.u8()?)?;
        let role = MsgRole::from_code(r.u8()?)?;
        let msg_id = r.u32()?;
        let (index, total) = (r.u8()?, r.u8()?);
        let fragment = match (index, total) {
            (0, 0) => None,
            (i, t) if i >= 1 && i <= t => Some(FragmentInfo { index: i, total: t }),
            (i, t) => return Err(WireError::BadFragmentInfo { index: i, total: t }),
        };
        let payloads = decode_payloads_from(&mut r)?;
        r.finish()?;
        Ok(Self { exchange, role, msg_id, payloads, fragment })
    }
}

fn payloads_len(p: &[Payload]) -> usize {
    2 + p.iter().map(|p| PAYLOAD_HEADER_LEN + p.data.len()).sum::<usize>()
}

pub fn encode_payloads(payloads: &[Payload], out: &mut Vec<u8>) {
    out.extend_from_slice(&(payloads.len() as u16).to_be_bytes());
    for p in payloads {
        out.push(p.tag as u8);
        out.extend_from_slice(&(p.data.len() as u32).to_be_bytes());
        out.extend_from_slice(&p.data);
    }
}

/// `[u16 count]` followed by tagged payloads, as used inside ENCRYPTED.
pub fn decode_payloads(buf: &[u8]) -> Result<Vec<Payload>, WireError> {
    let mut r = Reader::new(buf);
    let p = decode_payloads_from(&mut r)?;
    r.finish()?;
    Ok(p)
}

fn decode_payloads_from(r: &mut Reader<'_>) -> Result<Vec<Payload>, WireError> {
    let count = r.u16()?;
    let mut payloads = Vec::with_capacity(count.min(64) as usize);
    for _ in 0..count {
        let tag = PayloadTag::from_code(r.u8()?)?;
        let len = r.u32()? as usize;
        payloads.push(Payload { tag, data: r.take(len)?.to_vec() });
    }
    Ok(payloads)
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() - self.pos < n {
            return Err(WireError::Truncated { offset: self.pos, needed: n });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn finish(self) -> Result<(), WireError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(WireError::TrailingBytes(n)),
        }
    }
}
