//! Compact tagged binary encoding for E2 messages:
//! `[u8 kind][u32 txn_id][u16 count]` then `count` records of
//! `[u8 keylen][key][u16 vallen][val]`, all big-endian.

use std::fmt;

use crate::ike::message::Reader;

use super::E2Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum E2Kind {
    SetupReq = 1,
    SetupResp = 2,
    SubReq = 3,
    SubResp = 4,
    Indication = 5,
    XappConnect = 6,
    XappConnectAck = 7,
}

impl E2Kind {
    pub const ALL: [E2Kind; 7] = [
        E2Kind::SetupReq,
        E2Kind::SetupResp,
        E2Kind::SubReq,
        E2Kind::SubResp,
        E2Kind::Indication,
        E2Kind::XappConnect,
        E2Kind::XappConnectAck,
    ];

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| *k as u8 == c)
    }

    pub fn label(self) -> &'static str {
        match self {
            E2Kind::SetupReq => "E2_SETUP_REQ",
            E2Kind::SetupResp => "E2_SETUP_RESP",
            E2Kind::SubReq => "SUB_REQ",
            E2Kind::SubResp => "SUB_RESP",
            E2Kind::Indication => "INDICATION",
            E2Kind::XappConnect => "XAPP_CONNECT",
            E2Kind::XappConnectAck => "XAPP_CONNECT_ACK",
        }
    }
}

impl fmt::Display for E2Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct E2Message {
    pub kind: E2Kind,
    pub txn_id: u32,
    pub records: Vec<(String, Vec<u8>)>,
}

impl E2Message {
    pub fn new(kind: E2Kind, txn_id: u32) -> Self {
        Self { kind, txn_id, records: Vec::new() }
    }

    pub fn with(mut self, key: &str, val: impl Into<Vec<u8>>) -> Self {
        self.records.push((key.to_string(), val.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&[u8]> {
        self.records.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_slice())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a [u8]> + 'a {
        self.records.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_slice())
    }

    pub fn get_u32(&self, key: &str) -> Option<u32> {
        self.get(key).and_then(|v| v.try_into().ok()).map(u32::from_be_bytes)
    }

    pub fn get_u64(&self, key: &str) -> Option<u64> {
        self.get(key).and_then(|v| v.try_into().ok()).map(u64::from_be_bytes)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.get(key).and_then(|v| std::str::from_utf8(v).ok())
    }

    pub fn encode(&self) -> Result<Vec<u8>, E2Error> {
        let count = u16::try_from(self.records.len()).map_err(|_| E2Error::Malformed("too many records"))?;
        let mut out = vec![self.kind as u8];
        out.extend_from_slice(&self.txn_id.to_be_bytes());
        out.extend_from_slice(&count.to_be_bytes());
        for (k, v) in &self.records {
            let kl = u8::try_from(k.len()).map_err(|_| E2Error::Malformed("key longer than 255 bytes"))?;
            let vl = u16::try_from(v.len()).map_err(|_| E2Error::Malformed("value longer than 65535 bytes"))?;
            out.push(kl);
            out.extend_from_slice(k.as_bytes());
            out.extend_from_slice(&vl.to_be_bytes());
            out.extend_from_slice(v);
        }
        Ok(out)
    }

    pub fn decode(buf: &[u8]) -> Result<Self, E2Error> {
        let trunc = |_| E2Error::Malformed("truncated message");
        let mut r = Reader::new(buf);
        let kind = E2Kind::from_code(r.u8().map_err(trunc)?).ok_or(E2Error::Malformed("unknown message kind"))?;
        let txn_id = r.u32().map_err(trunc)?;
        let count = r.u16().map_err(trunc)?;
        let mut records = Vec::with_capacity(count.into());
        for _ in 0..count {
            let kl = r.u8().map_err(trunc)?;
            let key = std::str::from_utf8(r.take(kl.into()).map_err(trunc)?)
                .map_err(|_| E2Error::Malformed("key is not utf-8"))?
                .to_string();
            let vl = r.u16().map_err(trunc)?;
            records.push((key, r.take(vl.into()).map_err(trunc)?.to_vec()));
        }
        r.finish().map_err(|_| E2Error::Malformed("trailing bytes"))?;
        Ok(Self { kind, txn_id, records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_layout() {
        let m = E2Message::new(E2Kind::SubReq, 0x01020304).with("ab", vec![9, 8, 7]);
        assert_eq!(m.encode().unwrap(), vec![3, 1, 2, 3, 4, 0, 1, 2, b'a', b'b', 0, 3, 9, 8, 7]);
        assert_eq!(E2Message::decode(&m.encode().unwrap()).unwrap(), m);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(E2Message::decode(&[]).is_err());
        assert!(E2Message::decode(&[99, 0, 0, 0, 0, 0, 0]).is_err());
        assert!(E2Message::decode(&[1, 0, 0, 0, 0, 0, 1, 5]).is_err());
        assert!(E2Message::decode(&[1, 0, 0, 0, 0, 0, 0, 0]).is_err());
        let long = E2Message::new(E2Kind::SetupReq, 0).with(&"k".repeat(256), vec![]);
        assert!(long.encode().is_err());
    }

    #[test]
    fn kind_codes_roundtrip() {
        for k in E2Kind::ALL {
            assert_eq!(E2Kind::from_code(k as u8), Some(k));
        }
    }
}
