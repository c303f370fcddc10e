//! ESP framing and per-SA sealing/opening.
//!
//! Wire layout: `[u32 spi][u32 seq][ciphertext | 16-byte tag]`. The nonce is
//! `salt | seq` (seq widened to 64 bits) and the associated data is `spi | seq`.

use std::net::Ipv4Addr;

use crate::crypto::{aead, AeadKey};
use crate::ike::ChildSaKeys;

use super::replay::{ReplayError, ReplayWindow};

pub const ESP_HEADER_LEN: usize = 8;
/// Bytes added to every inner packet by tunnel encapsulation.
pub const ESP_OVERHEAD: usize = ESP_HEADER_LEN + aead::TAG_LEN;
pub const INNER_HEADER_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EspError {
    #[error("sequence space exhausted; SA must be replaced")]
    SequenceExhausted,
    #[error("ICV check failed")]
    AuthFailed,
    #[error("replay: {0}")]
    ReplayDetected(#[from] ReplayError),
    #[error("no SA for SPI {0:#010x}")]
    UnknownSpi(u32),
    #[error("malformed packet: {0}")]
    Malformed(&'static str),
    #[error("trap queue full ({0} packets)")]
    QueueOverflow(usize),
    #[error("tunnel has failed")]
    TunnelFailed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EspPacket {
    pub spi: u32,
    pub seq: u32,
    /// Ciphertext followed by the 16-byte tag.
    pub payload: Vec<u8>,
}

impl EspPacket {
    pub fn wire_len(&self) -> usize {
        ESP_HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&self.spi.to_be_bytes());
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self, EspError> {
        if buf.len() < ESP_OVERHEAD {
            return Err(EspError::Malformed("shorter than header and tag"));
        }
        Ok(Self {
            spi: u32::from_be_bytes(buf[0..4].try_into().unwrap()),
            seq: u32::from_be_bytes(buf[4..8].try_into().unwrap()),
            payload: buf[8..].to_vec(),
        })
    }

    pub fn aad(&self) -> [u8; 8] {
        aad(self.spi, self.seq)
    }
}

fn aad(spi: u32, seq: u32) -> [u8; 8] {
    let mut a = [0u8; 8];
    a[..4].copy_from_slice(&spi.to_be_bytes());
    a[4..].copy_from_slice(&seq.to_be_bytes());
    a
}

/// One established child SA pair as seen by one endpoint.
#[derive(Clone)]
pub struct EspSa {
    keys: ChildSaKeys,
    out_key: AeadKey,
    in_key: AeadKey,
    next_seq: u32,
    window: ReplayWindow,
    failed: bool,
}

impl std::fmt::Debug for EspSa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EspSa")
            .field("keys", &self.keys)
            .field("next_seq", &self.next_seq)
            .field("window", &self.window)
            .field("failed", &self.failed)
            .finish()
    }
}

impl EspSa {
    pub fn new(keys: ChildSaKeys) -> Self {
        Self::starting_at(keys, 1)
    }

    /// SA whose next outbound sequence number is `seq`.
    pub fn starting_at(keys: ChildSaKeys, seq: u32) -> Self {
        Self {
            out_key: AeadKey::new(&keys.key_out),
            in_key: AeadKey::new(&keys.key_in),
            keys,
            next_seq: seq,
            window: ReplayWindow::new(),
            failed: false,
        }
    }

    pub fn keys(&self) -> &ChildSaKeys {
        &self.keys
    }

    pub fn window(&self) -> &ReplayWindow {
        &self.window
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    pub fn seal(&mut self, inner: &[u8]) -> Result<EspPacket, EspError> {
        if self.failed {
            return Err(EspError::TunnelFailed);
        }
        if self.next_seq == u32::MAX {
            self.failed = true;
            return Err(EspError::SequenceExhausted);
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let spi = self.keys.spi_out;
        let nonce = aead::nonce(&self.keys.salt_out, seq as u64);
        let payload = self.out_key.seal(&nonce, &aad(spi, seq), inner);
        Ok(EspPacket { spi, seq, payload })
    }

    pub fn open(&mut self, pkt: &EspPacket) -> Result<Vec<u8>, EspError> {
        if pkt.spi != self.keys.spi_in {
            return Err(EspError::UnknownSpi(pkt.spi));
        }
        self.window.check(pkt.seq)?;
        let nonce = aead::nonce(&self.keys.salt_in, pkt.seq as u64);
        let inner = self
            .in_key
            .open(&nonce, &pkt.aad(), &pkt.payload)
            .map_err(|_| EspError::AuthFailed)?;
        self.window.update(pkt.seq);
        Ok(inner)
    }
}

pub fn esp_seal(sa: &mut EspSa, inner: &[u8]) -> Result<EspPacket, EspError> {
    sa.seal(inner)
}

pub fn esp_open(sa: &mut EspSa, pkt: &EspPacket) -> Result<Vec<u8>, EspError> {
    sa.open(pkt)
}

/// Minimal addressed datagram carried inside the tunnel:
/// `[u32 src][u32 dst][u16 port][payload]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerPacket {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub port: u16,
    pub payload: Vec<u8>,
}

impl InnerPacket {
    pub fn new(src: Ipv4Addr, dst: Ipv4Addr, port: u16, payload: impl Into<Vec<u8>>) -> Self {
        Self { src, dst, port, payload: payload.into() }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(INNER_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.src.octets());
        out.extend_from_slice(&self.dst.octets());
        out.extend_from_slice(&self.port.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self, EspError> {
        if buf.len() < INNER_HEADER_LEN {
            return Err(EspError::Malformed("inner header"));
        }
        Ok(Self {
            src: Ipv4Addr::from(<[u8; 4]>::try_from(&buf[0..4]).unwrap()),
            dst: Ipv4Addr::from(<[u8; 4]>::try_from(&buf[4..8]).unwrap()),
            port: u16::from_be_bytes([buf[8], buf[9]]),
            payload: buf[10..].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{AeadAlg, PrfAlg};
    use crate::ike::derive_child_keys;

    pub(crate) fn pair() -> (EspSa, EspSa) {
        let k = derive_child_keys(PrfAlg::HmacSha256, AeadAlg::Aes256Gcm16, &[7; 32], &[1; 32], &[2; 32], 0x100, 0x200, true);
        (EspSa::new(k.clone()), EspSa::new(k.mirrored()))
    }

    #[test]
    fn roundtrip_and_sequence() {
        let (mut a, mut b) = pair();
        let p1 = a.seal(b"hello").unwrap();
        let p2 = a.seal(b"").unwrap();
        assert_eq!((p1.seq, p2.seq), (1, 2));
        assert_eq!(p1.spi, 0x200);
        assert_eq!(p1.wire_len(), 5 + ESP_OVERHEAD);
        let d = EspPacket::decode(&p1.encode()).unwrap();
        assert_eq!(b.open(&d).unwrap(), b"hello");
        assert_eq!(b.open(&p2).unwrap(), b"");
    }

    #[test]
    fn aead_layer_matches_manual_construction() {
        let (mut a, _) = pair();
        let k = a.keys().clone();
        let p = a.seal(b"payload").unwrap();
        let mut nonce = [0u8; 12];
        nonce[..4].copy_from_slice(&k.salt_out);
        nonce[4..].copy_from_slice(&1u64.to_be_bytes());
        let mut ad = Vec::new();
        ad.extend_from_slice(&k.spi_out.to_be_bytes());
        ad.extend_from_slice(&1u32.to_be_bytes());
        assert_eq!(AeadKey::new(&k.key_out).seal(&nonce, &ad, b"payload"), p.payload);
    }

    #[test]
    fn replay_and_tamper_and_spi() {
        let (mut a, mut b) = pair();
        let p = a.seal(b"x").unwrap();
        b.open(&p).unwrap();
        assert!(matches!(b.open(&p), Err(EspError::ReplayDetected(ReplayError::Duplicate(1)))));
        let mut q = a.seal(b"y").unwrap();
        q.payload[0] ^= 1;
        assert_eq!(b.open(&q), Err(EspError::AuthFailed));
        // a failed ICV must not consume the sequence number
        q.payload[0] ^= 1;
        assert_eq!(b.open(&q).unwrap(), b"y");
        let mut r = a.seal(b"z").unwrap();
        r.spi ^= 1;
        assert_eq!(b.open(&r), Err(EspError::UnknownSpi(0x201)));
    }

    #[test]
    fn header_is_authenticated() {
        let (mut a, mut b) = pair();
        let mut p = a.seal(b"x").unwrap();
        p.seq = 5;
        assert_eq!(b.open(&p), Err(EspError::AuthFailed));
    }

    #[test]
    fn sequence_exhaustion() {
        let (a, _) = pair();
        let mut a = EspSa::starting_at(a.keys().clone(), u32::MAX - 1);
        assert_eq!(a.seal(b"").unwrap().seq, u32::MAX - 1);
        assert_eq!(a.seal(b""), Err(EspError::SequenceExhausted));
        assert!(a.is_failed());
        assert_eq!(a.seal(b""), Err(EspError::TunnelFailed));
    }

    #[test]
    fn inner_packet_layout() {
        let p = InnerPacket::new(Ipv4Addr::new(172, 16, 1, 10), Ipv4Addr::new(172, 16, 2, 34), 36421, vec![1, 2]);
        let w = p.encode();
        assert_eq!(w, vec![172, 16, 1, 10, 172, 16, 2, 34, 0x8e, 0x45, 1, 2]);
        assert_eq!(InnerPacket::decode(&w).unwrap(), p);
        assert!(InnerPacket::decode(&w[..9]).is_err());
    }
}
