//! Splitting oversized IKE messages into datagram-sized fragments.
//!
//! Each fragment repeats the original header with `{index, total}` set and
//! carries one slice of the original wire encoding in a single ENCRYPTED
//! payload, so the per-fragment overhead is a fixed [`FRAGMENT_OVERHEAD`].

use std::collections::HashMap;

use super::message::{Exchange, FragmentInfo, IkeMessage, MsgRole, Payload, PayloadTag, WireError, HEADER_LEN, PAYLOAD_HEADER_LEN};

pub const FRAGMENT_OVERHEAD: usize = HEADER_LEN + PAYLOAD_HEADER_LEN;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FragmentError {
    #[error("mtu {mtu} too small to fragment a {len}-byte message")]
    MtuTooSmall { mtu: usize, len: usize },
    #[error("reassembly incomplete: {have} of {total} fragments")]
    ReassemblyIncomplete { have: usize, total: usize },
    #[error("inconsistent fragment set")]
    Inconsistent,
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// `ceil(wire_len / (mtu - overhead))`, or `None` when `mtu <= overhead`.
pub fn fragment_count(wire_len: usize, mtu: usize, overhead: usize) -> Option<usize> {
    let chunk = mtu.checked_sub(overhead).filter(|c| *c > 0)?;
    Some(wire_len.div_ceil(chunk).max(1))
}

pub fn fragment(msg: &IkeMessage, mtu: usize) -> Result<Vec<IkeMessage>, FragmentError> {
    let len = msg.wire_len();
    if len <= mtu {
        return Ok(vec![msg.clone()]);
    }
    let too_small = FragmentError::MtuTooSmall { mtu, len };
    let total = fragment_count(len, mtu, FRAGMENT_OVERHEAD).ok_or(too_small.clone())?;
    if total > u8::MAX as usize {
        return Err(too_small);
    }
    let wire = msg.encode();
    let chunk = mtu - FRAGMENT_OVERHEAD;
    Ok(wire
        .chunks(chunk)
        .enumerate()
        .map(|(i, c)| IkeMessage {
            exchange: msg.exchange,
            role: msg.role,
            msg_id: msg.msg_id,
            payloads: vec![Payload::new(PayloadTag::Encrypted, c)],
            fragment: Some(FragmentInfo { index: i as u8 + 1, total: total as u8 }),
        })
        .collect())
}

/// Reassembles a complete fragment set, in any order.
pub fn reassemble(frags: &[IkeMessage]) -> Result<IkeMessage, FragmentError> {
    let mut r = Reassembler::default();
    let mut done = None;
    for f in frags {
        if let Some(m) = r.push(f.clone())? {
            done = Some(m);
        }
    }
    match done {
        Some(m) => Ok(m),
        None => {
            let total = frags.first().and_then(|f| f.fragment).map_or(0, |f| f.total as usize);
            Err(FragmentError::ReassemblyIncomplete { have: r.pending_fragments(), total })
        }
    }
}

type Key = (Exchange, MsgRole, u32);

/// Incremental reassembly keyed by `(exchange, role, msg_id)`.
#[derive(Debug, Default)]
pub struct Reassembler {
    partial: HashMap<Key, Vec<Option<Vec<u8>>>>,
}

impl Reassembler {
    /// Returns the original message once its last missing fragment arrives.
    /// Unfragmented messages pass straight through.
    pub fn push(&mut self, msg: IkeMessage) -> Result<Option<IkeMessage>, FragmentError> {
        let Some(info) = msg.fragment else {
            return Ok(Some(msg));
        };
        let body = match msg.payloads.as_slice() {
            [p] if p.tag == PayloadTag::Encrypted => p.data.clone(),
            _ => return Err(FragmentError::Inconsistent),
        };
        let key = (msg.exchange, msg.role, msg.msg_id);
        let slots = self.partial.entry(key).or_insert_with(|| vec![None; info.total as usize]);
        if slots.len() != info.total as usize {
            return Err(FragmentError::Inconsistent);
        }
        // duplicates (retransmits) overwrite with identical bytes
        slots[info.index as usize - 1] = Some(body);
        if slots.iter().any(Option::is_none) {
            return Ok(None);
        }
        let wire: Vec<u8> = self.partial.remove(&key).unwrap().into_iter().flatten().flatten().collect();
        let orig = IkeMessage::decode(&wire)?;
        if orig.fragment.is_some() || (orig.exchange, orig.role, orig.msg_id) != key {
            return Err(FragmentError::Inconsistent);
        }
        Ok(Some(orig))
    }

    pub fn pending_fragments(&self) -> usize {
        self.partial.values().map(|s| s.iter().filter(|x| x.is_some()).count()).sum()
    }

    pub fn clear(&mut self) {
        self.partial.clear();
    }
}
