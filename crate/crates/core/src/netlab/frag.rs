//! IP-level fragmentation for datagrams larger than the link MTU. The
//! fragment header rides in the (emulated) IPv4 header, so each piece may
//! use the full `mtu - 28` payload.

use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FragHeader {
    pub id: u32,
    /// 0-based.
    pub index: u16,
    pub total: u16,
}

/// Splits `payload` into chunks of at most `max_payload` bytes. Returns
/// `None` when more than `u16::MAX` pieces would be needed.
pub fn split(payload: &[u8], max_payload: usize, id: u32) -> Option<Vec<(FragHeader, Vec<u8>)>> {
    assert!(max_payload > 0);
    let total = payload.len().div_ceil(max_payload).max(1);
    let total = u16::try_from(total).ok()?;
    let mut chunks: Vec<&[u8]> = payload.chunks(max_payload).collect();
    if chunks.is_empty() {
        chunks.push(&[]);
    }
    Some(
        chunks
            .into_iter()
            .enumerate()
            .map(|(i, c)| (FragHeader { id, index: i as u16, total }, c.to_vec()))
            .collect(),
    )
}

#[derive(Debug)]
struct Partial {
    total: u16,
    pieces: BTreeMap<u16, Vec<u8>>,
}

/// Reassembles fragments keyed by `(source, id)`. Incomplete datagrams are
/// evicted oldest-first once more than `capacity` are outstanding.
#[derive(Debug)]
pub struct Defragmenter {
    capacity: usize,
    partial: BTreeMap<(String, u32), Partial>,
    order: VecDeque<(String, u32)>,
}

impl Default for Defragmenter {
    fn default() -> Self {
        Self::new(64)
    }
}

impl Defragmenter {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, partial: BTreeMap::new(), order: VecDeque::new() }
    }

    pub fn pending(&self) -> usize {
        self.partial.len()
    }

    /// Returns the whole datagram once its last missing piece arrives.
    /// Pieces that contradict the recorded `total` are dropped.
    pub fn push(&mut self, source: &str, h: FragHeader, bytes: Vec<u8>) -> Option<Vec<u8>> {
        if h.total == 0 || h.index >= h.total {
            return None;
        }
        if h.total == 1 {
            return Some(bytes);
        }
        let key = (source.to_string(), h.id);
        if !self.partial.contains_key(&key) {
            if self.partial.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.partial.remove(&old);
                }
            }
            self.order.push_back(key.clone());
            self.partial.insert(key.clone(), Partial { total: h.total, pieces: BTreeMap::new() });
        }
        let p = self.partial.get_mut(&key)?;
        if p.total != h.total {
            return None;
        }
        p.pieces.insert(h.index, bytes);
        if p.pieces.len() < usize::from(p.total) {
            return None;
        }
        let p = self.partial.remove(&key)?;
        self.order.retain(|k| k != &key);
        Some(p.pieces.into_values().flatten().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_and_empty() {
        let f = split(&[], 100, 7).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].0, FragHeader { id: 7, index: 0, total: 1 });
        let mut d = Defragmenter::default();
        assert_eq!(d.push("a", f[0].0, f[0].1.clone()), Some(vec![]));
    }

    #[test]
    fn eviction() {
        let mut d = Defragmenter::new(2);
        for id in 0..3 {
            assert!(d.push("a", FragHeader { id, index: 0, total: 2 }, vec![1]).is_none());
        }
        assert_eq!(d.pending(), 2);
        assert!(d.push("a", FragHeader { id: 0, index: 1, total: 2 }, vec![2]).is_none());
        assert_eq!(d.push("a", FragHeader { id: 2, index: 1, total: 2 }, vec![2]), Some(vec![1, 2]));
    }

    proptest! {
        #[test]
        fn roundtrip_any_order(len in 0usize..65_536, mtu in 576usize..9000, seed in any::<u64>()) {
            let payload: Vec<u8> = (0..len).map(|i| (i as u64 ^ seed) as u8).collect();
            let max = mtu - super::super::DATAGRAM_OVERHEAD;
            let mut frags = split(&payload, max, 1).unwrap();
            prop_assert!(frags.iter().all(|(_, b)| b.len() <= max));
            let n = frags.len();
            frags.rotate_left((seed as usize) % n);
            let mut d = Defragmenter::default();
            let mut out = None;
            for (h, b) in frags {
                prop_assert!(out.is_none());
                out = d.push("src", h, b);
            }
            prop_assert_eq!(out, Some(payload));
        }
    }
}
