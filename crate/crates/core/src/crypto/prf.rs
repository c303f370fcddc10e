use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::CryptoError;

/// Pseudo-random functions that can be negotiated in a proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrfAlg {
    HmacSha256,
}

impl PrfAlg {
    pub const fn output_len(self) -> usize {
        match self {
            PrfAlg::HmacSha256 => 32,
        }
    }

    /// Preferred key length, which is also the length of `sk_d`, `sk_pi` and `sk_pr`.
    pub const fn key_len(self) -> usize {
        self.output_len()
    }

    pub fn compute(self, key: &[u8], data: &[u8]) -> [u8; 32] {
        self.compute_parts(key, &[data])
    }

    /// PRF over the concatenation of `parts`, without materializing it.
    pub fn compute_parts(self, key: &[u8], parts: &[&[u8]]) -> [u8; 32] {
        match self {
            PrfAlg::HmacSha256 => {
                let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key)
                    .expect("HMAC accepts keys of any length");
                for p in parts {
                    mac.update(p);
                }
                mac.finalize().into_bytes().into()
            }
        }
    }

    /// Constant-time check of `tag` against the PRF of `data`.
    pub fn verify(self, key: &[u8], data: &[&[u8]], tag: &[u8]) -> bool {
        match self {
            PrfAlg::HmacSha256 => {
                let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key)
                    .expect("HMAC accepts keys of any length");
                for p in data {
                    mac.update(p);
                }
                mac.verify_slice(tag).is_ok()
            }
        }
    }

    /// IKEv2 prf+ key expansion:
    /// `T1 = prf(K, S | 0x01)`, `Tn = prf(K, Tn-1 | S | n)`, truncated to `len`.
    pub fn prf_plus(self, key: &[u8], seed: &[u8], len: usize) -> Result<Vec<u8>, CryptoError> {
        let block = self.output_len();
        let max = 255 * block;
        if len > max {
            return Err(CryptoError::LengthOverflow { requested: len, max });
        }
        let mut out = Vec::with_capacity(len + block);
        let mut prev: Option<[u8; 32]> = None;
        let mut counter = 1u8;
        while out.len() < len {
            let t = match &prev {
                None => self.compute_parts(key, &[seed, &[counter]]),
                Some(p) => self.compute_parts(key, &[p, seed, &[counter]]),
            };
            out.extend_from_slice(&t[..block]);
            prev = Some(t);
            counter = counter.wrapping_add(1);
        }
        out.truncate(len);
        Ok(out)
    }
}
