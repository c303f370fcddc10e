//! IKE SA key schedule and child SA key carving.

use std::fmt;

use crate::crypto::{aead::SALT_LEN, AeadAlg, PrfAlg};

#[derive(Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub skeyseed: [u8; 32],
    pub sk_d: Vec<u8>,
    pub sk_ai: Vec<u8>,
    pub sk_ar: Vec<u8>,
    pub sk_ei: Vec<u8>,
    pub sk_er: Vec<u8>,
    pub sk_pi: Vec<u8>,
    pub sk_pr: Vec<u8>,
}

impl fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyMaterial").finish_non_exhaustive()
    }
}

impl KeyMaterial {
    /// Length of the `prf+` stream consumed: `sk_d | sk_ai | sk_ar | sk_ei | sk_er | sk_pi | sk_pr`.
    /// The integrity keys are empty because the negotiated cipher is an AEAD.
    pub fn stream_len(prf: PrfAlg, aead: AeadAlg) -> usize {
        3 * prf.key_len() + 2 * aead.keymat_len()
    }

    pub fn fingerprint(&self) -> Vec<u8> {
        [
            &self.skeyseed[..],
            &self.sk_d,
            &self.sk_ai,
            &self.sk_ar,
            &self.sk_ei,
            &self.sk_er,
            &self.sk_pi,
            &self.sk_pr,
        ]
        .concat()
    }
}

/// `SKEYSEED = prf(Ni | Nr, ss)`, then the SK_* hierarchy is carved from
/// `prf+(SKEYSEED, Ni | Nr | SPIi | SPIr)`.
pub fn derive_keys(
    prf: PrfAlg,
    aead: AeadAlg,
    shared_secret: &[u8],
    ni: &[u8; 32],
    nr: &[u8; 32],
    spi_i: u64,
    spi_r: u64,
) -> KeyMaterial {
    let skeyseed = prf.compute_parts(&[&ni[..], &nr[..]].concat(), &[shared_secret]);
    let seed = [&ni[..], &nr[..], &spi_i.to_be_bytes(), &spi_r.to_be_bytes()].concat();
    let stream = prf
        .prf_plus(&skeyseed, &seed, KeyMaterial::stream_len(prf, aead))
        .expect("key schedule fits within prf+ limit");
    let mut rest = stream.as_slice();
    let mut take = |n: usize| {
        let (a, b) = rest.split_at(n);
        rest = b;
        a.to_vec()
    };
    let (pk, ek) = (prf.key_len(), aead.keymat_len());
    KeyMaterial {
        skeyseed,
        sk_d: take(pk),
        sk_ai: take(0),
        sk_ar: take(0),
        sk_ei: take(ek),
        sk_er: take(ek),
        sk_pi: take(pk),
        sk_pr: take(pk),
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct ChildSaKeys {
    pub spi_in: u32,
    pub spi_out: u32,
    pub key_in: [u8; 32],
    pub key_out: [u8; 32],
    pub salt_in: [u8; SALT_LEN],
    pub salt_out: [u8; SALT_LEN],
}

impl fmt::Debug for ChildSaKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChildSaKeys")
            .field("spi_in", &format_args!("{:08x}", self.spi_in))
            .field("spi_out", &format_args!("{:08x}", self.spi_out))
            .finish_non_exhaustive()
    }
}

impl ChildSaKeys {
    /// The peer's view of the same SA pair.
    pub fn mirrored(&self) -> ChildSaKeys {
        ChildSaKeys {
            spi_in: self.spi_out,
            spi_out: self.spi_in,
            key_in: self.key_out,
            key_out: self.key_in,
            salt_in: self.salt_out,
            salt_out: self.salt_in,
        }
    }
}

/// `KEYMAT = prf+(SK_d, Ni | Nr)`; the first block keys initiator-to-responder
/// traffic, the second responder-to-initiator. SPIs are chosen by the
/// receiving side, so `spi_i` is the SPI on packets sent to the initiator.
pub fn derive_child_keys(
    prf: PrfAlg,
    aead: AeadAlg,
    sk_d: &[u8],
    ni: &[u8; 32],
    nr: &[u8; 32],
    spi_i: u32,
    spi_r: u32,
    initiator: bool,
) -> ChildSaKeys {
    let n = aead.keymat_len();
    let km = prf
        .prf_plus(sk_d, &[&ni[..], &nr[..]].concat(), 2 * n)
        .expect("child keymat fits within prf+ limit");
    let split = |b: &[u8]| -> ([u8; 32], [u8; SALT_LEN]) {
        (b[..32].try_into().unwrap(), b[32..n].try_into().unwrap())
    };
    let (k_ir, s_ir) = split(&km[..n]);
    let (k_ri, s_ri) = split(&km[n..]);
    let initiator_view = ChildSaKeys {
        spi_in: spi_i,
        spi_out: spi_r,
        key_in: k_ri,
        key_out: k_ir,
        salt_in: s_ri,
        salt_out: s_ir,
    };
    if initiator {
        initiator_view
    } else {
        initiator_view.mirrored()
    }
}
