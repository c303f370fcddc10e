//! Uniform key-encapsulation interface over X25519, ML-KEM-512/768/1024 and
//! an X25519 + ML-KEM-768 hybrid.
//!
//! Every scheme exposes the same keygen / encaps / decaps triple, so the IKE
//! layer treats the key-exchange payload as an opaque byte string whose
//! length is fixed by [`param_profile`].

pub mod mlkem;
pub mod x25519;

use std::fmt;
use std::str::FromStr;

use rand_core::{CryptoRng, RngCore};

use crate::crypto::PrfAlg;
use mlkem::MlKemParams;

pub const SHARED_SECRET_LEN: usize = 32;

pub type SharedSecret = [u8; SHARED_SECRET_LEN];

const HYBRID_LABEL: &[u8] = b"x25519mlkem768";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KemError {
    #[error("unsupported KEM parameter set `{0}`")]
    UnsupportedParamSet(String),
    #[error("malformed encapsulation key: {0}")]
    MalformedKey(&'static str),
    #[error("malformed decapsulation input: {0}")]
    MalformedInput(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KemParamSet {
    EcdhX25519,
    MlKem512,
    MlKem768,
    MlKem1024,
    HybridX25519MlKem768,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KemSizes {
    pub ek_bytes: usize,
    pub dk_bytes: usize,
    pub ct_bytes: usize,
    pub ss_bytes: usize,
}

impl KemParamSet {
    pub const ALL: [KemParamSet; 5] = [
        KemParamSet::EcdhX25519,
        KemParamSet::MlKem512,
        KemParamSet::MlKem768,
        KemParamSet::MlKem1024,
        KemParamSet::HybridX25519MlKem768,
    ];

    /// Proposal-string token.
    pub const fn token(self) -> &'static str {
        match self {
            KemParamSet::EcdhX25519 => "curve25519",
            KemParamSet::MlKem512 => "mlkem512",
            KemParamSet::MlKem768 => "mlkem768",
            KemParamSet::MlKem1024 => "mlkem1024",
            KemParamSet::HybridX25519MlKem768 => "x25519mlkem768",
        }
    }

    /// Key-exchange transform identifier carried in the SA payload.
    pub const fn transform_id(self) -> u16 {
        match self {
            KemParamSet::EcdhX25519 => 31,
            KemParamSet::MlKem512 => 35,
            KemParamSet::MlKem768 => 36,
            KemParamSet::MlKem1024 => 37,
            // private-use range
            KemParamSet::HybridX25519MlKem768 => 1031,
        }
    }

    pub fn from_transform_id(id: u16) -> Result<Self, KemError> {
        Self::ALL
            .into_iter()
            .find(|p| p.transform_id() == id)
            .ok_or_else(|| KemError::UnsupportedParamSet(format!("transform {id}")))
    }

    fn mlkem(self) -> Option<MlKemParams> {
        match self {
            KemParamSet::MlKem512 => Some(mlkem::ML_KEM_512),
            KemParamSet::MlKem768 => Some(mlkem::ML_KEM_768),
            KemParamSet::MlKem1024 => Some(mlkem::ML_KEM_1024),
            _ => None,
        }
    }

    pub const fn is_post_quantum(self) -> bool {
        !matches!(self, KemParamSet::EcdhX25519)
    }

    pub fn sizes(self) -> KemSizes {
        param_profile(self)
    }
}

impl fmt::Display for KemParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for KemParamSet {
    type Err = KemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.token() == s)
            .ok_or_else(|| KemError::UnsupportedParamSet(s.to_string()))
    }
}

/// Byte sizes of keys, ciphertext and secret for a parameter set.
pub fn param_profile(params: KemParamSet) -> KemSizes {
    let x = KemSizes {
        ek_bytes: x25519::KEY_LEN,
        dk_bytes: x25519::KEY_LEN,
        ct_bytes: x25519::KEY_LEN,
        ss_bytes: SHARED_SECRET_LEN,
    };
    let ml = |p: MlKemParams| KemSizes {
        ek_bytes: p.ek_len(),
        dk_bytes: p.dk_len(),
        ct_bytes: p.ct_len(),
        ss_bytes: SHARED_SECRET_LEN,
    };
    match params {
        KemParamSet::EcdhX25519 => x,
        KemParamSet::MlKem512 => ml(mlkem::ML_KEM_512),
        KemParamSet::MlKem768 => ml(mlkem::ML_KEM_768),
        KemParamSet::MlKem1024 => ml(mlkem::ML_KEM_1024),
        KemParamSet::HybridX25519MlKem768 => {
            let pq = ml(mlkem::ML_KEM_768);
            KemSizes {
                ek_bytes: x.ek_bytes + pq.ek_bytes,
                dk_bytes: x.dk_bytes + pq.dk_bytes,
                ct_bytes: x.ct_bytes + pq.ct_bytes,
                ss_bytes: SHARED_SECRET_LEN,
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct KemKeyPair {
    pub params: KemParamSet,
    pub ek: Vec<u8>,
    pub dk: Vec<u8>,
}

impl fmt::Debug for KemKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KemKeyPair")
            .field("params", &self.params)
            .field("ek", &format_args!("{} bytes", self.ek.len()))
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncapsResult {
    pub ct: Vec<u8>,
    pub ss: SharedSecret,
}

fn x25519_array(bytes: &[u8]) -> [u8; 32] {
    bytes.try_into().expect("length checked by caller")
}

pub fn kem_keygen<R: RngCore + CryptoRng + ?Sized>(params: KemParamSet, rng: &mut R) -> KemKeyPair {
    let (ek, dk) = match params {
        KemParamSet::EcdhX25519 => {
            let (pk, sk) = x25519::keygen(rng);
            (pk.to_vec(), sk.to_vec())
        }
        KemParamSet::MlKem512 | KemParamSet::MlKem768 | KemParamSet::MlKem1024 => {
            let p = params.mlkem().expect("ML-KEM set");
            let mut d = [0u8; 32];
            let mut z = [0u8; 32];
            rng.fill_bytes(&mut d);
            rng.fill_bytes(&mut z);
            mlkem::keygen_internal(&p, &d, &z)
        }
        KemParamSet::HybridX25519MlKem768 => {
            let classical = kem_keygen(KemParamSet::EcdhX25519, rng);
            let pq = kem_keygen(KemParamSet::MlKem768, rng);
            ([classical.ek, pq.ek].concat(), [classical.dk, pq.dk].concat())
        }
    };
    KemKeyPair { params, ek, dk }
}

pub fn kem_encaps<R: RngCore + CryptoRng + ?Sized>(
    params: KemParamSet,
    ek: &[u8],
    rng: &mut R,
) -> Result<EncapsResult, KemError> {
    let sizes = param_profile(params);
    if ek.len() != sizes.ek_bytes {
        return Err(KemError::MalformedKey("wrong length"));
    }
    match params {
        KemParamSet::EcdhX25519 => {
            let (ct, ss) = x25519::encaps(&x25519_array(ek), rng)
                .ok_or(KemError::MalformedKey("low-order X25519 point"))?;
            Ok(EncapsResult { ct: ct.to_vec(), ss })
        }
        KemParamSet::MlKem512 | KemParamSet::MlKem768 | KemParamSet::MlKem1024 => {
            let p = params.mlkem().expect("ML-KEM set");
            let mut m = [0u8; 32];
            rng.fill_bytes(&mut m);
            let (ct, ss) = mlkem::encaps_internal(&p, ek, &m)
                .map_err(|_| KemError::MalformedKey("non-canonical ML-KEM encapsulation key"))?;
            Ok(EncapsResult { ct, ss })
        }
        KemParamSet::HybridX25519MlKem768 => {
            let (ek_c, ek_pq) = ek.split_at(x25519::KEY_LEN);
            let c = kem_encaps(KemParamSet::EcdhX25519, ek_c, rng)?;
            let pq = kem_encaps(KemParamSet::MlKem768, ek_pq, rng)?;
            let ct = [c.ct, pq.ct].concat();
            let ss = hybrid_combine(&c.ss, &pq.ss, &[HYBRID_LABEL, &ct].concat())
                .expect("component secrets are 32 bytes");
            Ok(EncapsResult { ct, ss })
        }
    }
}

pub fn kem_decaps(params: KemParamSet, dk: &[u8], ct: &[u8]) -> Result<SharedSecret, KemError> {
    let sizes = param_profile(params);
    if dk.len() != sizes.dk_bytes {
        return Err(KemError::MalformedInput("decapsulation key length"));
    }
    if ct.len() != sizes.ct_bytes {
        return Err(KemError::MalformedInput("ciphertext length"));
    }
    match params {
        KemParamSet::EcdhX25519 => x25519::decaps(&x25519_array(dk), &x25519_array(ct))
            .ok_or(KemError::MalformedInput("low-order X25519 point")),
        KemParamSet::MlKem512 | KemParamSet::MlKem768 | KemParamSet::MlKem1024 => {
            let p = params.mlkem().expect("ML-KEM set");
            mlkem::decaps(&p, dk, ct).map_err(|e| match e {
                mlkem::MlKemError::InvalidCiphertext => KemError::MalformedInput("ciphertext length"),
                _ => KemError::MalformedInput("decapsulation key hash check"),
            })
        }
        KemParamSet::HybridX25519MlKem768 => {
            let (dk_c, dk_pq) = dk.split_at(x25519::KEY_LEN);
            let (ct_c, ct_pq) = ct.split_at(x25519::KEY_LEN);
            let c = kem_decaps(KemParamSet::EcdhX25519, dk_c, ct_c)?;
            let pq = kem_decaps(KemParamSet::MlKem768, dk_pq, ct_pq)?;
            hybrid_combine(&c, &pq, &[HYBRID_LABEL, ct].concat())
        }
    }
}

/// `prf(ss_classical || ss_pqc, context)` with HMAC-SHA-256.
pub fn hybrid_combine(
    ss_classical: &[u8],
    ss_pqc: &[u8],
    context: &[u8],
) -> Result<SharedSecret, KemError> {
    if ss_classical.len() != SHARED_SECRET_LEN || ss_pqc.len() != SHARED_SECRET_LEN {
        return Err(KemError::MalformedInput("component secret length"));
    }
    let key = [ss_classical, ss_pqc].concat();
    Ok(PrfAlg::HmacSha256.compute(&key, context))
}
