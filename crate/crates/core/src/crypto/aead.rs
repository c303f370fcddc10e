use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Key, Nonce};

use super::CryptoError;

pub const TAG_LEN: usize = 16;
pub const NONCE_LEN: usize = 12;
pub const SALT_LEN: usize = 4;

/// AEAD transforms that can be negotiated in a proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AeadAlg {
    /// AES-256 in GCM mode with a 16-byte ICV.
    Aes256Gcm16,
}

impl AeadAlg {
    pub const fn key_len(self) -> usize {
        32
    }

    /// Key material carved per direction: cipher key plus the implicit nonce salt.
    pub const fn keymat_len(self) -> usize {
        self.key_len() + SALT_LEN
    }
}

/// AES-256-GCM keyed once per direction.
#[derive(Clone)]
pub struct AeadKey {
    cipher: Aes256Gcm,
}

impl AeadKey {
    pub fn new(key: &[u8; 32]) -> Self {
        Self {
            cipher: Aes256Gcm::new(Key::<Aes256Gcm>::from_slice(key)),
        }
    }

    /// Returns `ciphertext || tag`.
    pub fn seal(&self, nonce: &[u8; NONCE_LEN], aad: &[u8], plaintext: &[u8]) -> Vec<u8> {
        self.cipher
            .encrypt(Nonce::from_slice(nonce), Payload { msg: plaintext, aad })
            .expect("AES-GCM encryption cannot fail for in-range inputs")
    }

    pub fn open(
        &self,
        nonce: &[u8; NONCE_LEN],
        aad: &[u8],
        sealed: &[u8],
    ) -> Result<Vec<u8>, CryptoError> {
        if sealed.len() < TAG_LEN {
            return Err(CryptoError::AuthFailed);
        }
        self.cipher
            .decrypt(Nonce::from_slice(nonce), Payload { msg: sealed, aad })
            .map_err(|_| CryptoError::AuthFailed)
    }
}

impl std::fmt::Debug for AeadKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AeadKey(..)")
    }
}

/// `salt || counter` in network order.
pub fn nonce(salt: &[u8; SALT_LEN], counter: u64) -> [u8; NONCE_LEN] {
    let mut n = [0u8; NONCE_LEN];
    n[..SALT_LEN].copy_from_slice(salt);
    n[SALT_LEN..].copy_from_slice(&counter.to_be_bytes());
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(s: &str) -> Vec<u8> {
        hex::decode(s).unwrap()
    }

    // NIST CAVS gcmEncryptExtIV256, first non-empty plaintext entry.
    #[test]
    fn cavs_vector() {
        let key: [u8; 32] = h("31bdadd96698c204aa9ce1448ea94ae1fb4a9a0b3c9d773b51bb1822666b8f22")
            .try_into()
            .unwrap();
        let iv: [u8; 12] = h("0d18e06c7c725ac9e362e1ce").try_into().unwrap();
        let pt = h("2db5168e932556f8089a0622981d017d");
        let sealed = AeadKey::new(&key).seal(&iv, &[], &pt);
        assert_eq!(
            hex::encode(&sealed),
            "fa4362189661d163fcd6a56d8bf0405ad636ac1bbedd5cc3ee727dc2ab4a9489"
        );
    }

    #[test]
    fn open_rejects_tampering() {
        let k = AeadKey::new(&[1; 32]);
        let n = nonce(&[9; 4], 7);
        let mut sealed = k.seal(&n, b"ad", b"hello");
        assert_eq!(k.open(&n, b"ad", &sealed).unwrap(), b"hello");
        assert_eq!(k.open(&n, b"xx", &sealed), Err(CryptoError::AuthFailed));
        sealed[0] ^= 0x80;
        assert_eq!(k.open(&n, b"ad", &sealed), Err(CryptoError::AuthFailed));
        assert_eq!(k.open(&n, b"ad", &sealed[..3]), Err(CryptoError::AuthFailed));
    }

    #[test]
    fn nonce_layout() {
        assert_eq!(nonce(&[1, 2, 3, 4], 0x0102), [1, 2, 3, 4, 0, 0, 0, 0, 0, 0, 1, 2]);
    }
}
