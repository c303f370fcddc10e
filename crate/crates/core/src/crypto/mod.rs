//! Symmetric primitives shared by the IKE and ESP layers.

pub mod aead;
pub mod prf;

pub use aead::{AeadAlg, AeadKey};
pub use prf::PrfAlg;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("prf+ output of {requested} bytes exceeds the {max}-byte limit")]
    LengthOverflow { requested: usize, max: usize },
    #[error("AEAD authentication failed")]
    AuthFailed,
}
