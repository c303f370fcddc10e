//! Deterministic random source used by every simulated actor.
//!
//! A [`Drbg`] expands a 32-byte seed with SHAKE256, so a fixed seed yields a
//! byte-identical stream. All handshake randomness (nonces, SPIs, KEM
//! coins) is drawn from one of these, which is what makes transcripts
//! reproducible.

use rand_core::{CryptoRng, RngCore, SeedableRng};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::{Sha3_256, Shake256, Shake256Reader};

const DOMAIN: &[u8] = b"pqe2 drbg v1";

/// Seeded SHAKE256 output stream.
pub struct Drbg {
    seed: [u8; 32],
    reader: Shake256Reader,
}

impl Drbg {
    pub fn new(seed: [u8; 32]) -> Self {
        let mut xof = Shake256::default();
        xof.update(DOMAIN);
        xof.update(&seed);
        Self {
            seed,
            reader: xof.finalize_xof(),
        }
    }

    pub fn seed(&self) -> &[u8; 32] {
        &self.seed
    }

    /// Independent child stream labelled by `label`. Does not consume output
    /// from `self`.
    pub fn fork(&self, label: &str) -> Drbg {
        Drbg::new(derive_seed(&self.seed, label.as_bytes()))
    }

    pub fn array<const N: usize>(&mut self) -> [u8; N] {
        let mut out = [0u8; N];
        self.reader.read(&mut out);
        out
    }
}

/// `SHA3-256(seed || label)`: the seed of a labelled sub-stream.
pub fn derive_seed(seed: &[u8; 32], label: &[u8]) -> [u8; 32] {
    use sha3::Digest;
    let mut h = Sha3_256::new();
    Digest::update(&mut h, seed);
    Digest::update(&mut h, label);
    h.finalize().into()
}

impl Clone for Drbg {
    fn clone(&self) -> Self {
        Self {
            seed: self.seed,
            reader: self.reader.clone(),
        }
    }
}

impl std::fmt::Debug for Drbg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Drbg")
            .field("seed", &hex::encode(self.seed))
            .finish_non_exhaustive()
    }
}

impl RngCore for Drbg {
    fn next_u32(&mut self) -> u32 {
        u32::from_le_bytes(self.array())
    }

    fn next_u64(&mut self) -> u64 {
        u64::from_le_bytes(self.array())
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.reader.read(dest);
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

impl CryptoRng for Drbg {}

impl SeedableRng for Drbg {
    type Seed = [u8; 32];

    fn from_seed(seed: Self::Seed) -> Self {
        Drbg::new(seed)
    }
}
