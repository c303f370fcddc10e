//! Curve25519 Diffie-Hellman wrapped as a KEM.
//!
//! `encaps` generates an ephemeral key, and the "ciphertext" is its public
//! half. The shared secret is `SHA-256(dh || ephemeral_pk || recipient_pk)`.

use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use x25519_dalek::{PublicKey, StaticSecret};

pub const KEY_LEN: usize = 32;

pub fn keygen<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> ([u8; 32], [u8; 32]) {
    let mut sk = [0u8; 32];
    rng.fill_bytes(&mut sk);
    let pk = public_key(&sk);
    (pk, sk)
}

pub fn public_key(sk: &[u8; 32]) -> [u8; 32] {
    PublicKey::from(&StaticSecret::from(*sk)).to_bytes()
}

fn derive(dh: &[u8; 32], eph_pk: &[u8; 32], recipient_pk: &[u8; 32]) -> [u8; 32] {
    Sha256::new()
        .chain_update(dh)
        .chain_update(eph_pk)
        .chain_update(recipient_pk)
        .finalize()
        .into()
}

/// Returns `(ephemeral_pk, shared_secret)`, or `None` if the peer key is a
/// low-order point and the exchange would not be contributory.
pub fn encaps<R: RngCore + CryptoRng + ?Sized>(
    recipient_pk: &[u8; 32],
    rng: &mut R,
) -> Option<([u8; 32], [u8; 32])> {
    let (eph_pk, eph_sk) = keygen(rng);
    let shared = StaticSecret::from(eph_sk).diffie_hellman(&PublicKey::from(*recipient_pk));
    if !shared.was_contributory() {
        return None;
    }
    Some((eph_pk, derive(shared.as_bytes(), &eph_pk, recipient_pk)))
}

pub fn decaps(sk: &[u8; 32], eph_pk: &[u8; 32]) -> Option<[u8; 32]> {
    let secret = StaticSecret::from(*sk);
    let own_pk = PublicKey::from(&secret).to_bytes();
    let shared = secret.diffie_hellman(&PublicKey::from(*eph_pk));
    if !shared.was_contributory() {
        return None;
    }
    Some(derive(shared.as_bytes(), eph_pk, &own_pk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    /// Montgomery ladder over GF(2^255 - 19) written from the curve
    /// definition, independent of the dalek backend.
    fn oracle_x25519(k: &[u8; 32], u: &[u8; 32]) -> [u8; 32] {
        let p = (BigUint::from(1u8) << 255u32) - BigUint::from(19u8);
        let a24 = BigUint::from(121665u32);
        let mut scalar = *k;
        scalar[0] &= 248;
        scalar[31] &= 127;
        scalar[31] |= 64;
        let k = BigUint::from_bytes_le(&scalar);
        let mut ub = *u;
        ub[31] &= 127;
        let x1 = BigUint::from_bytes_le(&ub) % &p;
        let one = BigUint::from(1u8);
        let (mut x2, mut z2) = (one.clone(), BigUint::from(0u8));
        let (mut x3, mut z3) = (x1.clone(), one.clone());
        let sub = |a: &BigUint, b: &BigUint| (a + &p - (b % &p)) % &p;
        let mut swap = false;
        for t in (0..255).rev() {
            let bit = k.bit(t);
            if swap ^ bit {
                std::mem::swap(&mut x2, &mut x3);
                std::mem::swap(&mut z2, &mut z3);
            }
            swap = bit;
            let a = (&x2 + &z2) % &p;
            let aa = (&a * &a) % &p;
            let b = sub(&x2, &z2);
            let bb = (&b * &b) % &p;
            let e = sub(&aa, &bb);
            let c = (&x3 + &z3) % &p;
            let d = sub(&x3, &z3);
            let da = (&d * &a) % &p;
            let cb = (&c * &b) % &p;
            let s = (&da + &cb) % &p;
            x3 = (&s * &s) % &p;
            let df = sub(&da, &cb);
            z3 = (&x1 * ((&df * &df) % &p)) % &p;
            x2 = (&aa * &bb) % &p;
            z2 = (&e * ((&aa + &a24 * &e) % &p)) % &p;
        }
        if swap {
            std::mem::swap(&mut x2, &mut x3);
            std::mem::swap(&mut z2, &mut z3);
        }
        let inv = z2.modpow(&(&p - BigUint::from(2u8)), &p);
        let r = (&x2 * inv) % &p;
        let mut out = r.to_bytes_le();
        out.resize(32, 0);
        out.try_into().unwrap()
    }

    fn base() -> [u8; 32] {
        let mut b = [0u8; 32];
        b[0] = 9;
        b
    }

    #[test]
    fn public_keys_match_ladder_oracle() {
        let mut rng = crate::rng::Drbg::new([42; 32]);
        for _ in 0..8 {
            let (pk, sk) = keygen(&mut rng);
            assert_eq!(pk, oracle_x25519(&sk, &base()));
        }
    }

    // RFC 7748 section 6.1 Alice/Bob keys.
    #[test]
    fn rfc7748_key_agreement() {
        let a: [u8; 32] = hex::decode("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a")
            .unwrap()
            .try_into()
            .unwrap();
        let b: [u8; 32] = hex::decode("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb")
            .unwrap()
            .try_into()
            .unwrap();
        assert_eq!(
            hex::encode(public_key(&a)),
            "8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a"
        );
        let shared = StaticSecret::from(a).diffie_hellman(&PublicKey::from(public_key(&b)));
        assert_eq!(
            hex::encode(shared.as_bytes()),
            "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742"
        );
        assert_eq!(oracle_x25519(&a, &public_key(&b)), *shared.as_bytes());
    }

    #[test]
    fn low_order_point_rejected() {
        let mut rng = crate::rng::Drbg::new([1; 32]);
        assert!(encaps(&[0u8; 32], &mut rng).is_none());
        let (_, sk) = keygen(&mut rng);
        assert!(decaps(&sk, &[0u8; 32]).is_none());
    }
}
