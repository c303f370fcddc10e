//! ML-KEM (FIPS 203) for the 512/768/1024 parameter sets.
//!
//! The deterministic `*_internal` entry points take their randomness as
//! explicit arguments, which is how the NIST ACVP vectors exercise them.
//! Side-channel hardening is out of scope; the implicit-rejection branch is
//! selected with a constant-time comparison but nothing else is.

mod poly;

use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::{Digest, Sha3_256, Sha3_512, Shake128, Shake256};
use subtle::{ConditionallySelectable, ConstantTimeEq};

use poly::{compress, decompress, Poly, N, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlKemParams {
    pub k: usize,
    pub eta1: usize,
    pub eta2: usize,
    pub du: u32,
    pub dv: u32,
}

pub const ML_KEM_512: MlKemParams = MlKemParams { k: 2, eta1: 3, eta2: 2, du: 10, dv: 4 };
pub const ML_KEM_768: MlKemParams = MlKemParams { k: 3, eta1: 2, eta2: 2, du: 10, dv: 4 };
pub const ML_KEM_1024: MlKemParams = MlKemParams { k: 4, eta1: 2, eta2: 2, du: 11, dv: 5 };

impl MlKemParams {
    pub const fn ek_len(&self) -> usize {
        384 * self.k + 32
    }

    pub const fn dk_len(&self) -> usize {
        768 * self.k + 96
    }

    pub const fn ct_len(&self) -> usize {
        32 * (self.du as usize * self.k + self.dv as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MlKemError {
    #[error("encapsulation key has wrong length or non-canonical coefficients")]
    InvalidEncapsulationKey,
    #[error("decapsulation key has wrong length or fails its hash check")]
    InvalidDecapsulationKey,
    #[error("ciphertext has wrong length")]
    InvalidCiphertext,
}

fn hash_h(data: &[u8]) -> [u8; 32] {
    Sha3_256::digest(data).into()
}

fn hash_g(parts: &[&[u8]]) -> ([u8; 32], [u8; 32]) {
    let mut h = Sha3_512::new();
    for p in parts {
        Digest::update(&mut h, p);
    }
    let out = h.finalize();
    let mut a = [0u8; 32];
    let mut b = [0u8; 32];
    a.copy_from_slice(&out[..32]);
    b.copy_from_slice(&out[32..]);
    (a, b)
}

fn hash_j(z: &[u8], c: &[u8]) -> [u8; 32] {
    let mut x = Shake256::default();
    x.update(z);
    x.update(c);
    let mut out = [0u8; 32];
    x.finalize_xof().read(&mut out);
    out
}

fn prf(eta: usize, s: &[u8; 32], b: u8) -> Vec<u8> {
    let mut x = Shake256::default();
    x.update(s);
    x.update(&[b]);
    let mut out = vec![0u8; 64 * eta];
    x.finalize_xof().read(&mut out);
    out
}

/// Rejection-samples a uniform NTT-domain polynomial from `SHAKE128(rho || j || i)`.
fn sample_ntt(rho: &[u8; 32], j: u8, i: u8) -> Poly {
    let mut x = Shake128::default();
    x.update(rho);
    x.update(&[j, i]);
    let mut reader = x.finalize_xof();
    let mut out = Poly::default();
    let mut buf = [0u8; 168];
    let mut filled = 0;
    while filled < N {
        reader.read(&mut buf);
        for c in buf.chunks_exact(3) {
            let d1 = c[0] as u16 | ((c[1] as u16 & 0x0f) << 8);
            let d2 = (c[1] as u16 >> 4) | ((c[2] as u16) << 4);
            if (d1 as u32) < Q {
                out.0[filled] = d1;
                filled += 1;
            }
            if (d2 as u32) < Q && filled < N {
                out.0[filled] = d2;
                filled += 1;
            }
            if filled == N {
                break;
            }
        }
    }
    out
}

/// Centered binomial distribution with parameter `eta` over `64 * eta` bytes.
fn sample_cbd(eta: usize, bytes: &[u8]) -> Poly {
    let bit = |idx: usize| ((bytes[idx >> 3] >> (idx & 7)) & 1) as u32;
    let mut out = Poly::default();
    for i in 0..N {
        let base = 2 * i * eta;
        let x: u32 = (0..eta).map(|j| bit(base + j)).sum();
        let y: u32 = (0..eta).map(|j| bit(base + eta + j)).sum();
        out.0[i] = ((x + Q - y) % Q) as u16;
    }
    out
}

fn byte_encode(p: &Poly, d: u32, out: &mut Vec<u8>) {
    let mut acc: u64 = 0;
    let mut nbits = 0;
    for &c in p.0.iter() {
        acc |= (c as u64) << nbits;
        nbits += d;
        while nbits >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            nbits -= 8;
        }
    }
}

/// For `d = 12` coefficients are reduced mod q, as the standard prescribes.
fn byte_decode(bytes: &[u8], d: u32) -> Poly {
    let mut out = Poly::default();
    let mask = (1u64 << d) - 1;
    let mut acc: u64 = 0;
    let mut nbits = 0;
    let mut it = bytes.iter();
    for c in out.0.iter_mut() {
        while nbits < d {
            acc |= (*it.next().expect("caller sized the input") as u64) << nbits;
            nbits += 8;
        }
        let v = (acc & mask) as u32;
        *c = if d == 12 { (v % Q) as u16 } else { v as u16 };
        acc >>= d;
        nbits -= d;
    }
    out
}

fn encode_vec(v: &[Poly], d: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(v.len() * 32 * d as usize);
    for p in v {
        byte_encode(p, d, &mut out);
    }
    out
}

fn decode_vec(bytes: &[u8], k: usize, d: u32) -> Vec<Poly> {
    let step = 32 * d as usize;
    (0..k).map(|i| byte_decode(&bytes[i * step..(i + 1) * step], d)).collect()
}

/// Matrix `A` in the NTT domain, row-major; entry `(i, j)` comes from `XOF(rho || j || i)`.
fn expand_matrix(p: &MlKemParams, rho: &[u8; 32]) -> Vec<Poly> {
    let mut a = Vec::with_capacity(p.k * p.k);
    for i in 0..p.k {
        for j in 0..p.k {
            a.push(sample_ntt(rho, j as u8, i as u8));
        }
    }
    a
}

fn pke_keygen(p: &MlKemParams, d: &[u8; 32]) -> (Vec<u8>, Vec<u8>) {
    let (rho, sigma) = hash_g(&[d, &[p.k as u8]]);
    let a = expand_matrix(p, &rho);
    let mut n = 0u8;
    let mut s = Vec::with_capacity(p.k);
    for _ in 0..p.k {
        s.push(sample_cbd(p.eta1, &prf(p.eta1, &sigma, n)).ntt());
        n += 1;
    }
    let mut e = Vec::with_capacity(p.k);
    for _ in 0..p.k {
        e.push(sample_cbd(p.eta1, &prf(p.eta1, &sigma, n)).ntt());
        n += 1;
    }
    let mut t = e;
    for i in 0..p.k {
        for j in 0..p.k {
            t[i].mul_acc(&a[i * p.k + j], &s[j]);
        }
    }
    let mut ek = encode_vec(&t, 12);
    ek.extend_from_slice(&rho);
    (ek, encode_vec(&s, 12))
}

fn pke_encrypt(p: &MlKemParams, ek: &[u8], m: &[u8; 32], r: &[u8; 32]) -> Vec<u8> {
    let t = decode_vec(&ek[..384 * p.k], p.k, 12);
    let rho: [u8; 32] = ek[384 * p.k..].try_into().expect("ek length checked");
    let a = expand_matrix(p, &rho);
    let mut n = 0u8;
    let mut y = Vec::with_capacity(p.k);
    for _ in 0..p.k {
        y.push(sample_cbd(p.eta1, &prf(p.eta1, r, n)).ntt());
        n += 1;
    }
    let mut e1 = Vec::with_capacity(p.k);
    for _ in 0..p.k {
        e1.push(sample_cbd(p.eta2, &prf(p.eta2, r, n)));
        n += 1;
    }
    let e2 = sample_cbd(p.eta2, &prf(p.eta2, r, n));

    let mut u = Vec::with_capacity(p.k);
    for i in 0..p.k {
        let mut acc = Poly::default();
        for j in 0..p.k {
            // A transposed
            acc.mul_acc(&a[j * p.k + i], &y[j]);
        }
        u.push(acc.inv_ntt().add(&e1[i]));
    }
    let mut v_hat = Poly::default();
    for j in 0..p.k {
        v_hat.mul_acc(&t[j], &y[j]);
    }
    let mu = Poly(byte_decode(m, 1).0.map(|b| decompress(b, 1)));
    let v = v_hat.inv_ntt().add(&e2).add(&mu);

    let mut c = Vec::with_capacity(p.ct_len());
    for ui in &u {
        byte_encode(&Poly(ui.0.map(|x| compress(x, p.du))), p.du, &mut c);
    }
    byte_encode(&Poly(v.0.map(|x| compress(x, p.dv))), p.dv, &mut c);
    c
}

fn pke_decrypt(p: &MlKemParams, dk_pke: &[u8], c: &[u8]) -> [u8; 32] {
    let split = 32 * p.du as usize * p.k;
    let u: Vec<Poly> = decode_vec(&c[..split], p.k, p.du)
        .into_iter()
        .map(|q| Poly(q.0.map(|x| decompress(x, p.du))))
        .collect();
    let v = Poly(byte_decode(&c[split..], p.dv).0.map(|x| decompress(x, p.dv)));
    let s = decode_vec(dk_pke, p.k, 12);
    let mut acc = Poly::default();
    for i in 0..p.k {
        acc.mul_acc(&s[i], &u[i].ntt());
    }
    let w = v.sub(&acc.inv_ntt());
    let mut m = Vec::with_capacity(32);
    byte_encode(&Poly(w.0.map(|x| compress(x, 1))), 1, &mut m);
    m.try_into().expect("256 one-bit coefficients")
}

/// `ML-KEM.KeyGen_internal(d, z)`; returns `(ek, dk)`.
pub fn keygen_internal(p: &MlKemParams, d: &[u8; 32], z: &[u8; 32]) -> (Vec<u8>, Vec<u8>) {
    let (ek, mut dk) = pke_keygen(p, d);
    dk.extend_from_slice(&ek);
    dk.extend_from_slice(&hash_h(&ek));
    dk.extend_from_slice(z);
    (ek, dk)
}

/// Encapsulation-key input check: length and canonical 12-bit encoding.
pub fn check_ek(p: &MlKemParams, ek: &[u8]) -> Result<(), MlKemError> {
    if ek.len() != p.ek_len() {
        return Err(MlKemError::InvalidEncapsulationKey);
    }
    let body = &ek[..384 * p.k];
    let reencoded = encode_vec(&decode_vec(body, p.k, 12), 12);
    if reencoded != body {
        return Err(MlKemError::InvalidEncapsulationKey);
    }
    Ok(())
}

/// `ML-KEM.Encaps_internal(ek, m)`; returns `(ciphertext, shared secret)`.
pub fn encaps_internal(
    p: &MlKemParams,
    ek: &[u8],
    m: &[u8; 32],
) -> Result<(Vec<u8>, [u8; 32]), MlKemError> {
    check_ek(p, ek)?;
    let (k, r) = hash_g(&[m, &hash_h(ek)]);
    Ok((pke_encrypt(p, ek, m, &r), k))
}

/// `ML-KEM.Decaps`, including the length and hash input checks. A ciphertext
/// that fails re-encryption yields the implicit-rejection secret `J(z || c)`.
pub fn decaps(p: &MlKemParams, dk: &[u8], c: &[u8]) -> Result<[u8; 32], MlKemError> {
    if dk.len() != p.dk_len() {
        return Err(MlKemError::InvalidDecapsulationKey);
    }
    if c.len() != p.ct_len() {
        return Err(MlKemError::InvalidCiphertext);
    }
    let k = p.k;
    let dk_pke = &dk[..384 * k];
    let ek_pke = &dk[384 * k..768 * k + 32];
    let h = &dk[768 * k + 32..768 * k + 64];
    let z = &dk[768 * k + 64..];
    if hash_h(ek_pke) != h {
        return Err(MlKemError::InvalidDecapsulationKey);
    }
    let m = pke_decrypt(p, dk_pke, c);
    let (mut shared, r) = hash_g(&[&m, h]);
    let rejected = hash_j(z, c);
    let c2 = pke_encrypt(p, ek_pke, &m, &r);
    let same = c.ct_eq(&c2[..]);
    for (s, rj) in shared.iter_mut().zip(rejected.iter()) {
        *s = u8::conditional_select(rj, s, same);
    }
    Ok(shared)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_parameter_tables() {
        assert_eq!((ML_KEM_512.ek_len(), ML_KEM_512.dk_len(), ML_KEM_512.ct_len()), (800, 1632, 768));
        assert_eq!((ML_KEM_768.ek_len(), ML_KEM_768.dk_len(), ML_KEM_768.ct_len()), (1184, 2400, 1088));
        assert_eq!((ML_KEM_1024.ek_len(), ML_KEM_1024.dk_len(), ML_KEM_1024.ct_len()), (1568, 3168, 1568));
    }

    #[test]
    fn encode_decode_roundtrip() {
        for d in [1u32, 4, 5, 10, 11, 12] {
            let mut p = Poly::default();
            for (i, c) in p.0.iter_mut().enumerate() {
                *c = ((i as u32).wrapping_mul(2654435761) % if d == 12 { Q } else { 1 << d }) as u16;
            }
            let mut buf = Vec::new();
            byte_encode(&p, d, &mut buf);
            assert_eq!(buf.len(), 32 * d as usize);
            assert_eq!(byte_decode(&buf, d), p);
        }
    }

    #[test]
    fn cbd_is_centered_and_bounded() {
        let bytes: Vec<u8> = (0..192).map(|i| (i * 37 + 11) as u8).collect();
        let p = sample_cbd(3, &bytes);
        for &c in p.0.iter() {
            let centered = if c as u32 > Q / 2 { c as i32 - Q as i32 } else { c as i32 };
            assert!(centered.abs() <= 3);
        }
    }

    #[test]
    fn roundtrip_all_sets() {
        for p in [ML_KEM_512, ML_KEM_768, ML_KEM_1024] {
            let (ek, dk) = keygen_internal(&p, &[1; 32], &[2; 32]);
            let (c, k) = encaps_internal(&p, &ek, &[3; 32]).unwrap();
            assert_eq!(decaps(&p, &dk, &c).unwrap(), k);
        }
    }

    #[test]
    fn non_canonical_ek_rejected() {
        let p = ML_KEM_512;
        let (mut ek, _) = keygen_internal(&p, &[1; 32], &[2; 32]);
        // first coefficient := 0xfff >= q
        ek[0] = 0xff;
        ek[1] |= 0x0f;
        assert_eq!(
            encaps_internal(&p, &ek, &[0; 32]).unwrap_err(),
            MlKemError::InvalidEncapsulationKey
        );
    }

    #[test]
    fn tampered_dk_fails_hash_check() {
        let p = ML_KEM_768;
        let (ek, mut dk) = keygen_internal(&p, &[4; 32], &[5; 32]);
        let (c, _) = encaps_internal(&p, &ek, &[6; 32]).unwrap();
        dk[384 * 3 + 10] ^= 1;
        assert_eq!(decaps(&p, &dk, &c), Err(MlKemError::InvalidDecapsulationKey));
    }
}
